//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use mnp_relax::coilfield::{
    chamber_fit, helmholtz_map, homogeneity_region, loop_field, loop_field_brute_force,
    ChamberAxis, CoilGeometry, GridSpec, MU_0,
};
use mnp_relax::io::{results_csv, sweep_plots};
use mnp_relax::physics::{ideal_signal, DcField, DriveField, ParticleModel, SamplingConfig};
use mnp_relax::relaxation::{apply_relaxation, apply_relaxation_recursive, RelaxationKernel};
use mnp_relax::sweep::{
    add_noise, cell_seed, peak_fwhm, rms, run_sweep, run_sweep_detailed, summarize_outcome,
    DcLabel, SweepPlan, TauProfile,
};
use mnp_relax::taurus::{average_pairs, estimate_tau, extract_half_cycles, half_cycle_spectra};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dc_grid, golden_section_tau, rel_l2, AMPLITUDES, FREQUENCIES};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn ideal(f: f64, a: f64, dc: f64) -> mnp_relax::SignalTrace {
    ideal_signal(
        &ParticleModel::default(),
        &DriveField::new(f, a).unwrap(),
        &DcField::new(dc).unwrap(),
        &SamplingConfig::default(),
    )
    .unwrap()
}

fn relaxed(trace: &mnp_relax::SignalTrace, tau: f64) -> mnp_relax::SignalTrace {
    apply_relaxation(trace, &RelaxationKernel::new(tau).unwrap()).unwrap()
}

fn grid_cardinality_and_runtime() -> Outcome {
    let plan = SweepPlan::default();
    let start = Instant::now();
    let records = run_sweep(&plan).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let expected = 5 * 4 * (1 + 10) * 3;
    outcome(
        records.len() == 660 && expected == 660 && elapsed <= 60.0,
        format!("{} records, {elapsed:.2} s (limit 60 s)", records.len()),
    )
}

fn mirror_symmetry() -> Outcome {
    let mut worst = 0f64;
    let labels = std::iter::once(0.0).chain(dc_grid()); // no-coil, then 0..9 mT
    let labels: Vec<f64> = labels.collect();
    for &f in &FREQUENCIES {
        for &a in &AMPLITUDES {
            let drive = DriveField::new(f, a).unwrap();
            for &dc in &labels {
                let tr = ideal(f, a, dc);
                let pair = average_pairs(&extract_half_cycles(&tr, &drive).unwrap());
                let (sp, sn) = half_cycle_spectra(&pair);
                let scale = sp.iter().map(|c| c.norm()).fold(0.0, f64::max);
                let v = sp
                    .iter()
                    .zip(&sn)
                    .map(|(p, n)| (n + p.conj()).norm())
                    .fold(0.0, f64::max);
                worst = worst.max(v / scale);
            }
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max |S_neg + S_pos*| / max |S_pos| = {worst:.3e} (limit 1e-9)"),
    )
}

fn tau_round_trip() -> Outcome {
    let mut worst_truth = 0f64;
    let mut worst_oracle = 0f64;
    for &tau in &[0.5e-6, 1e-6, 2e-6, 3e-6, 5e-6] {
        for &f in &FREQUENCIES {
            for &a in &AMPLITUDES {
                let drive = DriveField::new(f, a).unwrap();
                let x = ideal(f, a, 0.0);
                let y = relaxed(&x, tau);
                let hat = estimate_tau(&y, &drive).unwrap().tau_hat;
                let fit = golden_section_tau(&x, &y, 0.0, 20e-6, 1e-6);
                worst_truth = worst_truth.max((hat - tau).abs() / tau);
                worst_oracle = worst_oracle.max((hat - fit).abs() / fit);
            }
        }
    }
    outcome(
        worst_truth <= 0.02 && worst_oracle <= 0.01,
        format!("max error vs truth {worst_truth:.3e} (limit 2e-2), vs forward-fit oracle {worst_oracle:.3e} (limit 1e-2)"),
    )
}

fn realization_cross_check() -> Outcome {
    let mut worst = 0f64;
    for &tau in &[0.5e-6, 5e-6] {
        for &f in &[1e3, 5e3] {
            let x = ideal(f, 10e-3, 0.0);
            let settle = ((20.0 * tau * f).ceil() as usize).max(1);
            let k = RelaxationKernel::new(tau).unwrap();
            let rec = apply_relaxation_recursive(&x, &k, settle).unwrap();
            let fft = apply_relaxation(&x, &k).unwrap();
            worst = worst.max(rel_l2(rec.samples(), fft.samples()));
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max relative L2 {worst:.3e} (limit 1e-6)"),
    )
}

fn saturation_trend() -> Outcome {
    let mut min_rms_drop = f64::INFINITY;
    let mut min_peak_drop = f64::INFINITY;
    for &f in &FREQUENCIES {
        for &a in &AMPLITUDES {
            for tau in [0.0, 2e-6] {
                let metrics: Vec<(f64, f64)> = dc_grid()
                    .iter()
                    .map(|&b| {
                        let tr = relaxed(&ideal(f, a, b), tau);
                        (rms(&tr), peak_fwhm(&tr).unwrap().0)
                    })
                    .collect();
                for w in metrics.windows(2) {
                    min_rms_drop = min_rms_drop.min((w[0].0 - w[1].0) / w[0].0);
                    min_peak_drop = min_peak_drop.min((w[0].1 - w[1].1) / w[0].1);
                }
            }
        }
    }
    outcome(
        min_rms_drop > 0.0 && min_peak_drop > 0.0,
        format!("smallest step-to-step relative drop: RMS {min_rms_drop:.3e}, peak {min_peak_drop:.3e} (must be > 0)"),
    )
}

fn profile_tracking() -> Outcome {
    let profile = TauProfile::Dip {
        tau0: 2e-6,
        depth: 0.5,
        center: 3e-3,
        width: 1.5e-3,
        rise_rate: 0.2e-3,
    };
    let plan = SweepPlan {
        tau_profile: profile.clone(),
        repetitions: 1,
        snr_db: None,
        ..SweepPlan::default()
    };
    let records = run_sweep(&plan).unwrap();
    let mut worst = 0f64;
    let mut settings = 0;
    let mut shape_ok = true;
    for &f in &plan.frequencies {
        for &a in &plan.amplitudes {
            let cells: Vec<_> = records
                .iter()
                .filter(|r| r.frequency == f && r.amplitude == a && r.dc_label != DcLabel::NoCoil)
                .collect();
            let tau_max = cells.iter().map(|r| r.tau_true).fold(0.0, f64::max);
            if TAU * f * tau_max > 0.2 {
                continue;
            }
            settings += 1;
            let est: Vec<f64> = cells.iter().map(|r| r.tau_hat.unwrap()).collect();
            for r in &cells {
                worst = worst.max((r.tau_hat.unwrap() - r.tau_true).abs() / r.tau_true);
            }
            let argmin = est
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .unwrap()
                .0;
            let at_3mt = cells
                .iter()
                .position(|r| r.dc_label == DcLabel::Field(3e-3))
                .unwrap();
            let non_monotonic = est[0] > est[argmin] && est[est.len() - 1] > est[argmin];
            shape_ok &= argmin == at_3mt && non_monotonic;
        }
    }
    outcome(
        shape_ok && worst <= 0.03 && settings > 0,
        format!("{settings} DF settings, minimum at 3 mT everywhere: {shape_ok}, max tracking error {worst:.3e} (limit 3e-2)"),
    )
}

fn coil_field() -> Outcome {
    let radius: f64 = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_loop = 0f64;
    let mut n = 0;
    while n < 100 {
        let x: f64 = rng.random_range(-2.0 * radius..2.0 * radius);
        let r: f64 = rng.random_range(-2.0 * radius..2.0 * radius);
        // Stay off the conductor: at least a tenth of the radius from the wire.
        if (x * x + (r.abs() - radius).powi(2)).sqrt() < 0.1 * radius {
            continue;
        }
        let (a, b) = loop_field(radius, 10.0, 2.0, x, r).unwrap();
        let (ba, bb) = loop_field_brute_force(radius, 10.0, 2.0, x, r, 100_000);
        let err = ((a - ba).powi(2) + (b - bb).powi(2)).sqrt() / (ba * ba + bb * bb).sqrt();
        worst_loop = worst_loop.max(err);
        n += 1;
    }

    let coil = CoilGeometry::example();
    let expected =
        0.8f64.powf(1.5) * MU_0 * coil.turns_per_loop as f64 * coil.current / coil.loop_radius;
    let center = coil.field_at(0.0, 0.0).unwrap().0;
    let center_err = (center - expected).abs() / expected;

    let grid = GridSpec {
        half_nodes_x: 45,
        half_nodes_z: 45,
        spacing: 1e-3,
    };
    let map = helmholtz_map(&coil, &grid).unwrap();
    let scale = map.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut asym = 0f64;
    for j in 0..map.nz {
        for i in 0..map.nx {
            asym = asym.max((map.at(i, j) - map.at(map.nx - 1 - i, j)).abs() / scale);
        }
    }
    let region = homogeneity_region(&map, 0.95).unwrap();
    let fits = chamber_fit(&region, 0.7e-2, 2e-2, ChamberAxis::AlongDriveAxis);

    outcome(
        worst_loop <= 1e-9 && center_err <= 1e-3 && asym <= 1e-12 && fits,
        format!(
            "loop vs Biot-Savart {worst_loop:.3e} (limit 1e-9); center {center_err:.3e} (limit 1e-3); \
             x-symmetry {asym:.3e} (limit 1e-12); 95% region {:.1} x {:.1} mm holds 7 x 20 mm chamber: {fits}",
            region.axial_extent * 1e3,
            region.radial_extent * 1e3
        ),
    )
}

fn render(plan: &SweepPlan, threads: usize) -> (String, Vec<(String, String)>) {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        let out = run_sweep_detailed(plan).unwrap();
        let plots = sweep_plots(&summarize_outcome(&out)).unwrap();
        (results_csv(&out.records), plots)
    })
}

fn determinism() -> Outcome {
    let n = std::thread::available_parallelism()
        .map_or(4, |n| n.get())
        .max(2);
    let mut same = true;
    let mut plots = 0;
    for snr in [None, Some(40.0)] {
        let plan = SweepPlan {
            snr_db: snr,
            ..SweepPlan::default()
        };
        let (csv1, svg1) = render(&plan, 1);
        let (csv_n, svg_n) = render(&plan, n);
        same &= csv1 == csv_n && svg1 == svg_n;
        plots = svg1.len();
    }
    outcome(
        same && plots == 25,
        format!("results CSV and {plots} SVG plots byte-identical at 1 and {n} threads (noiseless and 40 dB): {same}"),
    )
}

fn noise_robustness() -> Outcome {
    let tau = 2e-6;
    let drive = DriveField::new(1e3, 10e-3).unwrap();
    let y = relaxed(&ideal(1e3, 10e-3, 0.0), tau);
    let mut errors: Vec<f64> = (0..101)
        .map(|k| {
            let noisy = add_noise(&y, Some(40.0), cell_seed(9, 0, k)).unwrap();
            (estimate_tau(&noisy, &drive).unwrap().tau_hat - tau).abs() / tau
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    let median = errors[50];
    outcome(
        median <= 0.05,
        format!(
            "median relative error {median:.3e} over 101 seeds (limit 5e-2), worst {:.3e}",
            errors[100]
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "1 experiment grid: 660 records within 60 s",
            grid_cardinality_and_runtime,
        ),
        ("2 mirror symmetry of ideal signals", mirror_symmetry),
        ("3 tau round trip and forward-fit agreement", tau_round_trip),
        (
            "4 spectral vs recursive relaxation",
            realization_cross_check,
        ),
        ("5 RMS and peak fall with DC field", saturation_trend),
        ("6 dip profile tracking", profile_tracking),
        ("7 coil field correctness", coil_field),
        ("8 determinism across thread counts", determinism),
        ("9 noise robustness at 40 dB", noise_robustness),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "{} criterion {name} :: {} [{:.1} s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failures += usize::from(!o.passed);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
