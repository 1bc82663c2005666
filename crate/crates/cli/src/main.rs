use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mnp_relax::coilfield::{
    center_sensitivity, chamber_fit, helmholtz_map, homogeneity_region, ChamberAxis,
};
use mnp_relax::io::csv::{field_map_csv, summary_csv, tau_bins_csv, write_text};
use mnp_relax::io::{
    heatmap_svg, load_config, parse_config, read_signal_csv, results_csv, sweep_plots,
    write_signal_csv, Metadata, PlotStyle, RunConfig, DEFAULT_CONFIG,
};
use mnp_relax::physics::{ideal_signal, DcField, DriveField};
use mnp_relax::relaxation::{apply_relaxation, RelaxationKernel};
use mnp_relax::sweep::{add_noise, run_sweep_detailed, summarize_outcome};
use mnp_relax::taurus::estimate_tau;
use mnp_relax::{selftest, Error};

/// Magnetic nanoparticle relaxation simulator and time-constant estimator.
#[derive(Parser)]
#[command(name = "mnp-relax", version)]
struct Cli {
    /// Worker threads for parallel stages (default: RAYON_NUM_THREADS or all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one relaxed signal and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the relaxation time constant of a signal CSV.
    Estimate(EstimateArgs),
    /// Run the experiment grid; write results, summary and plots.
    Sweep(SweepArgs),
    /// Compute the DC coil field map and its homogeneity region.
    Coilmap(CoilmapArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML configuration (default: the shipped default configuration).
    #[arg(long, short)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output CSV (default: <output dir>/signal.csv).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Override drive.frequency_Hz.
    #[arg(long)]
    frequency_hz: Option<f64>,
    /// Override drive.amplitude_mT.
    #[arg(long)]
    amplitude_mt: Option<f64>,
    /// Override dc.field_mT.
    #[arg(long)]
    dc_mt: Option<f64>,
    /// Override relaxation.tau_us.
    #[arg(long)]
    tau_us: Option<f64>,
    /// Add white Gaussian noise at this SNR (dB).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EstimateArgs {
    /// Signal CSV written by `simulate`.
    input: PathBuf,
    /// Also write the per-bin breakdown to this CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output directory (default: output.directory from the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override sweep.master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override sweep.snr_dB.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Skip writing SVG plots.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Args)]
struct CoilmapArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Output directory (default: output.directory from the config).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn config(arg: &ConfigArg) -> Result<RunConfig, Error> {
    match &arg.config {
        Some(p) => load_config(p),
        None => parse_config(DEFAULT_CONFIG),
    }
}

fn usage_error(field: &str, e: Error) -> Error {
    Error::Validation {
        field: field.to_string(),
        message: e.to_string(),
    }
}

fn simulate(a: &SimulateArgs) -> Result<(), Error> {
    let cfg = config(&a.config)?;
    let base = cfg.require_drive()?;
    let drive = DriveField::new(
        a.frequency_hz.unwrap_or(base.frequency),
        a.amplitude_mt.map_or(base.amplitude, |v| v / 1e3),
    )
    .map_err(|e| usage_error("--frequency-hz/--amplitude-mt", e))?;
    let dc = match a.dc_mt {
        Some(v) => DcField::new(v / 1e3).map_err(|e| usage_error("--dc-mt", e))?,
        None => cfg.dc,
    };
    let kernel = match a.tau_us {
        Some(v) => RelaxationKernel::new(v / 1e6).map_err(|e| usage_error("--tau-us", e))?,
        None => cfg.relaxation,
    };
    let ideal = ideal_signal(&cfg.particle, &drive, &dc, &cfg.sampling)?;
    let trace = add_noise(&apply_relaxation(&ideal, &kernel)?, a.snr_db, a.seed)?;

    let mut meta = Metadata::new();
    meta.insert(
        "generator".into(),
        format!("mnp-relax {} simulate", env!("CARGO_PKG_VERSION")),
    );
    meta.insert("frequency_Hz".into(), format!("{:.16e}", drive.frequency));
    meta.insert(
        "amplitude_mT".into(),
        format!("{:.16e}", drive.amplitude * 1e3),
    );
    meta.insert("dc_mT".into(), format!("{:.16e}", dc.magnitude * 1e3));
    meta.insert("tau_us".into(), format!("{:.16e}", kernel.tau * 1e6));
    if let Some(snr) = a.snr_db {
        meta.insert("snr_dB".into(), format!("{snr}"));
        meta.insert("seed".into(), a.seed.to_string());
    }
    let path = a
        .output
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("signal.csv"));
    write_signal_csv(&path, &trace, &meta)?;
    println!("wrote {} ({} samples)", path.display(), trace.len());
    Ok(())
}

fn estimate(a: &EstimateArgs) -> Result<(), Error> {
    let (trace, meta) = read_signal_csv(&a.input)?;
    // Only the frequency matters to the estimator; any positive amplitude works.
    let amplitude = meta
        .get("amplitude_mT")
        .and_then(|v| v.parse::<f64>().ok())
        .filter(|v| *v > 0.0)
        .map_or(1.0, |v| v / 1e3);
    let drive = DriveField::new(trace.fundamental(), amplitude)?;
    let est = estimate_tau(&trace, &drive)?;
    println!("tau_hat_s={:.16e}", est.tau_hat);
    println!("tau_hat_us={:.6}", est.tau_hat * 1e6);
    println!("residual={:.6e}", est.residual);
    println!("bins_used={}", est.included().count());
    if let Some(t) = meta.get("tau_us").and_then(|v| v.parse::<f64>().ok()) {
        if t > 0.0 {
            println!("relative_error={:.6e}", (est.tau_hat * 1e6 - t) / t);
        }
    }
    if let Some(p) = &a.csv {
        write_text(p, &tau_bins_csv(&est))?;
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<(), Error> {
    let cfg = config(&a.config)?;
    let mut plan = cfg.require_sweep()?.clone();
    if let Some(s) = a.seed {
        plan.master_seed = s;
    }
    if a.snr_db.is_some() {
        plan.snr_db = a.snr_db;
    }
    let dir = a.out_dir.clone().unwrap_or(cfg.output_dir);
    let outcome = run_sweep_detailed(&plan)?;
    let summary = summarize_outcome(&outcome);
    write_text(&dir.join("results.csv"), &results_csv(&outcome.records))?;
    write_text(&dir.join("summary.csv"), &summary_csv(&summary))?;
    let invalid = outcome
        .records
        .iter()
        .filter(|r| r.tau_hat.is_none())
        .count();
    println!(
        "wrote {} records to {}",
        outcome.records.len(),
        dir.join("results.csv").display()
    );
    if invalid > 0 {
        println!("{invalid} records have no valid tau estimate (NaN)");
    }
    if !a.no_plots {
        let plots = sweep_plots(&summary)?;
        for (name, svg) in &plots {
            write_text(&dir.join("plots").join(name), svg)?;
        }
        println!(
            "wrote {} plots to {}",
            plots.len(),
            dir.join("plots").display()
        );
    }
    Ok(())
}

fn coilmap(a: &CoilmapArgs) -> Result<(), Error> {
    let cfg = config(&a.config)?;
    let setup = *cfg.require_coil()?;
    let dir = a.out_dir.clone().unwrap_or(cfg.output_dir);
    let map = helmholtz_map(&setup.geometry, &setup.grid)?;
    let region = homogeneity_region(&map, setup.level)?;
    write_text(&dir.join("coilmap.csv"), &field_map_csv(&map))?;
    let style = PlotStyle::new("DC coil field Bx (T)", "x (m, coil axis)", "z (m)");
    write_text(&dir.join("coilmap.svg"), &heatmap_svg(&map, &style)?)?;

    let g = setup.geometry;
    println!("center_field_T={:.6e}", map_center(&map));
    println!("sensitivity_mT_per_A={:.6}", center_sensitivity(&g)? * 1e3);
    println!(
        "homogeneity_{:.0}pct_axial_cm={:.3}",
        setup.level * 100.0,
        region.axial_extent * 1e2
    );
    println!(
        "homogeneity_{:.0}pct_radial_cm={:.3}",
        setup.level * 100.0,
        region.radial_extent * 1e2
    );
    for (name, axis) in [
        ("along_drive_axis", ChamberAxis::AlongDriveAxis),
        ("along_coil_axis", ChamberAxis::AlongCoilAxis),
    ] {
        println!(
            "chamber_fits_{name}={}",
            chamber_fit(&region, setup.chamber_diameter, setup.chamber_length, axis)
        );
    }
    Ok(())
}

fn map_center(map: &mnp_relax::coilfield::FieldMap) -> f64 {
    map.at(map.nx / 2, map.nz / 2)
}

fn run_selftest() -> Result<bool, Error> {
    let checks = selftest::run()?;
    let mut ok = true;
    for c in &checks {
        println!(
            "{} {}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        ok &= c.passed;
    }
    Ok(ok)
}

fn exit_code(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_io() { 2 } else { 1 })
}

fn dispatch(cli: &Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Coilmap(a) => coilmap(a),
        Command::Selftest => match run_selftest() {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_code(&e),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be >= 1");
            ExitCode::from(1)
        }
        Some(n) => match rayon_pool(n) {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
        },
        None => dispatch(&cli),
    }
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| e.to_string())
}
