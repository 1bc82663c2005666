//! Fast invariant checks behind the `selftest` command.

use crate::coilfield::{loop_field, loop_field_brute_force, CoilGeometry, MU_0};
use crate::error::Result;
use crate::physics::{ideal_signal, DcField, DriveField, ParticleModel, SamplingConfig};
use crate::relaxation::{apply_relaxation, apply_relaxation_recursive, RelaxationKernel};
use crate::sweep::{add_noise, rms};
use crate::taurus::{average_pairs, estimate_tau, extract_half_cycles, half_cycle_spectra};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check {
        name,
        passed: value <= limit,
        detail: format!("{value:.3e} (limit {limit:.1e})"),
    }
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn run() -> Result<Vec<Check>> {
    let particle = ParticleModel::default();
    let sampling = SamplingConfig::new(1024, 2)?;
    let drive = DriveField::new(1e3, 10e-3)?;
    let mut out = Vec::new();

    let ideal = ideal_signal(&particle, &drive, &DcField::new(3e-3)?, &sampling)?;
    let pair = average_pairs(&extract_half_cycles(&ideal, &drive)?);
    let (sp, sn) = half_cycle_spectra(&pair);
    let scale = sp.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let violation = sp
        .iter()
        .zip(&sn)
        .map(|(p, n)| (n + p.conj()).norm())
        .fold(0.0, f64::max);
    out.push(check(
        "mirror symmetry of the ideal signal",
        violation / scale,
        1e-9,
    ));

    let tau = 2e-6;
    let kernel = RelaxationKernel::new(tau)?;
    let relaxed = apply_relaxation(&ideal, &kernel)?;
    let est = estimate_tau(&relaxed, &drive)?;
    out.push(check(
        "tau round trip at 2 us",
        (est.tau_hat - tau).abs() / tau,
        0.02,
    ));

    let recursive = apply_relaxation_recursive(&ideal, &kernel, 2)?;
    out.push(check(
        "recursive vs spectral relaxation",
        rel_l2(recursive.samples(), relaxed.samples()),
        1e-6,
    ));

    let r0 = rms(&ideal_signal(
        &particle,
        &drive,
        &DcField::new(0.0)?,
        &sampling,
    )?);
    let r9 = rms(&ideal_signal(
        &particle,
        &drive,
        &DcField::new(9e-3)?,
        &sampling,
    )?);
    out.push(Check {
        name: "RMS falls with DC field",
        passed: r9 < r0,
        detail: format!("rms(0 mT) = {r0:.4e}, rms(9 mT) = {r9:.4e}"),
    });

    let (a, r) = loop_field(0.05, 1.0, 1.0, 0.013, 0.021)?;
    let (ba, br) = loop_field_brute_force(0.05, 1.0, 1.0, 0.013, 0.021, 200_000);
    out.push(check(
        "loop field vs Biot-Savart sum",
        ((a - ba).powi(2) + (r - br).powi(2)).sqrt() / (a * a + r * r).sqrt(),
        1e-9,
    ));

    let coil = CoilGeometry::example();
    let expected =
        0.8f64.powf(1.5) * MU_0 * coil.turns_per_loop as f64 * coil.current / coil.loop_radius;
    let center = coil.field_at(0.0, 0.0)?.0;
    out.push(check(
        "Helmholtz center field",
        (center - expected).abs() / expected,
        1e-3,
    ));

    let n1 = add_noise(&relaxed, Some(40.0), 11)?;
    let n2 = add_noise(&relaxed, Some(40.0), 11)?;
    out.push(Check {
        name: "seeded noise is reproducible",
        passed: n1 == n2,
        detail: String::new(),
    });
    Ok(out)
}
