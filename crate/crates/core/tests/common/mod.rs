//! Shared oracles for the integration tests.
#![allow(dead_code)]

use mnp_relax::relaxation::{apply_relaxation_recursive, RelaxationKernel};
use mnp_relax::SignalTrace;

/// Time constant that best reproduces `observed` from `ideal` by forward
/// simulation, found by golden-section search on the squared error over
/// `[lo, hi]`. The forward model is the recursive time-domain filter, so the
/// fit shares no code with the spectral estimator.
pub fn golden_section_tau(
    ideal: &SignalTrace,
    observed: &SignalTrace,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> f64 {
    let period = ideal.samples_per_period() as f64 * ideal.dt();
    let cost = |tau: f64| -> f64 {
        let settle = ((20.0 * tau / period).ceil() as usize).max(1);
        let y = apply_relaxation_recursive(ideal, &RelaxationKernel::new(tau).unwrap(), settle)
            .unwrap();
        y.samples()
            .iter()
            .zip(observed.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    while (b - a) > rel_tol * 0.5 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(d);
        }
    }
    0.5 * (a + b)
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub const FREQUENCIES: [f64; 5] = [1e3, 2e3, 3e3, 4e3, 5e3];
pub const AMPLITUDES: [f64; 4] = [7.5e-3, 10e-3, 12.5e-3, 15e-3];

/// 0, 1, ..., 9 mT.
pub fn dc_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 * 1e-3).collect()
}
