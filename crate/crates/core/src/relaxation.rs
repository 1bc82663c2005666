//! First-order relaxation: convolution with (1/tau) exp(-t/tau) u(t) in
//! periodic steady state.
//!
//! Two realizations live here. [`apply_relaxation`] multiplies the full-trace
//! DFT by 1/(1 + i 2 pi f tau) and is the reference. [`apply_relaxation_recursive`]
//! runs a causal recursive filter in the time domain and exists to cross-check
//! the first.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{bin_frequency, forward_real, inverse_to_real};
use crate::trace::SignalTrace;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelaxationKernel {
    /// Time constant (s). Zero means no relaxation.
    pub tau: f64,
}

impl RelaxationKernel {
    pub fn new(tau: f64) -> Result<Self> {
        let k = Self { tau };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau.is_finite() && self.tau >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(
                "RelaxationKernel tau",
                format!("must be finite and >= 0, got {}", self.tau),
            ))
        }
    }

    /// Continuous-time transfer function K(f) = 1 / (1 + i 2 pi f tau).
    pub fn transfer(&self, frequency: f64) -> Complex64 {
        Complex64::new(1.0, TAU * frequency * self.tau).inv()
    }
}

/// Periodic steady-state relaxed signal, computed in the frequency domain.
pub fn apply_relaxation(trace: &SignalTrace, kernel: &RelaxationKernel) -> Result<SignalTrace> {
    kernel.validate()?;
    if kernel.tau == 0.0 {
        return Ok(trace.clone());
    }
    let n = trace.len();
    let mut spectrum = forward_real(trace.samples());
    for (k, bin) in spectrum.iter_mut().enumerate() {
        *bin *= kernel.transfer(bin_frequency(k, n, trace.dt()));
    }
    trace.with_samples(inverse_to_real(spectrum))
}

/// Time-domain realization of the same kernel.
///
/// Between consecutive samples the input is modeled by the cubic through the
/// current and three previous samples, and the exponential is integrated
/// exactly over that cubic:
///
/// `y[i] = a*y[i-1] + w0*x[i-3] + w1*x[i-2] + w2*x[i-1] + w3*x[i]`, `a = exp(-dt/tau)`.
///
/// The weights sum to `1 - a`, so DC gain is exactly one. The filter starts
/// from rest and runs over `settle_periods` periodic repeats before the
/// returned window.
pub fn apply_relaxation_recursive(
    trace: &SignalTrace,
    kernel: &RelaxationKernel,
    settle_periods: usize,
) -> Result<SignalTrace> {
    kernel.validate()?;
    if settle_periods == 0 {
        return Err(Error::invalid("settle_periods", "must be >= 1"));
    }
    if kernel.tau == 0.0 {
        return Ok(trace.clone());
    }
    let x = trace.samples();
    let len = x.len() as isize;
    let at = |q: isize| x[q.rem_euclid(len) as usize];

    let (a, w) = cubic_hold_coefficients(trace.dt() / kernel.tau);
    let settle = (settle_periods * trace.samples_per_period()) as isize;

    let mut y = 0.0;
    let mut out = Vec::with_capacity(x.len());
    for q in -settle..len {
        y = a * y + w[0] * at(q - 3) + w[1] * at(q - 2) + w[2] * at(q - 1) + w[3] * at(q);
        if q >= 0 {
            out.push(y);
        }
    }
    trace.with_samples(out)
}

/// Pole `a = exp(-r)` and input weights for step ratio `r = dt/tau`.
fn cubic_hold_coefficients(r: f64) -> (f64, [f64; 4]) {
    let mu = exp_moments(r);
    // Monomial coefficients of the Lagrange basis on nodes s = -2, -1, 0, 1.
    const BASIS: [[f64; 4]; 4] = [
        [0.0, 1.0 / 6.0, 0.0, -1.0 / 6.0],
        [0.0, -1.0, 0.5, 0.5],
        [1.0, 0.5, -1.0, -0.5],
        [0.0, 1.0 / 3.0, 0.5, 1.0 / 6.0],
    ];
    let mut w = [0.0; 4];
    for (wj, coeffs) in w.iter_mut().zip(BASIS.iter()) {
        *wj = coeffs.iter().zip(mu.iter()).map(|(c, m)| c * m).sum();
    }
    ((-r).exp(), w)
}

/// mu_n = r * integral_0^1 exp(-r (1 - s)) s^n ds for n = 0..3.
fn exp_moments(r: f64) -> [f64; 4] {
    let mut mu = [0.0; 4];
    if r <= 20.0 {
        // r e^{-r} sum_k r^k / (k! (n + k + 1)); all terms positive.
        let pre = r * (-r).exp();
        for (n, m) in mu.iter_mut().enumerate() {
            let mut term = 1.0;
            let mut acc = 0.0;
            for k in 0..400 {
                let contrib = term / (n + k + 1) as f64;
                acc += contrib;
                if contrib < acc * 1e-18 {
                    break;
                }
                term *= r / (k + 1) as f64;
            }
            *m = pre * acc;
        }
    } else {
        // nu_m = r * integral_0^1 exp(-r v) v^m dv by upward recursion, then
        // expand (1 - v)^n.
        let e = (-r).exp();
        let mut nu = [0.0; 4];
        nu[0] = -(-r).exp_m1();
        for m in 1..4 {
            nu[m] = m as f64 / r * nu[m - 1] - e;
        }
        const BINOM: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, -1.0, 0.0, 0.0],
            [1.0, -2.0, 1.0, 0.0],
            [1.0, -3.0, 3.0, -1.0],
        ];
        for (n, m) in mu.iter_mut().enumerate() {
            *m = BINOM[n].iter().zip(nu.iter()).map(|(b, v)| b * v).sum();
        }
    }
    mu
}
