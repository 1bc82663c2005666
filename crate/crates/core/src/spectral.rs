//! Thin wrappers around rustfft with a per-thread planner cache.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, X[k] = sum x[j] exp(-2 pi i k j / n).
pub fn forward_real(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

/// Inverse DFT scaled by 1/n, keeping only the real part.
pub fn inverse_to_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut spectrum));
    let scale = 1.0 / n as f64;
    spectrum.into_iter().map(|c| c.re * scale).collect()
}

/// Signed frequency of bin `k` in an `n`-point DFT with sample interval `dt`.
/// The Nyquist bin is reported as positive.
pub fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let signed = if 2 * k <= n {
        k as f64
    } else {
        k as f64 - n as f64
    };
    signed / (n as f64 * dt)
}
