//! Relaxation time constant from the broken mirror symmetry of the two half
//! cycles.
//!
//! An adiabatic response to a sinusoidal drive satisfies
//! `neg(t) = -pos(T/2 - t)` when each half cycle is a monotonic field sweep
//! between drive extrema. On the DFT grid of one half cycle that reads
//! `S_neg = -conj(S_pos)`. A first-order relaxation breaks the identity in a
//! way that can be inverted bin by bin:
//!
//! `tau(f) = (conj(S_pos) + S_neg) / (i 2 pi f (conj(S_pos) - S_neg))`.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::physics::DriveField;
use crate::spectral::forward_real;
use crate::trace::SignalTrace;

/// One rising (`pos`) and one falling (`neg`) half cycle, each starting at
/// local time zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCyclePair {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub dt: f64,
}

impl HalfCyclePair {
    pub fn len(&self) -> usize {
        self.pos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty()
    }

    /// Duration of one half cycle.
    pub fn half_period(&self) -> f64 {
        self.pos.len() as f64 * self.dt
    }
}

/// Thresholds that decide which bins enter the estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Bins with `|conj(S_pos) - S_neg|` below this fraction of `max |S_pos|` are not evaluated.
    pub denominator_guard: f64,
    /// Evaluated bins must carry at least this fraction of the largest denominator magnitude.
    pub inclusion_fraction: f64,
    /// Floor for `|tau_k|` in the residual, as a multiple of the sample interval.
    pub residual_floor: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            denominator_guard: 1e-9,
            inclusion_fraction: 0.01,
            residual_floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauBin {
    pub index: usize,
    /// Hz, `index / T_half`.
    pub frequency: f64,
    /// Real part of the bin ratio (s).
    pub tau: f64,
    pub ratio: Complex64,
    /// `|conj(S_pos) - S_neg|`, the weight basis.
    pub denominator: f64,
    pub included: bool,
    /// Normalized weight; zero for excluded bins.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauEstimate {
    pub tau_hat: f64,
    pub bins: Vec<TauBin>,
    /// Weighted `|Im(ratio)| / |tau_k|`; near zero for a clean first-order response.
    pub residual: f64,
}

impl TauEstimate {
    pub fn included(&self) -> impl Iterator<Item = &TauBin> {
        self.bins.iter().filter(|b| b.included)
    }
}

/// Split a periodic trace into one half-cycle pair per period.
///
/// With `Bz = A sin(2 pi f t)` the extrema sit at N/4 (+A) and 3N/4 (-A).
/// The falling half is `[N/4, 3N/4)`; the rising half starts at `3N/4` and
/// wraps to the start of the same period.
pub fn extract_half_cycles(trace: &SignalTrace, drive: &DriveField) -> Result<Vec<HalfCyclePair>> {
    check_drive_matches(trace, drive)?;
    let n = trace.samples_per_period();
    if !n.is_multiple_of(4) {
        return Err(Error::SamplesPerPeriodNotMultipleOf4(n));
    }
    let x = trace.samples();
    if !x.len().is_multiple_of(n) {
        return Err(Error::NotWholePeriods {
            len: x.len(),
            samples_per_period: n,
        });
    }
    let half = n / 2;
    let quarter = n / 4;
    Ok(x.chunks_exact(n)
        .map(|period| HalfCyclePair {
            pos: (0..half).map(|j| period[(3 * quarter + j) % n]).collect(),
            neg: period[quarter..quarter + half].to_vec(),
            dt: trace.dt(),
        })
        .collect())
}

/// Unwindowed DFT of each half over its own window.
pub fn half_cycle_spectra(pair: &HalfCyclePair) -> (Vec<Complex64>, Vec<Complex64>) {
    (forward_real(&pair.pos), forward_real(&pair.neg))
}

/// Per-bin ratio for `k = 1 .. N_h/2 - 1`.
///
/// Bins above N_h/2 mirror the ones below for real input and the Nyquist bin
/// carries no phase, so neither is evaluated. Returned weights are zero;
/// [`aggregate_tau`] fills them in.
pub fn tau_spectrum(
    s_pos: &[Complex64],
    s_neg: &[Complex64],
    half_period: f64,
    config: &EstimatorConfig,
) -> Vec<TauBin> {
    assert_eq!(s_pos.len(), s_neg.len(), "spectra from different pairs");
    let nh = s_pos.len();
    let peak = s_pos.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let guard = config.denominator_guard * peak;

    let mut bins: Vec<TauBin> = (1..nh.div_ceil(2))
        .map(|k| {
            let frequency = k as f64 / half_period;
            let num = s_pos[k].conj() + s_neg[k];
            let den = s_pos[k].conj() - s_neg[k];
            let denominator = den.norm();
            let evaluated = denominator >= guard && denominator > 0.0;
            let ratio = if evaluated {
                num / (Complex64::i() * TAU * frequency * den)
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            };
            TauBin {
                index: k,
                frequency,
                tau: ratio.re,
                ratio,
                denominator,
                included: evaluated,
                weight: 0.0,
            }
        })
        .collect();

    let top = bins
        .iter()
        .filter(|b| b.included)
        .map(|b| b.denominator)
        .fold(0.0, f64::max);
    let threshold = config.inclusion_fraction * top;
    for b in bins.iter_mut() {
        b.included &= b.denominator >= threshold;
    }
    bins
}

/// Weighted mean of included bins, weights proportional to the denominator
/// magnitude.
pub fn aggregate_tau(mut bins: Vec<TauBin>, residual_floor: f64) -> Result<TauEstimate> {
    let total: f64 = bins
        .iter()
        .filter(|b| b.included)
        .map(|b| b.denominator)
        .sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::AllBinsExcluded);
    }
    let mut tau_hat = 0.0;
    let mut residual = 0.0;
    for b in bins.iter_mut() {
        if b.included {
            b.weight = b.denominator / total;
            tau_hat += b.weight * b.tau;
            residual += b.weight * b.ratio.im.abs() / b.tau.abs().max(residual_floor);
        } else {
            b.weight = 0.0;
        }
    }
    Ok(TauEstimate {
        tau_hat,
        bins,
        residual,
    })
}

pub fn estimate_tau(trace: &SignalTrace, drive: &DriveField) -> Result<TauEstimate> {
    estimate_tau_with(trace, drive, &EstimatorConfig::default())
}

/// Average the half cycles of all periods, then estimate from the averaged pair.
pub fn estimate_tau_with(
    trace: &SignalTrace,
    drive: &DriveField,
    config: &EstimatorConfig,
) -> Result<TauEstimate> {
    let pairs = extract_half_cycles(trace, drive)?;
    let pair = average_pairs(&pairs);
    let (s_pos, s_neg) = half_cycle_spectra(&pair);
    let bins = tau_spectrum(&s_pos, &s_neg, pair.half_period(), config);
    aggregate_tau(bins, config.residual_floor * pair.dt)
}

/// Sample-wise mean of several pairs of equal length.
pub fn average_pairs(pairs: &[HalfCyclePair]) -> HalfCyclePair {
    let first = &pairs[0];
    let mut pos = vec![0.0; first.len()];
    let mut neg = vec![0.0; first.len()];
    for p in pairs {
        pos.iter_mut().zip(&p.pos).for_each(|(a, v)| *a += v);
        neg.iter_mut().zip(&p.neg).for_each(|(a, v)| *a += v);
    }
    let count = pairs.len() as f64;
    pos.iter_mut()
        .chain(neg.iter_mut())
        .for_each(|a| *a /= count);
    HalfCyclePair {
        pos,
        neg,
        dt: first.dt,
    }
}

fn check_drive_matches(trace: &SignalTrace, drive: &DriveField) -> Result<()> {
    drive.validate()?;
    let f = trace.fundamental();
    if ((f - drive.frequency) / drive.frequency).abs() > 1e-9 {
        return Err(Error::invalid(
            "DriveField frequency",
            format!(
                "{} Hz does not match the trace fundamental {} Hz",
                drive.frequency, f
            ),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{ideal_signal, DcField, ParticleModel, SamplingConfig};
    use crate::relaxation::{apply_relaxation, RelaxationKernel};

    fn setup(
        freq: f64,
        amp: f64,
        dc: f64,
        spp: usize,
        periods: usize,
    ) -> (SignalTrace, DriveField) {
        let drive = DriveField::new(freq, amp).unwrap();
        let tr = ideal_signal(
            &ParticleModel::default(),
            &drive,
            &DcField::new(dc).unwrap(),
            &SamplingConfig::new(spp, periods).unwrap(),
        )
        .unwrap();
        (tr, drive)
    }

    fn peak(x: &[f64]) -> f64 {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn ideal_halves_are_mirror_antisymmetric() {
        let (tr, drive) = setup(2e3, 10e-3, 4e-3, 1024, 3);
        let pairs = extract_half_cycles(&tr, &drive).unwrap();
        assert_eq!(pairs.len(), 3);
        let p = &pairs[0];
        let nh = p.len();
        let scale = peak(&p.pos);
        for j in 0..nh {
            let mirrored = p.pos[(nh - j) % nh];
            assert!((p.neg[j] + mirrored).abs() <= 1e-12 * scale, "j={j}");
        }
        // The rising half carries the positive lobe.
        assert!(p.pos[nh / 2] > 0.0 && p.neg[nh / 2] < 0.0);
    }

    #[test]
    fn mirror_violation_grows_with_tau() {
        let (tr, drive) = setup(1e3, 10e-3, 0.0, 2048, 1);
        let mut prev = 0.0;
        for tau in [0.5e-6, 1e-6, 2e-6, 5e-6] {
            let relaxed = apply_relaxation(&tr, &RelaxationKernel::new(tau).unwrap()).unwrap();
            let p = &extract_half_cycles(&relaxed, &drive).unwrap()[0];
            let nh = p.len();
            let v = (0..nh)
                .map(|j| (p.neg[j] + p.pos[(nh - j) % nh]).abs())
                .fold(0.0, f64::max);
            assert!(v > prev, "tau={tau}");
            prev = v;
        }
    }

    #[test]
    fn rejects_mismatched_drive_and_partial_periods() {
        let (tr, _) = setup(1e3, 10e-3, 0.0, 64, 1);
        let wrong = DriveField::new(2e3, 10e-3).unwrap();
        assert!(extract_half_cycles(&tr, &wrong).is_err());
        let odd = SignalTrace::new(tr.dt() * 64.0 / 66.0, vec![0.0; 66], 66).unwrap();
        let drive = DriveField::new(odd.fundamental(), 10e-3).unwrap();
        assert!(matches!(
            extract_half_cycles(&odd, &drive),
            Err(Error::SamplesPerPeriodNotMultipleOf4(66))
        ));
    }

    #[test]
    fn ideal_spectra_satisfy_conjugate_identity() {
        let (tr, drive) = setup(3e3, 12.5e-3, 6e-3, 1024, 1);
        let pair = &extract_half_cycles(&tr, &drive).unwrap()[0];
        let (sp, sn) = half_cycle_spectra(pair);
        let m = sp.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let nh = sp.len();
        for k in 0..nh {
            assert!((sn[k] + sp[k].conj()).norm() <= 1e-9 * m);
            assert!((sp[(nh - k) % nh] - sp[k].conj()).norm() <= 1e-12 * m);
        }
    }

    #[test]
    fn zero_halves_give_zero_spectra_and_no_bins() {
        let pair = HalfCyclePair {
            pos: vec![0.0; 16],
            neg: vec![0.0; 16],
            dt: 1e-6,
        };
        let (sp, sn) = half_cycle_spectra(&pair);
        assert!(sp.iter().chain(&sn).all(|c| c.norm() == 0.0));
        let bins = tau_spectrum(&sp, &sn, pair.half_period(), &EstimatorConfig::default());
        assert!(matches!(
            aggregate_tau(bins, 1e-12),
            Err(Error::AllBinsExcluded)
        ));
    }

    #[test]
    fn constructed_spectra_invert_exactly() {
        // S_neg = conj(S_pos) (i w tau - 1) / (i w tau + 1) inverts to tau.
        let tau = 3e-6;
        let nh = 64;
        let half = 0.25e-3;
        let sp: Vec<Complex64> = (0..nh)
            .map(|k| {
                Complex64::new(1.0 + k as f64, 0.3 * k as f64 - 2.0) / (1.0 + k as f64).powi(2)
            })
            .collect();
        let sn: Vec<Complex64> = sp
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let iwt = Complex64::new(0.0, TAU * k as f64 / half * tau);
                s.conj() * (iwt - 1.0) / (iwt + 1.0)
            })
            .collect();
        let config = EstimatorConfig {
            inclusion_fraction: 0.0,
            ..Default::default()
        };
        let bins = tau_spectrum(&sp, &sn, half, &config);
        for b in &bins {
            assert!(b.included);
            assert!(
                (b.tau - tau).abs() <= 1e-14 * tau,
                "k={} tau={}",
                b.index,
                b.tau
            );
            assert!(b.ratio.im.abs() <= 1e-14 * tau);
        }
    }

    #[test]
    fn aggregate_examples() {
        let bin = |tau: f64, den: f64| TauBin {
            index: 1,
            frequency: 1.0,
            tau,
            ratio: Complex64::new(tau, 0.0),
            denominator: den,
            included: true,
            weight: 0.0,
        };
        let est = aggregate_tau(vec![bin(4e-6, 2.0)], 1e-12).unwrap();
        assert_eq!(est.tau_hat, 4e-6);
        assert_eq!(est.bins[0].weight, 1.0);

        let est =
            aggregate_tau(vec![bin(2e-6, 1.0), bin(2e-6, 7.0), bin(2e-6, 0.3)], 1e-12).unwrap();
        assert!((est.tau_hat - 2e-6).abs() < 1e-20);
        let wsum: f64 = est.bins.iter().map(|b| b.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-15);

        let mut excluded = bin(1e-6, 1.0);
        excluded.included = false;
        assert!(matches!(
            aggregate_tau(vec![excluded], 1e-12),
            Err(Error::AllBinsExcluded)
        ));
    }

    #[test]
    fn relaxed_bins_recover_tau() {
        let (tr, drive) = setup(1e3, 10e-3, 0.0, 4096, 1);
        let relaxed = apply_relaxation(&tr, &RelaxationKernel::new(2e-6).unwrap()).unwrap();
        let est = estimate_tau(&relaxed, &drive).unwrap();
        assert!(est.included().count() >= 3);
        for b in est.included() {
            assert!(
                (b.tau - 2e-6).abs() <= 0.02 * 2e-6,
                "k={} tau={}",
                b.index,
                b.tau
            );
        }
        assert!((est.tau_hat - 2e-6).abs() <= 0.02 * 2e-6);
    }

    #[test]
    fn ideal_signal_gives_zero_tau_and_small_residual() {
        let (tr, drive) = setup(1e3, 10e-3, 2e-3, 4096, 2);
        let ideal = estimate_tau(&tr, &drive).unwrap();
        assert!(ideal.tau_hat.abs() <= 1e-9);
        let relaxed = apply_relaxation(&tr, &RelaxationKernel::new(1e-6).unwrap()).unwrap();
        let r = estimate_tau(&relaxed, &drive).unwrap();
        // The ratio is real by symmetry for any first-order response, so both
        // residuals sit at round-off.
        assert!(
            ideal.residual <= r.residual + 1e-12,
            "{} {}",
            ideal.residual,
            r.residual
        );
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn sweep_point_example() {
        let (tr, drive) = setup(3e3, 12.5e-3, 4e-3, 4096, 1);
        let relaxed = apply_relaxation(&tr, &RelaxationKernel::new(1.5e-6).unwrap()).unwrap();
        let est = estimate_tau(&relaxed, &drive).unwrap();
        assert!(
            (est.tau_hat - 1.5e-6).abs() <= 0.02 * 1.5e-6,
            "{}",
            est.tau_hat
        );
    }
}
