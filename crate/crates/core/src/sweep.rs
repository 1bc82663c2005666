//! Experiment grid: drive frequency x drive amplitude x DC label x repetition.
//!
//! Each cell synthesizes the ideal signal, relaxes it with the time constant
//! given by the injected [`TauProfile`], optionally adds noise, and records
//! signal metrics alongside the estimated time constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{ideal_signal, DcField, DriveField, ParticleModel, SamplingConfig};
use crate::relaxation::{apply_relaxation, RelaxationKernel};
use crate::taurus::{average_pairs, estimate_tau, extract_half_cycles};
use crate::trace::SignalTrace;

/// Time constant as a function of the DC bias (T -> s).
#[derive(Debug, Clone, PartialEq)]
pub enum TauProfile {
    Constant(f64),
    /// `(B_dc, tau)` points, strictly ascending in B_dc; linear in between,
    /// clamped outside.
    Table(Vec<(f64, f64)>),
    /// `tau0 * (1 - depth * exp(-((B - center) / width)^2)) + rise_rate * max(B - center, 0)`.
    ///
    /// Falls to a minimum at `center` and climbs past it, the shape seen in
    /// measured tau-vs-bias curves.
    Dip {
        tau0: f64,
        depth: f64,
        center: f64,
        width: f64,
        /// s/T.
        rise_rate: f64,
    },
}

impl Default for TauProfile {
    fn default() -> Self {
        TauProfile::Dip {
            tau0: 2e-6,
            depth: 0.5,
            center: 3e-3,
            width: 1.5e-3,
            rise_rate: 0.2e-3,
        }
    }
}

impl TauProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |what: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    what,
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        match self {
            TauProfile::Constant(t) => positive("TauProfile constant tau", *t),
            TauProfile::Table(points) => {
                if points.is_empty() {
                    return Err(Error::invalid(
                        "TauProfile table",
                        "needs at least one point",
                    ));
                }
                for (b, t) in points {
                    if !b.is_finite() {
                        return Err(Error::invalid("TauProfile table", "B_dc must be finite"));
                    }
                    positive("TauProfile table tau", *t)?;
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::invalid(
                        "TauProfile table",
                        "B_dc must be strictly ascending",
                    ));
                }
                Ok(())
            }
            TauProfile::Dip {
                tau0,
                depth,
                center,
                width,
                rise_rate,
            } => {
                positive("TauProfile dip tau0", *tau0)?;
                positive("TauProfile dip width", *width)?;
                if !(0.0..1.0).contains(depth) {
                    return Err(Error::invalid("TauProfile dip depth", "must lie in [0, 1)"));
                }
                if !center.is_finite() {
                    return Err(Error::invalid("TauProfile dip center", "must be finite"));
                }
                if !(rise_rate.is_finite() && *rise_rate >= 0.0) {
                    return Err(Error::invalid("TauProfile dip rise_rate", "must be >= 0"));
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(&self, b_dc: f64) -> f64 {
        match self {
            TauProfile::Constant(t) => *t,
            TauProfile::Table(points) => {
                let first = points[0];
                let last = points[points.len() - 1];
                if b_dc <= first.0 {
                    return first.1;
                }
                if b_dc >= last.0 {
                    return last.1;
                }
                let i = points.partition_point(|p| p.0 <= b_dc);
                let (b0, t0) = points[i - 1];
                let (b1, t1) = points[i];
                t0 + (t1 - t0) * (b_dc - b0) / (b1 - b0)
            }
            TauProfile::Dip {
                tau0,
                depth,
                center,
                width,
                rise_rate,
            } => {
                let u = (b_dc - center) / width;
                tau0 * (1.0 - depth * (-u * u).exp()) + rise_rate * (b_dc - center).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DcLabel {
    /// Coil removed; physics identical to a zero bias.
    NoCoil,
    /// Applied bias (T).
    Field(f64),
}

impl DcLabel {
    pub fn field(&self) -> f64 {
        match self {
            DcLabel::NoCoil => 0.0,
            DcLabel::Field(b) => *b,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Hz.
    pub frequencies: Vec<f64>,
    /// T.
    pub amplitudes: Vec<f64>,
    /// T; the no-coil reference is always measured in addition to these.
    pub dc_fields: Vec<f64>,
    pub repetitions: usize,
    /// Signal-to-noise ratio in dB; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub tau_profile: TauProfile,
    pub particle: ParticleModel,
    pub sampling: SamplingConfig,
    pub master_seed: u64,
}

impl Default for SweepPlan {
    /// 1-5 kHz x 7.5-15 mT x (no coil + 0..9 mT) x 3 repetitions = 660 runs.
    fn default() -> Self {
        Self {
            frequencies: vec![1e3, 2e3, 3e3, 4e3, 5e3],
            amplitudes: vec![7.5e-3, 10e-3, 12.5e-3, 15e-3],
            dc_fields: (0..10).map(|i| i as f64 * 1e-3).collect(),
            repetitions: 3,
            snr_db: None,
            tau_profile: TauProfile::default(),
            particle: ParticleModel::default(),
            sampling: SamplingConfig::default(),
            master_seed: 0x5EED_2024,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.frequencies.is_empty() || self.amplitudes.is_empty() || self.dc_fields.is_empty() {
            return Err(Error::invalid("SweepPlan", "grid lists must be non-empty"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("SweepPlan repetitions", "must be >= 1"));
        }
        for &f in &self.frequencies {
            for &a in &self.amplitudes {
                DriveField::new(f, a)?;
            }
        }
        for &b in &self.dc_fields {
            DcField::new(b)?;
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::invalid("SweepPlan snr_db", "must be finite"));
            }
        }
        self.tau_profile.validate()?;
        self.particle.validate()?;
        self.sampling.validate()
    }

    /// No-coil first, then the listed fields.
    pub fn dc_labels(&self) -> Vec<DcLabel> {
        std::iter::once(DcLabel::NoCoil)
            .chain(self.dc_fields.iter().map(|&b| DcLabel::Field(b)))
            .collect()
    }

    pub fn cell_count(&self) -> usize {
        self.frequencies.len() * self.amplitudes.len() * (1 + self.dc_fields.len())
    }

    pub fn record_count(&self) -> usize {
        self.cell_count() * self.repetitions
    }

    /// Cells in row-major order: frequency outermost, DC label innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let labels = self.dc_labels();
        let mut out = Vec::with_capacity(self.cell_count());
        for &frequency in &self.frequencies {
            for &amplitude in &self.amplitudes {
                for &dc_label in &labels {
                    out.push(Cell {
                        index: out.len(),
                        frequency,
                        amplitude,
                        dc_label,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub frequency: f64,
    pub amplitude: f64,
    pub dc_label: DcLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub frequency: f64,
    pub amplitude: f64,
    pub dc_label: DcLabel,
    pub repetition: usize,
    pub rms: f64,
    pub peak: f64,
    /// s.
    pub fwhm: f64,
    pub tau_true: f64,
    /// `None` when no frequency bin was usable.
    pub tau_hat: Option<f64>,
    pub residual: Option<f64>,
    pub seed: u64,
}

/// Signal-level aggregate of one cell: repetitions averaged before estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledCell {
    pub frequency: f64,
    pub amplitude: f64,
    pub dc_label: DcLabel,
    pub tau_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub pooled: Vec<PooledCell>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise seed of one run:
/// `splitmix64(splitmix64(splitmix64(master) ^ cell) ^ repetition)`.
pub fn cell_seed(master_seed: u64, cell_index: usize, repetition: usize) -> u64 {
    let s = splitmix64(splitmix64(master_seed) ^ cell_index as u64);
    splitmix64(s ^ repetition as u64)
}

pub fn rms(trace: &SignalTrace) -> f64 {
    let x = trace.samples();
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Peak and full width at half maximum of the period-averaged rising half
/// cycle, with linear interpolation at the half-maximum crossings.
pub fn peak_fwhm(trace: &SignalTrace) -> Result<(f64, f64)> {
    let n = trace.samples_per_period();
    if !n.is_multiple_of(4) {
        return Err(Error::SamplesPerPeriodNotMultipleOf4(n));
    }
    let avg = trace.period_average();
    let x = avg.samples();
    let half: Vec<f64> = (0..n / 2).map(|j| x[(3 * n / 4 + j) % n]).collect();

    let (ip, &peak) = half
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::NoPeak);
    }
    let level = 0.5 * peak;
    let crossing = |i_in: usize, i_out: usize| -> f64 {
        // Fractional index where the segment from i_in to i_out crosses `level`.
        let (a, b) = (half[i_in], half[i_out]);
        i_in as f64 + (i_out as f64 - i_in as f64) * (a - level) / (a - b)
    };
    let left = (0..ip)
        .rev()
        .find(|&i| half[i] < level)
        .map_or(0.0, |i| crossing(i + 1, i));
    let right = (ip + 1..half.len())
        .find(|&i| half[i] < level)
        .map_or((half.len() - 1) as f64, |i| crossing(i - 1, i));
    Ok((peak, (right - left) * trace.dt()))
}

/// White Gaussian noise with standard deviation `rms(trace) * 10^(-snr/20)`.
/// `None` returns the trace unchanged.
pub fn add_noise(trace: &SignalTrace, snr_db: Option<f64>, seed: u64) -> Result<SignalTrace> {
    let Some(snr) = snr_db else {
        return Ok(trace.clone());
    };
    let level = rms(trace);
    if level.is_nan() || level <= 0.0 {
        return Err(Error::invalid("add_noise", "trace RMS must be > 0"));
    }
    let sigma = level * 10f64.powf(-snr / 20.0);
    let normal =
        Normal::new(0.0, sigma).map_err(|e| Error::invalid("noise level", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    trace.with_samples(
        trace
            .samples()
            .iter()
            .map(|v| v + normal.sample(&mut rng))
            .collect(),
    )
}

/// One repetition of one cell with an explicit noise seed.
pub fn run_cell(
    plan: &SweepPlan,
    cell: &Cell,
    repetition: usize,
    seed: u64,
) -> Result<SweepRecord> {
    let ideal = cell_ideal(plan, cell)?;
    let tau_true = plan.tau_profile.evaluate(cell.dc_label.field());
    let relaxed = apply_relaxation(&ideal, &RelaxationKernel::new(tau_true)?)?;
    finish_record(plan, cell, repetition, seed, tau_true, &relaxed).map(|(r, _)| r)
}

fn cell_ideal(plan: &SweepPlan, cell: &Cell) -> Result<SignalTrace> {
    let drive = DriveField::new(cell.frequency, cell.amplitude)?;
    let dc = DcField::new(cell.dc_label.field())?;
    ideal_signal(&plan.particle, &drive, &dc, &plan.sampling)
}

fn finish_record(
    plan: &SweepPlan,
    cell: &Cell,
    repetition: usize,
    seed: u64,
    tau_true: f64,
    relaxed: &SignalTrace,
) -> Result<(SweepRecord, SignalTrace)> {
    let drive = DriveField::new(cell.frequency, cell.amplitude)?;
    let observed = add_noise(relaxed, plan.snr_db, seed)?;
    let (peak, fwhm) = peak_fwhm(&observed)?;
    let (tau_hat, residual) = match estimate_tau(&observed, &drive) {
        Ok(est) => (Some(est.tau_hat), Some(est.residual)),
        Err(Error::AllBinsExcluded) => (None, None),
        Err(e) => return Err(e),
    };
    let record = SweepRecord {
        frequency: cell.frequency,
        amplitude: cell.amplitude,
        dc_label: cell.dc_label,
        repetition,
        rms: rms(&observed),
        peak,
        fwhm,
        tau_true,
        tau_hat,
        residual,
        seed,
    };
    Ok((record, observed))
}

fn run_cell_all(plan: &SweepPlan, cell: &Cell) -> Result<(Vec<SweepRecord>, PooledCell)> {
    let ideal = cell_ideal(plan, cell)?;
    let tau_true = plan.tau_profile.evaluate(cell.dc_label.field());
    let relaxed = apply_relaxation(&ideal, &RelaxationKernel::new(tau_true)?)?;
    let mut records = Vec::with_capacity(plan.repetitions);
    let mut pairs = Vec::new();
    let drive = DriveField::new(cell.frequency, cell.amplitude)?;
    for rep in 0..plan.repetitions {
        let seed = cell_seed(plan.master_seed, cell.index, rep);
        let (record, observed) = finish_record(plan, cell, rep, seed, tau_true, &relaxed)?;
        pairs.extend(extract_half_cycles(&observed, &drive)?);
        records.push(record);
    }
    let pooled_pair = average_pairs(&pairs);
    let pooled = PooledCell {
        frequency: cell.frequency,
        amplitude: cell.amplitude,
        dc_label: cell.dc_label,
        tau_hat: estimate_pair(&pooled_pair)?,
    };
    Ok((records, pooled))
}

fn estimate_pair(pair: &crate::taurus::HalfCyclePair) -> Result<Option<f64>> {
    use crate::taurus::{aggregate_tau, half_cycle_spectra, tau_spectrum, EstimatorConfig};
    let config = EstimatorConfig::default();
    let (sp, sn) = half_cycle_spectra(pair);
    let bins = tau_spectrum(&sp, &sn, pair.half_period(), &config);
    match aggregate_tau(bins, config.residual_floor * pair.dt) {
        Ok(est) => Ok(Some(est.tau_hat)),
        Err(Error::AllBinsExcluded) => Ok(None),
        Err(e) => Err(e),
    }
}

/// All records in grid order. Cells run in parallel on the current rayon pool;
/// output does not depend on the thread count.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRecord>> {
    Ok(run_sweep_detailed(plan)?.records)
}

/// Records plus the per-cell signal-averaged estimate.
pub fn run_sweep_detailed(plan: &SweepPlan) -> Result<SweepOutcome> {
    plan.validate()?;
    let per_cell: Vec<(Vec<SweepRecord>, PooledCell)> = plan
        .cells()
        .par_iter()
        .map(|cell| run_cell_all(plan, cell))
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(plan.record_count());
    let mut pooled = Vec::with_capacity(per_cell.len());
    for (r, p) in per_cell {
        records.extend(r);
        pooled.push(p);
    }
    Ok(SweepOutcome { records, pooled })
}

/// Repetition statistics of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub frequency: f64,
    pub amplitude: f64,
    pub dc_label: DcLabel,
    pub count: usize,
    pub rms_mean: f64,
    pub rms_std: f64,
    /// Over repetitions with a valid estimate; `None` if there were none.
    pub tau_mean: Option<f64>,
    pub tau_std: Option<f64>,
    pub tau_true: f64,
    /// Estimate from the repetition-averaged signal, when available.
    pub tau_pooled: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn same_cell(a: &SweepRecord, f: f64, amp: f64, label: DcLabel) -> bool {
    a.frequency == f && a.amplitude == amp && a.dc_label == label
}

/// Mean and sample standard deviation per (frequency, amplitude, DC label),
/// in order of first appearance.
pub fn summarize(records: &[SweepRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<(f64, f64, DcLabel, Vec<&SweepRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .rev()
            .find(|g| same_cell(r, g.0, g.1, g.2))
        {
            Some(g) => g.3.push(r),
            None => groups.push((r.frequency, r.amplitude, r.dc_label, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(frequency, amplitude, dc_label, rs)| {
            let rms: Vec<f64> = rs.iter().map(|r| r.rms).collect();
            let taus: Vec<f64> = rs.iter().filter_map(|r| r.tau_hat).collect();
            let (rms_mean, rms_std) = mean_std(&rms);
            let (tau_mean, tau_std) = if taus.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&taus);
                (Some(m), Some(s))
            };
            CellSummary {
                frequency,
                amplitude,
                dc_label,
                count: rs.len(),
                rms_mean,
                rms_std,
                tau_mean,
                tau_std,
                tau_true: rs[0].tau_true,
                tau_pooled: None,
            }
        })
        .collect()
}

/// [`summarize`] with the signal-averaged estimates filled in.
pub fn summarize_outcome(outcome: &SweepOutcome) -> Vec<CellSummary> {
    let mut summary = summarize(&outcome.records);
    for s in summary.iter_mut() {
        s.tau_pooled = outcome
            .pooled
            .iter()
            .find(|p| {
                p.frequency == s.frequency && p.amplitude == s.amplitude && p.dc_label == s.dc_label
            })
            .and_then(|p| p.tau_hat);
    }
    summary
}
