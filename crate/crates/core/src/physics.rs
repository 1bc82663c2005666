//! Adiabatic Langevin response of a nanoparticle ensemble to a sinusoidal
//! drive field along z with a static bias along x.
//!
//! The receive coil is taken collinear with the drive axis, so the ideal
//! signal is the time derivative of the z magnetization with unit coil
//! sensitivity.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::trace::SignalTrace;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Below this |x| the Langevin family is evaluated from its Taylor series.
const SERIES_CUTOFF: f64 = 0.3;

/// Taylor coefficients of L(x) = sum c_n x^(2n-1), c_n = 2^(2n) B_2n / (2n)!.
const LANGEVIN_SERIES: [f64; 8] = [
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638_512_875.0,
    4.0 / 18_243_225.0,
    -3617.0 * 65536.0 / (510.0 * 20_922_789_888_000.0),
];

/// Langevin function L(x) = coth(x) - 1/x.
pub fn langevin(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        x * langevin_over_x_series(x * x)
    } else {
        1.0 / x.tanh() - 1.0 / x
    }
}

/// Derivative L'(x) = 1/x^2 - 1/sinh^2(x).
pub fn dlangevin(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        let x2 = x * x;
        let mut acc = 0.0;
        for (n, c) in LANGEVIN_SERIES.iter().enumerate().rev() {
            acc = acc * x2 + (2 * n + 1) as f64 * c;
        }
        acc
    } else {
        let s = x.sinh();
        1.0 / (x * x) - 1.0 / (s * s)
    }
}

/// L(x)/x without the 0/0 at the origin; tends to 1/3.
pub fn langevin_over_x(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        langevin_over_x_series(x * x)
    } else {
        langevin(x) / x
    }
}

fn langevin_over_x_series(x2: f64) -> f64 {
    LANGEVIN_SERIES
        .iter()
        .rev()
        .fold(0.0, |acc, c| acc * x2 + c)
}

/// Single-domain particle described by its magnetic core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleModel {
    /// Core diameter (m).
    pub core_diameter: f64,
    /// Saturation magnetization of the core (A/m).
    pub saturation_magnetization: f64,
    /// Absolute temperature (K).
    pub temperature: f64,
}

impl Default for ParticleModel {
    /// Magnetite-like stand-in: 25 nm core, 300 kA/m, 300 K.
    fn default() -> Self {
        Self {
            core_diameter: 25e-9,
            saturation_magnetization: 300e3,
            temperature: 300.0,
        }
    }
}

impl ParticleModel {
    pub fn new(
        core_diameter: f64,
        saturation_magnetization: f64,
        temperature: f64,
    ) -> Result<Self> {
        let p = Self {
            core_diameter,
            saturation_magnetization,
            temperature,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("ParticleModel core_diameter", self.core_diameter)?;
        positive(
            "ParticleModel saturation_magnetization",
            self.saturation_magnetization,
        )?;
        positive("ParticleModel temperature", self.temperature)?;
        positive("ParticleModel magnetic moment", self.moment())?;
        positive("ParticleModel Langevin scale", self.xi_per_tesla())
    }

    /// Magnetic moment m = Ms * (pi/6) d^3 (A m^2).
    pub fn moment(&self) -> f64 {
        self.saturation_magnetization * PI / 6.0 * self.core_diameter.powi(3)
    }

    /// Langevin argument per tesla, m / (k_B T).
    pub fn xi_per_tesla(&self) -> f64 {
        self.moment() / (BOLTZMANN * self.temperature)
    }
}

/// Excitation waveform of the drive coil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Waveform {
    #[default]
    Sine,
}

/// Drive field along z: `amplitude * sin(2 pi f t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveField {
    /// Hz.
    pub frequency: f64,
    /// T.
    pub amplitude: f64,
    pub waveform: Waveform,
}

impl DriveField {
    pub fn new(frequency: f64, amplitude: f64) -> Result<Self> {
        let d = Self {
            frequency,
            amplitude,
            waveform: Waveform::Sine,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        positive("DriveField frequency", self.frequency)?;
        positive("DriveField amplitude", self.amplitude)
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

/// Static bias along x (T).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DcField {
    pub magnitude: f64,
}

impl DcField {
    pub fn new(magnitude: f64) -> Result<Self> {
        let d = Self { magnitude };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(Error::invalid(
                "DcField magnitude",
                format!("must be finite and >= 0, got {}", self.magnitude),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub samples_per_period: usize,
    pub periods: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples_per_period: 4096,
            periods: 2,
        }
    }
}

impl SamplingConfig {
    pub fn new(samples_per_period: usize, periods: usize) -> Result<Self> {
        let s = Self {
            samples_per_period,
            periods,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_period == 0 || !self.samples_per_period.is_multiple_of(4) {
            return Err(Error::SamplesPerPeriodNotMultipleOf4(
                self.samples_per_period,
            ));
        }
        if self.periods == 0 {
            return Err(Error::invalid("SamplingConfig periods", "must be >= 1"));
        }
        Ok(())
    }
}

/// Applied field (Bx, Bz) at time `t`.
pub fn field_at(t: f64, drive: &DriveField, dc: &DcField) -> (f64, f64) {
    let bz = drive.amplitude * (TAU * drive.frequency * t).sin();
    (dc.magnitude, bz)
}

/// Normalized z magnetization L(xi |B|) Bz / |B|.
pub fn magnetization_z(bx: f64, bz: f64, particle: &ParticleModel) -> f64 {
    let xi = particle.xi_per_tesla();
    let u = xi * bx.hypot(bz);
    // L(u)/u carries the 0/0 limit at |B| = 0.
    xi * bz * langevin_over_x(u)
}

/// Partial derivative of [`magnetization_z`] with respect to Bz (1/T).
///
/// Split as xi * [L'(u) cos^2 + (L(u)/u) sin^2] with cos = Bz/|B|; at the
/// origin both branches meet at xi/3.
pub fn dmagnetization_z_dbz(bx: f64, bz: f64, particle: &ParticleModel) -> f64 {
    let xi = particle.xi_per_tesla();
    let b2 = bx * bx + bz * bz;
    if b2 == 0.0 {
        return xi / 3.0;
    }
    let u = xi * b2.sqrt();
    let cos2 = bz * bz / b2;
    let sin2 = bx * bx / b2;
    xi * (dlangevin(u) * cos2 + langevin_over_x(u) * sin2)
}

/// Relaxation-free receive signal dMz/dt sampled over whole drive periods.
pub fn ideal_signal(
    particle: &ParticleModel,
    drive: &DriveField,
    dc: &DcField,
    sampling: &SamplingConfig,
) -> Result<SignalTrace> {
    particle.validate()?;
    drive.validate()?;
    dc.validate()?;
    sampling.validate()?;

    let n = sampling.samples_per_period;
    let omega = TAU * drive.frequency;
    let dt = 1.0 / (drive.frequency * n as f64);
    let one_period: Vec<f64> = (0..n)
        .map(|i| {
            // Phase from the in-period index so every period is bit-identical.
            let phase = TAU * i as f64 / n as f64;
            let bz = drive.amplitude * phase.sin();
            let dbz_dt = drive.amplitude * omega * phase.cos();
            dmagnetization_z_dbz(dc.magnitude, bz, particle) * dbz_dt
        })
        .collect();

    let mut samples = Vec::with_capacity(n * sampling.periods);
    for _ in 0..sampling.periods {
        samples.extend_from_slice(&one_period);
    }
    SignalTrace::new(dt, samples, n)
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            what,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}
