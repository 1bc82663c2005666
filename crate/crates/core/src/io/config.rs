//! TOML run configuration. Every physical quantity carries its unit in the
//! key name; unknown keys are rejected.
#![allow(non_snake_case)]

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::coilfield::{CoilGeometry, GridSpec};
use crate::error::{Error, Result};
use crate::physics::{DcField, DriveField, ParticleModel, SamplingConfig};
use crate::relaxation::RelaxationKernel;
use crate::sweep::{SweepPlan, TauProfile};

/// The configuration shipped in `configs/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub particle: ParticleModel,
    pub sampling: SamplingConfig,
    pub drive: Option<DriveField>,
    pub dc: DcField,
    pub relaxation: RelaxationKernel,
    pub sweep: Option<SweepPlan>,
    pub coil: Option<CoilSetup>,
    pub output_dir: PathBuf,
}

/// Coil geometry plus the map and homogeneity settings used by `coilmap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilSetup {
    pub geometry: CoilGeometry,
    pub grid: GridSpec,
    /// Homogeneity level, e.g. 0.95.
    pub level: f64,
    /// m.
    pub chamber_diameter: f64,
    /// m.
    pub chamber_length: f64,
}

impl RunConfig {
    pub fn require_drive(&self) -> Result<DriveField> {
        self.drive.ok_or_else(|| missing("drive"))
    }

    pub fn require_sweep(&self) -> Result<&SweepPlan> {
        self.sweep.as_ref().ok_or_else(|| missing("sweep"))
    }

    pub fn require_coil(&self) -> Result<&CoilSetup> {
        self.coil.as_ref().ok_or_else(|| missing("coil"))
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    particle: Option<RawParticle>,
    sampling: Option<RawSampling>,
    drive: Option<RawDrive>,
    dc: Option<RawDc>,
    relaxation: Option<RawRelaxation>,
    tau_profile: Option<RawTauProfile>,
    sweep: Option<RawSweep>,
    coil: Option<RawCoil>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParticle {
    core_diameter_nm: Option<f64>,
    saturation_magnetization_kA_per_m: Option<f64>,
    temperature_K: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    samples_per_period: Option<i64>,
    periods: Option<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    frequency_Hz: Option<f64>,
    amplitude_mT: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDc {
    field_mT: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRelaxation {
    tau_us: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTauProfile {
    kind: Option<String>,
    tau_us: Option<f64>,
    table_dc_mT: Option<Vec<f64>>,
    table_tau_us: Option<Vec<f64>>,
    tau0_us: Option<f64>,
    depth: Option<f64>,
    center_mT: Option<f64>,
    width_mT: Option<f64>,
    rise_rate_us_per_mT: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    frequencies_Hz: Option<Vec<f64>>,
    amplitudes_mT: Option<Vec<f64>>,
    dc_fields_mT: Option<Vec<f64>>,
    repetitions: Option<i64>,
    snr_dB: Option<f64>,
    master_seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoil {
    loop_radius_cm: Option<f64>,
    loop_separation_cm: Option<f64>,
    turns_per_loop: Option<i64>,
    current_A: Option<f64>,
    grid_half_nodes_x: Option<i64>,
    grid_half_nodes_z: Option<i64>,
    grid_spacing_mm: Option<f64>,
    homogeneity_level: Option<f64>,
    chamber_diameter_cm: Option<f64>,
    chamber_length_cm: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<String>,
}

fn missing(section: &str) -> Error {
    Error::Validation {
        field: section.to_string(),
        message: "required section is missing".into(),
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn req<T>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| invalid(field, "required key is missing"))
}

fn positive(value: Option<f64>, field: &str, invariant: &str) -> Result<f64> {
    let v = req(value, field)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("{invariant} must be > 0, got {v}")))
    }
}

fn non_negative(value: f64, field: &str, invariant: &str) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            field,
            format!("{invariant} must be >= 0, got {value}"),
        ))
    }
}

fn count(value: Option<i64>, field: &str, min: i64) -> Result<usize> {
    let v = req(value, field)?;
    if v < min {
        return Err(invalid(field, format!("must be >= {min}, got {v}")));
    }
    usize::try_from(v).map_err(|_| invalid(field, "out of range"))
}

/// Converts a domain-type error into a validation error on `field`.
fn domain<T>(r: Result<T>, field: &str) -> Result<T> {
    r.map_err(|e| invalid(field, e.to_string()))
}

fn non_empty(values: Option<Vec<f64>>, field: &str) -> Result<Vec<f64>> {
    let v = req(values, field)?;
    if v.is_empty() {
        return Err(invalid(field, "list must be non-empty"));
    }
    Ok(v)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, column)
}

/// Parses and fully validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    build(raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

fn build(raw: RawConfig) -> Result<RunConfig> {
    let p = raw.particle.ok_or_else(|| missing("particle"))?;
    let particle = ParticleModel {
        core_diameter: positive(
            p.core_diameter_nm,
            "particle.core_diameter_nm",
            "ParticleModel core_diameter",
        )? / 1e9,
        saturation_magnetization: positive(
            p.saturation_magnetization_kA_per_m,
            "particle.saturation_magnetization_kA_per_m",
            "ParticleModel saturation_magnetization",
        )? * 1e3,
        temperature: positive(
            p.temperature_K,
            "particle.temperature_K",
            "ParticleModel temperature",
        )?,
    };
    domain(particle.validate(), "particle")?;

    let s = raw.sampling.ok_or_else(|| missing("sampling"))?;
    let spp = count(s.samples_per_period, "sampling.samples_per_period", 4)?;
    let periods = count(s.periods, "sampling.periods", 1)?;
    let sampling = domain(
        SamplingConfig::new(spp, periods),
        "sampling.samples_per_period",
    )?;

    let drive = match raw.drive {
        None => None,
        Some(d) => Some(DriveField::new(
            positive(d.frequency_Hz, "drive.frequency_Hz", "DriveField frequency")?,
            positive(d.amplitude_mT, "drive.amplitude_mT", "DriveField amplitude")? / 1e3,
        )?),
    };

    let dc = match raw.dc.and_then(|d| d.field_mT) {
        None => DcField::default(),
        Some(b) => DcField::new(non_negative(b, "dc.field_mT", "DcField magnitude")? / 1e3)?,
    };

    let relaxation = match raw.relaxation.and_then(|r| r.tau_us) {
        None => RelaxationKernel::default(),
        Some(t) => RelaxationKernel::new(
            non_negative(t, "relaxation.tau_us", "RelaxationKernel tau")? / 1e6,
        )?,
    };

    let sweep = match raw.sweep {
        None => None,
        Some(sw) => {
            let profile = build_profile(raw.tau_profile.ok_or_else(|| missing("tau_profile"))?)?;
            let frequencies = non_empty(sw.frequencies_Hz, "sweep.frequencies_Hz")?;
            for &f in &frequencies {
                positive(Some(f), "sweep.frequencies_Hz", "DriveField frequency")?;
            }
            let amplitudes = non_empty(sw.amplitudes_mT, "sweep.amplitudes_mT")?;
            for &a in &amplitudes {
                positive(Some(a), "sweep.amplitudes_mT", "DriveField amplitude")?;
            }
            let dc_fields = non_empty(sw.dc_fields_mT, "sweep.dc_fields_mT")?;
            for &b in &dc_fields {
                non_negative(b, "sweep.dc_fields_mT", "DcField magnitude")?;
            }
            if let Some(snr) = sw.snr_dB {
                if !snr.is_finite() {
                    return Err(invalid(
                        "sweep.snr_dB",
                        format!("must be finite, got {snr}"),
                    ));
                }
            }
            let plan = SweepPlan {
                frequencies,
                amplitudes: amplitudes.iter().map(|a| a / 1e3).collect(),
                dc_fields: dc_fields.iter().map(|b| b / 1e3).collect(),
                repetitions: count(sw.repetitions, "sweep.repetitions", 1)?,
                snr_db: sw.snr_dB,
                tau_profile: profile,
                particle,
                sampling,
                master_seed: req(sw.master_seed, "sweep.master_seed")?,
            };
            domain(plan.validate(), "sweep")?;
            Some(plan)
        }
    };

    let coil = raw.coil.map(build_coil).transpose()?;

    let output_dir = PathBuf::from(
        raw.output
            .and_then(|o| o.directory)
            .unwrap_or_else(|| "out".to_string()),
    );

    Ok(RunConfig {
        particle,
        sampling,
        drive,
        dc,
        relaxation,
        sweep,
        coil,
        output_dir,
    })
}

fn build_profile(t: RawTauProfile) -> Result<TauProfile> {
    let kind = req(t.kind, "tau_profile.kind")?;
    let profile = match kind.as_str() {
        "constant" => {
            TauProfile::Constant(positive(t.tau_us, "tau_profile.tau_us", "TauProfile tau")? / 1e6)
        }
        "table" => {
            let b = non_empty(t.table_dc_mT, "tau_profile.table_dc_mT")?;
            let tau = non_empty(t.table_tau_us, "tau_profile.table_tau_us")?;
            if b.len() != tau.len() {
                return Err(invalid(
                    "tau_profile.table_tau_us",
                    format!("has {} entries but table_dc_mT has {}", tau.len(), b.len()),
                ));
            }
            for &v in &tau {
                positive(Some(v), "tau_profile.table_tau_us", "TauProfile tau")?;
            }
            if b.windows(2)
                .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
            {
                return Err(invalid(
                    "tau_profile.table_dc_mT",
                    "must be strictly ascending",
                ));
            }
            TauProfile::Table(
                b.iter()
                    .zip(&tau)
                    .map(|(b, t)| (b / 1e3, t / 1e6))
                    .collect(),
            )
        }
        "dip" => {
            let depth = req(t.depth, "tau_profile.depth")?;
            if !(0.0..1.0).contains(&depth) {
                return Err(invalid(
                    "tau_profile.depth",
                    format!("must lie in [0, 1), got {depth}"),
                ));
            }
            let center = req(t.center_mT, "tau_profile.center_mT")?;
            if !center.is_finite() {
                return Err(invalid("tau_profile.center_mT", "must be finite"));
            }
            TauProfile::Dip {
                tau0: positive(t.tau0_us, "tau_profile.tau0_us", "TauProfile tau0")? / 1e6,
                depth,
                center: center / 1e3,
                width: positive(t.width_mT, "tau_profile.width_mT", "TauProfile width")? / 1e3,
                rise_rate: non_negative(
                    req(t.rise_rate_us_per_mT, "tau_profile.rise_rate_us_per_mT")?,
                    "tau_profile.rise_rate_us_per_mT",
                    "TauProfile rise_rate",
                )? / 1e3,
            }
        }
        other => {
            return Err(invalid(
                "tau_profile.kind",
                format!("expected \"constant\", \"table\" or \"dip\", got {other:?}"),
            ))
        }
    };
    domain(profile.validate(), "tau_profile")?;
    Ok(profile)
}

fn build_coil(c: RawCoil) -> Result<CoilSetup> {
    let radius = positive(
        c.loop_radius_cm,
        "coil.loop_radius_cm",
        "CoilGeometry loop_radius",
    )? / 1e2;
    let separation = match c.loop_separation_cm {
        None => radius,
        v => positive(v, "coil.loop_separation_cm", "CoilGeometry loop_separation")? / 1e2,
    };
    let turns = count(c.turns_per_loop, "coil.turns_per_loop", 1)?;
    let turns = u32::try_from(turns).map_err(|_| invalid("coil.turns_per_loop", "out of range"))?;
    let current = req(c.current_A, "coil.current_A")?;
    if !current.is_finite() {
        return Err(invalid("coil.current_A", "must be finite"));
    }
    let geometry = CoilGeometry {
        loop_radius: radius,
        loop_separation: separation,
        turns_per_loop: turns,
        current,
    };
    domain(geometry.validate(), "coil")?;
    let grid = GridSpec {
        half_nodes_x: count(c.grid_half_nodes_x, "coil.grid_half_nodes_x", 1)?,
        half_nodes_z: count(c.grid_half_nodes_z, "coil.grid_half_nodes_z", 1)?,
        spacing: positive(
            c.grid_spacing_mm,
            "coil.grid_spacing_mm",
            "GridSpec spacing",
        )? / 1e3,
    };
    let level = req(c.homogeneity_level, "coil.homogeneity_level")?;
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(
            "coil.homogeneity_level",
            format!("must lie in (0, 1), got {level}"),
        ));
    }
    Ok(CoilSetup {
        geometry,
        grid,
        level,
        chamber_diameter: positive(
            c.chamber_diameter_cm,
            "coil.chamber_diameter_cm",
            "chamber diameter",
        )? / 1e2,
        chamber_length: positive(
            c.chamber_length_cm,
            "coil.chamber_length_cm",
            "chamber length",
        )? / 1e2,
    })
}
