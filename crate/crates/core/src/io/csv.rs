//! Plain-text tables. Floats are written with 17 significant digits so that
//! reading them back reproduces the exact bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::coilfield::FieldMap;
use crate::error::{Error, Result};
use crate::sweep::{CellSummary, DcLabel, SweepRecord};
use crate::taurus::TauEstimate;
use crate::trace::SignalTrace;

pub const RESULTS_HEADER: &str =
    "frequency_Hz,amplitude_mT,dc_label,repetition,rms,peak,fwhm_s,tau_true_s,tau_hat_s,residual,seed";

pub const SUMMARY_HEADER: &str = "frequency_Hz,amplitude_mT,dc_label,count,rms_mean,rms_std,\
tau_true_s,tau_mean_s,tau_std_s,tau_pooled_s";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), num)
}

fn label(l: DcLabel) -> String {
    match l {
        DcLabel::NoCoil => "no_coil".to_string(),
        // Reported in mT, like the amplitude column.
        DcLabel::Field(b) => num(b * 1e3),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Metadata written as `# key=value` lines ahead of the samples.
pub type Metadata = BTreeMap<String, String>;

pub fn signal_csv(trace: &SignalTrace, metadata: &Metadata) -> String {
    let mut out = String::with_capacity(48 * trace.len() + 256);
    let _ = writeln!(out, "# dt_s={}", num(trace.dt()));
    let _ = writeln!(out, "# samples_per_period={}", trace.samples_per_period());
    let _ = writeln!(out, "# periods={}", trace.periods());
    for (k, v) in metadata {
        if k != "dt_s" && k != "samples_per_period" && k != "periods" {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
    out.push_str("t_s,signal\n");
    for (i, v) in trace.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{}", num(i as f64 * trace.dt()), num(*v));
    }
    out
}

pub fn write_signal_csv(path: &Path, trace: &SignalTrace, metadata: &Metadata) -> Result<()> {
    write_text(path, &signal_csv(trace, metadata))
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

/// Inverse of [`signal_csv`]; returns the trace and all header metadata.
pub fn parse_signal_csv(text: &str) -> Result<(SignalTrace, Metadata)> {
    let mut meta = Metadata::new();
    let mut samples = Vec::new();
    let mut header_seen = false;
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        last_line = n;
        if !header_seen {
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| format_err(n, "header line is not `# key=value`"))?;
                meta.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            if line.trim() != "t_s,signal" {
                return Err(format_err(
                    n,
                    format!("expected column header `t_s,signal`, got {line:?}"),
                ));
            }
            header_seen = true;
            continue;
        }
        let mut cols = line.split(',');
        let (Some(_t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(format_err(n, "expected two columns"));
        };
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| format_err(n, format!("invalid number {v:?}")))?;
        samples.push(v);
    }
    if !header_seen {
        return Err(format_err(
            last_line + 1,
            "missing `t_s,signal` column header",
        ));
    }
    let get = |k: &str| -> Result<&String> {
        meta.get(k)
            .ok_or_else(|| format_err(1, format!("missing header key `{k}`")))
    };
    let dt: f64 = get("dt_s")?
        .parse()
        .map_err(|_| format_err(1, "dt_s is not a number"))?;
    let spp: usize = get("samples_per_period")?
        .parse()
        .map_err(|_| format_err(1, "samples_per_period is not an integer"))?;
    if spp == 0 || samples.is_empty() || samples.len() % spp != 0 {
        return Err(format_err(
            last_line,
            format!(
                "{} samples is not a whole number of {spp}-sample periods",
                samples.len()
            ),
        ));
    }
    if let Some(p) = meta.get("periods") {
        let p: usize = p
            .parse()
            .map_err(|_| format_err(1, "periods is not an integer"))?;
        if p * spp != samples.len() {
            return Err(format_err(
                last_line,
                format!(
                    "header declares {p} periods but found {} samples",
                    samples.len()
                ),
            ));
        }
    }
    let trace = SignalTrace::new(dt, samples, spp).map_err(|e| format_err(1, e.to_string()))?;
    Ok((trace, meta))
}

pub fn read_signal_csv(path: &Path) -> Result<(SignalTrace, Metadata)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_signal_csv(&text)
}

pub fn results_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(256 * (records.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(r.frequency),
            num(r.amplitude * 1e3),
            label(r.dc_label),
            r.repetition,
            num(r.rms),
            num(r.peak),
            num(r.fwhm),
            num(r.tau_true),
            opt(r.tau_hat),
            opt(r.residual),
            r.seed
        );
    }
    out
}

pub fn write_results_csv(path: &Path, records: &[SweepRecord]) -> Result<()> {
    write_text(path, &results_csv(records))
}

pub fn summary_csv(summary: &[CellSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            num(s.frequency),
            num(s.amplitude * 1e3),
            label(s.dc_label),
            s.count,
            num(s.rms_mean),
            num(s.rms_std),
            num(s.tau_true),
            opt(s.tau_mean),
            opt(s.tau_std),
            opt(s.tau_pooled)
        );
    }
    out
}

/// Per-bin breakdown of an estimate.
pub fn tau_bins_csv(estimate: &TauEstimate) -> String {
    let mut out =
        String::from("bin,frequency_Hz,tau_s,ratio_re,ratio_im,denominator,included,weight\n");
    for b in &estimate.bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            b.index,
            num(b.frequency),
            num(b.tau),
            num(b.ratio.re),
            num(b.ratio.im),
            num(b.denominator),
            b.included,
            num(b.weight)
        );
    }
    out
}

pub fn field_map_csv(map: &FieldMap) -> String {
    let mut out = String::with_capacity(64 * map.values.len() + 16);
    out.push_str("x_m,z_m,bx_T\n");
    for j in 0..map.nz {
        for i in 0..map.nx {
            let _ = writeln!(
                out,
                "{},{},{}",
                num(map.x(i)),
                num(map.z(j)),
                num(map.at(i, j))
            );
        }
    }
    out
}
