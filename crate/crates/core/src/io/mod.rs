//! Configuration, tables and plots: the crate's file-facing surface.

pub mod config;
pub mod csv;
pub mod svg;

pub use config::{load_config, parse_config, CoilSetup, RunConfig, DEFAULT_CONFIG};
pub use csv::{
    read_signal_csv, results_csv, signal_csv, summary_csv, write_results_csv, write_signal_csv,
    Metadata,
};
pub use svg::{heatmap_svg, line_plot_svg, PlotStyle, Series};

use crate::error::Result;
use crate::sweep::{CellSummary, DcLabel};

fn mt(v: f64) -> String {
    format!("{:.1}", v * 1e3)
}

/// Plots of a sweep summary as `(file name, SVG)` pairs: one tau-vs-DC plot
/// per drive setting, then one RMS-vs-DC plot per frequency with a series
/// per amplitude. The no-coil reference is left out (it has no DC value).
pub fn sweep_plots(summary: &[CellSummary]) -> Result<Vec<(String, String)>> {
    let mut settings: Vec<(f64, f64)> = Vec::new();
    for s in summary {
        if !settings.contains(&(s.frequency, s.amplitude)) {
            settings.push((s.frequency, s.amplitude));
        }
    }
    let biased = |f: f64, a: f64| {
        summary
            .iter()
            .filter(move |s| s.frequency == f && s.amplitude == a && s.dc_label != DcLabel::NoCoil)
    };

    let mut out = Vec::new();
    for &(f, a) in &settings {
        let injected: Vec<(f64, f64)> = biased(f, a)
            .map(|s| (s.dc_label.field() * 1e3, s.tau_true * 1e6))
            .collect();
        let estimated: Vec<(f64, f64)> = biased(f, a)
            .filter_map(|s| s.tau_mean.map(|t| (s.dc_label.field() * 1e3, t * 1e6)))
            .collect();
        let series: Vec<Series> = [("injected", injected), ("estimated", estimated)]
            .into_iter()
            .filter(|(_, p)| p.len() >= 2)
            .map(|(label, points)| Series {
                label: label.into(),
                points,
            })
            .collect();
        if series.is_empty() {
            continue;
        }
        let style = PlotStyle::new(
            format!("tau vs DC field, {f:.0} Hz, {} mT", mt(a)),
            "DC field (mT)",
            "tau (us)",
        );
        out.push((
            format!("tau_{f:.0}Hz_{}mT.svg", mt(a)),
            line_plot_svg(&series, &style)?,
        ));
    }

    let mut freqs: Vec<f64> = Vec::new();
    for &(f, _) in &settings {
        if !freqs.contains(&f) {
            freqs.push(f);
        }
    }
    for f in freqs {
        let series: Vec<Series> = settings
            .iter()
            .filter(|s| s.0 == f)
            .map(|&(_, a)| Series {
                label: format!("{} mT", mt(a)),
                points: biased(f, a)
                    .map(|s| (s.dc_label.field() * 1e3, s.rms_mean))
                    .collect(),
            })
            .filter(|s| s.points.len() >= 2)
            .collect();
        if series.is_empty() {
            continue;
        }
        let style = PlotStyle::new(
            format!("RMS signal vs DC field, {f:.0} Hz"),
            "DC field (mT)",
            "RMS (a.u.)",
        );
        out.push((format!("rms_{f:.0}Hz.svg"), line_plot_svg(&series, &style)?));
    }
    Ok(out)
}
