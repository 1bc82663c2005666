//! Self-contained SVG line plots and heatmaps. Output depends only on the
//! input data: no timestamps, no generated ids.

use std::fmt::Write as _;

use crate::coilfield::FieldMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
}

impl PlotStyle {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            width: 640,
            height: 420,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
];

const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions on a 1-2-5 grid covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_string()
    } else {
        s
    }
}

/// Data range padded so that flat series still get a visible axis.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn header(out: &mut String, style: &PlotStyle) {
    let (w, h) = (style.width, style.height);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        w as f64 / 2.0,
        escape(&style.title)
    );
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(
        style: &PlotStyle,
        (x0, x1): (f64, f64),
        (y0, y1): (f64, f64),
        right_margin: f64,
    ) -> Self {
        Self {
            x0,
            x1,
            y0,
            y1,
            left: MARGIN_LEFT,
            right: style.width as f64 - right_margin,
            top: MARGIN_TOP,
            bottom: style.height as f64 - MARGIN_BOTTOM,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }

    fn axes(&self, out: &mut String, style: &PlotStyle) {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            self.left,
            self.top,
            self.right - self.left,
            self.bottom - self.top
        );
        let (xt, xs) = ticks(self.x0, self.x1, 6);
        for t in xt {
            let x = self.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{b5:.2}" stroke="black"/><text x="{x:.2}" y="{ty:.2}" text-anchor="middle">{}</text>"#,
                tick_label(t, xs),
                b = self.bottom,
                b5 = self.bottom + 5.0,
                ty = self.bottom + 18.0
            );
        }
        let (yt, ys) = ticks(self.y0, self.y1, 6);
        for t in yt {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r#"<line x1="{l5:.2}" y1="{y:.2}" x2="{l:.2}" y2="{y:.2}" stroke="black"/><text x="{tx:.2}" y="{yy:.2}" text-anchor="end">{}</text>"#,
                tick_label(t, ys),
                l = self.left,
                l5 = self.left - 5.0,
                tx = self.left - 8.0,
                yy = y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (self.left + self.right) / 2.0,
            style.height as f64 - 16.0,
            escape(&style.x_label)
        );
        let cy = (self.top + self.bottom) / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">{}</text>"#,
            escape(&style.y_label)
        );
    }
}

/// Line plot with one polyline per series and a legend on the right.
pub fn line_plot_svg(series: &[Series], style: &PlotStyle) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.len() < 2) {
        return Err(Error::EmptySeries);
    }
    if series
        .iter()
        .flat_map(|s| &s.points)
        .any(|(x, y)| !(x.is_finite() && y.is_finite()))
    {
        return Err(Error::invalid("plot series", "points must be finite"));
    }
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let frame = Frame::new(style, xr, yr, MARGIN_RIGHT);

    let mut out = String::new();
    header(&mut out, style);
    frame.axes(&mut out, style);
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = frame.top + 14.0 + 18.0 * k as f64;
        let lx = frame.right + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (u.floor() as usize).min(VIRIDIS.len() - 2);
    let f = u - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// One colored cell per map node, plus a color bar with the value range.
pub fn heatmap_svg(map: &FieldMap, style: &PlotStyle) -> Result<String> {
    if map.nx < 2 || map.nz < 2 || map.values.len() != map.nx * map.nz {
        return Err(Error::EmptySeries);
    }
    let half = 0.5 * map.spacing;
    let xr = (map.x(0) - half, map.x(map.nx - 1) + half);
    let zr = (map.z(0) - half, map.z(map.nz - 1) + half);
    let frame = Frame::new(style, xr, zr, 110.0);
    let (lo, hi) = map
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(*v), h.max(*v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    header(&mut out, style);
    let cw = frame.px(map.spacing) - frame.px(0.0);
    let ch = frame.py(0.0) - frame.py(map.spacing);
    out.push_str("<g shape-rendering=\"crispEdges\">\n");
    for j in 0..map.nz {
        for i in 0..map.nx {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.px(map.x(i) - half),
                frame.py(map.z(j) + half),
                cw,
                ch,
                color((map.at(i, j) - lo) / span)
            );
        }
    }
    out.push_str("</g>\n");
    frame.axes(&mut out, style);

    let bx = frame.right + 20.0;
    let steps = 32;
    let bh = (frame.bottom - frame.top) / steps as f64;
    for s in 0..steps {
        let u = (s as f64 + 0.5) / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            frame.bottom - (s + 1) as f64 * bh,
            bh,
            color(u)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">{hi:.4e}</text><text x="{:.2}" y="{:.2}">{lo:.4e}</text>"#,
        bx + 20.0,
        frame.top + 10.0,
        bx + 20.0,
        frame.bottom
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coilfield::GridSpec;

    fn style() -> PlotStyle {
        PlotStyle::new("t <1>", "x", "y")
    }

    #[test]
    fn two_point_series_gives_one_polyline() {
        let s = vec![Series {
            label: "a".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
        }];
        let svg = line_plot_svg(&s, &style()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
        assert_eq!(svg, line_plot_svg(&s, &style()).unwrap());
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(
            line_plot_svg(&[], &style()),
            Err(Error::EmptySeries)
        ));
        let one = vec![Series {
            label: "a".into(),
            points: vec![(0.0, 1.0)],
        }];
        assert!(matches!(
            line_plot_svg(&one, &style()),
            Err(Error::EmptySeries)
        ));
    }

    #[test]
    fn flat_series_still_renders() {
        let s = vec![Series {
            label: "flat".into(),
            points: vec![(0.0, 0.0), (1.0, 0.0)],
        }];
        assert!(line_plot_svg(&s, &style()).unwrap().contains("<polyline"));
    }

    #[test]
    fn tick_grid() {
        let (t, step) = ticks(0.0, 9.0, 6);
        assert_eq!(step, 2.0);
        assert_eq!(t, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(tick_label(-0.0, 0.5), "0.0");
        assert_eq!(tick_label(1.5, 0.5), "1.5");
    }

    #[test]
    fn heatmap_has_one_rect_per_node() {
        let grid = GridSpec {
            half_nodes_x: 2,
            half_nodes_z: 1,
            spacing: 1e-3,
        };
        let mut map = FieldMap::uniform(&grid, 0.0);
        for (k, v) in map.values.iter_mut().enumerate() {
            *v = k as f64;
        }
        let svg = heatmap_svg(&map, &style()).unwrap();
        let cells = svg
            .split("<g shape-rendering")
            .nth(1)
            .unwrap()
            .split("</g>")
            .next()
            .unwrap();
        assert_eq!(cells.matches("<rect").count(), 15);
        assert_eq!(svg, heatmap_svg(&map, &style()).unwrap());
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
    }
}
