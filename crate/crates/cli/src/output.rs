//! CSV tables and static SVG line charts with deterministic bytes.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.render())
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines.
    pub references: Vec<(String, f64)>,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#000000", "#7f7f7f"];

fn axis_value(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() || (log && v <= 0.0) {
        None
    } else if log {
        Some(v.log10())
    } else {
        Some(v)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64, log: bool) -> String {
    let shown = if log { 10f64.powf(v) } else { v };
    if shown != 0.0 && (shown.abs() >= 1e4 || shown.abs() < 1e-2) {
        format!("{shown:.1e}")
    } else {
        format!("{shown:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().filter_map(|p| axis_value(p.0, self.log_x)));
        let (x0, x1) = range(xs);
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|p| axis_value(p.1, self.log_y)))
            .chain(self.references.iter().filter_map(|r| axis_value(r.1, self.log_y)));
        let (y0, y1) = range(ys);
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
        let py = |y: f64| TOP + plot_h - (y - y0) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#);
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#, LEFT + plot_w / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, px(fx), TOP + plot_h + 16.0, tick_label(fx, self.log_x));
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py(fy) + 4.0, tick_label(fy, self.log_y));
            let _ = writeln!(s, r##"<line x1="{:.2}" y1="{TOP}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##, px(fx), px(fx), TOP + plot_h);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#dddddd"/>"##, py(fy), LEFT + plot_w, py(fy));
        }
        let x_suffix = if self.log_x { " (log)" } else { "" };
        let y_suffix = if self.log_y { " (log)" } else { "" };
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}{x_suffix}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(s, r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}{y_suffix}</text>"#, TOP + plot_h / 2.0, TOP + plot_h / 2.0, escape(&self.y_label));

        let mut legend_y = TOP + 10.0;
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some((axis_value(x, self.log_x)?, axis_value(y, self.log_y)?)))
                .map(|(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if !pts.is_empty() {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
            }
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{color}" stroke-width="2"/>"#, WIDTH - RIGHT + 10.0, WIDTH - RIGHT + 30.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, WIDTH - RIGHT + 35.0, legend_y + 4.0, escape(&series.label));
            legend_y += 16.0;
        }
        for (label, value) in &self.references {
            if let Some(v) = axis_value(*value, self.log_y) {
                let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="5,4"/>"##, py(v), LEFT + plot_w, py(v));
                let _ = writeln!(s, r##"<line x1="{:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="#555555" stroke-dasharray="5,4"/>"##, WIDTH - RIGHT + 10.0, WIDTH - RIGHT + 30.0);
                let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, WIDTH - RIGHT + 35.0, legend_y + 4.0, escape(label));
                legend_y += 16.0;
            }
        }
        s.push_str("</svg>\n");
        s
    }
}
