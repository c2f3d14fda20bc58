//! Minimal self-contained SVG 1.1 charts: line plots and histograms.
//!
//! Output depends only on the input data; coordinates are printed with two
//! decimals and colours come from a fixed palette.

use std::fmt::Write;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PanelData {
    Lines(Vec<Series>),
    /// Bin edges (`counts.len() + 1` of them) and counts.
    Bars { edges: Vec<f64>, counts: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub data: PanelData,
}

impl Panel {
    pub fn lines(title: &str, x_label: &str, y_label: &str, series: Vec<Series>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            data: PanelData::Lines(series),
        }
    }

    pub fn bars(title: &str, x_label: &str, edges: Vec<f64>, counts: Vec<u64>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: "count".into(),
            log_x: false,
            log_y: false,
            data: PanelData::Bars { edges, counts },
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let step = ((b - a) / 6).max(1);
            (a..=b)
                .step_by(step as usize)
                .map(f64::from)
                .filter(|e| *e >= self.lo - 1e-9 && *e <= self.hi + 1e-9)
                .map(|e| ((e - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            (0..=5)
                .map(|k| {
                    let f = k as f64 / 5.0;
                    (f, fmt_tick(self.lo + f * (self.hi - self.lo)))
                })
                .collect()
        }
    }
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".to_string() } else { s.to_string() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let x0 = MARGIN_L;
    let x1 = PANEL_W - MARGIN_R;
    let y0 = top + PANEL_H - MARGIN_B;
    let y1 = top + MARGIN_T;
    let plot_w = x1 - x0;
    let plot_h = y0 - y1;

    let (xs, ys): (Vec<f64>, Vec<f64>) = match &panel.data {
        PanelData::Lines(series) => series.iter().flat_map(|s| s.points.iter().copied()).unzip(),
        PanelData::Bars { edges, counts } => {
            (edges.clone(), counts.iter().map(|&c| c as f64).chain(std::iter::once(0.0)).collect())
        }
    };
    let xa = Axis::fit(xs.into_iter(), panel.log_x);
    let ya = Axis::fit(ys.into_iter(), panel.log_y);
    let px = |v: f64| xa.frac(v).map(|f| x0 + f * plot_w);
    let py = |v: f64| ya.frac(v).map(|f| y0 - f * plot_h);

    let _ = writeln!(out, r#"<g>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
        x0 + plot_w / 2.0,
        top + 20.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{x0:.2}" y="{y1:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
    );
    for (f, label) in xa.ticks() {
        let x = x0 + f * plot_w;
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"##,
            y0 + 5.0,
            y0 + 18.0
        );
    }
    for (f, label) in ya.ticks() {
        let y = y0 - f * plot_h;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"##,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        x0 + plot_w / 2.0,
        y0 + 38.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        18.0,
        y1 + plot_h / 2.0,
        18.0,
        y1 + plot_h / 2.0,
        escape(&panel.y_label)
    );

    match &panel.data {
        PanelData::Lines(series) => {
            for (k, s) in series.iter().enumerate() {
                let colour = PALETTE[k % PALETTE.len()];
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .filter_map(|&(x, y)| Some(format!("{:.2},{:.2}", px(x)?, py(y)?)))
                    .collect();
                let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
                if !pts.is_empty() {
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"{dash}/>"#,
                        pts.join(" ")
                    );
                }
                let ly = y1 + 14.0 + 18.0 * k as f64;
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                    x1 + 10.0,
                    x1 + 30.0,
                    x1 + 35.0,
                    ly + 4.0,
                    escape(&s.name)
                );
            }
        }
        PanelData::Bars { edges, counts } => {
            let base = py(0.0).unwrap_or(y0);
            for (b, &c) in counts.iter().enumerate() {
                let (Some(l), Some(r), Some(t)) = (px(edges[b]), px(edges[b + 1]), py(c as f64)) else {
                    continue;
                };
                let _ = writeln!(
                    out,
                    r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="#fff" stroke-width="0.5"/>"##,
                    (r - l).max(0.5),
                    (base - t).max(0.0)
                );
            }
        }
    }
    let _ = writeln!(out, "</g>");
}

/// Stack `panels` vertically into one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{PANEL_W:.0}" height="{height:.0}" viewBox="0 0 {PANEL_W:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#fff"/>"##);
    for (k, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, PANEL_H * k as f64);
    }
    out.push_str("</svg>\n");
    out
}
