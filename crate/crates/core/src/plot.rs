//! Static SVG figures of envelope tests: one panel per effect or pair, the
//! envelope as a grey band, the observed curve in black and the points where
//! it leaves the band in red.

use std::fmt::Write as _;

use crate::envelope::EnvelopeResult;

/// One panel of a figure; all vectors share the length of `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub label: String,
    pub t: Vec<f64>,
    pub low: Vec<f64>,
    pub observed: Vec<f64>,
    pub upp: Vec<f64>,
    pub exit: Vec<bool>,
}

impl Panel {
    pub fn has_exits(&self) -> bool {
        self.exit.iter().any(|&e| e)
    }
}

/// Splits an envelope result into its panels, in panel order.
pub fn panels_from_envelope(res: &EnvelopeResult, labels: &[crate::stats::ElementLabel]) -> Vec<Panel> {
    let mut exit = vec![false; labels.len()];
    for e in &res.exits {
        exit[e.element] = true;
    }
    let mut panels: Vec<Panel> = Vec::new();
    for (idx, l) in labels.iter().enumerate() {
        if panels.last().map(|p| &p.label) != Some(&l.panel_label) {
            panels.push(Panel {
                label: l.panel_label.clone(),
                t: Vec::new(),
                low: Vec::new(),
                observed: Vec::new(),
                upp: Vec::new(),
                exit: Vec::new(),
            });
        }
        let p = panels.last_mut().expect("pushed above");
        p.t.push(l.t);
        p.low.push(res.low[idx]);
        p.observed.push(res.observed[idx]);
        p.upp.push(res.upp[idx]);
        p.exit.push(exit[idx]);
    }
    panels
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 240.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 34.0;
const MAX_COLUMNS: usize = 3;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn render_panel(out: &mut String, panel: &Panel, index: usize, ox: f64, oy: f64) {
    let (t0, t1) = range(panel.t.iter().copied());
    let (y0, y1) = range(panel.low.iter().chain(&panel.observed).chain(&panel.upp).copied());
    let w = PANEL_W - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |t: f64| ox + MARGIN_L + (t - t0) / (t1 - t0) * w;
    let py = |y: f64| {
        let y = y.clamp(y0, y1);
        oy + MARGIN_T + (y1 - y) / (y1 - y0) * h
    };
    let _ = writeln!(out, r#"<g class="panel" id="panel-{index}">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + w / 2.0,
        oy + 18.0,
        escape(&panel.label)
    );
    let mut band = String::new();
    for (t, u) in panel.t.iter().zip(&panel.upp) {
        let _ = write!(band, "{:.2},{:.2} ", px(*t), py(*u));
    }
    for (t, l) in panel.t.iter().zip(&panel.low).rev() {
        let _ = write!(band, "{:.2},{:.2} ", px(*t), py(*l));
    }
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#bbbbbb" stroke="none"/>"##,
        band.trim_end()
    );
    let mut line = String::new();
    for (t, v) in panel.t.iter().zip(&panel.observed) {
        let _ = write!(line, "{:.2},{:.2} ", px(*t), py(*v));
    }
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
        line.trim_end()
    );
    for ((t, v), _) in panel.t.iter().zip(&panel.observed).zip(&panel.exit).filter(|(_, e)| **e) {
        let _ = writeln!(
            out,
            r#"<circle class="exit" cx="{:.2}" cy="{:.2}" r="2.5" fill="red"/>"#,
            px(*t),
            py(*v)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#444444" stroke-width="0.8"/>"##,
        ox + MARGIN_L,
        oy + MARGIN_T
    );
    let bottom = oy + MARGIN_T + h;
    for (x, v) in [(ox + MARGIN_L, t0), (ox + MARGIN_L + w, t1)] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            bottom + 14.0,
            fmt_tick(v)
        );
    }
    for (y, v) in [(bottom, y0), (oy + MARGIN_T, y1)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            ox + MARGIN_L - 4.0,
            y + 3.0,
            fmt_tick(v)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="3,3" stroke-width="0.6"/>"##,
            ox + MARGIN_L,
            py(0.0),
            ox + MARGIN_L + w,
            py(0.0)
        );
    }
    out.push_str("</g>\n");
}

/// Renders the panels on a grid of at most three columns as an SVG 1.1 document.
pub fn render_svg(panels: &[Panel], title: &str) -> String {
    let cols = panels.len().clamp(1, MAX_COLUMNS);
    let rows = panels.len().div_ceil(cols).max(1);
    let header = 30.0;
    let width = cols as f64 * PANEL_W;
    let height = header + rows as f64 * PANEL_H;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = header + (i / cols) as f64 * PANEL_H;
        render_panel(&mut out, p, i, ox, oy);
    }
    out.push_str("</svg>\n");
    out
}
