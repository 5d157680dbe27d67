//! Minimal deterministic SVG emitter for line plots.

use std::fmt::Write;

use hopflab_core::geometry::DomainSpec;
use hopflab_core::Complex64 as C64;

/// Formats `x` with at most 9 significant digits, no exponent.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let digits = (8 - x.abs().log10().floor() as i32).clamp(0, 17) as usize;
    let s = format!("{x:.digits$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Solid,
    Dashed,
    Thin,
}

#[derive(Debug, Clone)]
pub struct Polyline {
    pub points: Vec<C64>,
    pub stroke: Stroke,
    pub closed: bool,
}

/// A square panel showing polylines in world coordinates.
#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub outline: Vec<Polyline>,
    pub curves: Vec<Polyline>,
}

impl Panel {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for z in self.outline.iter().chain(&self.curves).flat_map(|p| &p.points) {
            b = (b.0.min(z.re), b.1.max(z.re), b.2.min(z.im), b.3.max(z.im));
        }
        if !b.0.is_finite() {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        let (cx, cy) = (0.5 * (b.0 + b.1), 0.5 * (b.2 + b.3));
        let half = 0.5 * (b.1 - b.0).max(b.3 - b.2).max(1e-9) * 1.05;
        (cx - half, cx + half, cy - half, cy + half)
    }
}

/// Closed outline of a domain's boundary components.
pub fn domain_outline(domain: &DomainSpec) -> Vec<Polyline> {
    let circle = |r: f64| Polyline {
        points: (0..256).map(|k| C64::from_polar(r, 2.0 * std::f64::consts::PI * k as f64 / 256.0)).collect(),
        stroke: Stroke::Solid,
        closed: true,
    };
    match *domain {
        DomainSpec::Disk { radius } => vec![circle(radius)],
        DomainSpec::Annulus { r_inner, r_outer } => vec![circle(r_inner), circle(r_outer)],
        DomainSpec::Rectangle { x0, x1, y0, y1 } => vec![Polyline {
            points: vec![C64::new(x0, y0), C64::new(x1, y0), C64::new(x1, y1), C64::new(x0, y1)],
            stroke: Stroke::Solid,
            closed: true,
        }],
    }
}

const SIZE: f64 = 400.0;
const PAD: f64 = 20.0;

fn path_data(p: &Polyline, map: impl Fn(C64) -> (f64, f64)) -> String {
    let mut d = String::new();
    for (k, &z) in p.points.iter().enumerate() {
        let (x, y) = map(z);
        let _ = write!(d, "{}{} {}", if k == 0 { "M" } else { " L" }, sig9(x), sig9(y));
    }
    if p.closed {
        d.push_str(" Z");
    }
    d
}

fn stroke_attrs(s: Stroke) -> &'static str {
    match s {
        Stroke::Solid => r##"stroke="#1f4e79" stroke-width="1.2""##,
        Stroke::Dashed => r##"stroke="#b03a2e" stroke-width="1.2" stroke-dasharray="5 3""##,
        Stroke::Thin => r##"stroke="#888888" stroke-width="0.5""##,
    }
}

/// Renders panels side by side.
pub fn render(panels: &[Panel]) -> String {
    let width = SIZE * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = sig9(width),
        h = sig9(SIZE + PAD)
    );
    for (k, panel) in panels.iter().enumerate() {
        let (x0, x1, _, y1) = panel.bounds();
        let scale = (SIZE - 2.0 * PAD) / (x1 - x0);
        let left = k as f64 * SIZE + PAD;
        let map = |z: C64| (left + (z.re - x0) * scale, PAD + (y1 - z.im) * scale);
        let _ = writeln!(out, r#"<g id="panel{k}" fill="none">"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="black">{}</text>"#,
            sig9(left),
            sig9(PAD - 6.0),
            escape(&panel.title)
        );
        for p in &panel.outline {
            let _ = writeln!(out, r#"<path d="{}" stroke="black" stroke-width="1"/>"#, path_data(p, map));
        }
        for p in &panel.curves {
            let _ = writeln!(out, r#"<path d="{}" {}/>"#, path_data(p, map), stroke_attrs(p.stroke));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
