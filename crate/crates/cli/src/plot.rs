//! Static SVG rendering of an EWMA chart.

use std::fmt::Write as _;

use bfchart::{ChartConfig, ChartPoint, Status};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 50.0;

/// `z_t` as a polyline with a solid center line, dotted limits, a dashed
/// vertical separator between the phases and red markers on signals.
pub fn render_svg(phase1: &[ChartPoint], phase2: &[ChartPoint], chart: &ChartConfig) -> String {
    let all: Vec<&ChartPoint> = phase1.iter().chain(phase2).collect();
    let (t_lo, t_hi) = match (all.first(), all.last()) {
        (Some(a), Some(b)) => (a.t as f64, (b.t as f64).max(a.t as f64 + 1.0)),
        _ => (0.0, 1.0),
    };
    let mut z_lo = chart.lcl;
    let mut z_hi = chart.ucl;
    for p in &all {
        z_lo = z_lo.min(p.z);
        z_hi = z_hi.max(p.z);
    }
    let pad = 0.05 * (z_hi - z_lo).max(1e-12);
    z_lo -= pad;
    z_hi += pad;

    let sx = |t: f64| MARGIN + (t - t_lo) / (t_hi - t_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |z: f64| HEIGHT - MARGIN - (z - z_lo) / (z_hi - z_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1) = (sx(t_lo), sx(t_hi));
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="gray"/>"#,
        x1 - x0,
        HEIGHT - 2.0 * MARGIN
    );

    let hline = |s: &mut String, z: f64, dash: &str, label: &str| {
        let y = sy(z);
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="black"{dash}/>"#
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, x1 + 4.0, y + 4.0);
    };
    hline(&mut s, chart.center, "", "CL");
    hline(&mut s, chart.ucl, r#" stroke-dasharray="2,3""#, "UCL");
    hline(&mut s, chart.lcl, r#" stroke-dasharray="2,3""#, "LCL");

    if let (Some(a), Some(b)) = (phase1.last(), phase2.first()) {
        let x = sx((a.t as f64 + b.t as f64) / 2.0);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="dimgray" stroke-dasharray="6,4"/>"#,
            HEIGHT - MARGIN
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">Phase I</text>"#, x - 4.0, MARGIN - 6.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">Phase II</text>"#, x + 4.0, MARGIN - 6.0);
    }

    if !all.is_empty() {
        let pts: Vec<String> = all
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.t as f64), sy(p.z)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.2" points="{}"/>"#,
            pts.join(" ")
        );
    }
    for p in phase2.iter().filter(|p| p.status == Status::OutOfControl) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="crimson"/>"#,
            sx(p.t as f64),
            sy(p.z)
        );
    }
    let _ = writeln!(s, r#"<text x="{x0:.2}" y="{:.2}">t = {t_lo}</text>"#, HEIGHT - MARGIN + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{x1:.2}" y="{:.2}" text-anchor="end">t = {t_hi}</text>"#,
        HEIGHT - MARGIN + 16.0
    );
    s.push_str("</svg>\n");
    s
}
