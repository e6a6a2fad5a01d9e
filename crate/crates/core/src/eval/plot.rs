//! Minimal static SVG charts for the sweep and the coefficient ranking.

use std::fmt::Write as _;

use super::ranking::TaxonMagnitude;
use super::studies::SweepPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of best accuracy against alpha.
pub fn sweep_svg(points: &[SweepPoint]) -> String {
    let mut s = String::new();
    header(&mut s, "Best LOOCV accuracy by alpha");
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x = |a: f64| MARGIN + a * plot_w;
    let y = |acc: f64| HEIGHT - MARGIN - acc * plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text><text x="{}" y="{}" text-anchor="middle">{:.1}</text>"#,
            MARGIN - 6.0,
            y(v) + 4.0,
            v,
            x(v),
            HEIGHT - MARGIN + 18.0,
            v
        );
    }
    let path: Vec<String> = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", x(p.alpha), y(p.best_accuracy)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
        path.join(" ")
    );
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#,
            x(p.alpha),
            y(p.best_accuracy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">alpha</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars for the top `limit` taxa.
pub fn ranking_svg(ranking: &[TaxonMagnitude], limit: usize) -> String {
    let mut s = String::new();
    header(&mut s, "Mean coefficient magnitude");
    let rows = &ranking[..ranking.len().min(limit)];
    let max = rows.iter().map(|t| t.magnitude).fold(0.0, f64::max);
    let left = 140.0;
    let bar_area = WIDTH - left - MARGIN;
    let step = (HEIGHT - 2.0 * MARGIN) / rows.len().max(1) as f64;
    for (i, t) in rows.iter().enumerate() {
        let w = if max > 0.0 { t.magnitude / max * bar_area } else { 0.0 };
        let top = MARGIN + i as f64 * step;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text><rect x="{left}" y="{:.2}" width="{:.2}" height="{:.2}" fill="darkorange"/>"#,
            left - 6.0,
            top + step * 0.6,
            escape(&t.taxon),
            top + step * 0.1,
            w,
            step * 0.8
        );
    }
    s.push_str("</svg>\n");
    s
}
