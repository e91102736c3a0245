use std::fmt::Write;

use crate::metrics::PrCurve;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOutput {
    pub svg: String,
    /// `confidence,recall,precision` rows in rank order.
    pub csv: String,
    pub warning: Option<String>,
}

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn px(v: f64) -> f64 {
    MARGIN + v * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// Precision (y) against recall (x) over the unit square.
pub fn emit_pr_plot(curve: &PrCurve) -> PlotOutput {
    let total = SIZE + 2.0 * MARGIN;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{total}" height="{total}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let (x, y) = (px(v), py(v));
        let base = MARGIN + SIZE;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{base}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" font-size="12" text-anchor="middle">{v:.1}</text>"#,
            base + 5.0,
            base + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y}" x2="{MARGIN}" y2="{y}" stroke="black"/><text x="{}" y="{}" font-size="12" text-anchor="end">{v:.1}</text>"#,
            MARGIN - 5.0,
            MARGIN - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">recall</text>"#,
        MARGIN + SIZE / 2.0,
        total - 8.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 14 {})">precision</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" font-size="14" text-anchor="middle">PR curve at IoU {}</text>"#,
        MARGIN + SIZE / 2.0,
        curve.iou_threshold
    );

    let warning = if curve.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="14" text-anchor="middle" fill="gray">no detections</text>"#,
            MARGIN + SIZE / 2.0,
            MARGIN + SIZE / 2.0
        );
        Some("curve has no points; wrote an empty plot".to_string())
    } else {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", px(p.recall), py(p.precision)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        None
    };
    svg.push_str("</svg>\n");

    let mut csv = String::from("confidence,recall,precision\n");
    for p in &curve.points {
        let _ = writeln!(csv, "{},{},{}", p.confidence, p.recall, p.precision);
    }
    PlotOutput { svg, csv, warning }
}
