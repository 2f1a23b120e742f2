use std::fmt::Write as _;
use std::path::Path;

use super::{MetricsError, RocCurve};

/// `threshold,fpr,tpr` rows; the leading point's threshold is written `inf`.
pub fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        let t = if p.threshold.is_infinite() { "inf".to_string() } else { format!("{}", p.threshold) };
        let _ = writeln!(out, "{t},{},{}", p.fpr, p.tpr);
    }
    out
}

pub fn write_roc_csv(curve: &RocCurve, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    std::fs::write(path, roc_csv(curve))?;
    Ok(())
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Self-contained SVG with one polyline per labelled curve, the chance
/// diagonal and an AUC legend.
pub fn roc_svg(curves: &[(&str, &RocCurve)]) -> String {
    let (left, top, side) = (60.0, 20.0, 400.0);
    let px = |fpr: f64| left + fpr * side;
    let py = |tpr: f64| top + (1.0 - tpr) * side;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="520" height="500" viewBox="0 0 520 500" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="520" height="500" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{side}" height="{side}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#, px(v), top + side + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, left - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">False positive rate</text>"#,
        px(0.5),
        top + side + 34.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">True positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for (k, (label, curve)) in curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = curve.points.iter().map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let y = py(0.0) - 14.0 * (curves.len() - k) as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{y:.1}" fill="{color}">{} (AUC = {:.3})</text>"#,
            px(0.45),
            escape(label),
            curve.auc
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::roc_curve;

    #[test]
    fn csv_has_one_line_per_point() {
        let c = roc_curve(&[0.1, 0.9, 0.5], &[false, true, true]).unwrap();
        let csv = roc_csv(&c);
        assert_eq!(csv.lines().count(), c.points.len() + 1);
        assert!(csv.lines().nth(1).unwrap().starts_with("inf,0,0"));
    }

    #[test]
    fn svg_mentions_auc() {
        let c = roc_curve(&[0.1, 0.9], &[false, true]).unwrap();
        let svg = roc_svg(&[("Level 1", &c)]);
        assert!(svg.contains("AUC = 1.000") && svg.ends_with("</svg>\n"));
    }
}
