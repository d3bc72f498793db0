//! Small self-contained SVG renderings: the two-axis learning curve and
//! confusion-matrix heatmaps.

use std::fmt::Write;

use crate::metrics::ConfusionMatrix;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#d62728"];

/// One plotted line; `right_axis` series share the secondary y axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub right_axis: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 0.05, hi + 0.05);
    }
    let pad = (hi - lo) * 0.1;
    (lo - pad, hi + pad)
}

/// Line chart over the x positions `xs` with a left and an optional right
/// y axis.
pub fn curve_svg(title: &str, x_label: &str, xs: &[f64], series: &[Series]) -> String {
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let (x_lo, x_hi) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let left = range(
        series
            .iter()
            .filter(|s| !s.right_axis)
            .flat_map(|s| s.values.iter().copied()),
    );
    let right = range(
        series
            .iter()
            .filter(|s| s.right_axis)
            .flat_map(|s| s.values.iter().copied()),
    );
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64, (lo, hi): (f64, f64)| MARGIN + plot_h - (y - lo) / (hi - lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for &x in xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let has_right = series.iter().any(|s| s.right_axis);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = MARGIN + plot_h - f * plot_h;
        let lv = left.0 + f * (left.1 - left.0);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y:.1}" text-anchor="end">{lv:.3}</text>"#,
            MARGIN - 6.0
        );
        if has_right {
            let rv = right.0 + f * (right.1 - right.0);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y:.1}">{rv:.4}</text>"#,
                WIDTH - MARGIN + 6.0
            );
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let axis = if s.right_axis { right } else { left };
        let points: Vec<String> = xs
            .iter()
            .zip(&s.values)
            .map(|(&x, &y)| format!("{:.1},{:.1}", px(x), py(y, axis)))
            .collect();
        let dash = if s.right_axis {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            points.join(" ")
        );
        for p in &points {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let side = if s.right_axis { " (right axis)" } else { "" };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}{side}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 + 16.0 * k as f64,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Row-normalized heatmap with counts printed in the cells.
pub fn confusion_svg(title: &str, matrix: &ConfusionMatrix, names: &[String]) -> String {
    let n = matrix.n_classes.max(1);
    let cell = 48.0;
    let label_w = 140.0;
    let size_w = label_w + cell * n as f64 + 20.0;
    let size_h = 60.0 + cell * n as f64 + label_w;
    let norm = matrix.row_normalized();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size_w}" height="{size_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    for (i, row) in matrix.counts.iter().enumerate() {
        let y = 40.0 + cell * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            label_w - 6.0,
            y + cell / 2.0 + 4.0,
            escape(names.get(i).map_or("", String::as_str))
        );
        for (j, &c) in row.iter().enumerate() {
            let x = label_w + cell * j as f64;
            let shade = (255.0 * (1.0 - norm[i][j])).round() as u8;
            let text = if norm[i][j] > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="gray"/>"#
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{text}">{c}</text>"#,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            );
        }
    }
    for (j, name) in names.iter().enumerate().take(n) {
        let x = label_w + cell * j as f64 + cell / 2.0;
        let y = 46.0 + cell * n as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" transform="rotate(60 {x:.1} {y:.1})">{}</text>"#,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_has_every_series() {
        let svg = curve_svg(
            "curve",
            "percent",
            &[25.0, 50.0, 75.0, 100.0],
            &[
                Series {
                    name: "f1 <micro>".into(),
                    values: vec![0.3, 0.35, 0.4, 0.42],
                    right_axis: false,
                },
                Series {
                    name: "hamming".into(),
                    values: vec![0.12, 0.11, 0.1, 0.1],
                    right_axis: true,
                },
            ],
        );
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("f1 &lt;micro&gt;"));
        assert!(svg.contains("right axis"));
    }

    #[test]
    fn heatmap_cells() {
        let m = ConfusionMatrix {
            n_classes: 2,
            counts: vec![vec![3, 1], vec![0, 4]],
        };
        let svg = confusion_svg("cm", &m, &["a".into(), "b".into()]);
        assert_eq!(svg.matches("<rect x=").count(), 4);
    }
}
