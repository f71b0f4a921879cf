//! Minimal SVG plots: heatmaps and line/scatter charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 56.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue to red ramp for `t` in `[0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs()) * 0.8).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo <= hi).then_some((lo, if hi > lo { hi } else { lo + 1.0 }))
}

fn axes(out: &mut String, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) {
    let (x0, y0, x1, y1) = (PAD, HEIGHT - PAD, WIDTH - PAD, PAD);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{} [{:.4}, {:.4}]</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label),
        x.0,
        x.1
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{} [{:.4}, {:.4}]</text>",
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label),
        y.0,
        y.1
    );
}

/// Heatmap of `values` laid out row-major with `y` outer (`values[j * nx + i]`).
/// Non-finite cells are drawn black.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64), nx: usize, ny: usize, values: &[f64]) -> String {
    let mut out = header(title);
    let (lo, hi) = finite_range(values.iter().copied()).unwrap_or((0.0, 1.0));
    let cw = (WIDTH - 2.0 * PAD) / nx as f64;
    let ch = (HEIGHT - 2.0 * PAD) / ny as f64;
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            let fill = if v.is_finite() { color((v - lo) / (hi - lo)) } else { "#000000".into() };
            let _ = writeln!(
                out,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{fill}\"/>",
                PAD + i as f64 * cw,
                HEIGHT - PAD - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axes(&mut out, x_label, y_label, x, y);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"44\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">color range [{lo:.4e}, {hi:.4e}]</text>",
        WIDTH / 2.0
    );
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dots,
}

/// Line or scatter chart; non-finite points are skipped.
pub fn chart(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], mark: Mark) -> String {
    let mut out = header(title);
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x, y))
        .collect();
    let xr = finite_range(pts.iter().map(|p| p.0)).unwrap_or((0.0, 1.0));
    let yr = finite_range(pts.iter().map(|p| p.1)).unwrap_or((0.0, 1.0));
    let sx = |x: f64| PAD + (x - xr.0) / (xr.1 - xr.0) * (WIDTH - 2.0 * PAD);
    let sy = |y: f64| HEIGHT - PAD - (y - yr.0) / (yr.1 - yr.0) * (HEIGHT - 2.0 * PAD);
    match mark {
        Mark::Line => {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"{}\"/>",
                path.join(" ")
            );
        }
        Mark::Dots => {
            for &(x, y) in &pts {
                let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#9c1f1f\"/>", sx(x), sy(y));
            }
        }
    }
    axes(&mut out, x_label, y_label, xr, yr);
    out.push_str("</svg>\n");
    out
}

/// Keeps at most `max` evenly spaced points (always including the last).
pub fn thin<T: Copy>(v: &[T], max: usize) -> Vec<T> {
    if v.len() <= max || max < 2 {
        return v.to_vec();
    }
    let step = (v.len() - 1) as f64 / (max - 1) as f64;
    (0..max).map(|k| v[((k as f64 * step).round() as usize).min(v.len() - 1)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_cell_per_value() {
        let s = heatmap("t", "x", "y", (0.0, 1.0), (0.0, 1.0), 3, 2, &[0.0, 1.0, 2.0, 3.0, f64::INFINITY, 5.0]);
        assert_eq!(s.matches("<rect x=").count(), 6 + 1);
        assert!(s.contains("#000000"));
        assert!(s.ends_with("</svg>\n"));
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let v: Vec<usize> = (0..1001).collect();
        let t = thin(&v, 11);
        assert_eq!(t.len(), 11);
        assert_eq!((t[0], t[10]), (0, 1000));
    }

    #[test]
    fn titles_are_escaped() {
        assert!(chart("a<b", "x", "y", &[0.0, 1.0], &[1.0, 2.0], Mark::Line).contains("a&lt;b"));
    }
}
