//! Static SVG line plots with error bars.

use std::fmt::Write;

/// Points `(x, y, se)` drawn as markers with `±se` bars.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

/// A fitted curve drawn as a dashed line.
#[derive(Clone, Debug)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 48.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick labels at a 1-2-5 step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap();
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last)
        .map(|k| {
            let t = k as f64 * step;
            (t, format!("{t:.decimals$}"))
        })
        .collect()
}

pub fn svg_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series], lines: &[Line]) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).chain(lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2]))
        .chain(lines.iter().flat_map(|l| l.points.iter().map(|p| p.1)));
    let fin = |v: &f64| v.is_finite();
    let (mut x0, mut x1) = xs.filter(fin).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.filter(fin).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pw = W - PAD_L - PAD_R;
    let ph = H - PAD_T - PAD_B;
    let sx = |x: f64| PAD_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| PAD_T + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, PAD_L + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{PAD_L}" y="{PAD_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for (t, label) in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, PAD_T, PAD_T + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, PAD_T + ph + 16.0);
    }
    for (t, label) in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{PAD_L}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, PAD_L + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, PAD_L - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, PAD_L + pw / 2.0, H - 10.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        PAD_T + ph / 2.0,
        escape(ylabel)
    );

    let mut legend = 0;
    let mut entry = |s: &mut String, color: &str, label: &str, dashed: bool| {
        let y = PAD_T + 12.0 + 18.0 * legend as f64;
        let x = W - PAD_R + 12.0;
        let dash = if dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#, x + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(label));
        legend += 1;
    };
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let pts: Vec<_> = ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        for p in pts {
            let (x, y) = (sx(p.0), sy(p.1));
            if p.2 > 0.0 {
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{c}"/>"#, sy(p.1 + p.2), sy(p.1 - p.2));
            }
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}"/>"#);
        }
        entry(&mut s, c, &ser.label, false);
    }
    for (i, line) in lines.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let path: Vec<String> = line
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1).clamp(PAD_T, PAD_T + ph)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5" stroke-dasharray="5,3"/>"#, path.join(" "));
        entry(&mut s, c, &line.label, true);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed() {
        let ser = Series { label: "L = 8 <a>".into(), points: vec![(0.0, 0.5, 0.1), (1.0, 0.2, 0.05)] };
        let line = Line { label: "fit".into(), points: vec![(0.0, 0.6), (1.0, 0.1)] };
        let svg = svg_plot("t", "h", "p", &[ser], &[line]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;a&gt;"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_plot() {
        assert!(svg_plot("", "", "", &[], &[]).contains("</svg>"));
    }

    #[test]
    fn tick_steps() {
        let labels: Vec<String> = ticks(0.0, 1.0).into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["0.0", "0.2", "0.4", "0.6", "0.8", "1.0"]);
        let labels: Vec<String> = ticks(8.0, 32.0).into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["10", "15", "20", "25", "30"]);
    }
}
