//! Minimal static SVG charts for the plot-data CSVs.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub enum Mark {
    Dots,
    Line,
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [(f64, f64)],
    pub mark: Mark,
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(lo < hi) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 0.5, c + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn frame(s: &mut String, title: &str, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64)) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, px) in [(x.0, PAD), (x.1, W - PAD)] {
        let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{v:.3}</text>"#, H - PAD + 16.0);
    }
    for (v, py) in [(y.0, H - PAD), (y.1, PAD)] {
        let _ = writeln!(s, r#"<text x="{}" y="{py}" text-anchor="end">{v:.4}</text>"#, PAD - 4.0);
    }
}

/// Scatter/line chart. With `log_y`, values are plotted as `log10`.
pub fn chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_y: bool) -> String {
    let ty = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| ty(p.1))));
    let px = |v: f64| PAD + (v - xr.0) / (xr.1 - xr.0) * (W - 2.0 * PAD);
    let py = |v: f64| H - PAD - (ty(v) - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let ylabel = if log_y { format!("log10 {ylabel}") } else { ylabel.to_string() };
    frame(&mut s, title, xlabel, &ylabel, xr, yr);
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        match ser.mark {
            Mark::Dots => {
                for &(x, y) in ser.points {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, px(x), py(y));
                }
            }
            Mark::Line => {
                let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    pts.join(" ")
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
            W - PAD - 6.0,
            PAD + 16.0 * (k + 1) as f64,
            ser.name
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars around zero, one per `(label, value)`.
pub fn bars(title: &str, values: &[(String, f64)]) -> String {
    let yr = range(values.iter().map(|v| v.1).chain([0.0]));
    let n = values.len().max(1) as f64;
    let bw = (W - 2.0 * PAD) / n;
    let py = |v: f64| H - PAD - (v - yr.0) / (yr.1 - yr.0) * (H - 2.0 * PAD);
    let mut s = String::new();
    frame(&mut s, title, "parameter", "weight", (1.0, n), yr);
    for (i, (label, v)) in values.iter().enumerate() {
        let (top, bottom) = if *v >= 0.0 { (py(*v), py(0.0)) } else { (py(0.0), py(*v)) };
        let x = PAD + i as f64 * bw;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{label}</title></rect>"#,
            x + 0.1 * bw,
            0.8 * bw,
            bottom - top,
            COLORS[0]
        );
    }
    s.push_str("</svg>\n");
    s
}
