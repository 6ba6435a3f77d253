//! Minimal deterministic SVG output: a phi-theta heatmap and a line/step
//! chart. Coordinates are printed with fixed precision so repeated runs
//! produce identical bytes.

use std::fmt::Write as _;

use crate::analysis::WeightedCdf;
use crate::grid::{Pattern, FLOOR_DB};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

/// Dynamic range shown by the heatmap below the pattern maximum.
pub const HEATMAP_RANGE_DB: f64 = 50.0;

const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

const LINE_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn colormap(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (t.floor() as usize).min(PALETTE.len() - 2);
    let f = t - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axis_labels(out: &mut String, xlabel: &str, ylabel: &str) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(ylabel)
    );
}

/// Coverage map with phi across (0 to 360) and theta down (top of the
/// sphere first). Invalid points are drawn grey.
pub fn heatmap_svg(pattern: &Pattern, title: &str, unit: &str) -> String {
    let grid = pattern.grid();
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let dphi = grid.phi_step().unwrap_or(360.0);
    let dtheta = grid.theta_step().unwrap_or(180.0);
    let theta0 = grid.theta_values()[0] - dtheta / 2.0;
    let theta1 = grid.theta_values()[grid.n_theta() - 1] + dtheta / 2.0;
    let x_of = |phi: f64| LEFT + phi / 360.0 * plot_w;
    let y_of = |theta: f64| TOP + (theta - theta0) / (theta1 - theta0) * plot_h;

    let hi = pattern.max_value();
    let lo = pattern
        .valid_values()
        .map(|(_, v)| v)
        .filter(|v| *v > FLOOR_DB)
        .fold(hi, f64::min)
        .max(hi - HEATMAP_RANGE_DB);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut out = String::new();
    header(&mut out, title);
    let cell_w = dphi / 360.0 * plot_w;
    let cell_h = dtheta / (theta1 - theta0) * plot_h;
    for ip in 0..grid.n_phi() {
        for it in 0..grid.n_theta() {
            let i = grid.index(ip, it);
            let (phi, theta) = grid.coords(i);
            let fill = if grid.is_valid(i) { colormap((pattern.value(i) - lo) / span) } else { "#bbbbbb".to_string() };
            // Cells are centred on the sample; the phi = 0 column is split
            // across the left edge so the axis stays 0 to 360.
            let x = x_of(phi - dphi / 2.0);
            let y = y_of(theta - dtheta / 2.0);
            if x < LEFT {
                let _ = writeln!(out, r#"<rect x="{LEFT:.2}" y="{y:.2}" width="{:.2}" height="{cell_h:.2}" fill="{fill}"/>"#, cell_w / 2.0);
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{cell_h:.2}" fill="{fill}"/>"#,
                    LEFT + plot_w - cell_w / 2.0,
                    cell_w / 2.0
                );
            } else {
                let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="{fill}"/>"#);
            }
        }
    }
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
    for phi in (0..=360).step_by(60) {
        let x = x_of(phi as f64);
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{phi}</text>"#,
            TOP + plot_h + 16.0
        );
    }
    for theta in (0..=180).step_by(30) {
        let t = theta as f64;
        if t < theta0 || t > theta1 {
            continue;
        }
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{theta}</text>"#, LEFT - 6.0, y_of(t) + 4.0);
    }
    axis_labels(&mut out, "phi (deg)", "theta (deg)");

    // Colour bar.
    let bx = WIDTH - RIGHT + 25.0;
    let steps = 40;
    for k in 0..steps {
        let t = 1.0 - k as f64 / steps as f64;
        let y = TOP + k as f64 * plot_h / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.1}" y="{y:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            plot_h / steps as f64 + 0.5,
            colormap(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{hi:.1}</text>"#, bx + 22.0, TOP + 10.0);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{lo:.1}</text>"#, bx + 22.0, TOP + plot_h);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx, TOP - 8.0, escape(unit));
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a right-continuous step function.
    pub step: bool,
    pub dashed: bool,
}

impl Series {
    pub fn cdf(label: impl Into<String>, cdf: &WeightedCdf) -> Self {
        let points = cdf.values().iter().copied().zip(cdf.cumulative().iter().copied()).collect();
        Self { label: label.into(), points, step: true, dashed: false }
    }

    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, step: false, dashed: true }
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

/// Line chart over the given series; CDF series are drawn as steps with a
/// y axis from 0 to 1.
pub fn line_chart_svg(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).filter(|x| x.is_finite() && *x > FLOOR_DB);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let pad = (x1 - x0) * 0.03;
    x0 -= pad;
    x1 += pad;
    let x_of = |x: f64| LEFT + (x.clamp(x0, x1) - x0) / (x1 - x0) * plot_w;
    let y_of = |y: f64| TOP + (1.0 - y) * plot_h;

    let mut out = String::new();
    header(&mut out, title);
    let ticks = nice_ticks(x0, x1);
    let decimals = match ticks.as_slice() {
        [a, b, ..] => (-(b - a).log10().floor()).max(0.0) as usize,
        _ => 1,
    };
    for t in ticks {
        let x = x_of(t);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.1}" stroke="#e0e0e0"/>"##, TOP + plot_h);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{t:.decimals$}</text>"#, TOP + plot_h + 16.0);
    }
    for k in 0..=5 {
        let y = k as f64 / 5.0;
        let py = y_of(y);
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.1}" y2="{py:.2}" stroke="#e0e0e0"/>"##, LEFT + plot_w);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, LEFT - 6.0, py + 4.0);
    }
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);

    for (k, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = LINE_COLORS[k % LINE_COLORS.len()];
        let mut d = String::new();
        if s.step {
            let _ = write!(d, "M{:.2},{:.2}", x_of(x0), y_of(0.0));
            for &(x, y) in &s.points {
                let _ = write!(d, " H{:.2} V{:.2}", x_of(x), y_of(y));
            }
            let _ = write!(d, " H{:.2}", x_of(x1));
        } else {
            for (j, &(x, y)) in s.points.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, x_of(x), y_of(y));
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#);
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 8.0;
        let _ = writeln!(out, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 16.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#, lx + 20.0, ly + 4.0, escape(&s.label));
    }
    axis_labels(&mut out, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}
