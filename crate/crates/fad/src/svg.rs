//! Self-contained SVG charts: ROC/PR overlays on the unit square and 2-D
//! scatter plots of feature maps.

use std::fmt::Write as _;

const WIDTH: f64 = 560.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 60.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 340.0;
const PLOT_H: f64 = 340.0;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

/// Named point list drawn as one polyline or one group of markers.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * PLOT_W
    }

    fn py(&self, y: f64) -> f64 {
        TOP + PLOT_H - (y - self.y0) / (self.y1 - self.y0) * PLOT_H
    }
}

fn header(out: &mut String, title: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(title)
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    for k in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let (x, y) = (f.px(fx), f.py(fy));
        writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{t}" text-anchor="middle">{}</text>"#,
            tick(fx),
            b = TOP + PLOT_H,
            b2 = TOP + PLOT_H + 5.0,
            t = TOP + PLOT_H + 18.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<line x1="{LEFT}" y1="{y:.2}" x2="{l2}" y2="{y:.2}" stroke="black"/><text x="{t}" y="{ty:.2}" text-anchor="end">{}</text>"#,
            tick(fy),
            l2 = LEFT - 5.0,
            t = LEFT - 8.0,
            ty = y + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 36.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(y_label),
        y = TOP + PLOT_H / 2.0
    )
    .unwrap();
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    let x = LEFT + PLOT_W + 20.0;
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        writeln!(
            out,
            r#"<rect x="{x}" y="{ry}" width="12" height="12" fill="{color}"/><text x="{tx}" y="{ty}">{}</text>"#,
            escape(name),
            ry = y - 10.0,
            tx = x + 18.0,
            ty = y
        )
        .unwrap();
    }
}

/// Polyline overlay on `[0, 1]^2`; `diagonal` adds the chance line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], diagonal: bool) -> String {
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    if diagonal {
        writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#aaaaaa" stroke-dasharray="4 4"/>"##,
            f.px(0.0),
            f.py(0.0),
            f.px(1.0),
            f.py(1.0)
        )
        .unwrap();
    }
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x.clamp(0.0, 1.0)), f.py(y.clamp(0.0, 1.0))))
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            pts.join(" ")
        )
        .unwrap();
    }
    legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

/// Marker groups on axes fitted to the data.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, groups: &[Series]) -> String {
    let all = || groups.iter().flat_map(|g| g.points.iter().copied());
    let (x0, x1) = padded_range(all().map(|p| p.0));
    let (y0, y1) = padded_range(all().map(|p| p.1));
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    for (i, g) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        writeln!(out, r#"<g fill="{color}" fill-opacity="0.7">"#).unwrap();
        for &(x, y) in &g.points {
            writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, f.px(x), f.py(y)).unwrap();
        }
        out.push_str("</g>\n");
    }
    legend(&mut out, &groups.iter().map(|g| g.name.as_str()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}
