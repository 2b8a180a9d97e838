//! Minimal SVG line charts of a run.

use std::fmt::Write;

use crate::dynamics::Trajectory;
use crate::graph::{SignedGraph, WeightBounds};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Chart {
    t_max: f64,
    lo: f64,
    hi: f64,
    body: String,
}

impl Chart {
    fn new(t_max: f64, lo: f64, hi: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        Chart {
            t_max: t_max.max(f64::MIN_POSITIVE),
            lo,
            hi,
            body: String::new(),
        }
    }

    fn px(&self, t: f64, y: f64) -> (f64, f64) {
        let x = MARGIN + (WIDTH - 2.0 * MARGIN) * t / self.t_max;
        let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (y - self.lo) / (self.hi - self.lo);
        (x, y)
    }

    fn series(&mut self, points: impl Iterator<Item = (f64, f64)>, color: &str) {
        let coords: Vec<String> = points
            .map(|(t, y)| {
                let (x, y) = self.px(t, y);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn guide(&mut self, y: f64, label: &str) {
        let (x0, py) = self.px(0.0, y);
        let (x1, _) = self.px(self.t_max, y);
        let _ = writeln!(
            self.body,
            r##"<line x1="{x0:.2}" y1="{py:.2}" x2="{x1:.2}" y2="{py:.2}" stroke="#555" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"##,
            x1 + 2.0,
            py + 4.0
        );
    }

    fn finish(self, title: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN}" y="20" font-size="14">{title}</text><text x="{:.0}" y="{:.0}" font-size="11">t = {}</text>"#,
            WIDTH - MARGIN - 40.0,
            HEIGHT - 10.0,
            self.t_max
        );
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

/// `x_i(t)` for every node, with `+-x_max` guides when known.
pub fn state_svg(traj: &Trajectory, x_max: Option<f64>) -> String {
    let t_max = traj.times.last().copied().unwrap_or(0.0);
    let peak = traj.monitor.max_state_norm;
    let extent = x_max.map_or(peak, |m| m.max(peak)) * 1.05;
    let mut chart = Chart::new(t_max, -extent, extent);
    let n = traj.states.first().map_or(0, |x| x.len());
    for i in 0..n {
        let pts = traj.times.iter().zip(&traj.states).map(|(t, x)| (*t, x[i]));
        chart.series(pts, PALETTE[i % PALETTE.len()]);
    }
    if let Some(m) = x_max {
        chart.guide(m, "x_max");
        chart.guide(-m, "-x_max");
    }
    chart.finish("neural states")
}

/// Edge weights per snapshot, with the four clip bounds as guides.
pub fn weights_svg(traj: &Trajectory, g: &SignedGraph, bounds: &WeightBounds) -> String {
    let t_max = traj.snapshots.last().map_or(0.0, |s| s.t);
    let mut chart = Chart::new(t_max, bounds.a_minus_lo * 1.05, bounds.a_plus_hi * 1.05);
    for (k, e) in g.edges().iter().enumerate() {
        let pts = traj.snapshots.iter().map(|s| (s.t, s.weights[(e.i - 1, e.j - 1)]));
        chart.series(pts, PALETTE[k % PALETTE.len()]);
    }
    chart.guide(bounds.a_plus_hi, "a+ upper");
    chart.guide(bounds.a_plus_lo, "a+ lower");
    chart.guide(bounds.a_minus_hi, "a- upper");
    chart.guide(bounds.a_minus_lo, "a- lower");
    chart.finish("synaptic weights")
}
