//! Plain SVG line and scatter plots. Coordinates are printed with fixed
//! precision so the same data always yields the same bytes.

use std::fmt::Write;

use grasp_core::pareto::ModelCard;

use crate::tables::HistoryRow;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

/// Min and max, padded 5% and widened when degenerate.
fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5_f64.max(lo.abs() * 0.05) };
    (lo - pad, hi + pad)
}

fn open(out: &mut String, title: &str, xlabel: &str, ylabel: &str, axes: &Axes) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l:.1} {t:.1} L{l:.1} {b:.1} L{r:.1} {b:.1}" fill="none" stroke="black"/>"#);
    let _ =
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    for (v, anchor_y) in [(axes.y0, b), (axes.y1, t)] {
        let _ =
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, l - 4.0, anchor_y + 4.0, tick(v));
    }
    for (v, anchor_x) in [(axes.x0, l), (axes.x1, r)] {
        let _ = writeln!(out, r#"<text x="{anchor_x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, b + 16.0, tick(v));
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str) {
    let mut d = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{x:.2} {y:.2}", if i == 0 { "M" } else { " L" });
    }
    let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
}

/// Training loss and validation similarity against epoch, each scaled to its
/// own vertical range (left axis shows loss).
pub fn history_svg(rows: &[HistoryRow]) -> String {
    let epochs = rows.iter().map(|r| r.epoch as f64);
    let loss = Axes::fit(epochs.clone(), rows.iter().map(|r| r.train_loss));
    let sim = Axes::fit(epochs, rows.iter().map(|r| r.val_angular_similarity));
    let mut out = String::new();
    open(&mut out, "Training history", "epoch", "train loss", &loss);
    let to = |a: &Axes, f: fn(&HistoryRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (a.px(r.epoch as f64), a.py(f(r)))).collect()
    };
    polyline(&mut out, &to(&loss, |r| r.train_loss), "#1f77b4");
    polyline(&mut out, &to(&sim, |r| r.val_angular_similarity), "#d62728");
    let _ = writeln!(
        out,
        r##"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="#d62728">val angular similarity {} .. {}</text>"##,
        W - MARGIN,
        MARGIN - 8.0,
        tick(sim.y0),
        tick(sim.y1)
    );
    out.push_str("</svg>\n");
    out
}

/// Top-5 accuracy against log10 FLOPs for every card, frontier joined by a line.
pub fn frontier_svg(cards: &[ModelCard], frontier: &[ModelCard]) -> String {
    let lx = |c: &ModelCard| (c.flops as f64).log10();
    let axes = Axes::fit(cards.iter().map(lx), cards.iter().map(|c| c.top5_accuracy));
    let mut out = String::new();
    open(&mut out, "Accuracy vs cost", "log10 FLOPs", "top-5 accuracy", &axes);
    for c in cards {
        let on = frontier.iter().any(|f| f.name == c.name);
        let (x, y) = (axes.px(lx(c)), axes.py(c.top5_accuracy));
        let fill = if on { "#d62728" } else { "#7f7f7f" };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{fill}"/>"#);
        let _ =
            writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="9">{}</text>"#, x + 5.0, y - 4.0, escape(&c.name));
    }
    let pts: Vec<_> = frontier.iter().map(|c| (axes.px(lx(c)), axes.py(c.top5_accuracy))).collect();
    polyline(&mut out, &pts, "#d62728");
    out.push_str("</svg>\n");
    out
}
