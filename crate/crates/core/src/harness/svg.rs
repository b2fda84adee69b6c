//! Line charts of a metric against the group separation: one panel per
//! (n, T) pair, one series per method.

use std::fmt::Write as _;

use super::{Method, Metric, ResultTable};
use crate::model::TransferKernel;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 40.0;
const LEGEND_H: f64 = 30.0;
const COLORS: [&str; 3] = ["#1b6ca8", "#d1495b", "#66a182"];

fn distinct<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// SVG document for one metric and kernel. Panels are laid out with `n`
/// along rows and `T` along columns.
pub fn render_figure(table: &ResultTable, metric: Metric, kernel: TransferKernel) -> String {
    let rows: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.metric == metric && r.kernel == kernel)
        .collect();
    let mut ns = distinct(rows.iter().map(|r| r.n));
    ns.sort_unstable();
    let mut ts = distinct(rows.iter().map(|r| r.t));
    ts.sort_by(f64::total_cmp);
    let mut deltas = distinct(rows.iter().map(|r| r.delta));
    deltas.sort_by(f64::total_cmp);
    let methods: Vec<Method> = distinct(rows.iter().map(|r| r.method));

    let lo = rows
        .iter()
        .filter_map(|r| r.mean.map(|m| m - r.se.unwrap_or(0.0)))
        .fold(0.0f64, f64::min);
    let (y_lo, y_hi) = (lo, 1.0);
    let (x_lo, x_hi) = match (deltas.first(), deltas.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (a - 0.5, a + 0.5),
        _ => (0.0, 1.0),
    };

    let width = ts.len() as f64 * (PANEL_W + MARGIN) + MARGIN;
    let height = ns.len() as f64 * (PANEL_H + MARGIN) + MARGIN + LEGEND_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="16" text-anchor="middle" font-size="13">{} vs separation, {} kernel</text>"#,
        width / 2.0,
        metric.name().to_uppercase(),
        kernel.name()
    );
    for (mi, m) in methods.iter().enumerate() {
        let x = MARGIN + mi as f64 * 120.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="12" height="3" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            LEGEND_H - 6.0,
            COLORS[mi % COLORS.len()],
            x + 16.0,
            LEGEND_H - 2.0,
            m.name()
        );
    }

    for (ri, &n) in ns.iter().enumerate() {
        for (ci, &t) in ts.iter().enumerate() {
            let x0 = MARGIN + ci as f64 * (PANEL_W + MARGIN);
            let y0 = LEGEND_H + MARGIN + ri as f64 * (PANEL_H + MARGIN);
            let px = |d: f64| x0 + (d - x_lo) / (x_hi - x_lo) * PANEL_W;
            let py = |v: f64| y0 + PANEL_H - (v - y_lo) / (y_hi - y_lo) * PANEL_H;
            let _ = writeln!(s, r#"<g class="panel">"#);
            let _ = writeln!(
                s,
                r##"<rect x="{x0}" y="{y0}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">n = {n}, T = {t}</text>"#,
                x0 + PANEL_W / 2.0,
                y0 - 6.0
            );
            for d in &deltas {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="middle">{d}</text>"#,
                    px(*d),
                    y0 + PANEL_H + 14.0
                );
            }
            for v in [y_lo, 0.5 * (y_lo + y_hi), y_hi] {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#,
                    x0 - 4.0,
                    py(v) + 4.0
                );
            }
            for (mi, m) in methods.iter().enumerate() {
                let color = COLORS[mi % COLORS.len()];
                let mut pts: Vec<(f64, f64, Option<f64>)> = rows
                    .iter()
                    .filter(|r| r.n == n && r.t == t && r.method == *m)
                    .filter_map(|r| r.mean.map(|v| (r.delta, v, r.se)))
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let path: Vec<String> = pts.iter().map(|(d, v, _)| format!("{:.2},{:.2}", px(*d), py(*v))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
                for (d, v, se) in &pts {
                    if let Some(se) = se {
                        let _ = writeln!(
                            s,
                            r#"<line x1="{x:.2}" x2="{x:.2}" y1="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
                            py(v - se),
                            py(v + se),
                            x = px(*d)
                        );
                    }
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                        px(*d),
                        py(*v)
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }
    }
    s.push_str("</svg>\n");
    s
}
