use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::trace::SolverTrace;

pub const TRACE_HEADER: &str = "k,objective,fp_residual,delta_k,eps_bound";

/// Trace CSV with the fixed column set. Reals use Rust's shortest
/// round-trip decimal formatting.
pub fn trace_csv(trace: &SolverTrace) -> String {
    let mut s = String::with_capacity(64 * (trace.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in trace.rows() {
        let _ = writeln!(s, "{},{},{},{},{}", r.k, r.objective, r.fp_residual, r.delta_k, r.eps_bound);
    }
    s
}

/// `k,objective_exact,objective_hj`; a missing arm or an arm that stopped
/// early leaves its cell empty.
pub fn objectives_csv(exact: Option<&SolverTrace>, hj: Option<&SolverTrace>) -> String {
    let len = exact.map_or(0, |t| t.len()).max(hj.map_or(0, |t| t.len()));
    let cell = |t: Option<&SolverTrace>, i: usize| {
        t.and_then(|t| t.rows().get(i)).map(|r| r.objective.to_string()).unwrap_or_default()
    };
    let mut s = String::from("k,objective_exact,objective_hj\n");
    for i in 0..len {
        let _ = writeln!(s, "{},{},{}", i + 1, cell(exact, i), cell(hj, i));
    }
    s
}

const WIDTH: f64 = 900.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 140.0;
const MARGIN_T: f64 = 40.0;
const GAP: f64 = 70.0;
const MAX_POINTS: usize = 1500;

fn color(name: &str) -> &'static str {
    match name {
        "exact" => "#1f77b4",
        "hj" => "#d62728",
        _ => "#2ca02c",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Panel<'a> {
    title: &'a str,
    series: Vec<(&'a str, Vec<(f64, f64)>)>,
}

fn draw_panel(svg: &mut String, panel: &Panel, top: f64, k_max: f64) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let logs: Vec<f64> = panel.series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)).collect();
    let (mut lo, mut hi) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    lo = lo.floor();
    hi = hi.ceil().max(lo + 1.0);
    let x_of = |k: f64| MARGIN_L + plot_w * (k.max(1.0).ln() / k_max.max(2.0).ln());
    let y_of = |v: f64| top + PANEL_H * (hi - v) / (hi - lo);

    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        top - 10.0,
        escape(panel.title)
    );
    let step = ((hi - lo) / 8.0).ceil().max(1.0);
    let mut e = lo;
    while e <= hi + 1e-9 {
        let y = y_of(e);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{}</text>"##,
            MARGIN_L + plot_w,
            MARGIN_L - 6.0,
            y + 4.0,
            e as i64
        );
        e += step;
    }
    let mut decade = 1.0;
    while decade <= k_max * 1.0001 {
        let x = x_of(decade);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{decade}</text>"#,
            top + PANEL_H + 16.0
        );
        decade *= 10.0;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">iteration k (log scale)</text>"#,
        MARGIN_L + plot_w / 2.0,
        top + PANEL_H + 34.0
    );
    for (i, (name, pts)) in panel.series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let stride = (pts.len() / MAX_POINTS).max(1);
        let mut path = String::new();
        for (j, (k, v)) in pts.iter().enumerate() {
            if j % stride == 0 || j + 1 == pts.len() {
                let _ = write!(path, "{:.2},{:.2} ", x_of(*k), y_of(*v));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#,
            color(name),
            path.trim_end()
        );
        let ly = top + 20.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            lx + 22.0,
            color(name),
            lx + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
}

/// Two stacked log-log panels: objective gap to the best value seen across
/// arms, and fixed-point residual. Self-contained SVG (no external
/// references).
pub fn convergence_svg(title: &str, arms: &[(&str, &SolverTrace)]) -> String {
    let best = arms
        .iter()
        .flat_map(|(_, t)| t.objectives())
        .fold(f64::INFINITY, f64::min);
    let k_max = arms.iter().map(|(_, t)| t.len()).max().unwrap_or(1) as f64;
    let floor = 1e-16 * best.abs().max(1.0);
    let gap = Panel {
        title: "objective - best objective seen",
        series: arms
            .iter()
            .map(|(n, t)| (*n, t.rows().iter().map(|r| (r.k as f64, (r.objective - best).max(floor).log10())).collect()))
            .collect(),
    };
    let resid = Panel {
        title: "fixed-point residual",
        series: arms
            .iter()
            .map(|(n, t)| {
                let pts = t.rows().iter().map(|r| (r.k as f64, r.fp_residual.max(1e-300).log10())).collect();
                (*n, pts)
            })
            .collect(),
    };
    let height = MARGIN_T + 2.0 * PANEL_H + GAP + 60.0;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" font-size="16" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    draw_panel(&mut svg, &gap, MARGIN_T, k_max);
    draw_panel(&mut svg, &resid, MARGIN_T + PANEL_H + GAP, k_max);
    svg.push_str("</svg>\n");
    svg
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceRow;

    fn trace(vals: &[f64]) -> SolverTrace {
        let mut t = SolverTrace::new();
        for (i, v) in vals.iter().enumerate() {
            t.push(TraceRow { k: i + 1, objective: *v, fp_residual: 0.1 / (i + 1) as f64, delta_k: 0.0, eps_bound: 0.0 });
        }
        t
    }

    #[test]
    fn csv_round_trips_reals() {
        let t = trace(&[0.1 + 0.2, 1.0 / 3.0]);
        let csv = trace_csv(&t);
        let line = csv.lines().nth(1).unwrap();
        let obj: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(obj, 0.1 + 0.2);
        assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER);
    }

    #[test]
    fn objectives_pad_missing_cells() {
        let e = trace(&[3.0, 2.0, 1.0]);
        let h = trace(&[3.5]);
        let csv = objectives_csv(Some(&e), Some(&h));
        assert_eq!(csv, "k,objective_exact,objective_hj\n1,3,3.5\n2,2,\n3,1,\n");
    }

    #[test]
    fn svg_has_no_external_references() {
        let e = trace(&[3.0, 2.0, 1.0]);
        let svg = convergence_svg("demo <lasso>", &[("exact", &e)]);
        assert!(svg.contains("&lt;lasso&gt;"));
        assert!(!svg.contains("href"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
