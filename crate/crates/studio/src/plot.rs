//! Minimal SVG line charts.
//!
//! Charts are built only from the CSV tables, so re-rendering from files
//! read back from disk produces the same bytes.

use std::fmt::Write as _;

use crate::tables::{SolutionRow, TraceTable};

const W: f64 = 820.0;
const H: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Palette slot, so that related series can share a colour.
    pub color: usize,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Vertical marker lines with a caption, e.g. event times.
    pub markers: Vec<(f64, String)>,
    /// Horizontal reference line.
    pub y_ref: Option<f64>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = (lo.abs() * 0.05).max(0.5);
        return (lo - pad, hi + pad);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo, 6.0);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

impl Chart {
    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let pts = || self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let fold = |f: fn(&(f64, f64)) -> f64| {
            pts().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        };
        let (x0, x1) = fold(|p| p.0);
        let (mut y0, mut y1) = fold(|p| p.1);
        if let Some(r) = self.y_ref {
            y0 = y0.min(r);
            y1 = y1.max(r);
        }
        let x = if x0.is_finite() && x1 > x0 { (x0, x1) } else { padded_range(x0, x1) };
        (x, padded_range(y0, y1))
    }

    pub fn render(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        let (xt, xd) = ticks(x0, x1);
        for x in xt {
            let px = sx(x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.xd$}</text>"##,
                TOP + ph,
                TOP + ph + 16.0
            );
        }
        let (yt, yd) = ticks(y0, y1);
        for y in yt {
            let py = sy(y);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.yd$}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            H - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        if let Some(r) = self.y_ref {
            let py = sy(r);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#555" stroke-dasharray="2,3"/>"##,
                LEFT + pw
            );
        }
        for (x, label) in &self.markers {
            if *x < x0 || *x > x1 {
                continue;
            }
            let px = sx(*x);
            let _ = writeln!(
                s,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="6,4"/><text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##,
                TOP + ph,
                px + 4.0,
                TOP + 14.0,
                escape(label)
            );
        }

        for (i, ser) in self.series.iter().enumerate() {
            let color = PALETTE[ser.color % PALETTE.len()];
            let dash = if ser.dashed { r#" stroke-dasharray="5,3""# } else { "" };
            // non-finite samples split the line
            let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for &(x, y) in &ser.points {
                if x.is_finite() && y.is_finite() {
                    runs.last_mut().unwrap().push((x, y));
                } else if !runs.last().unwrap().is_empty() {
                    runs.push(Vec::new());
                }
            }
            for run in runs.iter().filter(|r| !r.is_empty()) {
                let mut pts = String::new();
                for &(x, y) in run {
                    let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
                }
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
                    pts.trim_end()
                );
                if run.len() == 1 {
                    let _ = writeln!(
                        s,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                        sx(run[0].0),
                        sy(run[0].1)
                    );
                }
            }
            let ly = TOP + 8.0 + 18.0 * i as f64;
            let lx = LEFT + pw + 14.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 24.0,
                lx + 30.0,
                ly + 4.0,
                escape(&ser.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Distinct case ids in first-seen order.
fn case_order(rows: &[SolutionRow]) -> Vec<&str> {
    let mut ids: Vec<&str> = Vec::new();
    for r in rows {
        if !ids.contains(&r.case_id.as_str()) {
            ids.push(&r.case_id);
        }
    }
    ids
}

/// File stem and chart for each sweep figure: rotor speed and pitch per
/// turbine, total stored energy and total power per case.
pub fn sweep_charts(rows: &[SolutionRow]) -> Vec<(&'static str, Chart)> {
    let cases = case_order(rows);
    let n_wt = rows.iter().filter_map(SolutionRow::turbine_index).max().unwrap_or(0);
    let ok = |r: &&SolutionRow| r.error.is_empty();

    let per_turbine = |title: &str, y_label: &str, pick: fn(&SolutionRow) -> Option<f64>| {
        let mut series = Vec::new();
        for (ci, case) in cases.iter().enumerate() {
            for wt in 1..=n_wt {
                let points = rows
                    .iter()
                    .filter(ok)
                    .filter(|r| r.case_id == *case && r.turbine_index() == Some(wt))
                    .filter_map(|r| pick(r).map(|y| (r.v_free_mps, y)))
                    .collect();
                series.push(Series {
                    label: format!("{case} WT{wt}"),
                    points,
                    color: wt - 1,
                    dashed: ci % 2 == 1,
                });
            }
        }
        Chart {
            title: title.into(),
            x_label: "free wind speed (m/s)".into(),
            y_label: y_label.into(),
            series,
            ..Chart::default()
        }
    };
    let totals = |title: &str, y_label: &str, pick: fn(&SolutionRow) -> Option<f64>| Chart {
        title: title.into(),
        x_label: "free wind speed (m/s)".into(),
        y_label: y_label.into(),
        series: cases
            .iter()
            .enumerate()
            .map(|(ci, case)| Series {
                label: case.to_string(),
                points: rows
                    .iter()
                    .filter(ok)
                    .filter(|r| r.case_id == *case && r.is_total())
                    .filter_map(|r| pick(r).map(|y| (r.v_free_mps, y)))
                    .collect(),
                color: ci,
                dashed: false,
            })
            .collect(),
        ..Chart::default()
    };
    vec![
        ("sweep_omega", per_turbine("Rotor speed", "rotor speed (pu)", |r| r.omega_pu)),
        ("sweep_beta", per_turbine("Pitch angle", "pitch (deg)", |r| r.beta_deg)),
        ("sweep_ekin", totals("Stored rotor energy per row", "kinetic energy (pu s)", |r| r.e_kin_pus)),
        ("sweep_power", totals("Row power", "power (MW)", |r| r.p_mech_w.map(|p| p / 1e6))),
    ]
}

fn event_markers(t: &[f64], events: &[String]) -> Vec<(f64, String)> {
    t.iter()
        .zip(events)
        .filter(|(_, e)| !e.is_empty())
        .map(|(&t, e)| (t, e.clone()))
        .collect()
}

/// All cases' frequency on one chart.
pub fn frequency_chart(traces: &[(String, TraceTable)], f_nominal_hz: f64) -> Chart {
    let series = traces
        .iter()
        .enumerate()
        .map(|(i, (case, tr))| {
            let t = tr.column("t_s").unwrap_or_default();
            let f = tr.column("f_hz").unwrap_or_default();
            Series {
                label: format!("case {case}"),
                points: t.into_iter().zip(f).collect(),
                color: i,
                dashed: false,
            }
        })
        .collect();
    let markers = traces
        .first()
        .map(|(_, tr)| event_markers(&tr.column("t_s").unwrap_or_default(), &tr.events))
        .unwrap_or_default();
    Chart {
        title: "System frequency".into(),
        x_label: "time (s)".into(),
        y_label: "frequency (Hz)".into(),
        series,
        markers,
        y_ref: Some(f_nominal_hz),
    }
}

/// Rotor speed of every turbine of one case.
pub fn rotor_speed_chart(case: &str, tr: &TraceTable) -> Chart {
    let t = tr.column("t_s").unwrap_or_default();
    let series = (1..=tr.n_turbines())
        .map(|i| Series {
            label: format!("WT{i}"),
            points: t.iter().copied().zip(tr.column(&format!("omega_pu_{i}")).unwrap_or_default()).collect(),
            color: i - 1,
            dashed: false,
        })
        .collect();
    Chart {
        title: format!("Rotor speed, case {case}"),
        x_label: "time (s)".into(),
        y_label: "rotor speed (pu)".into(),
        series,
        markers: event_markers(&t, &tr.events),
        y_ref: None,
    }
}
