//! Command drivers: run the experiments described by a [`StudyConfig`] and
//! write their tables, plots and summaries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use wakereserve_core::farmopt::{self, base_case, solve_farm, FarmProblem, FarmSolution, SweepCase};
use wakereserve_core::gridsim::{
    nadir_metrics, simulate, Event, EventKind, GenKind, GovernorParams, GridScenario, SimTrace, SyncGen, WindRow,
};

use crate::config::{EventConfig, GenKindConfig, GovernorKind, OutputFormat, StudyConfig};
use crate::plot::{frequency_chart, rotor_speed_chart, sweep_charts};
use crate::tables::{failed_row, save_records, solution_rows, MetricsRow, SolutionRow, TraceTable};
use crate::StudioError;

/// Command-line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cases: Vec<String>,
    pub seed: Option<u64>,
    pub v_free_mps: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut StudyConfig) -> Result<(), StudioError> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(v) = self.v_free_mps {
            let t = &cfg.turbine;
            if !(v >= t.v_cutin_mps && v <= t.v_cutout_mps) {
                return Err(StudioError::Config {
                    key: "--v".into(),
                    msg: format!("{v} m/s lies outside [{}, {}]", t.v_cutin_mps, t.v_cutout_mps),
                });
            }
            cfg.farm.v_free_mps = v;
        }
        Ok(())
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub summary: String,
    pub files: Vec<PathBuf>,
    pub succeeded: usize,
    pub failures: Vec<String>,
}

/// Runs `f` over `items` on all cores, keeping input order in the output.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn file_safe(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn ensure_dir(out: &Path) -> Result<(), StudioError> {
    std::fs::create_dir_all(out).map_err(StudioError::io(format!("create {}", out.display())))
}

fn write_text(path: &Path, text: &str, files: &mut Vec<PathBuf>) -> Result<(), StudioError> {
    std::fs::write(path, text).map_err(StudioError::io(format!("write {}", path.display())))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn problem(cfg: &StudyConfig, v: f64, dm: &[f64]) -> Result<FarmProblem, StudioError> {
    let t = cfg.turbine_model()?;
    FarmProblem::new(t, cfg.wake, v, dm.to_vec())
        .map(|p| p.with_reference(cfg.farm.reference).with_options(cfg.solver.options(cfg.seed)))
        .map_err(|e| StudioError::Failed(e.to_string()))
}

/// Solves each case at the configured free wind speed.
pub fn optimize_cases(cfg: &StudyConfig, cases: &[SweepCase]) -> Vec<Result<FarmSolution, StudioError>> {
    par_map(cases, |c| {
        problem(cfg, cfg.farm.v_free_mps, &c.dm)
            .and_then(|p| solve_farm(&p).map_err(|e| StudioError::Failed(e.to_string())))
    })
}

pub fn cmd_optimize(cfg: &StudyConfig, cases: &[SweepCase], out: &Path) -> Result<Report, StudioError> {
    ensure_dir(out)?;
    let results = optimize_cases(cfg, cases);
    let mut report = Report::default();
    let mut rows = Vec::new();
    let mut s = format!("optimize: v_free = {} m/s, seed {}\n\n", cfg.farm.v_free_mps, cfg.seed);
    let _ = writeln!(s, "{:<8} {:>4} {:>9} {:>9} {:>10} {:>12}", "case", "wt", "omega_pu", "beta_deg", "v_in_mps", "p_mech_mw");
    for (case, res) in cases.iter().zip(&results) {
        match res {
            Ok(sol) => {
                report.succeeded += 1;
                rows.extend(solution_rows(&case.id, sol));
                for (i, op) in sol.turbines.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{:<8} {:>4} {:>9.4} {:>9.3} {:>10.3} {:>12.4}",
                        case.id,
                        i + 1,
                        op.omega_pu,
                        op.beta_deg,
                        op.v_mps,
                        op.p_mech_w / 1e6
                    );
                }
                let _ = writeln!(
                    s,
                    "{:<8} total: E_k = {:.4} pu s, P = {:.4} MW, {} evaluations\n",
                    case.id,
                    sol.total_kinetic_pus,
                    sol.total_power_w / 1e6,
                    sol.diagnostics.evaluations
                );
            }
            Err(e) => {
                rows.push(failed_row(&case.id, cfg.farm.v_free_mps, &e.to_string()));
                report.failures.push(format!("case {}: {e}", case.id));
                let _ = writeln!(s, "{:<8} FAILED: {e}\n", case.id);
            }
        }
    }
    if cfg.output.wants(OutputFormat::Csv) {
        let path = out.join("optimize.csv");
        save_records(&path, &rows)?;
        report.files.push(path);
    }
    if cfg.output.wants(OutputFormat::MetricsSummary) {
        write_text(&out.join("summary.txt"), &s, &mut report.files)?;
    }
    report.summary = s;
    Ok(report)
}

/// Solution table of the full (case, v) grid, cases outermost.
pub fn sweep_rows(cfg: &StudyConfig, cases: &[SweepCase]) -> Result<Vec<SolutionRow>, StudioError> {
    let t = cfg.turbine_model()?;
    let opts = cfg.solver.options(cfg.seed);
    let cells: Vec<(&SweepCase, f64)> = cases
        .iter()
        .flat_map(|c| cfg.farm.sweep.values().into_iter().map(move |v| (c, v)))
        .collect();
    let solved = par_map(&cells, |(case, v)| {
        farmopt::sweep(&[*v], std::slice::from_ref(*case), &t, &cfg.wake, cfg.farm.reference, &opts)
            .pop()
            .expect("one cell per call")
    });
    Ok(solved
        .into_iter()
        .flat_map(|cell| match &cell.outcome {
            Ok(sol) => solution_rows(&cell.case_id, sol),
            Err(e) => vec![failed_row(&cell.case_id, cell.v_free_mps, &e.to_string())],
        })
        .collect())
}

pub fn cmd_sweep(cfg: &StudyConfig, cases: &[SweepCase], out: &Path) -> Result<Report, StudioError> {
    ensure_dir(out)?;
    let rows = sweep_rows(cfg, cases)?;
    let mut report = Report::default();
    let totals: Vec<&SolutionRow> = rows.iter().filter(|r| r.is_total()).collect();
    for r in &totals {
        if r.error.is_empty() {
            report.succeeded += 1;
        } else {
            report.failures.push(format!("case {} at {} m/s: {}", r.case_id, r.v_free_mps, r.error));
        }
    }

    let mut s = format!("sweep: {} cases x {} wind speeds, seed {}\n\n", cases.len(), cfg.farm.sweep.values().len(), cfg.seed);
    let _ = write!(s, "{:>7}", "v_mps");
    for c in cases {
        let _ = write!(s, " {:>12} {:>10}", format!("E_k[{}]", c.id), format!("P_MW[{}]", c.id));
    }
    s.push('\n');
    for v in cfg.farm.sweep.values() {
        let _ = write!(s, "{v:>7.2}");
        for c in cases {
            match totals.iter().find(|r| r.case_id == c.id && r.v_free_mps == v) {
                Some(r) if r.error.is_empty() => {
                    let _ = write!(
                        s,
                        " {:>12.4} {:>10.4}",
                        r.e_kin_pus.unwrap_or(f64::NAN),
                        r.p_mech_w.unwrap_or(f64::NAN) / 1e6
                    );
                }
                _ => {
                    let _ = write!(s, " {:>12} {:>10}", "failed", "-");
                }
            }
        }
        s.push('\n');
    }
    for f in &report.failures {
        let _ = writeln!(s, "FAILED {f}");
    }

    if cfg.output.wants(OutputFormat::Csv) {
        let path = out.join("sweep.csv");
        save_records(&path, &rows)?;
        report.files.push(path);
    }
    if cfg.output.wants(OutputFormat::SvgPlot) {
        for (stem, chart) in sweep_charts(&rows) {
            write_text(&out.join(format!("{stem}.svg")), &chart.render(), &mut report.files)?;
        }
    }
    if cfg.output.wants(OutputFormat::MetricsSummary) {
        write_text(&out.join("summary.txt"), &s, &mut report.files)?;
    }
    report.summary = s;
    Ok(report)
}

fn sync_gens(cfg: &StudyConfig) -> Vec<SyncGen> {
    cfg.grid
        .generators
        .iter()
        .map(|g| SyncGen {
            name: g.name.clone(),
            kind: match g.kind {
                GenKindConfig::Steam => GenKind::Steam,
                GenKindConfig::Gas => GenKind::Gas,
            },
            p_out_mw: g.p_out_mw,
            p_max_mw: g.p_max_mw,
            governor: match g.governor {
                GovernorKind::Tgov1 => GovernorParams::Tgov1(cfg.grid.tgov1),
                GovernorKind::Ieeeg1 => GovernorParams::Ieeeg1(cfg.grid.ieeeg1),
            },
            droop_frac: g.droop_frac,
            inertia_s: g.inertia(),
            rating_mva: g.rating(),
            online: g.online,
        })
        .collect()
}

/// Grid scenario of one case: the wind farm starts at the case's de-loaded
/// optimum and releases toward the all-MPPT row on a wind-mode event.
pub fn build_scenario(cfg: &StudyConfig, case: &SweepCase) -> Result<GridScenario, StudioError> {
    let failed = |e: wakereserve_core::Error| StudioError::Failed(format!("case {}: {e}", case.id));
    let t = cfg.turbine_model()?;
    let v = cfg.farm.v_free_mps;
    let sub = solve_farm(&problem(cfg, v, &case.dm)?).map_err(failed)?;
    let opt = base_case(&t, &cfg.wake, v, cfg.farm.n).map_err(failed)?;
    let row = WindRow::new(t, cfg.wake, sub, opt, cfg.wind_control).map_err(failed)?;
    let g = &cfg.grid;
    let mut sc = GridScenario {
        f_nominal_hz: g.f_nominal_hz,
        s_base_mva: g.s_base_mva,
        load_mw: g.load_mw,
        load_damping: g.load_damping,
        gens: sync_gens(cfg),
        wind: Some(row),
        events: g
            .events
            .iter()
            .map(|e| Event {
                t_s: e.t_s(),
                kind: match e {
                    EventConfig::TripGenerator { generator, .. } => EventKind::TripGenerator(generator.clone()),
                    EventConfig::SwitchWindMode { .. } => EventKind::SwitchWindMode,
                },
            })
            .collect(),
        t_end_s: g.t_end_s,
        dt_s: g.dt_s,
    };
    if !g.balance_generator.is_empty() {
        sc.rebalance(&g.balance_generator).map_err(|e| StudioError::Failed(format!(
            "case {}: cannot balance the initial dispatch with {}: {e}",
            case.id, g.balance_generator
        )))?;
    }
    Ok(sc)
}

/// Simulated trace of one case.
#[derive(Debug)]
pub struct CaseRun {
    pub case_id: String,
    pub outcome: Result<SimTrace, StudioError>,
}

/// Simulates each case; nadir delays are measured against the reference
/// case when it is among them.
pub fn simulate_cases(cfg: &StudyConfig, cases: &[SweepCase]) -> Vec<CaseRun> {
    let mut runs: Vec<CaseRun> = par_map(cases, |c| CaseRun {
        case_id: c.id.clone(),
        outcome: build_scenario(cfg, c).and_then(|sc| {
            simulate(&sc).map_err(|e| StudioError::Failed(format!("case {}: {e}", c.id)))
        }),
    });
    let reference_id = cfg.reference_case();
    let reference = runs
        .iter()
        .find(|r| Some(&r.case_id) == reference_id.as_ref())
        .and_then(|r| r.outcome.as_ref().ok())
        .cloned();
    for r in &mut runs {
        let is_ref = Some(&r.case_id) == reference_id.as_ref();
        if let Ok(tr) = &mut r.outcome {
            tr.metrics = nadir_metrics(tr, if is_ref { None } else { reference.as_ref() });
        }
    }
    runs
}

pub fn cmd_simulate(cfg: &StudyConfig, cases: &[SweepCase], out: &Path) -> Result<Report, StudioError> {
    ensure_dir(out)?;
    let runs = simulate_cases(cfg, cases);
    let mut report = Report::default();
    let mut metrics = Vec::new();
    let mut tables = Vec::new();
    for r in &runs {
        match &r.outcome {
            Ok(tr) => {
                report.succeeded += 1;
                metrics.push(MetricsRow::from_trace(&r.case_id, tr, &tr.metrics));
                tables.push((r.case_id.clone(), TraceTable::from_trace(tr)));
            }
            Err(e) => {
                report.failures.push(e.to_string());
                metrics.push(MetricsRow::failed(&r.case_id, &e.to_string()));
            }
        }
    }

    let reference = cfg.reference_case().unwrap_or_else(|| "-".into());
    let mut s = format!(
        "simulate: v_free = {} m/s, dt = {} s, seed {}, delay reference: case {reference}\n\n",
        cfg.farm.v_free_mps, cfg.grid.dt_s, cfg.seed
    );
    let _ = writeln!(
        s,
        "{:<8} {:>10} {:>12} {:>9} {:>10} {:>10} {:>12}",
        "case", "nadir_hz", "nadir_time_s", "delay_s", "f_max_hz", "f_end_hz", "residual_pu"
    );
    let opt = |x: Option<f64>, p: usize| x.map_or_else(|| "-".to_string(), |v| format!("{v:.p$}"));
    for m in &metrics {
        if m.error.is_empty() {
            let _ = writeln!(
                s,
                "{:<8} {:>10} {:>12} {:>9} {:>10} {:>10} {:>12}",
                m.case_id,
                opt(m.nadir_hz, 4),
                opt(m.nadir_time_s, 2),
                opt(m.delay_s, 2),
                opt(m.f_max_hz, 4),
                opt(m.f_end_hz, 4),
                m.max_balance_residual_pu.map_or_else(|| "-".into(), |v| format!("{v:.2e}")),
            );
        } else {
            let _ = writeln!(s, "{:<8} FAILED: {}", m.case_id, m.error);
        }
    }

    if cfg.output.wants(OutputFormat::Csv) {
        for (id, t) in &tables {
            let path = out.join(format!("trace_{}.csv", file_safe(id)));
            t.save(&path)?;
            report.files.push(path);
        }
        let path = out.join("metrics.csv");
        save_records(&path, &metrics)?;
        report.files.push(path);
    }
    if cfg.output.wants(OutputFormat::SvgPlot) && !tables.is_empty() {
        write_text(
            &out.join("frequency.svg"),
            &frequency_chart(&tables, cfg.grid.f_nominal_hz).render(),
            &mut report.files,
        )?;
        for (id, t) in &tables {
            write_text(
                &out.join(format!("rotor_speed_{}.svg", file_safe(id))),
                &rotor_speed_chart(id, t).render(),
                &mut report.files,
            )?;
        }
    }
    if cfg.output.wants(OutputFormat::MetricsSummary) {
        write_text(&out.join("summary.txt"), &s, &mut report.files)?;
    }
    report.summary = s;
    Ok(report)
}
