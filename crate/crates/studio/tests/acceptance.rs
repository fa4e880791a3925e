//! Acceptance run over the bundled study. Prints one PASS/FAIL line per
//! criterion and exits nonzero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use wakereserve_core::aero::{cp_from_ct, ct_from_cp, Turbine, CT_MAX};
use wakereserve_core::farmopt::{deload_curve, solve_farm, FarmProblem};
use wakereserve_core::gridsim::{simulate, wt_step, SimTrace, WtMode, WtState};
use wakereserve_core::wake::{next_wind, WakeParams};
use wakereserve_studio::run::{build_scenario, simulate_cases, sweep_rows};
use wakereserve_studio::tables::SolutionRow;
use wakereserve_studio::StudyConfig;

const INVERSION_TOL: f64 = 1e-10;
const INVERSION_POINTS: usize = 1000;
const WAKE_TOL: f64 = 1e-12;
const WAKE_ROW: usize = 20;
const ORACLE_POINTS: usize = 400;
const ORACLE_REL_TOL: f64 = 0.005;
const SATURATED_KE_REL_TOL: f64 = 0.001;
const OMEGA_MAX_TOL: f64 = 1e-6;
const POWER_SPREAD_REL_TOL: f64 = 0.03;
const NADIR_AFTER_TRIP_S: (f64, f64) = (3.0, 10.0);
const NADIR_BELOW_HZ: f64 = 49.9;
const MIN_DELAY_S: f64 = 15.0;
const BALANCE_RESIDUAL_PU: f64 = 1e-6;
const RELEASE_AUDIT_REL_TOL: f64 = 0.01;
const DT_HALVING_NADIR_HZ: f64 = 1e-3;

const LIMIT_INVERSION: Duration = Duration::from_secs(1);
const LIMIT_WAKE: Duration = Duration::from_secs(1);
const LIMIT_ORACLE: Duration = Duration::from_secs(30);
const LIMIT_SWEEP: Duration = Duration::from_secs(60);
const LIMIT_SIMULATION: Duration = Duration::from_secs(10);

/// Outcome of one criterion: sub-check failures, plus notes that are shown either way.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn require(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn within(&mut self, started: Instant, limit: Duration, what: &str) {
        let el = started.elapsed();
        self.note(format!("{what} {:.2} s", el.as_secs_f64()));
        self.require(el < limit, format!("{what} took {:.2} s, limit {} s", el.as_secs_f64(), limit.as_secs()));
    }
}

fn study_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/study.toml")
}

fn study() -> StudyConfig {
    StudyConfig::load(&study_path()).expect("bundled config loads")
}

fn criterion_1() -> Check {
    let mut c = Check::default();
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..INVERSION_POINTS {
        let ct = CT_MAX * k as f64 / (INVERSION_POINTS - 1) as f64;
        let back = cp_from_ct(ct).and_then(ct_from_cp);
        match back {
            Ok(b) => worst = worst.max((b - ct).abs()),
            Err(e) => c.require(false, format!("ct = {ct}: {e}")),
        }
    }
    c.within(started, LIMIT_INVERSION, "runtime");
    c.note(format!("max |error| {worst:.2e}"));
    c.require(worst <= INVERSION_TOL, format!("max inversion error {worst:.3e} > {INVERSION_TOL:e}"));
    c
}

fn criterion_2() -> Check {
    let mut c = Check::default();
    let started = Instant::now();
    let wp = WakeParams { k_prime: 0.35, k: 0.1 };
    let v2 = next_wind(8.0, 8.0, 0.8, &wp).unwrap();
    c.require((v2 - 7.36).abs() <= WAKE_TOL, format!("v2 = {v2}, expected 7.36"));
    let v3 = next_wind(8.0, 7.36, 0.8, &wp).unwrap();
    c.require((v3 - 6.944).abs() <= WAKE_TOL, format!("v3 = {v3}, expected 6.944"));
    let ct = 0.8;
    let fixed = 8.0 * (wp.k_prime - wp.k * ct) / wp.k_prime;
    c.require(
        (wp.fixed_point(8.0, ct) - fixed).abs() <= WAKE_TOL,
        "fixed_point disagrees with v1(k' - k Ct)/k'",
    );
    let stay = next_wind(8.0, fixed, ct, &wp).unwrap();
    c.require((stay - fixed).abs() <= WAKE_TOL, format!("fixed point moves to {stay}"));

    // 20-turbine row at constant thrust: the gap to the fixed point shrinks
    // by exactly (1 - k') per turbine
    let mut v = 8.0;
    let mut gaps = vec![v - fixed];
    for _ in 1..WAKE_ROW {
        let next = next_wind(8.0, v, ct, &wp).unwrap();
        c.require(next < v, format!("inflow not decreasing at {v}"));
        v = next;
        gaps.push(v - fixed);
    }
    for w in gaps.windows(2) {
        c.require(
            (w[1] - (1.0 - wp.k_prime) * w[0]).abs() <= 1e-9,
            format!("contraction {} / {}", w[1], w[0]),
        );
    }
    c.require(gaps.iter().all(|&g| g >= -WAKE_TOL), "row undershoots the fixed point");
    c.note(format!("v20 - v* = {:.2e}", gaps[WAKE_ROW - 1]));
    c.within(started, LIMIT_WAKE, "runtime");
    c
}

fn criterion_3() -> Check {
    let mut c = Check::default();
    let started = Instant::now();
    let cfg = study();
    let t = Turbine::new(cfg.turbine).unwrap();
    let wp = cfg.wake;
    let w_max = t.params().omega_max_pu;
    let mut worst: f64 = 0.0;
    for v in [7.0, 8.0, 9.0] {
        for dm in [0.05, 0.10] {
            let p = FarmProblem::new(t.clone(), wp, v, vec![dm, 0.0])
                .unwrap()
                .with_options(cfg.solver.options(cfg.seed));
            let sol = match solve_farm(&p) {
                Ok(s) => s,
                Err(e) => {
                    c.require(false, format!("v={v} dm={dm}: {e}"));
                    continue;
                }
            };
            // brute force over turbine 1's speed
            let w_opt = t.mppt(v).unwrap().omega_pu;
            let mut best = f64::NEG_INFINITY;
            for k in 0..ORACLE_POINTS {
                let w = w_opt + (w_max - w_opt) * k as f64 / (ORACLE_POINTS - 1) as f64;
                let Ok(beta) = deload_curve(&t, v, dm, w) else { continue };
                let op1 = t.operating_point(v, w, beta).unwrap();
                let Ok(v2) = next_wind(v, v, op1.ct, &wp) else { continue };
                let op2 = t.mppt(v2).unwrap();
                best = best.max(op1.e_kin_pus + op2.e_kin_pus);
            }
            let rel = (sol.total_kinetic_pus - best).abs() / best;
            worst = worst.max(rel);
            c.require(
                rel <= ORACLE_REL_TOL,
                format!("v={v} dm={dm}: solver {:.5} vs oracle {best:.5}", sol.total_kinetic_pus),
            );
        }
    }
    c.note(format!("max rel gap {:.2e}", worst));
    c.within(started, LIMIT_ORACLE, "runtime");
    c
}

fn total<'a>(rows: &'a [SolutionRow], case: &str, v: f64) -> Option<&'a SolutionRow> {
    rows.iter()
        .find(|r| r.case_id == case && r.v_free_mps == v && r.is_total() && r.error.is_empty())
}

fn criterion_4() -> Check {
    let mut c = Check::default();
    let cfg = study();
    let cases = cfg.cases();
    let started = Instant::now();
    let rows = sweep_rows(&cfg, &cases).expect("sweep runs");
    c.within(started, LIMIT_SWEEP, "sweep");
    let v_all = cfg.farm.sweep.values();
    c.require(
        rows.iter().filter(|r| r.is_total()).count() == 3 * v_all.len(),
        "expected one totals row per case and wind speed",
    );
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        c.require(false, format!("case {} v={}: {}", r.case_id, r.v_free_mps, r.error));
    }
    let ek = |case: &str, v: f64| total(&rows, case, v).and_then(|r| r.e_kin_pus).unwrap_or(f64::NAN);

    // (a) stored energy ordered by margin up to 9.5 m/s
    let mut strict = false;
    for &v in v_all.iter().filter(|&&v| v <= 9.5) {
        let (e0, e5, e10) = (ek("I", v), ek("II", v), ek("III", v));
        c.require(e10 >= e5 - 1e-9 && e5 >= e0 - 1e-9, format!("(a) v={v}: E_k {e0:.4} / {e5:.4} / {e10:.4}"));
        strict |= e10 > e5 + 1e-9 || e5 > e0 + 1e-9;
    }
    c.require(strict, "(a) no strict increase with margin");

    // (b) saturation from 9.5 m/s on
    let w_max = cfg.turbine.omega_max_pu;
    for &v in v_all.iter().filter(|&&v| v >= 9.5) {
        for case in &cases[1..] {
            for r in rows.iter().filter(|r| r.case_id == case.id && r.v_free_mps == v) {
                let (Some(i), Some(w)) = (r.turbine_index(), r.omega_pu) else { continue };
                if case.dm[i - 1] > 0.0 {
                    c.require(
                        (w - w_max).abs() <= OMEGA_MAX_TOL,
                        format!("(b) v={v} case {} WT{i}: omega {w:.4} < omega_max", case.id),
                    );
                }
            }
        }
        let (e5, e10) = (ek("II", v), ek("III", v));
        let rel = (e10 - e5).abs() / e5;
        c.require(
            rel <= SATURATED_KE_REL_TOL,
            format!("(b) v={v}: E_k(10%) {e10:.4} vs E_k(5%) {e5:.4}, {:.2}% apart", 100.0 * rel),
        );
    }

    // (c) power nearly case-independent at 8 m/s
    let p: Vec<f64> = ["I", "II", "III"]
        .iter()
        .map(|id| total(&rows, id, 8.0).and_then(|r| r.p_mech_w).unwrap_or(f64::NAN))
        .collect();
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (hi - lo) / hi;
    c.note(format!("P(8 m/s) spread {:.2}%", 100.0 * spread));
    c.require(
        spread <= POWER_SPREAD_REL_TOL,
        format!("(c) P at 8 m/s {:.3} / {:.3} / {:.3} MW, spread {:.2}%", p[0] / 1e6, p[1] / 1e6, p[2] / 1e6, 100.0 * spread),
    );
    c
}

/// Simulated traces of the bundled cases in config order.
fn bundled_runs(c: &mut Check) -> Vec<(String, SimTrace)> {
    let cfg = study();
    let cases = cfg.cases();
    let mut out = Vec::new();
    for case in &cases {
        let started = Instant::now();
        let run = simulate_cases(&cfg, std::slice::from_ref(case)).pop().unwrap();
        c.within(started, LIMIT_SIMULATION, &format!("case {}", case.id));
        match run.outcome {
            Ok(tr) => out.push((case.id.clone(), tr)),
            Err(e) => c.require(false, format!("case {}: {e}", case.id)),
        }
    }
    // delays against case I
    let reference = out.iter().find(|(id, _)| id == "I").map(|(_, t)| t.clone());
    for (id, tr) in &mut out {
        let r = if id == "I" { None } else { reference.as_ref() };
        tr.metrics = wakereserve_core::gridsim::nadir_metrics(tr, r);
    }
    out
}

fn criterion_5(runs: &[(String, SimTrace)]) -> Check {
    let mut c = Check::default();
    let get = |id: &str| runs.iter().find(|(i, _)| i == id).map(|(_, t)| t);
    let (Some(t1), Some(t2), Some(t3)) = (get("I"), get("II"), get("III")) else {
        c.require(false, "cases I, II and III must all simulate");
        return c;
    };
    let trip = t1.first_event_s().unwrap_or(f64::NAN);
    let m1 = t1.metrics;
    let (n1, tn1) = (m1.nadir_hz.unwrap_or(f64::NAN), m1.nadir_time_s.unwrap_or(f64::NAN));
    let after = tn1 - trip;
    c.note(format!("I nadir {n1:.3} Hz at +{after:.2} s"));
    c.require(
        (NADIR_AFTER_TRIP_S.0..=NADIR_AFTER_TRIP_S.1).contains(&after),
        format!("(a) case I nadir {after:.2} s after the trip"),
    );
    c.require(n1 < NADIR_BELOW_HZ, format!("(a) case I nadir {n1:.3} Hz"));

    let tn2 = t2.metrics.nadir_time_s.unwrap_or(f64::NAN);
    let tn3 = t3.metrics.nadir_time_s.unwrap_or(f64::NAN);
    let d3 = t3.metrics.delay_s.unwrap_or(f64::NAN);
    c.note(format!("nadir times {tn1:.2} / {tn2:.2} / {tn3:.2} s, III delay {d3:.2} s"));
    c.require(tn3 >= tn2 && tn2 > tn1, format!("(b) nadir times {tn1:.2} / {tn2:.2} / {tn3:.2} s not ordered"));
    c.require(d3 >= MIN_DELAY_S, format!("(b) case III delay {d3:.2} s < {MIN_DELAY_S} s"));

    for (id, tr) in [("II", t2), ("III", t3)] {
        let f_nom = 50.0;
        let peak = tr
            .t_s
            .iter()
            .zip(&tr.f_hz)
            .filter(|(&t, _)| t >= trip)
            .map(|(_, &f)| f)
            .fold(f64::NEG_INFINITY, f64::max);
        c.note(format!("{id} peak {peak:.3} Hz"));
        c.require(peak > f_nom, format!("(c) case {id} never rises above {f_nom} Hz"));
    }

    for (id, tr) in runs {
        let Some(last) = tr.omega_pu.last() else { continue };
        let w0 = last[0];
        let drift = last.iter().map(|w| (w - w0).abs()).fold(0.0, f64::max);
        c.require(drift == 0.0, format!("(d) case {id}: last turbine speed drifts by {drift:.2e} pu"));
    }
    c
}

fn criterion_6(runs: &[(String, SimTrace)]) -> Check {
    let mut c = Check::default();
    for (id, tr) in runs {
        c.require(
            tr.max_balance_residual_pu < BALANCE_RESIDUAL_PU,
            format!("case {id}: balance residual {:.2e} pu", tr.max_balance_residual_pu),
        );
    }
    c.note(format!(
        "max residual {:.1e} pu",
        runs.iter().map(|(_, t)| t.max_balance_residual_pu).fold(0.0, f64::max)
    ));

    // release audit on the most de-loaded row at constant frequency
    let cfg = study();
    let case = cfg.cases().into_iter().last().unwrap();
    let row = build_scenario(&cfg, &case).unwrap().wind.unwrap();
    let dt = cfg.grid.dt_s;
    let mut s = WtState {
        mode: WtMode::Optimal { since_s: 0.0 },
        ..row.initial_state()
    };
    let surplus_w = |s: &WtState, t: f64| {
        let p = row.power(s, t, 0.0).unwrap();
        p.p_elec_w.iter().zip(&p.p_aero_w).map(|(e, a)| e - a).sum::<f64>()
    };
    let mut prev = surplus_w(&s, 0.0);
    let mut exported = 0.0;
    let steps = (cfg.grid.t_end_s / dt).round() as usize;
    for k in 0..steps {
        let t = k as f64 * dt;
        s = wt_step(&s, 0.0, &row, t, dt).unwrap().0;
        let d = surplus_w(&s, t + dt);
        exported += 0.5 * (prev + d) * dt;
        prev = d;
    }
    let stored = row.releasable_energy_j();
    let rel = (exported - stored).abs() / stored;
    c.note(format!("release audit {:.3} MJ vs {:.3} MJ", exported / 1e6, stored / 1e6));
    c.require(rel <= RELEASE_AUDIT_REL_TOL, format!("release audit off by {:.2}%", 100.0 * rel));

    // integration convergence
    let mut worst: f64 = 0.0;
    for case in cfg.cases() {
        let mut sc = build_scenario(&cfg, &case).unwrap();
        let coarse = simulate(&sc).map(|t| t.metrics.nadir_hz);
        sc.dt_s = 0.5 * cfg.grid.dt_s;
        let fine = simulate(&sc).map(|t| t.metrics.nadir_hz);
        match (coarse, fine) {
            (Ok(Some(a)), Ok(Some(b))) => {
                worst = worst.max((a - b).abs());
                c.require(
                    (a - b).abs() < DT_HALVING_NADIR_HZ,
                    format!("case {}: halving dt moves the nadir by {:.2e} Hz", case.id, (a - b).abs()),
                );
            }
            other => c.require(false, format!("case {}: no nadir to compare ({other:?})", case.id)),
        }
    }
    c.note(format!("dt halving moves nadir {worst:.1e} Hz"));
    c
}

fn run_cli(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_wakereserve"))
        .args(args)
        .arg("--config")
        .arg(study_path())
        .arg("--out")
        .arg(out)
        .args(["--seed", "11"])
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)))
    }
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.path()).collect())
        .unwrap_or_else(|_| Vec::new());
    files.retain(|p: &PathBuf| p.extension().is_some_and(|x| x == "csv"));
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn criterion_7() -> Check {
    let mut c = Check::default();
    let base = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let _ = std::fs::remove_dir_all(&base);
    for cmd in ["sweep", "simulate"] {
        let (a, b) = (base.join(format!("{cmd}-a")), base.join(format!("{cmd}-b")));
        for dir in [&a, &b] {
            if let Err(e) = run_cli(&[cmd], dir) {
                c.require(false, e);
            }
        }
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        c.require(!fa.is_empty(), format!("{cmd} wrote no CSV"));
        c.require(fa == fb, format!("{cmd} CSVs differ between runs"));
        c.note(format!("{cmd}: {} identical CSVs", fa.len()));
    }
    c
}

fn main() {
    let titles = [
        "power/thrust coefficient inversion",
        "wake arithmetic and fixed point",
        "optimizer vs grid oracle",
        "sweep shape",
        "frequency experiment",
        "conservation audits",
        "determinism",
    ];
    let mut checks = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4()];
    let mut sim_check = Check::default();
    let runs = bundled_runs(&mut sim_check);
    let mut c5 = criterion_5(&runs);
    c5.failures.extend(sim_check.failures);
    c5.notes.extend(sim_check.notes);
    checks.push(c5);
    checks.push(criterion_6(&runs));
    checks.push(criterion_7());

    let mut failed = 0;
    for (i, (c, title)) in checks.iter().zip(titles).enumerate() {
        let verdict = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {title} [{}]", i + 1, c.notes.join("; "));
        for f in &c.failures {
            println!("    {f}");
        }
        failed += usize::from(!c.failures.is_empty());
    }
    println!("acceptance: {} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
