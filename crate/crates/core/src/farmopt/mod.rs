//! Row-level maximization of stored rotor energy under de-loading.
//!
//! For a row of identical turbines with per-turbine margins `dm[i]` the
//! problem is
//!
//! ```text
//! maximize   Σ H·ω_i²
//! subject to P_i = (1 − dm_i)·P_i^opt          (turbines with dm_i > 0)
//!            ω_i^opt ≤ ω_i ≤ ω_max,  0 ≤ β_i ≤ β_max,  P_i ≤ P_rated
//!            inflows given by the row wake cascade
//! ```
//!
//! Pitch is eliminated along the power equality by [`deload_curve`], leaving
//! one rotor speed per de-loaded turbine as the search variable. Turbines
//! with zero margin run MPPT at their own inflow.

mod search;

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use search::{pattern_search, Evaluation, PollOrder, SearchDiagnostics, SearchOptions, SearchResult};

use crate::aero::{OperatingPoint, Turbine};
use crate::deload::{check_margin, deload_overspeed};
use crate::wake::{next_wind, WakeParams};
use crate::{Error, Result};

/// Which MPPT power a de-loaded turbine's margin is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum OptReference {
    /// MPPT power at the turbine's inflow in the evaluated configuration.
    #[default]
    CurrentInflow,
    /// MPPT power at the turbine's inflow when the whole row runs MPPT.
    BaseCaseInflow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub search: SearchOptions,
    /// Number of starting points; the first three are deterministic.
    pub multistart: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            multistart: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarmProblem {
    pub turbine: Turbine,
    pub wake: WakeParams,
    pub v_free_mps: f64,
    pub dm: Vec<f64>,
    pub reference: OptReference,
    pub options: SolverOptions,
}

impl FarmProblem {
    /// Validates the instance. The last turbine must carry zero margin.
    pub fn new(turbine: Turbine, wake: WakeParams, v_free_mps: f64, dm: Vec<f64>) -> Result<Self> {
        if dm.last().copied() != Some(0.0) {
            return Err(Error::InvalidParams("last turbine must not be de-loaded (dm[n-1] = 0)"));
        }
        Self::unchecked_tail(turbine, wake, v_free_mps, dm)
    }

    fn unchecked_tail(turbine: Turbine, wake: WakeParams, v_free_mps: f64, dm: Vec<f64>) -> Result<Self> {
        if dm.is_empty() {
            return Err(Error::InvalidParams("row needs at least one turbine"));
        }
        for &m in &dm {
            check_margin(m)?;
        }
        wake.validate()?;
        let p = turbine.params();
        if !(p.v_cutin_mps..=p.v_cutout_mps).contains(&v_free_mps) {
            return Err(Error::Domain { what: "free wind speed", value: v_free_mps });
        }
        Ok(Self {
            turbine,
            wake,
            v_free_mps,
            dm,
            reference: OptReference::default(),
            options: SolverOptions::default(),
        })
    }

    pub fn with_reference(mut self, reference: OptReference) -> Self {
        self.reference = reference;
        self
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn n(&self) -> usize {
        self.dm.len()
    }

    /// Indices of turbines whose rotor speed is a search variable.
    fn free_turbines(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.dm[i] > 0.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveDiagnostics {
    pub starts: usize,
    pub iterations: usize,
    pub evaluations: usize,
    /// Mesh size at termination of the winning start.
    pub final_mesh: f64,
    pub budget_exhausted: bool,
    /// Largest relative error of the de-loading power equality.
    pub max_power_residual: f64,
    /// Objective of the best starting point, for comparison.
    pub best_start_kinetic_pus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarmSolution {
    pub v_free_mps: f64,
    pub dm: Vec<f64>,
    pub turbines: Vec<OperatingPoint>,
    pub total_kinetic_pus: f64,
    pub total_power_w: f64,
    pub diagnostics: SolveDiagnostics,
}

impl FarmSolution {
    fn from_points(v_free_mps: f64, dm: Vec<f64>, turbines: Vec<OperatingPoint>) -> Self {
        let total_kinetic_pus = turbines.iter().map(|op| op.e_kin_pus).sum();
        let total_power_w = turbines.iter().map(|op| op.p_mech_w).sum();
        Self {
            v_free_mps,
            dm,
            turbines,
            total_kinetic_pus,
            total_power_w,
            diagnostics: SolveDiagnostics::default(),
        }
    }

    pub fn n(&self) -> usize {
        self.turbines.len()
    }
}

/// The whole row at MPPT, each turbine at its own wake-reduced inflow.
pub fn base_case(turbine: &Turbine, wake: &WakeParams, v_free_mps: f64, n: usize) -> Result<FarmSolution> {
    if n == 0 {
        return Err(Error::InvalidParams("row needs at least one turbine"));
    }
    let mut points = Vec::with_capacity(n);
    let mut v = v_free_mps;
    for i in 0..n {
        let op = turbine.mppt(v)?;
        points.push(op);
        if i + 1 < n {
            v = advance(v_free_mps, v, op.ct, wake, i + 1)?;
        }
    }
    Ok(FarmSolution::from_points(v_free_mps, alloc::vec![0.0; n], points))
}

fn advance(v_free: f64, v: f64, ct: f64, wake: &WakeParams, next: usize) -> Result<f64> {
    next_wind(v_free, v, ct, wake).map_err(|e| match e {
        Error::DegenerateWake { v_mps, .. } => Error::DegenerateWake { turbine: next, v_mps },
        other => other,
    })
}

/// Smallest pitch putting the turbine on the de-loaded power manifold
/// `P(ω, β, v) = (1 − dm)·P_opt(v)` at rotor speed `omega_pu`.
pub fn deload_curve(turbine: &Turbine, v_inflow_mps: f64, dm: f64, omega_pu: f64) -> Result<f64> {
    check_margin(dm)?;
    let opt = turbine.mppt(v_inflow_mps)?;
    if !(opt.omega_pu <= omega_pu && omega_pu <= turbine.params().omega_max_pu) {
        return Err(Error::Domain { what: "rotor speed outside [omega_opt, omega_max]", value: omega_pu });
    }
    if dm == 0.0 && omega_pu == opt.omega_pu {
        return Ok(opt.beta_deg);
    }
    turbine
        .pitch_for_power(v_inflow_mps, omega_pu, (1.0 - dm) * opt.p_mech_w)
        .map_err(|_| Error::InfeasibleMargin { dm, v_mps: v_inflow_mps })
}

/// Cascade evaluation of one candidate vector of free rotor speeds.
struct RowEval {
    points: Vec<OperatingPoint>,
    violation: f64,
    power_residual: f64,
}

struct Evaluator<'a> {
    problem: &'a FarmProblem,
    free: Vec<usize>,
    /// MPPT powers at base-case inflows, used by [`OptReference::BaseCaseInflow`].
    base_power: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a FarmProblem) -> Result<Self> {
        let base = base_case(&problem.turbine, &problem.wake, problem.v_free_mps, problem.n())?;
        Ok(Self {
            problem,
            free: problem.free_turbines(),
            base_power: base.turbines.iter().map(|op| op.p_mech_w).collect(),
        })
    }

    /// Walks the row, choosing each free turbine's speed with `pick(k, v, ω_opt)`
    /// where `k` indexes the free turbines.
    fn cascade<P>(&self, mut pick: P) -> Result<RowEval>
    where
        P: FnMut(usize, f64, &OperatingPoint) -> f64,
    {
        let pr = self.problem;
        let t = &pr.turbine;
        let rated = t.params().rated_power_w;
        let mut points = Vec::with_capacity(pr.n());
        let mut violation = 0.0;
        let mut power_residual: f64 = 0.0;
        let mut v = pr.v_free_mps;
        let mut k = 0;
        for i in 0..pr.n() {
            let opt = t.mppt(v)?;
            let op = if pr.dm[i] == 0.0 {
                opt
            } else {
                let omega = pick(k, v, &opt);
                k += 1;
                if omega < opt.omega_pu {
                    violation += (opt.omega_pu - omega) / opt.omega_pu;
                }
                let reference = match pr.reference {
                    OptReference::CurrentInflow => opt.p_mech_w,
                    OptReference::BaseCaseInflow => self.base_power[i],
                };
                let target = (1.0 - pr.dm[i]) * reference;
                let beta = match t.pitch_for_power(v, omega, target) {
                    Ok(b) => b,
                    Err(miss) => {
                        violation += ((target - miss.best_power_w) / target).max(0.0);
                        miss.best_beta_deg
                    }
                };
                let op = t.operating_point(v, omega, beta)?;
                power_residual = power_residual.max((op.p_mech_w - target).abs() / target);
                op
            };
            // the zone-4 pitch root can land a hair above rating
            if op.p_mech_w > rated * (1.0 + 1e-9) {
                violation += (op.p_mech_w - rated) / rated;
            }
            points.push(op);
            if i + 1 < pr.n() {
                v = advance(pr.v_free_mps, v, op.ct, &pr.wake, i + 1)?;
            }
        }
        Ok(RowEval {
            points,
            violation,
            power_residual,
        })
    }

    fn evaluate(&self, x: &[f64]) -> Result<RowEval> {
        self.cascade(|k, _, _| x[k])
    }

    fn objective(&self, x: &[f64]) -> Evaluation {
        match self.evaluate(x) {
            Ok(r) => Evaluation {
                value: r.points.iter().map(|op| op.e_kin_pus).sum(),
                violation: r.violation,
            },
            Err(_) => Evaluation {
                value: f64::NEG_INFINITY,
                violation: f64::INFINITY,
            },
        }
    }

    /// Starting points: MPPT speeds, zero-pitch overspeed, maximum speed,
    /// then seeded random points between MPPT and maximum speed.
    fn starts(&self) -> Result<Vec<Vec<f64>>> {
        let pr = self.problem;
        let t = &pr.turbine;
        let omega_max = t.params().omega_max_pu;
        let mut rng = ChaCha8Rng::seed_from_u64(pr.options.seed);
        let mut out = Vec::with_capacity(pr.options.multistart);
        for s in 0..pr.options.multistart.max(1) {
            let mut x = alloc::vec![0.0; self.free.len()];
            let free = &self.free;
            self.cascade(|k, v, opt| {
                let w = match s {
                    0 => opt.omega_pu,
                    1 => deload_overspeed(t, v, pr.dm[free[k]])
                        .map(|op| op.omega_pu)
                        .unwrap_or(omega_max),
                    2 => omega_max,
                    _ => opt.omega_pu + rng.gen::<f64>() * (omega_max - opt.omega_pu),
                };
                x[k] = w;
                w
            })?;
            out.push(x);
        }
        Ok(out)
    }
}

/// Maximizes total stored rotor energy of the row.
pub fn solve_farm(problem: &FarmProblem) -> Result<FarmSolution> {
    let ev = Evaluator::new(problem)?;
    let p = problem.turbine.params();
    if ev.free.is_empty() {
        let mut sol = base_case(&problem.turbine, &problem.wake, problem.v_free_mps, problem.n())?;
        sol.diagnostics.best_start_kinetic_pus = sol.total_kinetic_pus;
        return Ok(sol);
    }
    let dim = ev.free.len();
    let lower = alloc::vec![p.omega_min_pu; dim];
    let upper = alloc::vec![p.omega_max_pu; dim];

    let mut best: Option<(SearchResult, usize)> = None;
    let mut best_start = f64::NEG_INFINITY;
    let mut diag = SolveDiagnostics::default();
    for (s, x0) in ev.starts()?.into_iter().enumerate() {
        let e0 = ev.objective(&x0);
        if e0.is_feasible() {
            best_start = best_start.max(e0.value);
        }
        let r = pattern_search(|x| ev.objective(x), &x0, &lower, &upper, &problem.options.search)?;
        diag.starts += 1;
        diag.iterations += r.diagnostics.iterations;
        diag.evaluations += r.diagnostics.evaluations;
        if !r.eval.is_feasible() {
            continue;
        }
        let better = match &best {
            Some((b, _)) => r.eval.value > b.eval.value,
            None => true,
        };
        if better {
            best = Some((r, s));
        }
    }
    let (winner, _) = best.ok_or(Error::NoFeasiblePoint)?;
    let row = ev.evaluate(&winner.x)?;
    let mut sol = FarmSolution::from_points(problem.v_free_mps, problem.dm.clone(), row.points);
    diag.final_mesh = winner.diagnostics.final_mesh;
    diag.budget_exhausted = winner.diagnostics.budget_exhausted;
    diag.max_power_residual = row.power_residual;
    diag.best_start_kinetic_pus = best_start;
    sol.diagnostics = diag;
    Ok(sol)
}

/// Combined speed-and-pitch de-loading of a lone turbine.
pub fn solve_single(turbine: &Turbine, v_mps: f64, dm: f64, options: &SolverOptions) -> Result<OperatingPoint> {
    let problem = FarmProblem::unchecked_tail(turbine.clone(), WakeParams::default(), v_mps, alloc::vec![dm])?
        .with_options(*options);
    Ok(solve_farm(&problem)?.turbines[0])
}

/// One named margin vector of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCase {
    pub id: String,
    pub dm: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub case_id: String,
    pub v_free_mps: f64,
    pub outcome: Result<FarmSolution>,
}

/// Solves every `(case, v)` pair; failures are recorded per cell.
pub fn sweep(
    v_values: &[f64],
    cases: &[SweepCase],
    turbine: &Turbine,
    wake: &WakeParams,
    reference: OptReference,
    options: &SolverOptions,
) -> Vec<SweepCell> {
    let mut cells = Vec::with_capacity(v_values.len() * cases.len());
    for case in cases {
        for &v in v_values {
            let outcome = FarmProblem::new(turbine.clone(), *wake, v, case.dm.clone())
                .map(|p| p.with_reference(reference).with_options(*options))
                .and_then(|p| solve_farm(&p));
            cells.push(SweepCell {
                case_id: case.id.clone(),
                v_free_mps: v,
                outcome,
            });
        }
    }
    cells
}
