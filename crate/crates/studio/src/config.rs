//! Study configuration: TOML schema, defaults and validation.
//!
//! Every table rejects unknown keys. Omitted keys take the defaults below,
//! which reproduce the reference study: a 5×5 farm at 8 m/s feeding a
//! 130 MW system that loses its smallest gas unit at t = 10 s.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wakereserve_core::aero::{Turbine, TurbineParams};
use wakereserve_core::farmopt::{OptReference, PollOrder, SearchOptions, SolverOptions, SweepCase};
use wakereserve_core::gridsim::{Ieeeg1Params, Tgov1Params, WindControl};
use wakereserve_core::wake::WakeParams;

use crate::StudioError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Seeds the optimizer's random restarts; the only source of randomness.
    pub seed: u64,
    pub turbine: TurbineParams,
    pub wake: WakeParams,
    pub farm: FarmConfig,
    pub solver: SolverConfig,
    pub grid: GridConfig,
    pub wind_control: WindControl,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarmConfig {
    /// Turbines per row.
    pub n: usize,
    /// Free-stream wind at the first turbine for `optimize` and `simulate`.
    pub v_free_mps: f64,
    pub reference: OptReference,
    /// When empty, cases I/II/III de-load all but the last turbine by 0/5/10 %.
    pub cases: Vec<CaseConfig>,
    pub sweep: SweepRange,
}

impl Default for FarmConfig {
    fn default() -> Self {
        Self {
            n: 5,
            v_free_mps: 8.0,
            reference: OptReference::default(),
            cases: Vec::new(),
            sweep: SweepRange::default(),
        }
    }
}

/// A de-loading case. Give either the full `dm` list or a uniform `margin`
/// applied to every turbine but the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dm: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepRange {
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    pub v_step_mps: f64,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self {
            v_min_mps: 7.0,
            v_max_mps: 12.0,
            v_step_mps: 0.5,
        }
    }
}

impl SweepRange {
    /// Grid points `v_min + k·step`, endpoint included.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.v_max_mps - self.v_min_mps) / self.v_step_mps + 1e-9).floor() as usize;
        (0..=n).map(|k| self.v_min_mps + k as f64 * self.v_step_mps).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub multistart: usize,
    pub initial_mesh: f64,
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub poll: PollOrder,
    pub penalty: f64,
    pub expansion: f64,
    pub contraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let s = SearchOptions::default();
        Self {
            multistart: SolverOptions::default().multistart,
            initial_mesh: s.initial_mesh,
            tolerance: s.tolerance,
            max_evaluations: s.max_evaluations,
            poll: s.poll,
            penalty: s.penalty,
            expansion: s.expansion,
            contraction: s.contraction,
        }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            search: SearchOptions {
                initial_mesh: self.initial_mesh,
                tolerance: self.tolerance,
                max_evaluations: self.max_evaluations,
                poll: self.poll,
                penalty: self.penalty,
                expansion: self.expansion,
                contraction: self.contraction,
            },
            multistart: self.multistart,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub f_nominal_hz: f64,
    pub s_base_mva: f64,
    pub load_mw: f64,
    /// Load damping, pu power per pu frequency on the system base.
    pub load_damping: f64,
    /// Generator whose dispatch absorbs the initial mismatch with the wind
    /// farm output. Leave empty to require an exact balance.
    pub balance_generator: String,
    /// Case whose nadir time the other cases are measured against. Empty
    /// means the first case without de-loading.
    pub reference_case: String,
    pub t_end_s: f64,
    pub dt_s: f64,
    pub tgov1: Tgov1Params,
    pub ieeeg1: Ieeeg1Params,
    pub generators: Vec<GenConfig>,
    pub events: Vec<EventConfig>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let gen = |name: &str, kind, governor, p_out_mw, p_max_mw, droop_frac| GenConfig {
            name: name.into(),
            kind,
            governor,
            p_out_mw,
            p_max_mw,
            droop_frac,
            inertia_s: None,
            rating_mva: None,
            online: true,
        };
        Self {
            f_nominal_hz: 50.0,
            s_base_mva: 130.0,
            load_mw: 130.0,
            load_damping: 1.0,
            balance_generator: "SG1".into(),
            reference_case: String::new(),
            t_end_s: 60.0,
            dt_s: 0.01,
            tgov1: Tgov1Params::default(),
            ieeeg1: Ieeeg1Params::default(),
            generators: vec![
                gen("SG1", GenKindConfig::Steam, GovernorKind::Ieeeg1, 25.5, 45.0, 0.20),
                gen("SG2", GenKindConfig::Gas, GovernorKind::Tgov1, 45.0, 50.0, 0.05),
                gen("SG3", GenKindConfig::Gas, GovernorKind::Tgov1, 20.0, 25.0, 0.05),
            ],
            events: vec![
                EventConfig::TripGenerator {
                    t_s: 10.0,
                    generator: "SG3".into(),
                },
                EventConfig::SwitchWindMode { t_s: 10.0 },
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKindConfig {
    Steam,
    Gas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GovernorKind {
    Tgov1,
    Ieeeg1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub name: String,
    pub kind: GenKindConfig,
    pub governor: GovernorKind,
    pub p_out_mw: f64,
    pub p_max_mw: f64,
    pub droop_frac: f64,
    /// Defaults to 4 s for steam and 5 s for gas units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia_s: Option<f64>,
    /// Defaults to `p_max_mw`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating_mva: Option<f64>,
    #[serde(default = "yes")]
    pub online: bool,
}

fn yes() -> bool {
    true
}

impl GenConfig {
    pub fn inertia(&self) -> f64 {
        self.inertia_s.unwrap_or(match self.kind {
            GenKindConfig::Steam => 4.0,
            GenKindConfig::Gas => 5.0,
        })
    }

    pub fn rating(&self) -> f64 {
        self.rating_mva.unwrap_or(self.p_max_mw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventConfig {
    TripGenerator { t_s: f64, generator: String },
    /// Releases the stored rotor energy: de-loaded turbines go back to
    /// maximum-power tracking.
    SwitchWindMode { t_s: f64 },
}

impl EventConfig {
    pub fn t_s(&self) -> f64 {
        match self {
            Self::TripGenerator { t_s, .. } | Self::SwitchWindMode { t_s } => *t_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Used when `--out` is not given.
    pub dir: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::SvgPlot, OutputFormat::MetricsSummary],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    SvgPlot,
    MetricsSummary,
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

fn bad(key: impl Into<String>, msg: impl Into<String>) -> StudioError {
    StudioError::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

fn check(ok: bool, key: &str, msg: &str) -> Result<(), StudioError> {
    if ok {
        Ok(())
    } else {
        Err(bad(key, msg))
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, StudioError> {
        let text = std::fs::read_to_string(path).map_err(|e| StudioError::ConfigFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, StudioError> {
        let cfg: Self = toml::from_str(text).map_err(|e| StudioError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The configured cases, or the default I/II/III set.
    pub fn cases(&self) -> Vec<SweepCase> {
        let n = self.farm.n;
        let uniform = |m: f64| {
            let mut dm = vec![m; n];
            if let Some(last) = dm.last_mut() {
                *last = 0.0;
            }
            dm
        };
        if self.farm.cases.is_empty() {
            return [("I", 0.0), ("II", 0.05), ("III", 0.10)]
                .into_iter()
                .map(|(id, m)| SweepCase {
                    id: id.into(),
                    dm: uniform(m),
                })
                .collect();
        }
        self.farm
            .cases
            .iter()
            .map(|c| SweepCase {
                id: c.id.clone(),
                dm: c.dm.clone().unwrap_or_else(|| uniform(c.margin.unwrap_or(0.0))),
            })
            .collect()
    }

    /// Selects cases by id, in the order given; all cases when `ids` is empty.
    pub fn select_cases(&self, ids: &[String]) -> Result<Vec<SweepCase>, StudioError> {
        let all = self.cases();
        if ids.is_empty() {
            return Ok(all);
        }
        ids.iter()
            .map(|id| {
                all.iter()
                    .find(|c| &c.id == id)
                    .cloned()
                    .ok_or_else(|| bad("--case", format!("no case with id `{id}`")))
            })
            .collect()
    }

    /// Id of the case used as the nadir-time reference, if any.
    pub fn reference_case(&self) -> Option<String> {
        if !self.grid.reference_case.is_empty() {
            return Some(self.grid.reference_case.clone());
        }
        self.cases().into_iter().find(|c| c.dm.iter().all(|&m| m == 0.0)).map(|c| c.id)
    }

    pub fn turbine_model(&self) -> Result<Turbine, StudioError> {
        Turbine::new(self.turbine).map_err(|e| bad("turbine", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), StudioError> {
        self.validate_turbine()?;
        let w = &self.wake;
        check(w.k > 0.0, "wake.k", "must be > 0")?;
        check(w.k < w.k_prime, "wake.k", "must be < wake.k_prime")?;
        check(w.k_prime < 1.0, "wake.k_prime", "must be < 1")?;
        self.validate_farm()?;
        let s = &self.solver;
        check(s.multistart >= 1, "solver.multistart", "must be >= 1")?;
        check(s.initial_mesh > 0.0, "solver.initial_mesh", "must be > 0")?;
        check(s.tolerance > 0.0, "solver.tolerance", "must be > 0")?;
        check(s.max_evaluations >= 1, "solver.max_evaluations", "must be >= 1")?;
        check(s.penalty > 0.0, "solver.penalty", "must be > 0")?;
        check(s.expansion >= 1.0, "solver.expansion", "must be >= 1")?;
        check(s.contraction > 0.0 && s.contraction < 1.0, "solver.contraction", "must lie in (0, 1)")?;
        self.wind_control.validate().map_err(|e| bad("wind_control", e.to_string()))?;
        check(self.wind_control.row_count >= 1, "wind_control.row_count", "must be >= 1")?;
        self.validate_grid()?;
        check(!self.output.formats.is_empty(), "output.formats", "must list at least one format")?;
        Ok(())
    }

    fn validate_turbine(&self) -> Result<(), StudioError> {
        let t = &self.turbine;
        check(t.radius_m > 0.0, "turbine.radius_m", "must be > 0")?;
        check(t.air_density > 0.0, "turbine.air_density", "must be > 0")?;
        check(t.inertia_s > 0.0, "turbine.inertia_s", "must be > 0")?;
        check(t.rated_power_w > 0.0, "turbine.rated_power_w", "must be > 0")?;
        check(t.omega_min_pu > 0.0, "turbine.omega_min_pu", "must be > 0")?;
        check(t.omega_min_pu < t.omega_max_pu, "turbine.omega_min_pu", "must be < turbine.omega_max_pu")?;
        check(t.omega_rated_radps > 0.0, "turbine.omega_rated_radps", "must be > 0")?;
        check(t.beta_max_deg > 0.0, "turbine.beta_max_deg", "must be > 0")?;
        check(t.v_cutin_mps > 0.0, "turbine.v_cutin_mps", "must be > 0")?;
        check(t.v_cutin_mps < t.v_cutout_mps, "turbine.v_cutin_mps", "must be < turbine.v_cutout_mps")?;
        self.turbine_model().map(|_| ())
    }

    fn validate_farm(&self) -> Result<(), StudioError> {
        let f = &self.farm;
        let t = &self.turbine;
        check(f.n >= 1, "farm.n", "must be >= 1")?;
        check(
            f.v_free_mps >= t.v_cutin_mps && f.v_free_mps <= t.v_cutout_mps,
            "farm.v_free_mps",
            "must lie between the turbine cut-in and cut-out speeds",
        )?;
        let s = &f.sweep;
        check(s.v_step_mps > 0.0, "farm.sweep.v_step_mps", "must be > 0")?;
        check(s.v_min_mps >= t.v_cutin_mps, "farm.sweep.v_min_mps", "must be >= turbine.v_cutin_mps")?;
        check(s.v_max_mps >= s.v_min_mps, "farm.sweep.v_max_mps", "must be >= farm.sweep.v_min_mps")?;
        check(s.v_max_mps <= t.v_cutout_mps, "farm.sweep.v_max_mps", "must be <= turbine.v_cutout_mps")?;

        let mut ids = HashSet::new();
        for (i, c) in f.cases.iter().enumerate() {
            let key = |k: &str| format!("farm.cases[{i}].{k}");
            check(!c.id.is_empty(), &key("id"), "must not be empty")?;
            check(ids.insert(c.id.as_str()), &key("id"), "duplicate case id")?;
            match (&c.dm, c.margin) {
                (Some(_), Some(_)) => return Err(bad(key("margin"), "give either dm or margin, not both")),
                (None, None) => return Err(bad(key("dm"), "missing; give dm or margin")),
                (None, Some(m)) => check((0.0..1.0).contains(&m), &key("margin"), "must lie in [0, 1)")?,
                (Some(dm), None) => {
                    if dm.len() != f.n {
                        return Err(bad(key("dm"), format!("has {} entries, farm.n is {}", dm.len(), f.n)));
                    }
                    for (j, &m) in dm.iter().enumerate() {
                        check((0.0..1.0).contains(&m), &format!("farm.cases[{i}].dm[{j}]"), "must lie in [0, 1)")?;
                    }
                    if dm.last().is_some_and(|&m| m != 0.0) {
                        return Err(bad(
                            format!("farm.cases[{i}].dm[{}]", f.n - 1),
                            "the last turbine must maximise its power production without de-loading; set it to 0",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_grid(&self) -> Result<(), StudioError> {
        let g = &self.grid;
        check(g.f_nominal_hz > 0.0, "grid.f_nominal_hz", "must be > 0")?;
        check(g.s_base_mva > 0.0, "grid.s_base_mva", "must be > 0")?;
        check(g.load_mw >= 0.0, "grid.load_mw", "must be >= 0")?;
        check(g.load_damping >= 0.0, "grid.load_damping", "must be >= 0")?;
        check(g.dt_s > 0.0, "grid.dt_s", "must be > 0")?;
        check(g.t_end_s >= g.dt_s, "grid.t_end_s", "must be >= grid.dt_s")?;
        let tg = &g.tgov1;
        check(tg.t_valve_s > 0.0, "grid.tgov1.t_valve_s", "must be > 0")?;
        check(tg.t_gate_s > 0.0, "grid.tgov1.t_gate_s", "must be > 0")?;
        check(tg.t_lead_s >= 0.0, "grid.tgov1.t_lead_s", "must be >= 0")?;
        check(tg.t_lag_s > 0.0, "grid.tgov1.t_lag_s", "must be > 0")?;
        let ie = &g.ieeeg1;
        check(ie.t_servo_s > 0.0, "grid.ieeeg1.t_servo_s", "must be > 0")?;
        check(ie.t_stage_s.iter().all(|&t| t > 0.0), "grid.ieeeg1.t_stage_s", "entries must be > 0")?;
        check(ie.k_stage.iter().all(|&k| k >= 0.0), "grid.ieeeg1.k_stage", "entries must be >= 0")?;
        check(
            (ie.k_stage.iter().sum::<f64>() - 1.0).abs() < 1e-9,
            "grid.ieeeg1.k_stage",
            "entries must sum to 1",
        )?;

        check(!g.generators.is_empty(), "grid.generators", "need at least one generator")?;
        let mut names = HashSet::new();
        for (i, s) in g.generators.iter().enumerate() {
            let key = |k: &str| format!("grid.generators[{i}].{k}");
            check(!s.name.is_empty(), &key("name"), "must not be empty")?;
            check(names.insert(s.name.as_str()), &key("name"), "duplicate generator name")?;
            check(s.p_max_mw > 0.0, &key("p_max_mw"), "must be > 0")?;
            check(
                (0.0..=s.p_max_mw).contains(&s.p_out_mw),
                &key("p_out_mw"),
                "must lie in [0, p_max_mw]",
            )?;
            check(s.droop_frac > 0.0, &key("droop_frac"), "must be > 0")?;
            check(s.inertia() > 0.0, &key("inertia_s"), "must be > 0")?;
            check(s.rating() > 0.0, &key("rating_mva"), "must be > 0")?;
        }
        if !g.balance_generator.is_empty() {
            check(
                g.generators.iter().any(|s| s.name == g.balance_generator && s.online),
                "grid.balance_generator",
                "must name an online generator",
            )?;
        }
        for (i, e) in g.events.iter().enumerate() {
            check(
                e.t_s() >= 0.0 && e.t_s() <= g.t_end_s,
                &format!("grid.events[{i}].t_s"),
                "must lie in [0, grid.t_end_s]",
            )?;
            if let EventConfig::TripGenerator { generator, .. } = e {
                check(
                    g.generators.iter().any(|s| &s.name == generator),
                    &format!("grid.events[{i}].generator"),
                    "names no generator in grid.generators",
                )?;
            }
        }
        if !g.reference_case.is_empty() {
            check(
                self.cases().iter().any(|c| c.id == g.reference_case),
                "grid.reference_case",
                "names no case in farm.cases",
            )?;
        }
        Ok(())
    }
}
