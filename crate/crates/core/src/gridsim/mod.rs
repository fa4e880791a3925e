//! Copper-plate frequency simulation of synchronous generators, a constant
//! load and a wind farm holding a kinetic-energy reserve.
//!
//! All blocks are integrated together by a fixed-step classical Runge–Kutta
//! scheme. Events take effect at the first step boundary at or after their
//! timestamp.

mod governor;
mod swing;
mod turbine;

use alloc::string::String;
use alloc::vec::Vec;

pub use governor::{ieeeg1_step, tgov1_step, GovernorParams, GovernorState, Ieeeg1Params, Tgov1Params};
pub use swing::{swing_rate, swing_step};
pub use turbine::{wt_step, RowPower, WindControl, WindRow, WtMode, WtState};

use crate::{Error, Result};

/// Frequency deviation beyond which the run is declared unstable, pu.
const F_DEV_LIMIT_PU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Steam,
    Gas,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncGen {
    pub name: String,
    pub kind: GenKind,
    pub p_out_mw: f64,
    pub p_max_mw: f64,
    pub governor: GovernorParams,
    pub droop_frac: f64,
    /// H on the machine rating, s.
    pub inertia_s: f64,
    pub rating_mva: f64,
    pub online: bool,
}

impl SyncGen {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.p_out_mw && self.p_out_mw <= self.p_max_mw) {
            return Err(Error::InvalidParams("generator output must lie in [0, p_max]"));
        }
        if !(self.droop_frac > 0.0 && self.inertia_s > 0.0 && self.rating_mva > 0.0) {
            return Err(Error::InvalidParams("generator droop, inertia and rating must be > 0"));
        }
        self.governor.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    TripGenerator(String),
    /// De-loaded turbines move to their maximum-power references.
    SwitchWindMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t_s: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    pub f_nominal_hz: f64,
    /// System power base, MVA.
    pub s_base_mva: f64,
    pub load_mw: f64,
    /// Load damping, pu power per pu frequency on the system base.
    pub load_damping: f64,
    pub gens: Vec<SyncGen>,
    pub wind: Option<WindRow>,
    pub events: Vec<Event>,
    pub t_end_s: f64,
    pub dt_s: f64,
}

impl GridScenario {
    /// Initial wind-farm output, MW.
    pub fn wind_mw(&self) -> f64 {
        self.wind
            .as_ref()
            .map_or(0.0, |w| w.sub.total_power_w * w.control.row_count as f64 / 1e6)
    }

    /// Generation minus load at t = 0, MW.
    pub fn imbalance_mw(&self) -> f64 {
        let gen: f64 = self.gens.iter().filter(|g| g.online).map(|g| g.p_out_mw).sum();
        gen + self.wind_mw() - self.load_mw
    }

    /// Sets the named generator's dispatch so that the system starts balanced.
    pub fn rebalance(&mut self, name: &str) -> Result<()> {
        let imbalance = self.imbalance_mw();
        let g = self
            .gens
            .iter_mut()
            .find(|g| g.name == name && g.online)
            .ok_or(Error::InvalidParams("balancing generator not found or offline"))?;
        g.p_out_mw -= imbalance;
        if !(0.0..=g.p_max_mw).contains(&g.p_out_mw) {
            return Err(Error::Unbalanced { residual_mw: imbalance });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.f_nominal_hz > 0.0, "f_nominal_hz must be > 0"),
            (self.s_base_mva > 0.0, "s_base_mva must be > 0"),
            (self.load_mw >= 0.0, "load_mw must be >= 0"),
            (self.load_damping >= 0.0, "load_damping must be >= 0"),
            (self.dt_s > 0.0, "dt_s must be > 0"),
            (self.t_end_s > 0.0, "t_end_s must be > 0"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg));
            }
        }
        for g in &self.gens {
            g.validate()?;
        }
        for e in &self.events {
            if let EventKind::TripGenerator(name) = &e.kind {
                if !self.gens.iter().any(|g| &g.name == name) {
                    return Err(Error::InvalidParams("trip event names an unknown generator"));
                }
            }
        }
        let residual_mw = self.imbalance_mw();
        if libm::fabs(residual_mw) > 1e-6 * self.s_base_mva {
            return Err(Error::Unbalanced { residual_mw });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NadirMetrics {
    pub nadir_hz: Option<f64>,
    pub nadir_time_s: Option<f64>,
    /// Nadir time minus the reference trace's nadir time.
    pub delay_s: Option<f64>,
}

/// Sampled simulation output on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub t_s: Vec<f64>,
    pub f_hz: Vec<f64>,
    pub gen_names: Vec<String>,
    /// Per generator, mechanical output in MW (zero once tripped).
    pub gen_p_mw: Vec<Vec<f64>>,
    /// Whole-farm electrical output, MW.
    pub wind_p_mw: Vec<f64>,
    /// Per turbine of the simulated row.
    pub omega_pu: Vec<Vec<f64>>,
    pub beta_deg: Vec<Vec<f64>>,
    pub p_aero_mw: Vec<Vec<f64>>,
    pub p_elec_mw: Vec<Vec<f64>>,
    pub events: Vec<(f64, String)>,
    /// Largest per-step power-balance residual, pu on the system base.
    pub max_balance_residual_pu: f64,
    pub metrics: NadirMetrics,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_s.is_empty()
    }

    /// Time of the first applied event, if any.
    pub fn first_event_s(&self) -> Option<f64> {
        self.events.first().map(|e| e.0)
    }
}

/// Nadir after the first event (or over the whole trace without events).
/// Absent unless the frequency dips below its initial value.
pub fn nadir_metrics(trace: &SimTrace, reference: Option<&SimTrace>) -> NadirMetrics {
    let Some(&f0) = trace.f_hz.first() else {
        return NadirMetrics::default();
    };
    let start = trace.first_event_s().unwrap_or(f64::NEG_INFINITY);
    let mut best: Option<(f64, f64)> = None;
    for (&t, &f) in trace.t_s.iter().zip(&trace.f_hz) {
        if t < start {
            continue;
        }
        if best.is_none_or(|(fb, _)| f < fb) {
            best = Some((f, t));
        }
    }
    let Some((nadir, t_nadir)) = best.filter(|&(f, _)| f < f0) else {
        return NadirMetrics::default();
    };
    let delay_s = reference
        .map(|r| nadir_metrics(r, None))
        .and_then(|m| m.nadir_time_s)
        .map(|t_ref| t_nadir - t_ref);
    NadirMetrics {
        nadir_hz: Some(nadir),
        nadir_time_s: Some(t_nadir),
        delay_s,
    }
}

/// Classical fourth-order Runge–Kutta step of an autonomous system.
pub(crate) fn rk4<F: FnMut(&[f64], &mut [f64])>(x: &mut [f64], dt: f64, mut f: F) {
    let _ = try_rk4(x, 0.0, dt, |_, y, dy| {
        f(y, dy);
        Ok(())
    });
}

/// Fallible Runge–Kutta step of `dx/dt = f(t, x)`; `x` is untouched on error.
pub(crate) fn try_rk4<F>(x: &mut [f64], t: f64, dt: f64, mut f: F) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]);
    let mut y = alloc::vec![0.0; n];
    f(t, x, &mut k1)?;
    let stage = |y: &mut [f64], k: &[f64], c: f64| {
        for i in 0..n {
            y[i] = x[i] + c * dt * k[i];
        }
    };
    stage(&mut y, &k1, 0.5);
    f(t + 0.5 * dt, &y, &mut k2)?;
    stage(&mut y, &k2, 0.5);
    f(t + 0.5 * dt, &y, &mut k3)?;
    stage(&mut y, &k3, 1.0);
    f(t + dt, &y, &mut k4)?;
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Injections seen by the swing equation at one evaluation.
#[derive(Debug, Clone, Copy)]
struct Balance {
    p_gen_mw: f64,
    p_wind_mw: f64,
}

struct System<'a> {
    sc: &'a GridScenario,
    online: Vec<bool>,
    /// Start index of each generator's governor states in the state vector.
    gov_at: Vec<usize>,
    wind_at: usize,
    h_sys_s: f64,
    mode: WtMode,
}

impl<'a> System<'a> {
    fn new(sc: &'a GridScenario) -> Self {
        let mut gov_at = Vec::with_capacity(sc.gens.len());
        let mut at = 1;
        for g in &sc.gens {
            gov_at.push(at);
            at += g.governor.n_states();
        }
        let mut sys = Self {
            sc,
            online: sc.gens.iter().map(|g| g.online).collect(),
            gov_at,
            wind_at: at,
            h_sys_s: 0.0,
            mode: WtMode::SubOptimal,
        };
        sys.update_inertia();
        sys
    }

    fn n_states(&self) -> usize {
        self.wind_at + self.sc.wind.as_ref().map_or(0, |w| 2 * w.n())
    }

    fn update_inertia(&mut self) {
        let e: f64 = self
            .sc
            .gens
            .iter()
            .zip(&self.online)
            .filter(|(_, &on)| on)
            .map(|(g, _)| g.inertia_s * g.rating_mva)
            .sum();
        self.h_sys_s = e / self.sc.s_base_mva;
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut x = alloc::vec![0.0; self.n_states()];
        for (g, &at) in self.sc.gens.iter().zip(&self.gov_at) {
            let init = g.governor.init(g.p_out_mw / g.p_max_mw);
            x[at..at + init.len()].copy_from_slice(&init);
        }
        if let Some(w) = &self.sc.wind {
            let s = w.initial_state();
            let n = w.n();
            x[self.wind_at..self.wind_at + n].copy_from_slice(&s.omega_pu);
            x[self.wind_at + n..].copy_from_slice(&s.beta_deg);
        }
        x
    }

    fn gen_mw(&self, x: &[f64], i: usize) -> f64 {
        if !self.online[i] {
            return 0.0;
        }
        let g = &self.sc.gens[i];
        let at = self.gov_at[i];
        g.governor.output(&x[at..at + g.governor.n_states()]) * g.p_max_mw
    }

    fn rates(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(Balance, Option<RowPower>)> {
        let sc = self.sc;
        let f_dev = x[0];
        let mut p_gen_mw = 0.0;
        for (i, g) in sc.gens.iter().enumerate() {
            let at = self.gov_at[i];
            let m = g.governor.n_states();
            if self.online[i] {
                g.governor.deriv(&x[at..at + m], g.p_out_mw / g.p_max_mw, f_dev, g.droop_frac, &mut dx[at..at + m]);
                p_gen_mw += self.gen_mw(x, i);
            } else {
                dx[at..at + m].fill(0.0);
            }
        }
        let (p_wind_mw, row) = match &sc.wind {
            Some(w) => {
                let row = w.rates(t, &x[self.wind_at..], self.mode, f_dev, &mut dx[self.wind_at..])?;
                (row.total_elec_w() * w.control.row_count as f64 / 1e6, Some(row))
            }
            None => (0.0, None),
        };
        dx[0] = swing_rate(
            f_dev,
            (p_gen_mw + p_wind_mw) / sc.s_base_mva,
            sc.load_mw / sc.s_base_mva,
            self.h_sys_s,
            sc.load_damping,
        );
        Ok((Balance { p_gen_mw, p_wind_mw }, row))
    }
}

/// Runs the scenario to `t_end_s`.
pub fn simulate(sc: &GridScenario) -> Result<SimTrace> {
    sc.validate()?;
    let mut sys = System::new(sc);
    if !(sys.h_sys_s > 0.0) {
        return Err(Error::InvalidParams("no online synchronous inertia"));
    }
    let dt = sc.dt_s;
    let steps = libm::round(sc.t_end_s / dt) as usize;
    let n_wt = sc.wind.as_ref().map_or(0, |w| w.n());
    let mut x = sys.initial_state();

    let mut events: Vec<&Event> = sc.events.iter().collect();
    events.sort_by(|a, b| a.t_s.total_cmp(&b.t_s));
    let mut next_event = 0;

    let mut tr = SimTrace {
        gen_names: sc.gens.iter().map(|g| g.name.clone()).collect(),
        gen_p_mw: alloc::vec![Vec::with_capacity(steps + 1); sc.gens.len()],
        omega_pu: alloc::vec![Vec::with_capacity(steps + 1); n_wt],
        beta_deg: alloc::vec![Vec::with_capacity(steps + 1); n_wt],
        p_aero_mw: alloc::vec![Vec::with_capacity(steps + 1); n_wt],
        p_elec_mw: alloc::vec![Vec::with_capacity(steps + 1); n_wt],
        ..SimTrace::default()
    };
    let mut dx = alloc::vec![0.0; x.len()];

    for k in 0..=steps {
        let t = k as f64 * dt;
        while next_event < events.len() && events[next_event].t_s <= t + 0.5 * dt {
            let e = events[next_event];
            match &e.kind {
                EventKind::TripGenerator(name) => {
                    for (i, g) in sc.gens.iter().enumerate() {
                        if &g.name == name {
                            sys.online[i] = false;
                        }
                    }
                    sys.update_inertia();
                    if !(sys.h_sys_s > 0.0) {
                        return Err(Error::InvalidParams("no online synchronous inertia"));
                    }
                    tr.events.push((t, alloc::format!("trip {name}")));
                }
                EventKind::SwitchWindMode => {
                    sys.mode = WtMode::Optimal { since_s: t };
                    tr.events.push((t, String::from("wind release")));
                }
            }
            next_event += 1;
        }

        let (bal, row) = sys.rates(t, &x, &mut dx)?;
        tr.t_s.push(t);
        tr.f_hz.push(sc.f_nominal_hz * (1.0 + x[0]));
        for i in 0..sc.gens.len() {
            tr.gen_p_mw[i].push(sys.gen_mw(&x, i));
        }
        tr.wind_p_mw.push(bal.p_wind_mw);
        if let Some(row) = row {
            for i in 0..n_wt {
                tr.omega_pu[i].push(x[sys.wind_at + i]);
                tr.beta_deg[i].push(x[sys.wind_at + n_wt + i]);
                tr.p_aero_mw[i].push(row.p_aero_w[i] / 1e6);
                tr.p_elec_mw[i].push(row.p_elec_w[i] / 1e6);
            }
        }
        if k == steps {
            break;
        }

        // Stage-weighted net injection, accumulated apart from the state
        // update, to audit the frequency step against the power balance.
        let weights = [1.0, 2.0, 2.0, 1.0];
        let mut stage = 0;
        let mut net_pu = 0.0;
        let f_before = x[0];
        let s_base = sc.s_base_mva;
        let load_pu = sc.load_mw / s_base;
        let damping = sc.load_damping;
        try_rk4(&mut x, t, dt, |ts, y, dy| {
            let (b, _) = sys.rates(ts, y, dy)?;
            net_pu += weights[stage] / 6.0 * ((b.p_gen_mw + b.p_wind_mw) / s_base - load_pu - damping * y[0]);
            stage += 1;
            Ok(())
        })?;
        for (g, &at) in sc.gens.iter().zip(&sys.gov_at) {
            g.governor.project(&mut x[at..at + g.governor.n_states()]);
        }
        let residual = libm::fabs(2.0 * sys.h_sys_s * (x[0] - f_before) / dt - net_pu);
        tr.max_balance_residual_pu = tr.max_balance_residual_pu.max(residual);

        let t_next = t + dt;
        if x.iter().any(|v| !v.is_finite()) || libm::fabs(x[0]) > F_DEV_LIMIT_PU {
            return Err(Error::Instability { step: k + 1, t_s: t_next });
        }
        if let Some(w) = &sc.wind {
            w.check_speeds(&x[sys.wind_at..sys.wind_at + n_wt], t_next)?;
        }
    }
    tr.metrics = nadir_metrics(&tr, None);
    Ok(tr)
}
