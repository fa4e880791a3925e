//! Rotor and pitch dynamics of one wind-farm row.
//!
//! Each turbine obeys `2·H·ω·dω/dt = (p_aero − p_elec)/S` on its own base.
//! The converter runs a speed loop: `p_elec = p_aero + 2·H·S·ω·(ω − ω_ref)/τ`,
//! so `ω` relaxes to its reference with time constant `τ` and the energy
//! released while slowing down is exported. Inflows are recomputed from the
//! current thrust coefficients at every evaluation.

use alloc::vec::Vec;

use crate::aero::Turbine;
use crate::farmopt::FarmSolution;
use crate::wake::{next_wind, WakeParams};
use crate::{Error, Result};

use super::try_rk4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct WindControl {
    /// Identical rows represented by the simulated one.
    pub row_count: usize,
    /// Droop on turbine rating while de-loaded; headroom-limited.
    pub droop_frac: f64,
    pub droop_enabled: bool,
    /// Duration of the reference ramp after the mode switch, s. Zero steps.
    pub release_ramp_s: f64,
    /// Speed-loop time constant, s.
    pub speed_tau_s: f64,
    pub pitch_tau_s: f64,
    pub pitch_rate_deg_s: f64,
    /// Speed band over which released droop power fades out, pu.
    pub droop_band_pu: f64,
    /// Converter limit on electrical power, pu of rating.
    pub p_elec_max_pu: f64,
    /// Allowed excursion above maximum rotor speed before aborting, pu.
    pub overspeed_margin_pu: f64,
}

impl Default for WindControl {
    fn default() -> Self {
        Self {
            row_count: 5,
            droop_frac: 0.01,
            droop_enabled: true,
            release_ramp_s: 0.0,
            speed_tau_s: 4.0,
            pitch_tau_s: 0.25,
            pitch_rate_deg_s: 8.0,
            droop_band_pu: 0.02,
            p_elec_max_pu: 1.2,
            overspeed_margin_pu: 0.05,
        }
    }
}

impl WindControl {
    pub fn validate(&self) -> Result<()> {
        let ok = self.row_count >= 1
            && self.droop_frac > 0.0
            && self.release_ramp_s >= 0.0
            && self.speed_tau_s > 0.0
            && self.pitch_tau_s > 0.0
            && self.pitch_rate_deg_s > 0.0
            && self.droop_band_pu > 0.0
            && self.p_elec_max_pu > 0.0
            && self.overspeed_margin_pu >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams("wind control constants out of range"))
        }
    }
}

/// A row with its de-loaded and maximum-power operating points.
#[derive(Debug, Clone, PartialEq)]
pub struct WindRow {
    pub turbine: Turbine,
    pub wake: WakeParams,
    pub sub: FarmSolution,
    pub opt: FarmSolution,
    pub control: WindControl,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WtMode {
    SubOptimal,
    /// Released toward maximum-power references at `since_s`.
    Optimal { since_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WtState {
    pub omega_pu: Vec<f64>,
    pub beta_deg: Vec<f64>,
    pub mode: WtMode,
}

/// Instantaneous per-turbine quantities of a row, watts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RowPower {
    pub v_mps: Vec<f64>,
    pub p_aero_w: Vec<f64>,
    pub p_elec_w: Vec<f64>,
}

impl RowPower {
    pub fn total_elec_w(&self) -> f64 {
        self.p_elec_w.iter().sum()
    }
}

impl WindRow {
    pub fn new(turbine: Turbine, wake: WakeParams, sub: FarmSolution, opt: FarmSolution, control: WindControl) -> Result<Self> {
        control.validate()?;
        if sub.n() != opt.n() || sub.v_free_mps != opt.v_free_mps {
            return Err(Error::InvalidParams("de-loaded and maximum-power solutions describe different rows"));
        }
        if sub.dm.last().copied() != Some(0.0) {
            return Err(Error::InvalidParams("last turbine must not be de-loaded"));
        }
        Ok(Self {
            turbine,
            wake,
            sub,
            opt,
            control,
        })
    }

    pub fn n(&self) -> usize {
        self.sub.n()
    }

    fn rated_w(&self) -> f64 {
        self.turbine.params().rated_power_w
    }

    /// Energy the de-loaded turbines give up when moving to maximum-power
    /// speeds, per row, joules.
    pub fn releasable_energy_j(&self) -> f64 {
        let s = self.rated_w();
        self.sub
            .turbines
            .iter()
            .zip(&self.opt.turbines)
            .zip(&self.sub.dm)
            .filter(|(_, &dm)| dm > 0.0)
            .map(|((a, b), _)| (a.e_kin_pus - b.e_kin_pus) * s)
            .sum()
    }

    pub fn initial_state(&self) -> WtState {
        WtState {
            omega_pu: self.sub.turbines.iter().map(|op| op.omega_pu).collect(),
            beta_deg: self.sub.turbines.iter().map(|op| op.beta_deg).collect(),
            mode: WtMode::SubOptimal,
        }
    }

    /// Aerodynamic and electrical power of every turbine in `state`.
    pub fn power(&self, state: &WtState, t_s: f64, f_dev_pu: f64) -> Result<RowPower> {
        let x: Vec<f64> = state.omega_pu.iter().chain(&state.beta_deg).copied().collect();
        let mut scratch = alloc::vec![0.0; x.len()];
        self.rates(t_s, &x, state.mode, f_dev_pu, &mut scratch)
    }

    /// Power asked for by the frequency droop, watts; positive on under-frequency.
    fn droop_request_w(&self, i: usize, f_dev_pu: f64) -> f64 {
        if !(self.control.droop_enabled && self.sub.dm[i] > 0.0) {
            return 0.0;
        }
        -f_dev_pu / self.control.droop_frac * self.rated_w()
    }

    /// Speed and pitch references of turbine `i` at time `t`.
    ///
    /// While de-loaded, an under-frequency droop request moves the references
    /// toward the maximum-power point by the requested fraction of the
    /// turbine's power headroom. After the mode switch they ramp there.
    fn references(&self, i: usize, t: f64, mode: WtMode, f_dev_pu: f64) -> (f64, f64) {
        let sub = &self.sub.turbines[i];
        let opt = &self.opt.turbines[i];
        let s = match mode {
            _ if self.sub.dm[i] == 0.0 => 0.0,
            WtMode::Optimal { since_s } => {
                let ramp = self.control.release_ramp_s;
                if ramp > 0.0 { ((t - since_s) / ramp).clamp(0.0, 1.0) } else { 1.0 }
            }
            WtMode::SubOptimal => {
                let headroom = opt.p_mech_w - sub.p_mech_w;
                let request = self.droop_request_w(i, f_dev_pu);
                if headroom > 0.0 && request > 0.0 { (request / headroom).min(1.0) } else { 0.0 }
            }
        };
        (
            sub.omega_pu + s * (opt.omega_pu - sub.omega_pu),
            sub.beta_deg + s * (opt.beta_deg - sub.beta_deg),
        )
    }

    /// Droop power drawn directly from rotor energy once released.
    ///
    /// The request is faded out as the rotor nears the maximum-power speed
    /// (no energy left to give) or the de-loaded speed (no room to store).
    fn droop_release_w(&self, i: usize, omega: f64, mode: WtMode, f_dev_pu: f64) -> f64 {
        if mode == WtMode::SubOptimal {
            return 0.0;
        }
        let request = self.droop_request_w(i, f_dev_pu);
        let band = self.control.droop_band_pu;
        let room = if request > 0.0 {
            omega - self.opt.turbines[i].omega_pu
        } else {
            self.sub.turbines[i].omega_pu - omega
        };
        request * (room / band).clamp(0.0, 1.0)
    }

    fn clamp_pitch(&self, beta: f64) -> f64 {
        beta.clamp(0.0, self.turbine.params().beta_max_deg)
    }

    /// Rates of the row states `x = [ω…, β…]` and the resulting powers.
    pub(crate) fn rates(&self, t: f64, x: &[f64], mode: WtMode, f_dev_pu: f64, dx: &mut [f64]) -> Result<RowPower> {
        let n = self.n();
        let (omega, beta) = x.split_at(n);
        let p = self.turbine.params();
        let (h, s) = (p.inertia_s, p.rated_power_w);
        let mut out = RowPower {
            v_mps: Vec::with_capacity(n),
            p_aero_w: Vec::with_capacity(n),
            p_elec_w: Vec::with_capacity(n),
        };
        let mut v = self.sub.v_free_mps;
        for i in 0..n {
            if !(omega[i] > 0.0) {
                return Err(Error::Domain { what: "rotor speed", value: omega[i] });
            }
            let op = self.turbine.operating_point(v, omega[i], self.clamp_pitch(beta[i]))?;
            let (w_ref, b_ref) = self.references(i, t, mode, f_dev_pu);
            let speed_loop = 2.0 * h * s * omega[i] * (omega[i] - w_ref) / self.control.speed_tau_s;
            let droop = self.droop_release_w(i, omega[i], mode, f_dev_pu);
            let p_elec = (op.p_mech_w + speed_loop + droop).clamp(0.0, self.control.p_elec_max_pu * s);
            dx[i] = (op.p_mech_w - p_elec) / (2.0 * h * s * omega[i]);
            let rate = self.control.pitch_rate_deg_s;
            dx[n + i] = ((b_ref - beta[i]) / self.control.pitch_tau_s).clamp(-rate, rate);
            out.v_mps.push(v);
            out.p_aero_w.push(op.p_mech_w);
            out.p_elec_w.push(p_elec);
            if i + 1 < n {
                v = next_wind(self.sub.v_free_mps, v, op.ct, &self.wake)?;
            }
        }
        Ok(out)
    }

    /// Aborts when a rotor leaves `[ω_min, ω_max + margin]`.
    pub(crate) fn check_speeds(&self, omega: &[f64], t_s: f64) -> Result<()> {
        let p = self.turbine.params();
        for (i, &w) in omega.iter().enumerate() {
            if !(w >= p.omega_min_pu && w <= p.omega_max_pu + self.control.overspeed_margin_pu) {
                return Err(Error::RotorSpeed { turbine: i, omega_pu: w, t_s });
            }
        }
        Ok(())
    }
}

/// Advances one row by `dt` at constant frequency deviation.
///
/// Returns the new state and the row's electrical output in MW at the end
/// of the step.
pub fn wt_step(state: &WtState, f_dev_pu: f64, row: &WindRow, t_s: f64, dt: f64) -> Result<(WtState, f64)> {
    let n = row.n();
    let mut next = state.clone();
    let mut x: Vec<f64> = next.omega_pu.iter().chain(&next.beta_deg).copied().collect();
    try_rk4(&mut x, t_s, dt, |t, y, dy| row.rates(t, y, next.mode, f_dev_pu, dy).map(|_| ()))?;
    row.check_speeds(&x[..n], t_s + dt)?;
    next.omega_pu.copy_from_slice(&x[..n]);
    next.beta_deg.copy_from_slice(&x[n..]);
    let mut scratch = alloc::vec![0.0; 2 * n];
    let power = row.rates(t_s + dt, &x, next.mode, f_dev_pu, &mut scratch)?;
    Ok((next, power.total_elec_w() / 1e6))
}
