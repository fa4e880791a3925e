//! Speed-governor and turbine models of the synchronous machines.
//!
//! Both blocks work in per-unit of the machine rating and take the frequency
//! deviation in per-unit of nominal. The steady-state gain is `−Δf/droop`.

use alloc::vec::Vec;

use super::rk4;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct Tgov1Params {
    /// Valve lag, s. The valve position is limited to `[0, 1]` pu.
    pub t_valve_s: f64,
    /// Gate lag, s.
    pub t_gate_s: f64,
    /// Turbine lead time constant, s.
    pub t_lead_s: f64,
    /// Turbine lag time constant, s.
    pub t_lag_s: f64,
}

impl Default for Tgov1Params {
    fn default() -> Self {
        Self {
            t_valve_s: 0.5,
            t_gate_s: 1.0,
            t_lead_s: 3.0,
            t_lag_s: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct Ieeeg1Params {
    /// Servo lag, s. The valve position is limited to `[0, 1]` pu.
    pub t_servo_s: f64,
    /// Steam chest, reheater and crossover time constants, s.
    pub t_stage_s: [f64; 3],
    /// Share of power produced after each stage; sums to one.
    pub k_stage: [f64; 3],
}

impl Default for Ieeeg1Params {
    fn default() -> Self {
        Self {
            t_servo_s: 0.2,
            t_stage_s: [0.3, 7.0, 0.6],
            k_stage: [0.3, 0.4, 0.3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GovernorParams {
    Tgov1(Tgov1Params),
    Ieeeg1(Ieeeg1Params),
}

impl GovernorParams {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = match self {
            Self::Tgov1(p) => p.t_valve_s > 0.0 && p.t_gate_s > 0.0 && p.t_lead_s >= 0.0 && p.t_lag_s > 0.0,
            Self::Ieeeg1(p) => {
                p.t_servo_s > 0.0
                    && p.t_stage_s.iter().all(|&t| t > 0.0)
                    && p.k_stage.iter().all(|&k| k >= 0.0)
                    && libm::fabs(p.k_stage.iter().sum::<f64>() - 1.0) < 1e-9
            }
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParams("governor time constants must be > 0 and stage shares sum to 1"))
        }
    }

    pub(crate) fn n_states(&self) -> usize {
        match self {
            Self::Tgov1(_) => 3,
            Self::Ieeeg1(_) => 4,
        }
    }

    /// Equilibrium state at output `p0` pu.
    pub(crate) fn init(&self, p0: f64) -> Vec<f64> {
        alloc::vec![p0; self.n_states()]
    }

    /// Time derivative of the state. `p_ref` is the dispatch in pu.
    pub(crate) fn deriv(&self, x: &[f64], p_ref: f64, f_dev: f64, droop: f64, dx: &mut [f64]) {
        let demand = p_ref - f_dev / droop;
        match self {
            Self::Tgov1(p) => {
                dx[0] = limited_rate(x[0], (demand - x[0]) / p.t_valve_s);
                dx[1] = (x[0].clamp(0.0, 1.0) - x[1]) / p.t_gate_s;
                dx[2] = (x[1] - x[2]) / p.t_lag_s;
            }
            Self::Ieeeg1(p) => {
                dx[0] = limited_rate(x[0], (demand - x[0]) / p.t_servo_s);
                dx[1] = (x[0].clamp(0.0, 1.0) - x[1]) / p.t_stage_s[0];
                dx[2] = (x[1] - x[2]) / p.t_stage_s[1];
                dx[3] = (x[2] - x[3]) / p.t_stage_s[2];
            }
        }
    }

    /// Mechanical power in pu of rating.
    pub(crate) fn output(&self, x: &[f64]) -> f64 {
        let p = match self {
            Self::Tgov1(p) => {
                let a = if p.t_lag_s > 0.0 { p.t_lead_s / p.t_lag_s } else { 1.0 };
                a * x[1] + (1.0 - a) * x[2]
            }
            Self::Ieeeg1(p) => p.k_stage[0] * x[1] + p.k_stage[1] * x[2] + p.k_stage[2] * x[3],
        };
        p.clamp(0.0, 1.0)
    }

    /// Enforces the valve limit after a step.
    pub(crate) fn project(&self, x: &mut [f64]) {
        x[0] = x[0].clamp(0.0, 1.0);
    }
}

/// Anti-windup: the valve integrator stops at its limits.
fn limited_rate(x: f64, rate: f64) -> f64 {
    if (x >= 1.0 && rate > 0.0) || (x <= 0.0 && rate < 0.0) {
        0.0
    } else {
        rate
    }
}

/// Governor state with its dispatch point.
#[derive(Debug, Clone, PartialEq)]
pub struct GovernorState {
    pub x: Vec<f64>,
    pub p_ref_pu: f64,
}

impl GovernorState {
    pub fn at_dispatch(params: &GovernorParams, p_ref_pu: f64) -> Self {
        Self {
            x: params.init(p_ref_pu),
            p_ref_pu,
        }
    }
}

fn block_step(
    params: &GovernorParams,
    state: &GovernorState,
    f_dev_pu: f64,
    droop: f64,
    dt: f64,
) -> (GovernorState, f64) {
    let mut x = state.x.clone();
    rk4(&mut x, dt, |y, dy| params.deriv(y, state.p_ref_pu, f_dev_pu, droop, dy));
    params.project(&mut x);
    let p = params.output(&x);
    (
        GovernorState {
            x,
            p_ref_pu: state.p_ref_pu,
        },
        p,
    )
}

/// One step of the TGOV1 block at constant frequency deviation.
pub fn tgov1_step(
    state: &GovernorState,
    f_dev_pu: f64,
    params: &Tgov1Params,
    droop: f64,
    dt: f64,
) -> (GovernorState, f64) {
    block_step(&GovernorParams::Tgov1(*params), state, f_dev_pu, droop, dt)
}

/// One step of the IEEEG1 block at constant frequency deviation.
pub fn ieeeg1_step(
    state: &GovernorState,
    f_dev_pu: f64,
    params: &Ieeeg1Params,
    droop: f64,
    dt: f64,
) -> (GovernorState, f64) {
    block_step(&GovernorParams::Ieeeg1(*params), state, f_dev_pu, droop, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn settle(g: &GovernorParams, p0: f64, f_dev: f64, droop: f64, t_end: f64) -> Vec<f64> {
        let mut s = GovernorState::at_dispatch(g, p0);
        let dt = 0.01;
        let mut out = Vec::new();
        for _ in 0..libm::round(t_end / dt) as usize {
            let (next, p) = block_step(g, &s, f_dev, droop, dt);
            s = next;
            out.push(p);
        }
        out
    }

    #[test]
    fn zero_deviation_holds_dispatch() {
        for g in [GovernorParams::Tgov1(Default::default()), GovernorParams::Ieeeg1(Default::default())] {
            assert!(settle(&g, 0.9, 0.0, 0.05, 30.0).iter().all(|&p| (p - 0.9).abs() < 1e-15));
        }
    }

    #[test]
    fn steady_state_gain_is_inverse_droop() {
        let tgov = GovernorParams::Tgov1(Default::default());
        let p = *settle(&tgov, 0.5, -0.01, 0.05, 200.0).last().unwrap();
        assert_relative_eq!(p, 0.7, epsilon = 1e-6);
        let ieee = GovernorParams::Ieeeg1(Default::default());
        let p = *settle(&ieee, 0.5, -0.01, 0.20, 200.0).last().unwrap();
        assert_relative_eq!(p, 0.55, epsilon = 1e-6);
    }

    #[test]
    fn output_clamps_at_rating() {
        // 45/50 MW dispatch with 5 % droop: a 1 % dip asks for 0.2 pu more
        let tgov = GovernorParams::Tgov1(Default::default());
        let trace = settle(&tgov, 0.9, -0.01, 0.05, 200.0);
        assert!(trace.iter().all(|&p| p <= 1.0));
        assert_relative_eq!(*trace.last().unwrap(), 1.0, epsilon = 1e-9);
        // over-frequency drives the valve shut but never negative
        let trace = settle(&tgov, 0.1, 0.05, 0.05, 200.0);
        assert!(trace.iter().all(|&p| p >= 0.0));
        assert_relative_eq!(*trace.last().unwrap(), 0.0, epsilon = 1e-9);
    }

    /// Time for the step response to go from 10 % to 90 % of its final change.
    fn rise_time(trace: &[f64], dt: f64) -> f64 {
        let (p0, p1) = (trace[0], *trace.last().unwrap());
        let at = |frac: f64| trace.iter().position(|&p| (p - p0) >= frac * (p1 - p0)).unwrap() as f64 * dt;
        at(0.9) - at(0.1)
    }

    #[test]
    fn rise_times_match_analytic_step_responses() {
        // small step, far from the limits, so both blocks stay linear
        let (droop, df) = (0.05, -0.001);
        let tgov = settle(&GovernorParams::Tgov1(Default::default()), 0.5, df, droop, 120.0);
        let ieee = settle(&GovernorParams::Ieeeg1(Default::default()), 0.5, df, droop, 120.0);

        // oracle: closed-form responses of the cascaded first-order lags
        let lag = |taus: &[f64], t: f64| -> f64 {
            // unit step through distinct first-order lags, partial fractions
            let mut y = 1.0;
            for (i, &ti) in taus.iter().enumerate() {
                let mut c = 1.0;
                for (j, &tj) in taus.iter().enumerate() {
                    if i != j {
                        c *= ti / (ti - tj);
                    }
                }
                y -= c * libm::exp(-t / ti);
            }
            y
        };
        let tgov_oracle = |t: f64| {
            let a = 0.3;
            a * lag(&[0.5, 1.0], t) + (1.0 - a) * lag(&[0.5, 1.0, 10.0], t)
        };
        let ieee_oracle =
            |t: f64| 0.3 * lag(&[0.2, 0.3], t) + 0.4 * lag(&[0.2, 0.3, 7.0], t) + 0.3 * lag(&[0.2, 0.3, 7.0, 0.6], t);
        let dt = 0.01;
        let gain = -df / droop;
        for k in (0..12000).step_by(250) {
            let t = (k + 1) as f64 * dt;
            assert!((tgov[k] - 0.5 - gain * tgov_oracle(t)).abs() < 1e-7, "tgov t={t}");
            assert!((ieee[k] - 0.5 - gain * ieee_oracle(t)).abs() < 1e-7, "ieee t={t}");
        }
        // with these constants the reheat stage (7 s) is quicker than the
        // TGOV1 lag (10 s), so IEEEG1 rises faster
        let (rt_tgov, rt_ieee) = (rise_time(&tgov, dt), rise_time(&ieee, dt));
        assert!(rt_ieee < rt_tgov, "ieeeg1 {rt_ieee} tgov1 {rt_tgov}");
    }

    #[test]
    fn public_step_functions_agree_with_block() {
        let s = GovernorState::at_dispatch(&GovernorParams::Tgov1(Default::default()), 0.4);
        let (a, pa) = tgov1_step(&s, -0.002, &Tgov1Params::default(), 0.05, 0.01);
        let (b, pb) = block_step(&GovernorParams::Tgov1(Default::default()), &s, -0.002, 0.05, 0.01);
        assert_eq!((a, pa), (b, pb));
        let s = GovernorState::at_dispatch(&GovernorParams::Ieeeg1(Default::default()), 0.4);
        let (_, p) = ieeeg1_step(&s, -0.002, &Ieeeg1Params::default(), 0.2, 0.01);
        assert!(p > 0.4);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = GovernorParams::Ieeeg1(Ieeeg1Params {
            k_stage: [0.5, 0.5, 0.5],
            ..Default::default()
        });
        assert!(bad.validate().is_err());
        let bad = GovernorParams::Tgov1(Tgov1Params {
            t_lag_s: 0.0,
            ..Default::default()
        });
        assert!(bad.validate().is_err());
    }
}
