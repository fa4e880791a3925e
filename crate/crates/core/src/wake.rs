//! Stationary wake model for a single row aligned with the wind.
//!
//! Each turbine's inflow follows from its upstream neighbour:
//! `v[i+1] = v[i] + k'·(v_free − v[i]) − k·v_free·Ct[i]`.

use alloc::vec::Vec;

use crate::aero::{OperatingPoint, Turbine, CT_MAX};
use crate::{Error, Result};

/// Slack allowed on `v_i ≤ v_free` for values produced by the cascade itself.
const INFLOW_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct WakeParams {
    /// Recovery toward the free stream per turbine spacing.
    pub k_prime: f64,
    /// Deficit per unit thrust coefficient.
    pub k: f64,
}

impl Default for WakeParams {
    fn default() -> Self {
        Self { k_prime: 0.35, k: 0.1 }
    }
}

impl WakeParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.k && self.k < self.k_prime && self.k_prime < 1.0) {
            return Err(Error::InvalidParams("wake requires 0 < k < k_prime < 1"));
        }
        Ok(())
    }

    /// Limit of the cascade when every turbine has the same thrust coefficient.
    pub fn fixed_point(&self, v_free: f64, ct: f64) -> f64 {
        v_free * (self.k_prime - self.k * ct) / self.k_prime
    }
}

/// Inflow speeds along a row; `v_mps[0]` is the free stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RowInflow {
    pub v_free_mps: f64,
    pub v_mps: Vec<f64>,
}

/// Commanded rotor speed and pitch of one turbine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub omega_pu: f64,
    pub beta_deg: f64,
}

/// Inflow of the turbine downstream of one with inflow `v_i` and thrust `ct_i`.
pub fn next_wind(v_free: f64, v_i: f64, ct_i: f64, wp: &WakeParams) -> Result<f64> {
    if !(v_free > 0.0) {
        return Err(Error::Domain { what: "free wind speed", value: v_free });
    }
    if !(v_i > 0.0 && v_i <= v_free * (1.0 + INFLOW_SLACK)) {
        return Err(Error::Domain { what: "upstream inflow", value: v_i });
    }
    if !(0.0..=CT_MAX).contains(&ct_i) {
        return Err(Error::Domain { what: "thrust coefficient", value: ct_i });
    }
    let next = v_i + wp.k_prime * (v_free - v_i) - wp.k * v_free * ct_i;
    if !(next > 0.0) {
        return Err(Error::DegenerateWake { turbine: 0, v_mps: next });
    }
    Ok(next)
}

/// Evaluates a row turbine by turbine: each operating point is taken at its
/// own inflow and its thrust coefficient sets the next inflow.
pub fn propagate_row(
    v_free: f64,
    setpoints: &[Setpoint],
    turbine: &Turbine,
    wp: &WakeParams,
) -> Result<(RowInflow, Vec<OperatingPoint>)> {
    if setpoints.is_empty() {
        return Err(Error::InvalidParams("row needs at least one turbine"));
    }
    let mut inflow = Vec::with_capacity(setpoints.len());
    let mut points = Vec::with_capacity(setpoints.len());
    let mut v = v_free;
    for (i, sp) in setpoints.iter().enumerate() {
        let op = turbine.operating_point(v, sp.omega_pu, sp.beta_deg)?;
        inflow.push(v);
        points.push(op);
        if i + 1 < setpoints.len() {
            v = next_wind(v_free, v, op.ct, wp).map_err(|e| match e {
                Error::DegenerateWake { v_mps, .. } => Error::DegenerateWake { turbine: i + 1, v_mps },
                other => other,
            })?;
        }
    }
    Ok((
        RowInflow {
            v_free_mps: v_free,
            v_mps: inflow,
        },
        points,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aero::TurbineParams;
    use approx::assert_relative_eq;

    #[test]
    fn hand_evaluated_steps() {
        let wp = WakeParams::default();
        assert_eq!(next_wind(8.0, 8.0, 0.0, &wp).unwrap(), 8.0);
        assert_relative_eq!(next_wind(8.0, 8.0, 0.8, &wp).unwrap(), 7.36, epsilon = 1e-12);
        assert_relative_eq!(next_wind(8.0, 7.36, 0.8, &wp).unwrap(), 6.944, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let wp = WakeParams::default();
        assert!(next_wind(0.0, 1.0, 0.1, &wp).is_err());
        assert!(next_wind(8.0, 9.0, 0.1, &wp).is_err());
        assert!(next_wind(8.0, 8.0, -0.1, &wp).is_err());
        // only reachable with k > k', which validate() rejects
        let harsh = WakeParams { k_prime: 0.1, k: 0.5 };
        assert!(matches!(
            next_wind(8.0, 0.5, 0.88, &harsh),
            Err(Error::DegenerateWake { .. })
        ));
        assert!(WakeParams { k_prime: 0.1, k: 0.35 }.validate().is_err());
    }

    #[test]
    fn single_and_feathered_rows() {
        let t = Turbine::new(TurbineParams::default()).unwrap();
        let wp = WakeParams::default();
        let one = [Setpoint { omega_pu: 0.8, beta_deg: 0.0 }];
        let (inflow, _) = propagate_row(8.0, &one, &t, &wp).unwrap();
        assert_eq!(inflow.v_mps, [8.0]);

        let feathered = [Setpoint { omega_pu: 1.0, beta_deg: 25.0 }; 4];
        let (inflow, ops) = propagate_row(8.0, &feathered, &t, &wp).unwrap();
        assert!(ops.iter().all(|op| op.ct == 0.0));
        assert!(inflow.v_mps.iter().all(|&v| v == 8.0));
        assert!(propagate_row(8.0, &[], &t, &wp).is_err());
    }

    #[test]
    fn less_upstream_thrust_raises_downstream_inflow() {
        let t = Turbine::new(TurbineParams::default()).unwrap();
        let wp = WakeParams::default();
        let mut row = [Setpoint { omega_pu: 0.81, beta_deg: 0.0 }; 2];
        let (base, base_ops) = propagate_row(8.0, &row, &t, &wp).unwrap();
        row[0].beta_deg = 3.0;
        let (pitched, pitched_ops) = propagate_row(8.0, &row, &t, &wp).unwrap();
        assert!(pitched_ops[0].ct < base_ops[0].ct);
        assert!(pitched.v_mps[1] > base.v_mps[1]);
        let slope = (pitched.v_mps[1] - base.v_mps[1]) / (pitched_ops[0].ct - base_ops[0].ct);
        assert_relative_eq!(slope, -wp.k * 8.0, epsilon = 1e-9);
    }

    #[test]
    fn cascade_is_order_dependent() {
        let t = Turbine::new(TurbineParams::default()).unwrap();
        let wp = WakeParams::default();
        let a = Setpoint { omega_pu: 0.81, beta_deg: 0.0 };
        let b = Setpoint { omega_pu: 0.81, beta_deg: 4.0 };
        let (fwd, _) = propagate_row(8.0, &[a, b, a], &t, &wp).unwrap();
        let (rev, _) = propagate_row(8.0, &[b, a, a], &t, &wp).unwrap();
        assert_ne!(fwd.v_mps[2], rev.v_mps[2]);
    }
}
