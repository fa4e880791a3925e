//! Single-turbine de-loading below the maximum-power point.
//!
//! Overspeed de-loading keeps zero pitch and moves the rotor onto the
//! high-speed side of the Cp curve, which also stores extra rotor energy.
//! Pitch-only de-loading keeps the MPPT speed and feathers the blades.

use crate::aero::{OperatingPoint, Turbine};
use crate::farmopt::{self, SolverOptions};
use crate::{bisect, Error, Result, ROOT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Strategy {
    Overspeed,
    PitchOnly,
    /// Rotor speed and pitch chosen together to maximize stored energy.
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeloadTarget {
    /// De-loading margin, fraction of MPPT power withheld.
    pub dm: f64,
    pub v_mps: f64,
    pub strategy: Strategy,
}

impl DeloadTarget {
    pub fn apply(&self, turbine: &Turbine) -> Result<OperatingPoint> {
        match self.strategy {
            Strategy::Overspeed => deload_overspeed(turbine, self.v_mps, self.dm),
            Strategy::PitchOnly => deload_pitch(turbine, self.v_mps, self.dm),
            Strategy::Combined => farmopt::solve_single(turbine, self.v_mps, self.dm, &SolverOptions::default()),
        }
    }
}

pub(crate) fn check_margin(dm: f64) -> Result<()> {
    if !(0.0..1.0).contains(&dm) {
        return Err(Error::Domain { what: "de-loading margin", value: dm });
    }
    Ok(())
}

/// Zero-pitch de-loading on the high-λ branch: the rotor speed above the
/// MPPT speed at which power equals `(1 − dm)·P_opt`.
pub fn deload_overspeed(turbine: &Turbine, v_mps: f64, dm: f64) -> Result<OperatingPoint> {
    check_margin(dm)?;
    let opt = turbine.mppt(v_mps)?;
    if dm == 0.0 {
        return Ok(opt);
    }
    let omega_max = turbine.params().omega_max_pu;
    if opt.beta_deg > 0.0 || opt.omega_pu >= omega_max {
        return Err(Error::InfeasibleMargin { dm, v_mps });
    }
    let target = (1.0 - dm) * opt.p_mech_w;
    let residual = |w: f64| turbine.mech_power(v_mps, w, 0.0).unwrap_or(0.0) - target;
    if residual(omega_max) > 0.0 {
        return Err(Error::InfeasibleMargin { dm, v_mps });
    }
    let omega = bisect(residual, opt.omega_pu, omega_max, ROOT_TOL).ok_or(Error::InfeasibleMargin { dm, v_mps })?;
    turbine.operating_point(v_mps, omega, 0.0)
}

/// De-loading by pitch alone at the MPPT rotor speed.
pub fn deload_pitch(turbine: &Turbine, v_mps: f64, dm: f64) -> Result<OperatingPoint> {
    check_margin(dm)?;
    let opt = turbine.mppt(v_mps)?;
    if dm == 0.0 {
        return Ok(opt);
    }
    let target = (1.0 - dm) * opt.p_mech_w;
    let beta = turbine
        .pitch_for_power(v_mps, opt.omega_pu, target)
        .map_err(|_| Error::Convergence("pitch-only de-loading"))?;
    turbine.operating_point(v_mps, opt.omega_pu, beta)
}
