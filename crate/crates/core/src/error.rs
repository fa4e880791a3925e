use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    /// A parameter block violates one of its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),

    /// The wake cascade produced a non-positive inflow.
    #[error("degenerate wake at turbine {turbine}: inflow {v_mps} m/s")]
    DegenerateWake { turbine: usize, v_mps: f64 },

    /// No operating point delivers the requested de-loaded power.
    #[error("de-loading margin {dm} infeasible at {v_mps} m/s")]
    InfeasibleMargin { dm: f64, v_mps: f64 },

    #[error("root-finding failed: {0}")]
    Convergence(&'static str),

    /// Every multistart point of the farm optimizer ended infeasible.
    #[error("no feasible operating point found")]
    NoFeasiblePoint,

    #[error("initial power imbalance of {residual_mw} MW")]
    Unbalanced { residual_mw: f64 },

    #[error("numerical instability at step {step} (t = {t_s} s)")]
    Instability { step: usize, t_s: f64 },

    #[error("rotor speed {omega_pu} pu of turbine {turbine} left its band at t = {t_s} s")]
    RotorSpeed { turbine: usize, omega_pu: f64, t_s: f64 },
}
