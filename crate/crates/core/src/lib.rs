//! De-loading optimization for wake-coupled wind turbine rows and a
//! copper-plate frequency simulator for the resulting kinetic-energy reserve.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. All transcendental math goes through `libm`, so results are
//! bit-identical across platforms and feature sets.
//!
//! Module map:
//!
//! - [`aero`]: Cp/Ct surfaces, power, thrust, operating zones and MPPT.
//! - [`wake`]: stationary row-wake cascade.
//! - [`deload`]: closed-form overspeed and pitch-only de-loading.
//! - [`farmopt`]: row-level kinetic-energy maximization by pattern search.
//! - [`gridsim`]: governors, swing equation, turbine release dynamics.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod aero;
pub mod deload;
mod error;
pub mod farmopt;
pub mod gridsim;
pub mod wake;

pub use error::{Error, Result};

/// Bisection on `[lo, hi]` for a sign change of `f`, to absolute tolerance `tol`.
///
/// Requires `f(lo)` and `f(hi)` to bracket a root (opposite signs or zero).
pub(crate) fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if (f_lo > 0.0) == (f_hi > 0.0) || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    // 200 halvings exhaust f64 resolution on any finite interval.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Absolute tolerance used by every root-finder in the crate.
pub const ROOT_TOL: f64 = 1e-10;
