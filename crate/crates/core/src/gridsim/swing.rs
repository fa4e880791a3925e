//! Aggregated swing equation of a copper-plate system.

use super::rk4;

/// `dΔf/dt` of `2·H·dΔf/dt = p_gen − p_load − D·Δf`, all in system per-unit.
pub fn swing_rate(f_dev_pu: f64, p_gen_pu: f64, p_load_pu: f64, h_sys_s: f64, d_load: f64) -> f64 {
    (p_gen_pu - p_load_pu - d_load * f_dev_pu) / (2.0 * h_sys_s)
}

/// One step of the swing equation with injections held over the step.
pub fn swing_step(f_dev_pu: f64, p_gen_pu: f64, p_load_pu: f64, h_sys_s: f64, d_load: f64, dt: f64) -> f64 {
    debug_assert!(h_sys_s > 0.0);
    let mut x = [f_dev_pu];
    rk4(&mut x, dt, |y, dy| dy[0] = swing_rate(y[0], p_gen_pu, p_load_pu, h_sys_s, d_load));
    x[0]
}
