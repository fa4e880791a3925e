//! Static aerodynamics of one variable-speed, pitch-regulated turbine.
//!
//! Rotor speed is carried in per-unit of the rated mechanical speed and pitch
//! in degrees. Power follows `P = ½ρπR²v³·Cp(λ, β)` and thrust
//! `T = ½ρπR²v²·Ct`, with `Ct` recovered from `Cp` through the actuator-disc
//! relation `Cp = ½(1 + √(1 − Ct))·Ct`, valid for `Ct ≤ 8/9`.

use core::f64::consts::PI;

use crate::{bisect, Error, Result, ROOT_TOL};

/// Betz limit, the largest admissible power coefficient.
pub const CP_MAX: f64 = 16.0 / 27.0;
/// Thrust coefficient at the Betz limit.
pub const CT_MAX: f64 = 8.0 / 9.0;

/// Pitch scan resolution used to bracket the smallest pitch root, degrees.
const PITCH_SCAN_STEP_DEG: f64 = 0.1;

/// Coefficients of the exponential power-coefficient fit
///
/// `Cp = c1·(c2/λi − c3·β − c4)·exp(−c5/λi) + c6·λ`,
/// `1/λi = 1/(λ + 0.08β) − 0.035/(β³ + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct CpCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl Default for CpCoeffs {
    fn default() -> Self {
        Self {
            c1: 0.5176,
            c2: 116.0,
            c3: 0.4,
            c4: 5.0,
            c5: 21.0,
            c6: 0.0068,
        }
    }
}

impl CpCoeffs {
    /// Raw fit value, unclamped. Returns `None` where `1/λi ≤ 0`, i.e. outside
    /// the region the fit describes.
    fn raw(&self, lambda: f64, beta_deg: f64) -> Option<f64> {
        let inv_li = 1.0 / (lambda + 0.08 * beta_deg) - 0.035 / (beta_deg * beta_deg * beta_deg + 1.0);
        if !(inv_li > 0.0) {
            return None;
        }
        let body = self.c2 * inv_li - self.c3 * beta_deg - self.c4;
        Some(self.c1 * body * libm::exp(-self.c5 * inv_li) + self.c6 * lambda)
    }
}

/// Physical and limit constants of one turbine.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct TurbineParams {
    pub radius_m: f64,
    pub air_density: f64,
    /// Normalized inertia H on the machine base, seconds.
    pub inertia_s: f64,
    pub rated_power_w: f64,
    pub omega_min_pu: f64,
    pub omega_max_pu: f64,
    /// Mechanical rotor speed that defines 1.0 pu, rad/s.
    pub omega_rated_radps: f64,
    pub beta_max_deg: f64,
    pub v_cutin_mps: f64,
    pub v_cutout_mps: f64,
    pub cp_coeffs: CpCoeffs,
}

/// 5 MW class reference machine, rated rotor speed 12.1 rpm.
impl Default for TurbineParams {
    fn default() -> Self {
        Self {
            radius_m: 63.0,
            air_density: 1.225,
            inertia_s: 5.0,
            rated_power_w: 5.0e6,
            omega_min_pu: 6.9 / 12.1,
            omega_max_pu: 1.0,
            omega_rated_radps: 12.1 * 2.0 * PI / 60.0,
            beta_max_deg: 25.0,
            v_cutin_mps: 3.0,
            v_cutout_mps: 25.0,
            cp_coeffs: CpCoeffs::default(),
        }
    }
}

impl TurbineParams {
    pub fn validate(&self) -> Result<()> {
        let checks: [(bool, &'static str); 8] = [
            (self.radius_m > 0.0, "radius_m must be > 0"),
            (self.air_density > 0.0, "air_density must be > 0"),
            (self.inertia_s > 0.0, "inertia_s must be > 0"),
            (self.rated_power_w > 0.0, "rated_power_w must be > 0"),
            (
                self.omega_min_pu > 0.0 && self.omega_min_pu < self.omega_max_pu,
                "require 0 < omega_min_pu < omega_max_pu",
            ),
            (self.omega_rated_radps > 0.0, "omega_rated_radps must be > 0"),
            (self.beta_max_deg > 0.0, "beta_max_deg must be > 0"),
            (
                self.v_cutin_mps > 0.0 && self.v_cutin_mps < self.v_cutout_mps,
                "require 0 < v_cutin_mps < v_cutout_mps",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg));
            }
        }
        Ok(())
    }

    /// Swept area times `½ρ`, so that `P = k·v³·Cp`.
    pub fn power_constant(&self) -> f64 {
        0.5 * self.air_density * PI * self.radius_m * self.radius_m
    }
}

/// One turbine's steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatingPoint {
    pub v_mps: f64,
    pub omega_pu: f64,
    pub beta_deg: f64,
    pub lambda: f64,
    pub cp: f64,
    pub ct: f64,
    pub p_mech_w: f64,
    /// `H·ω²`, per-unit seconds.
    pub e_kin_pus: f64,
}

/// Operating zones of the maximum-power characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Zone {
    /// Rotor held at minimum speed.
    MinSpeed = 1,
    /// Variable-speed tracking of the Cp optimum.
    Tracking = 2,
    /// Rotor held at maximum speed below rated power.
    MaxSpeed = 3,
    /// Pitch limits power to rating.
    RatedPower = 4,
}

impl Zone {
    pub fn id(self) -> u8 {
        self as u8
    }
}

/// Outcome of a pitch search that failed to meet the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchMiss {
    /// Pitch with the largest power found by the scan.
    pub best_beta_deg: f64,
    pub best_power_w: f64,
}

/// `Cp = ½(1 + √(1 − Ct))·Ct` on `0 ≤ Ct ≤ 8/9`.
pub fn cp_from_ct(ct: f64) -> Result<f64> {
    if !(0.0..=CT_MAX).contains(&ct) {
        return Err(Error::Domain { what: "thrust coefficient", value: ct });
    }
    // rounding can land one ulp above the Betz limit at ct = 8/9
    Ok((0.5 * (1.0 + libm::sqrt(1.0 - ct)) * ct).min(CP_MAX))
}

/// Inverse of [`cp_from_ct`] on `0 ≤ Cp ≤ 16/27`, by bisection.
pub fn ct_from_cp(cp: f64) -> Result<f64> {
    if !(0.0..=CP_MAX).contains(&cp) {
        return Err(Error::Domain { what: "power coefficient", value: cp });
    }
    if cp == 0.0 {
        return Ok(0.0);
    }
    // The relation is flat at the Betz point, so the inverse is only
    // √ε-accurate there; snap the last few ulps onto the endpoint.
    if cp >= cp_from_ct(CT_MAX)? - 4.0 * f64::EPSILON {
        return Ok(CT_MAX);
    }
    bisect(
        |ct| 0.5 * (1.0 + libm::sqrt(1.0 - ct)) * ct - cp,
        0.0,
        CT_MAX,
        ROOT_TOL,
    )
    .ok_or(Error::Convergence("thrust coefficient inversion"))
}

/// A validated turbine with its Cp optimum precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct Turbine {
    params: TurbineParams,
    lambda_opt: f64,
    cp_opt: f64,
}

impl Turbine {
    pub fn new(params: TurbineParams) -> Result<Self> {
        params.validate()?;
        let coeffs = params.cp_coeffs;
        let cp0 = |l: f64| coeffs.raw(l, 0.0).unwrap_or(0.0).clamp(0.0, CP_MAX);
        let lambda_opt = golden_max(cp0, 1e-3, 20.0, 1e-12);
        let cp_opt = cp0(lambda_opt);
        if !(cp_opt > 0.0) {
            return Err(Error::InvalidParams("Cp surface has no positive maximum at zero pitch"));
        }
        Ok(Self {
            params,
            lambda_opt,
            cp_opt,
        })
    }

    pub fn params(&self) -> &TurbineParams {
        &self.params
    }

    /// Tip speed ratio maximizing Cp at zero pitch.
    pub fn lambda_opt(&self) -> f64 {
        self.lambda_opt
    }

    pub fn cp_opt(&self) -> f64 {
        self.cp_opt
    }

    pub fn tip_speed_ratio(&self, omega_pu: f64, v_mps: f64) -> Result<f64> {
        if !(v_mps > 0.0) {
            return Err(Error::Domain { what: "wind speed", value: v_mps });
        }
        if !(omega_pu > 0.0) {
            return Err(Error::Domain { what: "rotor speed", value: omega_pu });
        }
        Ok(self.params.radius_m * omega_pu * self.params.omega_rated_radps / v_mps)
    }

    /// Rotor speed in pu giving tip speed ratio `lambda` at wind `v_mps`.
    pub fn omega_for_lambda(&self, lambda: f64, v_mps: f64) -> f64 {
        lambda * v_mps / (self.params.radius_m * self.params.omega_rated_radps)
    }

    /// Power coefficient, clamped to `[0, 16/27]`.
    pub fn cp(&self, lambda: f64, beta_deg: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain { what: "tip speed ratio", value: lambda });
        }
        if !(0.0..=self.params.beta_max_deg).contains(&beta_deg) {
            return Err(Error::Domain { what: "pitch angle", value: beta_deg });
        }
        let raw = self.params.cp_coeffs.raw(lambda, beta_deg).unwrap_or(0.0);
        Ok(raw.clamp(0.0, CP_MAX))
    }

    pub fn mech_power(&self, v_mps: f64, omega_pu: f64, beta_deg: f64) -> Result<f64> {
        let lambda = self.tip_speed_ratio(omega_pu, v_mps)?;
        let cp = self.cp(lambda, beta_deg)?;
        Ok(self.params.power_constant() * v_mps * v_mps * v_mps * cp)
    }

    pub fn thrust(&self, v_mps: f64, omega_pu: f64, beta_deg: f64) -> Result<f64> {
        let op = self.operating_point(v_mps, omega_pu, beta_deg)?;
        Ok(self.params.power_constant() * v_mps * v_mps * op.ct)
    }

    pub fn kinetic_energy(&self, omega_pu: f64) -> f64 {
        debug_assert!(omega_pu >= 0.0);
        self.params.inertia_s * omega_pu * omega_pu
    }

    /// Evaluates every derived quantity at `(v, ω, β)`.
    pub fn operating_point(&self, v_mps: f64, omega_pu: f64, beta_deg: f64) -> Result<OperatingPoint> {
        let lambda = self.tip_speed_ratio(omega_pu, v_mps)?;
        let cp = self.cp(lambda, beta_deg)?;
        let ct = ct_from_cp(cp)?;
        Ok(OperatingPoint {
            v_mps,
            omega_pu,
            beta_deg,
            lambda,
            cp,
            ct,
            p_mech_w: self.params.power_constant() * v_mps * v_mps * v_mps * cp,
            e_kin_pus: self.kinetic_energy(omega_pu),
        })
    }

    fn check_operating_range(&self, v_mps: f64) -> Result<()> {
        if !(self.params.v_cutin_mps..=self.params.v_cutout_mps).contains(&v_mps) {
            return Err(Error::Domain { what: "wind speed outside cut-in/cut-out", value: v_mps });
        }
        Ok(())
    }

    /// Unconstrained Cp-tracking speed and its clamp into the speed band.
    fn tracking_speed(&self, v_mps: f64) -> (f64, f64) {
        let track = self.omega_for_lambda(self.lambda_opt, v_mps);
        let clamped = track.clamp(self.params.omega_min_pu, self.params.omega_max_pu);
        (track, clamped)
    }

    pub fn zone(&self, v_mps: f64) -> Result<Zone> {
        self.check_operating_range(v_mps)?;
        let (track, omega) = self.tracking_speed(v_mps);
        if self.mech_power(v_mps, omega, 0.0)? > self.params.rated_power_w {
            return Ok(Zone::RatedPower);
        }
        Ok(if track < self.params.omega_min_pu {
            Zone::MinSpeed
        } else if track <= self.params.omega_max_pu {
            Zone::Tracking
        } else {
            Zone::MaxSpeed
        })
    }

    /// Maximum-power operating point at inflow `v_mps`.
    pub fn mppt(&self, v_mps: f64) -> Result<OperatingPoint> {
        self.check_operating_range(v_mps)?;
        let (_, omega) = self.tracking_speed(v_mps);
        let rated = self.params.rated_power_w;
        if self.mech_power(v_mps, omega, 0.0)? <= rated {
            return self.operating_point(v_mps, omega, 0.0);
        }
        let omega_max = self.params.omega_max_pu;
        if self.mech_power(v_mps, omega_max, 0.0)? >= rated {
            let beta = self
                .pitch_for_power(v_mps, omega_max, rated)
                .map_err(|_| Error::Convergence("rated-power pitch"))?;
            return self.operating_point(v_mps, omega_max, beta);
        }
        // Rated power binds below maximum speed: overspeed on the high-λ branch
        // until power falls back to rating.
        let omega = bisect(
            |w| self.mech_power(v_mps, w, 0.0).unwrap_or(0.0) - rated,
            omega,
            omega_max,
            ROOT_TOL,
        )
        .ok_or(Error::Convergence("rated-power rotor speed"))?;
        self.operating_point(v_mps, omega, 0.0)
    }

    /// Smallest pitch `β ≥ 0` with `P(v, ω, β) = target_w`.
    ///
    /// Pitch is scanned upward in fixed steps until the power residual
    /// changes sign, then the bracket is bisected.
    pub fn pitch_for_power(
        &self,
        v_mps: f64,
        omega_pu: f64,
        target_w: f64,
    ) -> core::result::Result<f64, PitchMiss> {
        let power = |b: f64| self.mech_power(v_mps, omega_pu, b).unwrap_or(0.0);
        let beta_max = self.params.beta_max_deg;
        let mut b_lo = 0.0;
        let mut p_lo = power(0.0);
        let mut miss = PitchMiss {
            best_beta_deg: 0.0,
            best_power_w: p_lo,
        };
        if p_lo == target_w {
            return Ok(0.0);
        }
        let steps = libm::ceil(beta_max / PITCH_SCAN_STEP_DEG) as usize;
        for k in 1..=steps {
            let b_hi = if k == steps {
                beta_max
            } else {
                k as f64 * PITCH_SCAN_STEP_DEG
            };
            let p_hi = power(b_hi);
            if p_hi > miss.best_power_w {
                miss = PitchMiss {
                    best_beta_deg: b_hi,
                    best_power_w: p_hi,
                };
            }
            if (p_lo - target_w) * (p_hi - target_w) <= 0.0 {
                return bisect(|b| power(b) - target_w, b_lo, b_hi, ROOT_TOL).ok_or(miss);
            }
            b_lo = b_hi;
            p_lo = p_hi;
        }
        Err(miss)
    }
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
