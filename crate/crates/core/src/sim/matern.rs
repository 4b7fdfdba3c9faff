//! The Matérn correlation family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a stationary Matérn process: marginal standard deviation,
/// correlation range (in grid coordinate units), and smoothness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub sigma: f64,
    pub range_r: f64,
    pub smoothness_nu: f64,
}

impl MaternParams {
    pub fn new(sigma: f64, range_r: f64, smoothness_nu: f64) -> Result<Self> {
        let p = MaternParams {
            sigma,
            range_r,
            smoothness_nu,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma", self.sigma),
            ("range_r", self.range_r),
            ("smoothness_nu", self.smoothness_nu),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "matern {name} must be a positive real, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn correlation(&self, distance: f64) -> Result<f64> {
        matern_correlation(distance, self.range_r, self.smoothness_nu)
    }

    pub fn covariance(&self, distance: f64) -> Result<f64> {
        Ok(self.sigma * self.sigma * self.correlation(distance)?)
    }
}

/// Matérn correlation at distance `d` with range `r` and smoothness `nu`:
/// `2^(1-nu) / Gamma(nu) * (d/r)^nu * K_nu(d/r)`, which is 1 at `d = 0` and
/// decreases strictly to 0. `nu = 1/2` reduces to the exponential kernel
/// `exp(-d/r)`; `nu = 3/2` to `(1 + d/r) exp(-d/r)`.
pub fn matern_correlation(d: f64, r: f64, nu: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "matern range must be positive, got {r}"
        )));
    }
    if !(nu.is_finite() && nu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "matern smoothness must be positive, got {nu}"
        )));
    }
    if d < 0.0 || !d.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "distance must be a nonnegative real, got {d}"
        )));
    }
    let x = d / r;
    // x^nu underflows against K_nu's pole as x -> 0; the limit is 1.
    if x < 1e-12 {
        return Ok(1.0);
    }
    let (_i_nu, k_nu) = puruspe::Inu_Knu(nu, x);
    let value = 2.0_f64.powf(1.0 - nu) / puruspe::gamma(nu) * x.powf(nu) * k_nu;
    Ok(value.clamp(0.0, 1.0))
}
