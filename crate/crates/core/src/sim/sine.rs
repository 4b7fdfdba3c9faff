//! Heterogeneous mean and scale surfaces built from separable sine waves.
//!
//! The per-axis factor is `f(u) = (kappa/2) sin(4 pi u - pi/2) + 1`; the
//! surface is the product of one factor per axis. The mean surface is the
//! product minus 1 (centered about 0) and the scale surface is the product
//! itself (centered about 1). Amplitude `kappa = 0` recovers the
//! homogeneous baseline; the scale surface stays positive for `kappa < 2`.

use crate::error::{Error, Result};
use crate::grid::Grid;

fn sine_factor(u: f64, kappa: f64) -> f64 {
    0.5 * kappa * (4.0 * std::f64::consts::PI * u - std::f64::consts::FRAC_PI_2).sin() + 1.0
}

fn product_surface(grid: &Grid, kappa: f64) -> Result<Vec<f64>> {
    if grid.ndim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "sine surfaces are defined on 2-d grids, got {} axes",
            grid.ndim()
        )));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!(
            "sine amplitude must lie in [0, 1], got {kappa}"
        )));
    }
    let f0: Vec<f64> = grid.coords()[0]
        .iter()
        .map(|&u| sine_factor(u, kappa))
        .collect();
    let f1: Vec<f64> = grid.coords()[1]
        .iter()
        .map(|&u| sine_factor(u, kappa))
        .collect();
    let mut out = Vec::with_capacity(grid.point_count());
    for a in &f0 {
        for b in &f1 {
            out.push(a * b);
        }
    }
    Ok(out)
}

/// Mean surface `f(s1) f(s2) - 1`.
pub fn sine_mean_field(grid: &Grid, kappa: f64) -> Result<Vec<f64>> {
    let mut surface = product_surface(grid, kappa)?;
    for v in &mut surface {
        *v -= 1.0;
    }
    Ok(surface)
}

/// Scale surface `f(s1) f(s2)`.
pub fn sine_sd_field(grid: &Grid, kappa: f64) -> Result<Vec<f64>> {
    product_surface(grid, kappa)
}
