//! Spatial grids: discretization of the domain with per-point quadrature weights.
//!
//! A [`Grid`] is a rectangular lattice described by per-axis coordinate arrays.
//! Points are stored flat in row-major order over the axes, so for a 2-d grid
//! with dims `[d0, d1]` the point `(i, j)` has flat index `i * d1 + j`.
//! Quadrature weights are nonnegative and sum to one; integrated depths and
//! diagnostics are weighted sums over points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// How quadrature weights are derived from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every point carries weight `1 / point_count`.
    Uniform,
    /// Weight proportional to the cosine of latitude, with latitude in
    /// degrees read from axis 0. Intended for lat-lon grids where cells
    /// shrink towards the poles.
    CosLat,
    /// Weights supplied explicitly (e.g. after region subsetting).
    Explicit,
}

/// Rectangular spatial grid with coordinates and quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    weight_mode: WeightMode,
}

impl Grid {
    /// Build a grid with weights derived from `mode`.
    pub fn new(dims: Vec<usize>, coords: Vec<Vec<f64>>, mode: WeightMode) -> Result<Self> {
        let point_count = validate_axes(&dims, &coords)?;
        let weights = match mode {
            WeightMode::Uniform => uniform_weights(point_count),
            WeightMode::CosLat => coslat_weights(&dims, &coords)?,
            WeightMode::Explicit => {
                return Err(Error::InvalidGrid(
                    "explicit weight mode requires with_weights".into(),
                ))
            }
        };
        Ok(Grid {
            dims,
            coords,
            weights,
            weight_mode: mode,
        })
    }

    /// Build a grid with an explicit weight vector. Weights must be
    /// nonnegative and sum to 1 within 1e-12.
    pub fn with_weights(dims: Vec<usize>, coords: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let point_count = validate_axes(&dims, &coords)?;
        if weights.len() != point_count {
            return Err(Error::InvalidGrid(format!(
                "{} weights for {} points",
                weights.len(),
                point_count
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidGrid("weights must be finite and >= 0".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() >= WEIGHT_SUM_TOL {
            return Err(Error::InvalidGrid(format!("weights sum to {sum}, not 1")));
        }
        Ok(Grid {
            dims,
            coords,
            weights,
            weight_mode: WeightMode::Explicit,
        })
    }

    /// Uniformly weighted `nx x ny` grid on the unit square, endpoints included.
    pub fn unit_square(nx: usize, ny: usize) -> Arc<Grid> {
        let grid = Grid::new(
            vec![nx, ny],
            vec![unit_axis(nx), unit_axis(ny)],
            WeightMode::Uniform,
        )
        .expect("unit square grid is valid");
        Arc::new(grid)
    }

    /// Single-point grid; useful for scalar-valued (constant field) samples.
    pub fn single_point() -> Arc<Grid> {
        Arc::new(
            Grid::new(vec![1], vec![vec![0.0]], WeightMode::Uniform).expect("valid 1-point grid"),
        )
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_mode(&self) -> WeightMode {
        self.weight_mode
    }

    pub fn point_count(&self) -> usize {
        self.weights.len()
    }

    /// Coordinates of the flat point index, one value per axis.
    pub fn point_coord(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut out = vec![0.0; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            let d = self.dims[axis];
            out[axis] = self.coords[axis][rem % d];
            rem /= d;
        }
        out
    }

    /// Squared Euclidean distance between two flat point indices in
    /// coordinate units.
    pub fn distance_sq(&self, a: usize, b: usize) -> f64 {
        let ca = self.point_coord(a);
        let cb = self.point_coord(b);
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum()
    }

    /// Check that two grids are identical (dims, coords, weights), reporting
    /// the first differing axis. Guard used by every two-sample operation.
    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.dims.len() != other.dims.len() {
            return Err(Error::GridMismatch(format!(
                "dimension count {} vs {}",
                self.dims.len(),
                other.dims.len()
            )));
        }
        for (axis, (a, b)) in self.dims.iter().zip(&other.dims).enumerate() {
            if a != b {
                return Err(Error::GridMismatch(format!(
                    "axis {axis} has {a} points vs {b}"
                )));
            }
        }
        for (axis, (a, b)) in self.coords.iter().zip(&other.coords).enumerate() {
            if a != b {
                return Err(Error::CoordinateMismatch { axis });
            }
        }
        if self.weights != other.weights {
            return Err(Error::GridMismatch("weight mismatch".into()));
        }
        Ok(())
    }

    /// Restrict the grid to the given flat point indices (ascending), with
    /// weights renormalized to sum to 1 over the retained points.
    ///
    /// The result is a 1-d grid whose coordinate array holds the original
    /// flat indices; spatial coordinates are not meaningful on a subset.
    pub fn subset(&self, indices: &[usize]) -> Result<Grid> {
        if indices.is_empty() {
            return Err(Error::InvalidGrid("empty point subset".into()));
        }
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let mut weights: Vec<f64> = indices.iter().map(|&i| self.weights[i]).collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidGrid(
                "subset has zero total quadrature weight".into(),
            ));
        }
        for w in &mut weights {
            *w /= total;
        }
        let coords = indices.iter().map(|&i| i as f64).collect();
        Grid::with_weights(vec![indices.len()], vec![coords], weights)
    }
}

fn validate_axes(dims: &[usize], coords: &[Vec<f64>]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::InvalidGrid("no axes".into()));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidGrid("zero-length axis".into()));
    }
    if coords.len() != dims.len() {
        return Err(Error::InvalidGrid(format!(
            "{} coordinate arrays for {} axes",
            coords.len(),
            dims.len()
        )));
    }
    for (axis, (d, c)) in dims.iter().zip(coords).enumerate() {
        if c.len() != *d {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} declares {d} points but has {} coordinates",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} has non-finite coordinates"
            )));
        }
        if c.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} coordinates not strictly increasing"
            )));
        }
    }
    Ok(dims.iter().product())
}

fn uniform_weights(point_count: usize) -> Vec<f64> {
    vec![1.0 / point_count as f64; point_count]
}

fn coslat_weights(dims: &[usize], coords: &[Vec<f64>]) -> Result<Vec<f64>> {
    let lat = &coords[0];
    if lat.iter().any(|v| v.abs() > 90.0) {
        return Err(Error::InvalidGrid(
            "cosine-latitude weighting requires axis 0 in [-90, 90] degrees".into(),
        ));
    }
    let per_lat: Vec<f64> = lat
        .iter()
        .map(|v| (v.to_radians()).cos().max(0.0))
        .collect();
    let trailing: usize = dims[1..].iter().product();
    let mut weights = Vec::with_capacity(dims.iter().product());
    for w in &per_lat {
        weights.extend(std::iter::repeat(*w).take(trailing));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidGrid(
            "cosine-latitude weights are identically zero".into(),
        ));
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

fn unit_axis(n: usize) -> Vec<f64> {
    if n == 1 {
        vec![0.0]
    } else {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }
}

/// Evenly spaced cell-center coordinates over `[lo, hi]`.
pub fn cell_centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + step * (i as f64 + 0.5)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        let g = Grid::unit_square(4, 5);
        assert_eq!(g.point_count(), 20);
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn row_major_point_coord() {
        let g = Grid::new(
            vec![2, 3],
            vec![vec![0.0, 1.0], vec![10.0, 20.0, 30.0]],
            WeightMode::Uniform,
        )
        .unwrap();
        assert_eq!(g.point_coord(0), vec![0.0, 10.0]);
        assert_eq!(g.point_coord(2), vec![0.0, 30.0]);
        assert_eq!(g.point_coord(3), vec![1.0, 10.0]);
        assert_eq!(g.point_coord(5), vec![1.0, 30.0]);
    }

    #[test]
    fn rejects_unsorted_coords() {
        let err = Grid::new(vec![2], vec![vec![1.0, 1.0]], WeightMode::Uniform).unwrap_err();
        assert!(err.to_string().contains("strictly increasing"));
    }

    #[test]
    fn rejects_bad_weight_sum() {
        let err =
            Grid::with_weights(vec![2], vec![vec![0.0, 1.0]], vec![0.6, 0.6]).unwrap_err();
        assert!(err.to_string().contains("sum"));
    }

    #[test]
    fn coslat_weights_follow_latitude() {
        let g = Grid::new(
            vec![3, 2],
            vec![vec![-60.0, 0.0, 60.0], vec![0.0, 180.0]],
            WeightMode::CosLat,
        )
        .unwrap();
        let w = g.weights();
        // Equator row carries twice the weight of the 60-degree rows.
        assert!((w[2] / w[0] - 2.0).abs() < 1e-12);
        assert!((w[2] / w[4] - 2.0).abs() < 1e-12);
        let sum: f64 = w.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subset_renormalizes() {
        let g = Grid::unit_square(2, 2);
        let sub = g.subset(&[0, 3]).unwrap();
        assert_eq!(sub.point_count(), 2);
        assert_eq!(sub.weights(), &[0.5, 0.5]);
        assert_eq!(sub.dims(), &[2]);
    }

    #[test]
    fn mismatch_reports_axis() {
        let a = Grid::unit_square(32, 32);
        let b = Grid::unit_square(16, 16);
        let err = a.check_same(&b).unwrap_err();
        assert!(err.to_string().contains("axis 0"));

        let c = Grid::new(
            vec![2, 2],
            vec![vec![0.0, 2.0], vec![0.0, 1.0]],
            WeightMode::Uniform,
        )
        .unwrap();
        let d = Grid::unit_square(2, 2);
        let err = c.check_same(&d).unwrap_err();
        assert!(err.to_string().contains("coordinate mismatch"));
    }
}
