//! Ensembles of fields on a shared grid, plus region masks and subsetting.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// An ordered collection of fields observed on a common [`Grid`].
///
/// Member values are stored member-major: member `i` occupies
/// `values[i * point_count .. (i + 1) * point_count]` in the grid's flat
/// point order. All values are finite and there are at least two members.
/// Ensembles are immutable after construction and cheap to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    grid: Arc<Grid>,
    values: Vec<f64>,
    n_members: usize,
    label: String,
}

impl Ensemble {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let point_count = grid.point_count();
        if values.len() % point_count != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values is not a whole number of {point_count}-point members",
                values.len()
            )));
        }
        let n_members = values.len() / point_count;
        if n_members < 2 {
            return Err(Error::TooFewMembers(n_members));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    member: idx / point_count,
                    point: idx % point_count,
                });
            }
        }
        Ok(Ensemble {
            grid,
            values,
            n_members,
            label: label.into(),
        })
    }

    /// Build from per-member rows; all rows must match the grid point count.
    pub fn from_members(
        grid: Arc<Grid>,
        members: &[Vec<f64>],
        label: impl Into<String>,
    ) -> Result<Self> {
        let point_count = grid.point_count();
        for m in members {
            if m.len() != point_count {
                return Err(Error::LengthMismatch {
                    member_len: m.len(),
                    point_count,
                });
            }
        }
        let values = members.concat();
        Ensemble::new(grid, values, label)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_members(&self) -> usize {
        self.n_members
    }

    pub fn point_count(&self) -> usize {
        self.grid.point_count()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn member(&self, i: usize) -> &[f64] {
        let g = self.point_count();
        &self.values[i * g..(i + 1) * g]
    }

    pub fn members(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.point_count())
    }

    /// Flat member-major value storage.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column of values at one grid point, across members.
    pub fn point_column(&self, point: usize) -> Vec<f64> {
        let g = self.point_count();
        (0..self.n_members)
            .map(|i| self.values[i * g + point])
            .collect()
    }

    /// Per-point mean across members.
    pub fn pointwise_mean(&self) -> Vec<f64> {
        let g = self.point_count();
        let mut mean = vec![0.0; g];
        for member in self.members() {
            for (m, v) in mean.iter_mut().zip(member) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n_members as f64;
        for m in &mut mean {
            *m *= inv;
        }
        mean
    }

    /// Per-point sample standard deviation (n - 1 in the denominator).
    pub fn pointwise_sd(&self) -> Vec<f64> {
        let g = self.point_count();
        let mean = self.pointwise_mean();
        let mut acc = vec![0.0; g];
        for member in self.members() {
            for ((a, v), m) in acc.iter_mut().zip(member).zip(&mean) {
                let d = v - m;
                *a += d * d;
            }
        }
        let inv = 1.0 / (self.n_members - 1) as f64;
        for a in &mut acc {
            *a = (*a * inv).sqrt();
        }
        acc
    }

    /// Same members restricted to the given flat point indices, on the
    /// corresponding subset grid.
    pub fn restrict_to_points(&self, indices: &[usize], label: impl Into<String>) -> Result<Self> {
        let sub_grid = Arc::new(self.grid.subset(indices)?);
        let g = self.point_count();
        let mut values = Vec::with_capacity(indices.len() * self.n_members);
        for i in 0..self.n_members {
            let base = i * g;
            values.extend(indices.iter().map(|&p| self.values[base + p]));
        }
        Ensemble::new(sub_grid, values, label)
    }
}

/// Per-point integer region labels over a grid. Label 0 means unassigned;
/// the nonzero labels must form the contiguous set `1..=max`.
#[derive(Debug, Clone)]
pub struct RegionMask {
    grid: Arc<Grid>,
    region_ids: Vec<u32>,
}

impl RegionMask {
    pub fn new(grid: Arc<Grid>, region_ids: Vec<u32>) -> Result<Self> {
        if region_ids.len() != grid.point_count() {
            return Err(Error::InvalidMask(format!(
                "{} labels for {} grid points",
                region_ids.len(),
                grid.point_count()
            )));
        }
        let max = region_ids.iter().copied().max().unwrap_or(0);
        if max > 4096 {
            return Err(Error::InvalidMask(format!("region id {max} too large")));
        }
        let mut seen = vec![false; max as usize + 1];
        for &id in &region_ids {
            seen[id as usize] = true;
        }
        if let Some(missing) = (1..=max).find(|&id| !seen[id as usize]) {
            return Err(Error::InvalidMask(format!(
                "region ids not contiguous: {missing} missing below max {max}"
            )));
        }
        Ok(RegionMask { grid, region_ids })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn region_ids(&self) -> &[u32] {
        &self.region_ids
    }

    /// Distinct nonzero region labels, ascending.
    pub fn regions(&self) -> Vec<u32> {
        let max = self.region_ids.iter().copied().max().unwrap_or(0);
        (1..=max).collect()
    }

    /// Flat point indices belonging to `region`, ascending.
    pub fn point_indices(&self, region: u32) -> Vec<usize> {
        self.region_ids
            .iter()
            .enumerate()
            .filter(|(_, &id)| id == region)
            .map(|(i, _)| i)
            .collect()
    }

    /// Mask over the subset grid of `region`, labeling every retained point
    /// with `region`. Lets region operations compose with themselves.
    pub fn restrict(&self, region: u32) -> Result<RegionMask> {
        let indices = self.point_indices(region);
        if indices.is_empty() {
            return Err(Error::EmptyRegion(region));
        }
        let sub_grid = Arc::new(self.grid.subset(&indices)?);
        // Labels 1..region-1 would be absent on the subset, so relabel to 1.
        RegionMask::new(sub_grid, vec![1; indices.len()])
    }
}

/// Guard used by every two-sample operation: the two ensembles must live on
/// identical grids (dims, coordinates, weights).
pub fn validate_pair(a: &Ensemble, b: &Ensemble) -> Result<()> {
    a.grid().check_same(b.grid())
}

/// Restrict an ensemble to one region of a mask. Quadrature weights are
/// renormalized to sum to 1 over the retained points; the member count is
/// unchanged.
pub fn subset_region(ens: &Ensemble, mask: &RegionMask, region: u32) -> Result<Ensemble> {
    ens.grid().check_same(mask.grid())?;
    let indices = mask.point_indices(region);
    if indices.is_empty() {
        return Err(Error::EmptyRegion(region));
    }
    let label = format!("{} [region {region}]", ens.label());
    ens.restrict_to_points(&indices, label)
}
