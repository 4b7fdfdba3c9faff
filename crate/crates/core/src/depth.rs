//! Integrated Tukey depth of fields with respect to a reference ensemble.
//!
//! At each grid point the reference ensemble induces a marginal empirical
//! distribution; the univariate Tukey depth of a value `x` against it is
//! `1 - |1 - 2 F(x)|` where `F(x)` is the fraction of reference values `<= x`
//! (weak inequality, so tied values share distribution mass). The integrated
//! depth of a field is the quadrature-weighted sum of its pointwise depths
//! over the grid. Depths depend only on pointwise ranks, which makes them
//! invariant under any strictly increasing transform applied at each point.
//!
//! [`SortedReference`] sorts each reference column once and answers every
//! depth query by binary search, so a full profile costs
//! `O(G (n + q) log n)` for `G` points, `n` reference members and `q` query
//! members. Build it explicitly when many profiles share one reference.

use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};

/// Per-member integrated depths of one sample with respect to a reference
/// ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    values: Vec<f64>,
    reference_label: String,
}

impl DepthProfile {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn reference_label(&self) -> &str {
        &self.reference_label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Univariate Tukey depth of `value` within `reference_values`:
/// `1 - |1 - 2 F(value)|` with `F` the empirical fraction of reference
/// values `<= value`.
///
/// For a degenerate reference column (all values equal to `v`) the formula
/// is applied literally: `F` jumps from 0 to 1 at `v`, so the depth is 0
/// everywhere, including at `v` itself.
pub fn pointwise_tukey_depth(value: f64, reference_values: &[f64]) -> Result<f64> {
    if reference_values.is_empty() {
        return Err(Error::EmptyReference);
    }
    let count = reference_values.iter().filter(|&&r| r <= value).count();
    Ok(depth_from_fraction(count as f64 / reference_values.len() as f64))
}

#[inline]
fn depth_from_fraction(f: f64) -> f64 {
    1.0 - (1.0 - 2.0 * f).abs()
}

/// Reference ensemble with every point column pre-sorted for binary-search
/// depth queries. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct SortedReference {
    /// Point-major storage: column `g` is `cols[g * n .. (g + 1) * n]`, sorted.
    cols: Vec<f64>,
    n: usize,
    point_count: usize,
    weights: Vec<f64>,
    label: String,
}

impl SortedReference {
    pub fn new(reference: &Ensemble) -> SortedReference {
        let n = reference.n_members();
        let point_count = reference.point_count();
        let values = reference.values();
        let mut cols = vec![0.0; n * point_count];
        for i in 0..n {
            let row = &values[i * point_count..(i + 1) * point_count];
            for (g, v) in row.iter().enumerate() {
                cols[g * n + i] = *v;
            }
        }
        cols.par_chunks_mut(n).for_each(|col| {
            col.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values"));
        });
        SortedReference {
            cols,
            n,
            point_count,
            weights: reference.grid().weights().to_vec(),
            label: reference.label().to_string(),
        }
    }

    pub fn n_members(&self) -> usize {
        self.n
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Integrated Tukey depth of one field against this reference. The
    /// weighted reduction runs in ascending point order, so results are
    /// bit-identical regardless of how callers parallelize.
    pub fn integrated_depth(&self, member: &[f64]) -> Result<f64> {
        if member.len() != self.point_count {
            return Err(Error::LengthMismatch {
                member_len: member.len(),
                point_count: self.point_count,
            });
        }
        let n = self.n;
        let inv_n = 1.0 / n as f64;
        let mut acc = 0.0;
        for (g, (&x, &w)) in member.iter().zip(&self.weights).enumerate() {
            let col = &self.cols[g * n..(g + 1) * n];
            let count = col.partition_point(|&v| v <= x);
            acc += w * depth_from_fraction(count as f64 * inv_n);
        }
        Ok(acc)
    }

    /// Integrated depths of every member of `sample`, in member order.
    pub fn profile(&self, sample: &Ensemble) -> Result<DepthProfile> {
        if sample.point_count() != self.point_count {
            return Err(Error::LengthMismatch {
                member_len: sample.point_count(),
                point_count: self.point_count,
            });
        }
        let values: Result<Vec<f64>> = sample
            .members()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|m| self.integrated_depth(m))
            .collect();
        Ok(DepthProfile {
            values: values?,
            reference_label: self.label.clone(),
        })
    }
}

/// Integrated Tukey depth of a single field against a reference ensemble.
pub fn integrated_depth(member: &[f64], reference: &Ensemble) -> Result<f64> {
    SortedReference::new(reference).integrated_depth(member)
}

/// Integrated depths of every member of `sample` with respect to
/// `reference`. The sample may alias the reference, which yields the
/// within-sample depths.
pub fn depth_profile(sample: &Ensemble, reference: &Ensemble) -> Result<DepthProfile> {
    crate::ensemble::validate_pair(sample, reference)?;
    SortedReference::new(reference).profile(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    #[test]
    fn pointwise_hand_values() {
        // F(3) over {1..5} is 0.6, depth 0.8.
        assert_eq!(
            pointwise_tukey_depth(3.0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
            0.8
        );
        // F(2) over {1..4} is exactly one half: maximal depth.
        assert_eq!(pointwise_tukey_depth(2.0, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        // A value above every reference value has zero depth.
        assert_eq!(pointwise_tukey_depth(10.0, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        // Below every reference value: F = 0, depth 0.
        assert_eq!(pointwise_tukey_depth(-1.0, &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_rejects_empty_reference() {
        assert!(matches!(
            pointwise_tukey_depth(0.0, &[]),
            Err(Error::EmptyReference)
        ));
    }

    #[test]
    fn degenerate_column_follows_formula() {
        // All reference values equal: F jumps 0 -> 1, depth 0 everywhere.
        assert_eq!(pointwise_tukey_depth(5.0, &[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(pointwise_tukey_depth(4.0, &[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(pointwise_tukey_depth(6.0, &[5.0, 5.0, 5.0]).unwrap(), 0.0);
    }

    fn constant_fields(grid: &Arc<Grid>, levels: &[f64]) -> Ensemble {
        let g = grid.point_count();
        let values: Vec<f64> = levels.iter().flat_map(|&v| vec![v; g]).collect();
        Ensemble::new(grid.clone(), values, "const").unwrap()
    }

    #[test]
    fn weighted_integration() {
        // 2-point grid with weights [0.25, 0.75]; pointwise depths 0.8 and 0.4.
        let grid = Arc::new(
            Grid::with_weights(vec![2], vec![vec![0.0, 1.0]], vec![0.25, 0.75]).unwrap(),
        );
        // Reference columns {1..5} at point 0 and {1..5} at point 1; query
        // value 3 at point 0 (depth .8) and 5 at point 1 (depth... F=1 -> 0).
        // Use explicit columns to hit depths 0.8 and 0.4:
        // point 0: F(3)=3/5 -> 0.8; point 1: F(4)=4/5 -> 0.4.
        let members: Vec<Vec<f64>> = (1..=5).map(|k| vec![k as f64, k as f64]).collect();
        let reference = Ensemble::from_members(grid, &members, "ref").unwrap();
        let d = integrated_depth(&[3.0, 4.0], &reference).unwrap();
        assert!((d - (0.25 * 0.8 + 0.75 * 0.4)).abs() < 1e-15);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn median_member_attains_maximal_depth() {
        let grid = Grid::unit_square(3, 3);
        let ens = constant_fields(&grid, &[0.0, 1.0, 2.0]);
        let profile = depth_profile(&ens, &ens).unwrap();
        let d = profile.values();
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(d[1], max);
        // Under the weak-inequality convention the depths are
        // 1 - |1 - 2k/3| for ranks k = 1, 2, 3.
        assert!((d[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d[2] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn five_member_rank_ladder() {
        // Depths of n distinct constant fields against themselves follow
        // 1 - |1 - 2k/n| on the rank ladder k = 1..n.
        let grid = Grid::unit_square(2, 2);
        let ens = constant_fields(&grid, &[10.0, 20.0, 30.0, 40.0, 50.0]);
        let profile = depth_profile(&ens, &ens).unwrap();
        let expect = [0.4, 0.8, 0.8, 0.4, 0.0];
        for (d, e) in profile.values().iter().zip(expect) {
            assert!((d - e).abs() < 1e-15, "{d} vs {e}");
        }
    }

    #[test]
    fn member_above_reference_has_zero_depth() {
        let grid = Grid::unit_square(4, 4);
        let ens = constant_fields(&grid, &[0.0, 1.0, 2.0]);
        let high = vec![3.0; grid.point_count()];
        assert_eq!(integrated_depth(&high, &ens).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_central_field_has_depth_one() {
        // A member sitting at the pointwise half-rank of the reference (here
        // second of four at every point) has F = 1/2 and depth 1 everywhere,
        // so its integrated depth is exactly 1: maximality at the center.
        let grid = Grid::unit_square(2, 3);
        let members: Vec<Vec<f64>> = vec![
            vec![1.0, 5.0, 2.0, 8.0, 0.0, 3.0],
            vec![2.0, 6.0, 3.0, 9.0, 1.0, 4.0],
            vec![3.0, 7.0, 4.0, 10.0, 2.0, 5.0],
            vec![4.0, 8.0, 5.0, 11.0, 3.0, 6.0],
        ];
        let reference = Ensemble::from_members(grid, &members, "ref").unwrap();
        let central = vec![2.0, 6.0, 3.0, 9.0, 1.0, 4.0];
        let d = integrated_depth(&central, &reference).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn profile_values_in_unit_interval() {
        let grid = Grid::unit_square(3, 2);
        let members: Vec<Vec<f64>> = (0..7)
            .map(|i| (0..6).map(|g| ((i * 7 + g * 3) % 11) as f64).collect())
            .collect();
        let ens = Ensemble::from_members(grid, &members, "e").unwrap();
        for d in depth_profile(&ens, &ens).unwrap().values() {
            assert!((0.0..=1.0).contains(d));
        }
    }

    #[test]
    fn affine_transform_leaves_profile_unchanged() {
        let grid = Grid::unit_square(2, 2);
        let members: Vec<Vec<f64>> = vec![
            vec![0.3, -1.0, 2.0, 0.0],
            vec![1.3, 0.5, -2.0, 0.25],
            vec![-0.3, 1.5, 0.7, 0.5],
            vec![0.9, 0.1, 0.2, -0.5],
        ];
        let sample = Ensemble::from_members(grid.clone(), &members, "s").unwrap();
        let transformed: Vec<Vec<f64>> = members
            .iter()
            .map(|m| m.iter().map(|v| 2.0 * v + 5.0).collect())
            .collect();
        let sample_t = Ensemble::from_members(grid, &transformed, "t").unwrap();
        let a = depth_profile(&sample, &sample).unwrap();
        let b = depth_profile(&sample_t, &sample_t).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let grid = Grid::unit_square(2, 2);
        let ens = constant_fields(&grid, &[0.0, 1.0]);
        assert!(matches!(
            integrated_depth(&[0.0; 3], &ens),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
