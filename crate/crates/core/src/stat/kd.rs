//! The Kolmogorov depth (KD) two-sample statistic.
//!
//! With one ensemble fixed as the depth reference, every member of both
//! ensembles gets an integrated Tukey depth against it. The reference's own
//! depths, rescaled to standardized ranks, act as one empirical distribution;
//! the other sample's depths evaluated on the same rank scale act as the
//! second. The one-sided distance is the Kolmogorov distance between the two,
//! taken over the reference members. KD is the maximum of the two one-sided
//! distances obtained by letting each ensemble serve as the reference, which
//! also catches the case where one distribution nests inside the other and
//! so never looks outlying from it.

use rayon::prelude::*;

use crate::depth::SortedReference;
use crate::ensemble::{validate_pair, Ensemble};
use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::stat::{scale_factor, Method, TestResult};
use crate::stat::kolmogorov::kolmogorov_survival;

/// Kolmogorov distance between the rank distribution of `ref_depths` and the
/// empirical distribution of `other_depths`, evaluated at the reference
/// depth values. Both inputs must be sorted ascending.
///
/// Ties use the weak inequality on both sides: at each reference value `v`,
/// the distance compares `#{ref <= v}/n` with `#{other <= v}/m`.
pub(crate) fn rank_ks_distance(ref_depths: &[f64], other_depths: &[f64]) -> f64 {
    let n = ref_depths.len();
    let m = other_depths.len();
    debug_assert!(n > 0 && m > 0);
    let mut best = 0.0_f64;
    let mut i = 0;
    let mut j = 0;
    while i < n {
        let v = ref_depths[i];
        let mut i_end = i + 1;
        while i_end < n && ref_depths[i_end] <= v {
            i_end += 1;
        }
        while j < m && other_depths[j] <= v {
            j += 1;
        }
        let f = i_end as f64 / n as f64;
        let g = j as f64 / m as f64;
        best = best.max((f - g).abs());
        i = i_end;
    }
    best
}

/// One side of a KD comparison: an ensemble prepared as the depth reference,
/// with its own members' depths precomputed. Build once and reuse when many
/// samples are tested against the same reference.
#[derive(Debug, Clone)]
pub struct KdReference {
    sorted: SortedReference,
    own_depths_sorted: Vec<f64>,
}

impl KdReference {
    pub fn new(reference: &Ensemble) -> KdReference {
        let sorted = SortedReference::new(reference);
        let mut own = sorted
            .profile(reference)
            .expect("reference profiles against itself")
            .into_values();
        own.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        KdReference {
            sorted,
            own_depths_sorted: own,
        }
    }

    pub fn n_members(&self) -> usize {
        self.own_depths_sorted.len()
    }

    /// Depths of `other`'s members with respect to this reference.
    pub fn depths_of(&self, other: &Ensemble) -> Result<Vec<f64>> {
        Ok(self.sorted.profile(other)?.into_values())
    }

    /// Kolmogorov distance over this reference's members between the
    /// reference rank distribution and `other`'s depth distribution.
    pub fn one_sided_distance(&self, other: &Ensemble) -> Result<f64> {
        let mut d_other = self.depths_of(other)?;
        d_other.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(rank_ks_distance(&self.own_depths_sorted, &d_other))
    }
}

/// One-sided Kolmogorov distance with `x` as the depth reference.
pub fn k_pn_distance(x: &Ensemble, y: &Ensemble) -> Result<f64> {
    validate_pair(x, y)?;
    KdReference::new(x).one_sided_distance(y)
}

/// The KD statistic: the larger of the two one-sided distances, with each
/// ensemble in turn serving as the depth reference. Always in `[0, 1]`,
/// exactly 0 when the ensembles are identical, and symmetric in its
/// arguments.
pub fn kd_statistic(x: &Ensemble, y: &Ensemble) -> Result<f64> {
    validate_pair(x, y)?;
    let forward = KdReference::new(x).one_sided_distance(y)?;
    let backward = KdReference::new(y).one_sided_distance(x)?;
    Ok(forward.max(backward))
}

/// Sorted scaled KD values over random relabelings of the pooled members.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    values: Vec<f64>,
    permutations: usize,
    seed: u64,
}

impl NullDistribution {
    /// Scaled statistics, ascending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn permutations(&self) -> usize {
        self.permutations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Empirical distribution function of the scaled statistics.
    pub fn cdf(&self, t: f64) -> f64 {
        let count = self.values.partition_point(|&v| v <= t);
        count as f64 / self.values.len() as f64
    }

    /// Empirical quantile with linear interpolation between order statistics.
    pub fn quantile(&self, level: f64) -> f64 {
        let v = &self.values;
        let h = (v.len() - 1) as f64 * level;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(v.len() - 1);
        let frac = h - lo as f64;
        v[lo] + frac * (v[hi] - v[lo])
    }
}

/// Both ensembles pooled for permutation resampling. Point columns are
/// sorted once; evaluating KD for one relabeling then costs
/// `O(G (n + m))` plus the final rank sweep, instead of re-sorting every
/// column per permutation.
pub struct PooledPair {
    n: usize,
    m: usize,
    point_count: usize,
    weights: Vec<f64>,
    /// Point-major: member ids at point `g`, ascending by value.
    order: Vec<u32>,
    /// At each tie-group start, one past the end of the group.
    group_end: Vec<u32>,
}

impl PooledPair {
    pub fn new(x: &Ensemble, y: &Ensemble) -> Result<PooledPair> {
        validate_pair(x, y)?;
        let n = x.n_members();
        let m = y.n_members();
        let total = n + m;
        let point_count = x.point_count();
        let mut order = vec![0u32; point_count * total];
        let mut group_end = vec![0u32; point_count * total];
        let xv = x.values();
        let yv = y.values();
        let value_at = |id: usize, g: usize| -> f64 {
            if id < n {
                xv[id * point_count + g]
            } else {
                yv[(id - n) * point_count + g]
            }
        };
        order
            .par_chunks_mut(total)
            .zip(group_end.par_chunks_mut(total))
            .enumerate()
            .for_each(|(g, (ord, ends))| {
                let mut ids: Vec<u32> = (0..total as u32).collect();
                ids.sort_unstable_by(|&a, &b| {
                    value_at(a as usize, g)
                        .partial_cmp(&value_at(b as usize, g))
                        .unwrap()
                });
                ord.copy_from_slice(&ids);
                let mut pos = 0;
                while pos < total {
                    let v = value_at(ord[pos] as usize, g);
                    let mut end = pos + 1;
                    while end < total && value_at(ord[end] as usize, g) == v {
                        end += 1;
                    }
                    ends[pos] = end as u32;
                    pos = end;
                }
            });
        Ok(PooledPair {
            n,
            m,
            point_count,
            weights: x.grid().weights().to_vec(),
            order,
            group_end,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// KD for the labeling that assigns pooled member `id` to the first
    /// sample iff `is_x[id]`. Exactly `n` entries must be true.
    pub fn kd_for_labeling(&self, is_x: &[bool]) -> f64 {
        let total = self.n + self.m;
        debug_assert_eq!(is_x.len(), total);
        debug_assert_eq!(is_x.iter().filter(|&&b| b).count(), self.n);
        let inv_n = 1.0 / self.n as f64;
        let inv_m = 1.0 / self.m as f64;

        // Integrated depth of every pooled member with respect to each
        // labeled subsample, accumulated in ascending point order.
        let mut depth_wrt_x = vec![0.0; total];
        let mut depth_wrt_y = vec![0.0; total];
        for g in 0..self.point_count {
            let base = g * total;
            let order = &self.order[base..base + total];
            let ends = &self.group_end[base..base + total];
            let w = self.weights[g];
            let mut cx = 0usize;
            let mut cy = 0usize;
            let mut pos = 0usize;
            while pos < total {
                let end = ends[pos] as usize;
                for &id in &order[pos..end] {
                    if is_x[id as usize] {
                        cx += 1;
                    } else {
                        cy += 1;
                    }
                }
                let dx = w * (1.0 - (1.0 - 2.0 * cx as f64 * inv_n).abs());
                let dy = w * (1.0 - (1.0 - 2.0 * cy as f64 * inv_m).abs());
                for &id in &order[pos..end] {
                    depth_wrt_x[id as usize] += dx;
                    depth_wrt_y[id as usize] += dy;
                }
                pos = end;
            }
        }

        let split = |depths: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut xs = Vec::with_capacity(self.n);
            let mut ys = Vec::with_capacity(self.m);
            for (id, &d) in depths.iter().enumerate() {
                if is_x[id] {
                    xs.push(d);
                } else {
                    ys.push(d);
                }
            }
            xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            (xs, ys)
        };
        let (dx_x, dx_y) = split(&depth_wrt_x);
        let (dy_x, dy_y) = split(&depth_wrt_y);
        let forward = rank_ks_distance(&dx_x, &dx_y);
        let backward = rank_ks_distance(&dy_y, &dy_x);
        forward.max(backward)
    }

    /// KD under the observed labeling (first `n` pooled members are `x`).
    pub fn kd_observed(&self) -> f64 {
        let mut is_x = vec![false; self.n + self.m];
        for flag in is_x.iter_mut().take(self.n) {
            *flag = true;
        }
        self.kd_for_labeling(&is_x)
    }

    /// A uniformly random relabeling into group sizes `(n, m)`.
    fn random_labeling(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<bool> {
        use rand::seq::SliceRandom;
        let total = self.n + self.m;
        let mut ids: Vec<u32> = (0..total as u32).collect();
        let (chosen, _) = ids.partial_shuffle(rng, self.n);
        let mut is_x = vec![false; total];
        for &id in chosen.iter() {
            is_x[id as usize] = true;
        }
        is_x
    }
}

/// Scaled KD values over `permutations` random relabelings of the pooled
/// members, deterministic given the seed. Each relabeling derives its own
/// stream from `(seed, replicate index)`, so results do not depend on the
/// number of worker threads.
pub fn kd_permutation_distribution(
    x: &Ensemble,
    y: &Ensemble,
    permutations: usize,
    seed: u64,
) -> Result<NullDistribution> {
    if permutations < 99 {
        return Err(Error::TooFewPermutations(permutations));
    }
    let pooled = PooledPair::new(x, y)?;
    let factor = scale_factor(pooled.n, pooled.m);
    let mut values: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|rep| {
            let mut rng = derive_rng(seed, &[rep as u64]);
            let labeling = pooled.random_labeling(&mut rng);
            factor * pooled.kd_for_labeling(&labeling)
        })
        .collect();
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(NullDistribution {
        values,
        permutations,
        seed,
    })
}

/// How KD p-values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdMethod {
    /// Compare the scaled statistic against the Kolmogorov distribution.
    Asymptotic,
    /// Permutation p-value `(1 + #{KD_perm >= KD_obs}) / (B + 1)`.
    Permutation,
}

/// Two-sample KD test. `permutations` and `seed` are ignored by the
/// asymptotic method; the permutation method requires at least 99
/// permutations.
pub fn kd_test(
    x: &Ensemble,
    y: &Ensemble,
    method: KdMethod,
    permutations: usize,
    seed: u64,
) -> Result<TestResult> {
    validate_pair(x, y)?;
    let n = x.n_members();
    let m = y.n_members();
    let factor = scale_factor(n, m);
    match method {
        KdMethod::Asymptotic => {
            let kd = kd_statistic(x, y)?;
            let scaled = factor * kd;
            let p = kolmogorov_survival(scaled)?.max(crate::stat::P_FLOOR);
            Ok(TestResult {
                statistic: kd,
                scaled,
                p_value: p,
                method: Method::KdAsymptotic,
                n,
                m,
                permutations: None,
            })
        }
        KdMethod::Permutation => {
            if permutations < 99 {
                return Err(Error::TooFewPermutations(permutations));
            }
            let pooled = PooledPair::new(x, y)?;
            let kd = pooled.kd_observed();
            let scaled = factor * kd;
            let null = kd_permutation_distribution(x, y, permutations, seed)?;
            let at_least = null.values.len() - null.values.partition_point(|&v| v < scaled);
            let p = (1 + at_least) as f64 / (permutations + 1) as f64;
            Ok(TestResult {
                statistic: kd,
                scaled,
                p_value: p,
                method: Method::KdPermutation,
                n,
                m,
                permutations: Some(permutations),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn constant_fields(grid: &Arc<Grid>, levels: &[f64]) -> Ensemble {
        let g = grid.point_count();
        let values: Vec<f64> = levels.iter().flat_map(|&v| vec![v; g]).collect();
        Ensemble::new(grid.clone(), values, "const").unwrap()
    }

    /// Direct transcription of the rank-distance definition, as an oracle.
    fn rank_ks_brute(ref_depths: &[f64], other_depths: &[f64]) -> f64 {
        let n = ref_depths.len() as f64;
        let m = other_depths.len() as f64;
        ref_depths
            .iter()
            .map(|&v| {
                let f = ref_depths.iter().filter(|&&d| d <= v).count() as f64 / n;
                let g = other_depths.iter().filter(|&&d| d <= v).count() as f64 / m;
                (f - g).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn rank_distance_matches_brute_force() {
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![0.1, 0.2, 0.2, 0.9], vec![0.0, 0.2, 0.5]),
            (vec![0.5, 0.5, 0.5], vec![0.5, 0.5]),
            (vec![0.0, 1.0], vec![0.25, 0.5, 0.75, 1.0]),
            (vec![0.3], vec![0.3]),
            (vec![0.1, 0.4, 0.6, 0.6, 0.8, 1.0], vec![0.05, 0.6, 0.61]),
        ];
        for (mut a, mut b) in cases {
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(rank_ks_distance(&a, &b), rank_ks_brute(&a, &b));
        }
    }

    #[test]
    fn identical_ensembles_give_zero() {
        let grid = Grid::unit_square(4, 4);
        let ens = constant_fields(&grid, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(kd_statistic(&ens, &ens).unwrap(), 0.0);
        assert_eq!(k_pn_distance(&ens, &ens).unwrap(), 0.0);
    }

    #[test]
    fn two_against_one_between_hand_value() {
        // X has two constant fields {0, 2}; Y is the constant field 1 plus a
        // duplicate so the ensemble is valid. Depths of X against X are
        // (1, 0) on the rank ladder; both Y members sit at the empirical
        // median of X with depth 1. At the low-depth X member the rank gap
        // is |1/2 - 0| = 1/2; at the deep member it closes. K_Pn = 1/2.
        let grid = Grid::unit_square(2, 2);
        let x = constant_fields(&grid, &[0.0, 2.0]);
        let y = constant_fields(&grid, &[1.0, 1.0]);
        let k = k_pn_distance(&x, &y).unwrap();
        assert!((k - 0.5).abs() < 1e-15, "got {k}");
    }

    #[test]
    fn smallest_depth_member_has_rank_one_over_n() {
        // F at the member with the smallest depth is 1/n when depths are
        // distinct.
        let grid = Grid::unit_square(2, 2);
        let x = constant_fields(&grid, &[0.0, 1.0, 2.0, 3.0, 5.0]);
        let kd_ref = KdReference::new(&x);
        let depths = kd_ref.depths_of(&x).unwrap();
        let min = depths.iter().cloned().fold(f64::MAX, f64::min);
        let f = depths.iter().filter(|&&d| d <= min).count() as f64 / depths.len() as f64;
        assert!((f - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn kd_is_symmetric_and_bounded() {
        let grid = Grid::unit_square(3, 3);
        let x = constant_fields(&grid, &[0.0, 0.5, 1.2, 3.0]);
        let y = constant_fields(&grid, &[-1.0, 0.25, 0.6, 2.0, 4.0]);
        let ab = kd_statistic(&x, &y).unwrap();
        let ba = kd_statistic(&y, &x).unwrap();
        assert_eq!(ab, ba);
        assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn pooled_identity_labeling_matches_direct_statistic() {
        let grid = Grid::unit_square(4, 3);
        let x = Ensemble::from_members(
            grid.clone(),
            &(0..6)
                .map(|i| (0..12).map(|g| ((i * 5 + g * 3) % 13) as f64).collect())
                .collect::<Vec<_>>(),
            "x",
        )
        .unwrap();
        let y = Ensemble::from_members(
            grid,
            &(0..4)
                .map(|i| (0..12).map(|g| ((i * 7 + g * 2 + 1) % 11) as f64).collect())
                .collect::<Vec<_>>(),
            "y",
        )
        .unwrap();
        let pooled = PooledPair::new(&x, &y).unwrap();
        let direct = kd_statistic(&x, &y).unwrap();
        assert!((pooled.kd_observed() - direct).abs() < 1e-14);
    }

    #[test]
    fn permutation_pvalue_is_deterministic_and_bounded() {
        let grid = Grid::unit_square(3, 3);
        let x = constant_fields(&grid, &[0.0, 0.5, 1.2, 3.0, -0.5]);
        let y = constant_fields(&grid, &[10.0, 10.5, 11.2, 13.0]);
        let a = kd_test(&x, &y, KdMethod::Permutation, 199, 7).unwrap();
        let b = kd_test(&x, &y, KdMethod::Permutation, 199, 7).unwrap();
        assert_eq!(a.p_value, b.p_value);
        assert!(a.p_value >= 1.0 / 200.0);
        assert!(a.p_value <= 1.0);
        // Disjoint supports. Every y-member has depth 0 against x, but so
        // does x's own extreme member, which caps the rank gap at
        // 1 - 1/n = 0.8 rather than 1.
        assert_eq!(a.statistic, 0.8);
    }

    #[test]
    fn permutation_count_floor_is_enforced() {
        let grid = Grid::unit_square(2, 2);
        let x = constant_fields(&grid, &[0.0, 1.0]);
        let y = constant_fields(&grid, &[0.5, 1.5]);
        let err = kd_test(&x, &y, KdMethod::Permutation, 98, 0).unwrap_err();
        assert!(err.to_string().contains("permutations >= 99"));
    }

    #[test]
    fn asymptotic_p_is_one_for_identical() {
        let grid = Grid::unit_square(2, 2);
        let ens = constant_fields(&grid, &[0.0, 1.0, 2.0]);
        let r = kd_test(&ens, &ens, KdMethod::Asymptotic, 0, 0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.scaled, 0.0);
    }

    #[test]
    fn monotone_pointwise_transform_leaves_kd_unchanged() {
        let grid = Grid::unit_square(3, 2);
        let xm: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..6).map(|g| ((i * 3 + g) % 7) as f64 - 2.0).collect())
            .collect();
        let ym: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..6).map(|g| ((i * 5 + g * 2) % 9) as f64 - 1.0).collect())
            .collect();
        // A different strictly increasing map at each grid point.
        let transform = |m: &Vec<f64>| -> Vec<f64> {
            m.iter()
                .enumerate()
                .map(|(g, v)| (g as f64 + 1.0) * v.exp() + g as f64)
                .collect()
        };
        let grid2 = grid.clone();
        let x = Ensemble::from_members(grid.clone(), &xm, "x").unwrap();
        let y = Ensemble::from_members(grid, &ym, "y").unwrap();
        let xt = Ensemble::from_members(
            grid2.clone(),
            &xm.iter().map(transform).collect::<Vec<_>>(),
            "xt",
        )
        .unwrap();
        let yt = Ensemble::from_members(
            grid2,
            &ym.iter().map(transform).collect::<Vec<_>>(),
            "yt",
        )
        .unwrap();
        let kd = kd_statistic(&x, &y).unwrap();
        let kd_t = kd_statistic(&xt, &yt).unwrap();
        assert_eq!(kd.to_bits(), kd_t.to_bits());
    }
}
