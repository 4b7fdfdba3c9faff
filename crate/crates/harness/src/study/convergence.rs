//! Convergence study: how closely the permutation distribution of the scaled
//! KD statistic matches the Kolmogorov law, per replicate, measured by an
//! L2 distance between distribution functions and by critical-value gaps at
//! the 0.90 / 0.95 / 0.99 levels.

use std::sync::Arc;

use rayon::prelude::*;

use depthtest_core::rng::{derive_rng, derive_seed};
use depthtest_core::sim::{CovarianceCache, FieldSampler, FieldSpec, MaternParams, ProcessFamily};
use depthtest_core::stat::{kd_permutation_distribution, kolmogorov_cdf, kolmogorov_critical_value};
use depthtest_core::Grid;

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};
use crate::study::{ConvergenceRow, Study, StudyResult};

/// Integration domain for the L2 distance; the Kolmogorov law carries all
/// but ~1e-8 of its mass below 3.
const L2_UPPER: f64 = 3.0;
const L2_POINTS: usize = 600;

/// Trapezoid integral of the squared difference of two distribution
/// functions over `[0, 3]` on a 600-point grid.
pub fn l2_cdf_distance(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
    let step = L2_UPPER / (L2_POINTS - 1) as f64;
    let sq = |t: f64| {
        let d = f(t) - g(t);
        d * d
    };
    let mut sum = 0.5 * (sq(0.0) + sq(L2_UPPER));
    for i in 1..L2_POINTS - 1 {
        sum += sq(step * i as f64);
    }
    sum * step
}

/// One convergence cell: sample sizes and process parameters.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceCell {
    pub r: f64,
    pub nu: f64,
    pub n: usize,
    pub m: usize,
}

/// Run all replicates of one cell. Each replicate draws X and Y from the
/// identical process, builds the scaled permutation distribution of KD, and
/// records its distance from the Kolmogorov law.
#[allow(clippy::too_many_arguments)]
pub fn run_convergence_cell(
    grid: &Arc<Grid>,
    family: ProcessFamily,
    cell: &ConvergenceCell,
    permutations: usize,
    replicates: usize,
    seed: u64,
    cell_index: u64,
    cache: &CovarianceCache,
) -> Result<Vec<ConvergenceRow>> {
    let params = MaternParams::new(1.0, cell.r, cell.nu)?;
    let spec = FieldSpec::homogeneous(grid.clone(), 0.0, params, family, seed)?;
    let sampler = FieldSampler::with_cache(spec, cache)?;
    let cv90 = kolmogorov_critical_value(0.90)?;
    let cv95 = kolmogorov_critical_value(0.95)?;
    let cv99 = kolmogorov_critical_value(0.99)?;

    (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let rep_u = rep as u64;
            let x = sampler.sample(cell.n, &mut derive_rng(seed, &[cell_index, rep_u, 0]))?;
            let y = sampler.sample(cell.m, &mut derive_rng(seed, &[cell_index, rep_u, 1]))?;
            let null = kd_permutation_distribution(
                &x,
                &y,
                permutations,
                derive_seed(seed, &[cell_index, rep_u, 2]),
            )?;
            let l2 = l2_cdf_distance(|t| null.cdf(t), |t| kolmogorov_cdf(t).unwrap());
            Ok(ConvergenceRow {
                r: cell.r,
                nu: cell.nu,
                n: cell.n,
                m: cell.m,
                replicate: rep,
                l2_distance: l2,
                gap90: cv90 - null.quantile(0.90),
                gap95: cv95 - null.quantile(0.95),
                gap99: cv99 - null.quantile(0.99),
                permutations,
            })
        })
        .collect()
}

/// Convergence study over a lattice of (r, nu, n) cells; sample sizes are
/// balanced unless `lattice.m` is given.
pub struct ConvergenceStudy;

impl Study for ConvergenceStudy {
    fn name(&self) -> &'static str {
        "convergence"
    }

    fn validate(&self, cfg: &StudyConfig) -> Result<()> {
        if cfg.permutations < 500 {
            return Err(HarnessError::Config(format!(
                "convergence requires permutations >= 500, got {}",
                cfg.permutations
            )));
        }
        let l = &cfg.lattice;
        if l.r.is_empty() || l.nu.is_empty() || l.n.is_empty() {
            return Err(HarnessError::Config(
                "convergence requires nonempty lattice.r, lattice.nu, lattice.n".into(),
            ));
        }
        Ok(())
    }

    fn run(&self, cfg: &StudyConfig) -> Result<StudyResult> {
        let grid = Grid::unit_square(cfg.grid[0], cfg.grid[1]);
        let family = cfg.process_family()?;
        let cache = CovarianceCache::new();
        let mut rows = Vec::new();
        let mut cell_index = 0u64;
        for &n in &cfg.lattice.n {
            let ms: Vec<usize> = if cfg.lattice.m.is_empty() {
                vec![n]
            } else {
                cfg.lattice.m.clone()
            };
            for &m in &ms {
                for &nu in &cfg.lattice.nu {
                    for &r in &cfg.lattice.r {
                        let cell = ConvergenceCell { r, nu, n, m };
                        rows.extend(run_convergence_cell(
                            &grid,
                            family,
                            &cell,
                            cfg.permutations,
                            cfg.sims_per_cell,
                            cfg.seed,
                            cell_index,
                            &cache,
                        )?);
                        cell_index += 1;
                    }
                }
            }
        }
        Ok(StudyResult::Convergence(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_distance_of_identical_cdfs_is_zero() {
        let f = |t: f64| kolmogorov_cdf(t).unwrap();
        assert_eq!(l2_cdf_distance(f, f), 0.0);
    }

    #[test]
    fn l2_distance_of_step_vs_smooth_is_positive() {
        let f = |t: f64| if t < 1.0 { 0.0 } else { 1.0 };
        let g = |t: f64| kolmogorov_cdf(t).unwrap();
        let d = l2_cdf_distance(f, g);
        assert!(d > 0.001);
    }

    #[test]
    fn permutations_floor_is_validated() {
        let cfg = StudyConfig::from_toml(
            r#"
study = "convergence"
seed = 1
alpha = 0.05
sims_per_cell = 100
methods = ["kd"]
grid = [4, 4]
permutations = 499

[lattice]
r = [0.5]
nu = [1.5]
n = [25]
"#,
        )
        .unwrap();
        let err = crate::study::run_study(&cfg).unwrap_err();
        assert!(err.to_string().contains("permutations"));
    }

    #[test]
    fn small_cell_produces_requested_replicates() {
        let grid = Grid::unit_square(5, 5);
        let cache = CovarianceCache::new();
        let cell = ConvergenceCell {
            r: 0.5,
            nu: 1.5,
            n: 20,
            m: 20,
        };
        let rows =
            run_convergence_cell(&grid, ProcessFamily::Gaussian, &cell, 99, 8, 3, 0, &cache)
                .unwrap();
        assert_eq!(rows.len(), 8);
        for row in &rows {
            assert!(row.l2_distance >= 0.0);
            assert!(row.gap90.abs() < 1.5);
        }
    }
}
