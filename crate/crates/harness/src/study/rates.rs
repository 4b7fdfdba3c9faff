//! Size and power studies: rejection rates over simulated two-sample draws.

use std::sync::Arc;

use rayon::prelude::*;

use depthtest_core::rng::{derive_rng, derive_seed};
use depthtest_core::sim::{
    sine_mean_field, sine_sd_field, CovarianceCache, FieldSampler, FieldSpec, MaternParams,
    ProcessFamily,
};
use depthtest_core::stat::{lookup_method, Sided, TestMethod, TestOptions};
use depthtest_core::Grid;

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};
use crate::study::{RateRow, Study, StudyResult};

fn study_grid(cfg: &StudyConfig) -> Arc<Grid> {
    Grid::unit_square(cfg.grid[0], cfg.grid[1])
}

fn resolve_methods(cfg: &StudyConfig) -> Result<Vec<&'static dyn TestMethod>> {
    cfg.methods
        .iter()
        .map(|name| lookup_method(name).map_err(|e| HarnessError::Config(e.to_string())))
        .collect()
}

/// Rejection frequency of every method over `sims` independent two-sample
/// draws, with X from `x_sampler` and Y from `y_sampler`. Every simulation
/// derives its own streams from `(seed, cell, sim)`.
#[allow(clippy::too_many_arguments)]
fn rejection_rates(
    x_sampler: &FieldSampler,
    n: usize,
    y_sampler: &FieldSampler,
    m: usize,
    methods: &[&'static dyn TestMethod],
    cfg: &StudyConfig,
    cell: u64,
) -> Result<Vec<(f64, f64)>> {
    let sims = cfg.sims_per_cell;
    let per_sim: Result<Vec<Vec<u32>>> = (0..sims)
        .into_par_iter()
        .map(|sim| {
            let sim = sim as u64;
            let x = x_sampler.sample(n, &mut derive_rng(cfg.seed, &[cell, sim, 0]))?;
            let y = y_sampler.sample(m, &mut derive_rng(cfg.seed, &[cell, sim, 1]))?;
            let opts = TestOptions {
                permutations: cfg.permutations,
                seed: derive_seed(cfg.seed, &[cell, sim, 2]),
                sided: Sided::Lower,
            };
            methods
                .iter()
                .map(|method| Ok(method.run(&x, &y, &opts)?.reject(cfg.alpha) as u32))
                .collect()
        })
        .collect();
    let per_sim = per_sim?;
    let mut counts = vec![0u64; methods.len()];
    for row in per_sim {
        for (c, v) in counts.iter_mut().zip(row) {
            *c += v as u64;
        }
    }
    Ok(counts
        .iter()
        .map(|&c| {
            let p = c as f64 / sims as f64;
            (p, (p * (1.0 - p) / sims as f64).sqrt())
        })
        .collect())
}

fn base_params(sigma: f64, r: f64, nu: f64) -> Result<MaternParams> {
    Ok(MaternParams::new(sigma, r, nu)?)
}

// ---------------------------------------------------------------------------
// Size study
// ---------------------------------------------------------------------------

/// Null rejection rates: X and Y drawn from the identical process over a
/// lattice of (r, nu, n, m) cells.
pub struct SizeStudy;

impl Study for SizeStudy {
    fn name(&self) -> &'static str {
        "size"
    }

    fn validate(&self, cfg: &StudyConfig) -> Result<()> {
        let l = &cfg.lattice;
        if l.r.is_empty() || l.nu.is_empty() || l.n.is_empty() || l.m.is_empty() {
            return Err(HarnessError::Config(
                "size study requires nonempty lattice.r, lattice.nu, lattice.n, lattice.m".into(),
            ));
        }
        Ok(())
    }

    fn run(&self, cfg: &StudyConfig) -> Result<StudyResult> {
        let grid = study_grid(cfg);
        let family = cfg.process_family()?;
        let methods = resolve_methods(cfg)?;
        let cache = CovarianceCache::new();
        let mut rows = Vec::new();
        let mut cell = 0u64;
        for &n in &cfg.lattice.n {
            for &m in &cfg.lattice.m {
                for &nu in &cfg.lattice.nu {
                    for &r in &cfg.lattice.r {
                        let spec = FieldSpec::homogeneous(
                            grid.clone(),
                            0.0,
                            base_params(1.0, r, nu)?,
                            family,
                            cfg.seed,
                        )?;
                        let sampler = FieldSampler::with_cache(spec, &cache)?;
                        let rates =
                            rejection_rates(&sampler, n, &sampler, m, &methods, cfg, cell)?;
                        for (method, (estimate, std_error)) in methods.iter().zip(rates) {
                            rows.push(RateRow {
                                study: self.name().into(),
                                method: method.name().into(),
                                family: cfg.family.clone(),
                                r,
                                nu,
                                n,
                                m,
                                mu: 0.0,
                                sigma: 1.0,
                                kappa: None,
                                vary: "none".into(),
                                estimate,
                                std_error,
                                sims: cfg.sims_per_cell,
                                alpha: cfg.alpha,
                            });
                        }
                        cell += 1;
                    }
                }
            }
        }
        Ok(StudyResult::Rates(rows))
    }
}

// ---------------------------------------------------------------------------
// Power studies
// ---------------------------------------------------------------------------

/// Power against homogeneous single-parameter changes: Y varies exactly one
/// of mu, sigma, r, nu away from the baseline process.
pub struct PowerHomogeneousStudy;

impl Study for PowerHomogeneousStudy {
    fn name(&self) -> &'static str {
        "power-homogeneous"
    }

    fn validate(&self, cfg: &StudyConfig) -> Result<()> {
        if cfg.vary.is_empty() {
            return Err(HarnessError::Config(
                "power-homogeneous requires at least one list under [vary]".into(),
            ));
        }
        let check = |name: &str, values: &[f64], lo: f64, hi: f64| -> Result<()> {
            for &v in values {
                if !(lo..=hi).contains(&v) {
                    return Err(HarnessError::Config(format!(
                        "vary.{name} value {v} outside [{lo}, {hi}]"
                    )));
                }
            }
            Ok(())
        };
        check("mu", &cfg.vary.mu, -1.0, 1.0)?;
        check("sigma", &cfg.vary.sigma, 0.1, 2.0)?;
        check("r", &cfg.vary.r, 0.05, 1.0)?;
        check("nu", &cfg.vary.nu, 0.1, 2.0)?;
        Ok(())
    }

    fn run(&self, cfg: &StudyConfig) -> Result<StudyResult> {
        let grid = study_grid(cfg);
        let g = grid.point_count();
        let family = cfg.process_family()?;
        let methods = resolve_methods(cfg)?;
        let cache = CovarianceCache::new();
        let base = &cfg.baseline;
        let x_spec = FieldSpec::homogeneous(
            grid.clone(),
            0.0,
            base_params(1.0, base.r, base.nu)?,
            family,
            cfg.seed,
        )?;
        let x_sampler = FieldSampler::with_cache(x_spec, &cache)?;

        // (parameter, value) cells in config order.
        let mut cells: Vec<(&str, f64)> = Vec::new();
        cells.extend(cfg.vary.mu.iter().map(|&v| ("mu", v)));
        cells.extend(cfg.vary.sigma.iter().map(|&v| ("sigma", v)));
        cells.extend(cfg.vary.r.iter().map(|&v| ("r", v)));
        cells.extend(cfg.vary.nu.iter().map(|&v| ("nu", v)));

        let mut rows = Vec::new();
        for (cell, &(param, value)) in cells.iter().enumerate() {
            let (mu, sigma, r, nu) = match param {
                "mu" => (value, 1.0, base.r, base.nu),
                "sigma" => (0.0, value, base.r, base.nu),
                "r" => (0.0, 1.0, value, base.nu),
                _ => (0.0, 1.0, base.r, value),
            };
            // A constant scale goes through the sd field so every sigma cell
            // shares the unit-variance covariance factor.
            let y_spec = FieldSpec::new(
                grid.clone(),
                vec![mu; g],
                vec![sigma; g],
                base_params(1.0, r, nu)?,
                family,
                cfg.seed,
            )?;
            let y_sampler = FieldSampler::with_cache(y_spec, &cache)?;
            let rates = rejection_rates(
                &x_sampler,
                base.n,
                &y_sampler,
                base.m,
                &methods,
                cfg,
                cell as u64,
            )?;
            for (method, (estimate, std_error)) in methods.iter().zip(rates) {
                rows.push(RateRow {
                    study: self.name().into(),
                    method: method.name().into(),
                    family: cfg.family.clone(),
                    r,
                    nu,
                    n: base.n,
                    m: base.m,
                    mu,
                    sigma,
                    kappa: None,
                    vary: param.into(),
                    estimate,
                    std_error,
                    sims: cfg.sims_per_cell,
                    alpha: cfg.alpha,
                });
            }
        }
        Ok(StudyResult::Rates(rows))
    }
}

/// Power against heterogeneous changes: Y's mean or scale surface is a sine
/// wave of amplitude kappa while X stays at the homogeneous baseline.
pub struct PowerHeterogeneousStudy;

impl Study for PowerHeterogeneousStudy {
    fn name(&self) -> &'static str {
        "power-heterogeneous"
    }

    fn validate(&self, cfg: &StudyConfig) -> Result<()> {
        if cfg.heterogeneous.kappa.is_empty() {
            return Err(HarnessError::Config(
                "power-heterogeneous requires heterogeneous.kappa values".into(),
            ));
        }
        for v in &cfg.heterogeneous.vary {
            if v != "mean" && v != "sd" {
                return Err(HarnessError::Config(format!(
                    "heterogeneous.vary entries must be \"mean\" or \"sd\", got {v:?}"
                )));
            }
        }
        for &k in &cfg.heterogeneous.kappa {
            if !(0.0..=1.0).contains(&k) {
                return Err(HarnessError::Config(format!(
                    "heterogeneous.kappa value {k} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    fn run(&self, cfg: &StudyConfig) -> Result<StudyResult> {
        let grid = study_grid(cfg);
        let g = grid.point_count();
        let family = cfg.process_family()?;
        let methods = resolve_methods(cfg)?;
        let cache = CovarianceCache::new();
        let base = &cfg.baseline;
        let params = base_params(1.0, base.r, base.nu)?;
        let x_spec =
            FieldSpec::homogeneous(grid.clone(), 0.0, params, family, cfg.seed)?;
        let x_sampler = FieldSampler::with_cache(x_spec, &cache)?;

        let mut rows = Vec::new();
        let mut cell = 0u64;
        for panel in &cfg.heterogeneous.vary {
            for &kappa in &cfg.heterogeneous.kappa {
                let (mean_field, sd_field) = if panel == "mean" {
                    (sine_mean_field(&grid, kappa)?, vec![1.0; g])
                } else {
                    (vec![0.0; g], sine_sd_field(&grid, kappa)?)
                };
                let y_spec = FieldSpec::new(
                    grid.clone(),
                    mean_field,
                    sd_field,
                    params,
                    family,
                    cfg.seed,
                )?;
                let y_sampler = FieldSampler::with_cache(y_spec, &cache)?;
                let rates = rejection_rates(
                    &x_sampler,
                    base.n,
                    &y_sampler,
                    base.m,
                    &methods,
                    cfg,
                    cell,
                )?;
                for (method, (estimate, std_error)) in methods.iter().zip(rates) {
                    rows.push(RateRow {
                        study: self.name().into(),
                        method: method.name().into(),
                        family: cfg.family.clone(),
                        r: base.r,
                        nu: base.nu,
                        n: base.n,
                        m: base.m,
                        mu: 0.0,
                        sigma: 1.0,
                        kappa: Some(kappa),
                        vary: format!("hetero-{panel}"),
                        estimate,
                        std_error,
                        sims: cfg.sims_per_cell,
                        alpha: cfg.alpha,
                    });
                }
                cell += 1;
            }
        }
        Ok(StudyResult::Rates(rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::run_study;

    fn tiny_size_config() -> StudyConfig {
        StudyConfig::from_toml(
            r#"
study = "size"
seed = 7
alpha = 0.05
sims_per_cell = 100
methods = ["kd", "qi"]
grid = [6, 6]

[lattice]
r = [0.4]
nu = [1.0]
n = [20]
m = [20]
"#,
        )
        .unwrap()
    }

    #[test]
    fn size_study_produces_one_row_per_method_per_cell() {
        let cfg = tiny_size_config();
        let result = run_study(&cfg).unwrap();
        match &result {
            StudyResult::Rates(rows) => {
                assert_eq!(rows.len(), 2);
                for row in rows {
                    assert!((0.0..=1.0).contains(&row.estimate));
                    let se = (row.estimate * (1.0 - row.estimate) / row.sims as f64).sqrt();
                    assert!((row.std_error - se).abs() < 1e-15);
                }
            }
            _ => panic!("expected rate rows"),
        }
    }

    #[test]
    fn study_runs_are_reproducible() {
        let cfg = tiny_size_config();
        let a = run_study(&cfg).unwrap();
        let b = run_study(&cfg).unwrap();
        match (a, b) {
            (StudyResult::Rates(ra), StudyResult::Rates(rb)) => {
                for (x, y) in ra.iter().zip(&rb) {
                    assert_eq!(x.estimate.to_bits(), y.estimate.to_bits());
                }
            }
            _ => panic!("expected rate rows"),
        }
    }

    #[test]
    fn null_power_cell_sits_near_alpha() {
        // mu shift of zero reproduces the size.
        let cfg = StudyConfig::from_toml(
            r#"
study = "power-homogeneous"
seed = 11
alpha = 0.05
sims_per_cell = 200
methods = ["kd"]
grid = [8, 8]

[baseline]
n = 40
m = 40
r = 0.5
nu = 1.5

[vary]
mu = [0.0]
"#,
        )
        .unwrap();
        let result = run_study(&cfg).unwrap();
        match result {
            StudyResult::Rates(rows) => {
                assert_eq!(rows.len(), 1);
                // Within 4 standard errors of the nominal level.
                assert!(
                    (rows[0].estimate - 0.05).abs() < 0.05,
                    "null-cell rejection {}",
                    rows[0].estimate
                );
                assert_eq!(rows[0].vary, "mu");
            }
            _ => panic!("expected rate rows"),
        }
    }

    #[test]
    fn vary_range_is_enforced() {
        let cfg = StudyConfig::from_toml(
            r#"
study = "power-homogeneous"
seed = 1
alpha = 0.05
sims_per_cell = 100
methods = ["kd"]
grid = [4, 4]

[vary]
sigma = [0.01]
"#,
        )
        .unwrap();
        let err = run_study(&cfg).unwrap_err();
        assert!(err.to_string().contains("sigma"));
    }
}
