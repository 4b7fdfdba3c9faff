//! Seeded samplers for Matérn Gaussian processes and t-processes with
//! per-point mean and scale fields.

use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::derive_rng;
use crate::sim::cov::{build_covariance, CholeskyFactor, CovarianceCache};
use crate::sim::matern::MaternParams;

/// Marginal law of the process driving the correlated noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProcessFamily {
    Gaussian,
    /// Multivariate t: each member's Gaussian draw is divided by an
    /// independent `sqrt(chi^2_df / df)`.
    StudentT { df: f64 },
}

/// Full description of a generating process: grid, per-point mean and scale,
/// Matérn correlation parameters, family, and the root seed.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    pub grid: Arc<Grid>,
    pub mean_field: Vec<f64>,
    pub sd_field: Vec<f64>,
    pub matern: MaternParams,
    pub family: ProcessFamily,
    pub seed: u64,
}

impl FieldSpec {
    pub fn new(
        grid: Arc<Grid>,
        mean_field: Vec<f64>,
        sd_field: Vec<f64>,
        matern: MaternParams,
        family: ProcessFamily,
        seed: u64,
    ) -> Result<FieldSpec> {
        let g = grid.point_count();
        if mean_field.len() != g {
            return Err(Error::LengthMismatch {
                member_len: mean_field.len(),
                point_count: g,
            });
        }
        if sd_field.len() != g {
            return Err(Error::LengthMismatch {
                member_len: sd_field.len(),
                point_count: g,
            });
        }
        if mean_field.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite mean field".into()));
        }
        if sd_field.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "sd field must be strictly positive".into(),
            ));
        }
        matern.validate()?;
        // With a varying scale field the process sigma is redundant; pin it
        // to 1 so the marginal scale has a single owner.
        let sd_constant = sd_field.windows(2).all(|w| w[0] == w[1]);
        if !sd_constant && matern.sigma != 1.0 {
            return Err(Error::InvalidParameter(
                "matern sigma must be 1 when the sd field varies by location".into(),
            ));
        }
        if let ProcessFamily::StudentT { df } = family {
            if !(df.is_finite() && df > 2.0) {
                return Err(Error::InvalidParameter(format!(
                    "student t df must exceed 2, got {df}"
                )));
            }
        }
        Ok(FieldSpec {
            grid,
            mean_field,
            sd_field,
            matern,
            family,
            seed,
        })
    }

    /// Constant mean and unit scale everywhere.
    pub fn homogeneous(
        grid: Arc<Grid>,
        mu: f64,
        matern: MaternParams,
        family: ProcessFamily,
        seed: u64,
    ) -> Result<FieldSpec> {
        let g = grid.point_count();
        FieldSpec::new(grid, vec![mu; g], vec![1.0; g], matern, family, seed)
    }
}

/// A [`FieldSpec`] bound to its covariance factor. Construction pays the
/// factorization once; sampling is then a matrix product per batch.
pub struct FieldSampler {
    spec: FieldSpec,
    factor: Arc<CholeskyFactor>,
}

impl FieldSampler {
    pub fn new(spec: FieldSpec) -> Result<FieldSampler> {
        let factor = Arc::new(build_covariance(&spec.grid, &spec.matern)?);
        Ok(FieldSampler { spec, factor })
    }

    /// Like [`FieldSampler::new`] but sharing factors through a cache.
    pub fn with_cache(spec: FieldSpec, cache: &CovarianceCache) -> Result<FieldSampler> {
        let factor = cache.factor(&spec.grid, &spec.matern)?;
        Ok(FieldSampler { spec, factor })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Draw `count` members using the supplied generator. Noise is drawn
    /// member-major, then (for the t family) one chi-square divisor per
    /// member, so a batch is a pure function of the generator state.
    pub fn sample(&self, count: usize, rng: &mut ChaCha8Rng) -> Result<Ensemble> {
        if count < 2 {
            return Err(Error::TooFewMembers(count));
        }
        let g = self.spec.grid.point_count();
        let mut z = Vec::with_capacity(count * g);
        for _ in 0..count * g {
            let v: f64 = rng.sample(StandardNormal);
            z.push(v);
        }
        let z = Array2::from_shape_vec((count, g), z).expect("shape matches");
        // Row i of z * L^T is L z_i: one correlated field per member.
        let mut fields = z.dot(&self.factor.l().t());

        let divisors: Option<Vec<f64>> = match self.spec.family {
            ProcessFamily::Gaussian => None,
            ProcessFamily::StudentT { df } => {
                let chi = ChiSquared::new(df).expect("df > 2");
                Some(
                    (0..count)
                        .map(|_| (chi.sample(rng) / df).sqrt())
                        .collect(),
                )
            }
        };

        for (i, mut row) in fields.outer_iter_mut().enumerate() {
            let scale = divisors.as_ref().map_or(1.0, |d| 1.0 / d[i]);
            for (p, v) in row.iter_mut().enumerate() {
                *v = self.spec.mean_field[p] + self.spec.sd_field[p] * (*v * scale);
            }
        }

        Ensemble::new(
            self.spec.grid.clone(),
            fields.into_raw_vec_and_offset().0,
            "simulated",
        )
    }

    /// Draw using the stream derived from the spec's own seed.
    pub fn sample_seeded(&self, count: usize) -> Result<Ensemble> {
        self.sample(count, &mut derive_rng(self.spec.seed, &[]))
    }
}

/// Draw `count` fields from `spec`. Identical `(spec, count)` produce
/// bitwise-identical ensembles.
pub fn sample_fields(spec: &FieldSpec, count: usize) -> Result<Ensemble> {
    FieldSampler::new(spec.clone())?.sample_seeded(count)
}
