//! Seeded generators for spatial random fields: Matérn Gaussian processes,
//! t-processes, and separable sine mean/scale surfaces.

pub mod cov;
pub mod field;
pub mod matern;
pub mod sine;

pub use cov::{build_covariance, CholeskyFactor, CovarianceCache, MAX_DENSE_POINTS};
pub use field::{sample_fields, FieldSampler, FieldSpec, ProcessFamily};
pub use matern::{matern_correlation, MaternParams};
pub use sine::{sine_mean_field, sine_sd_field};
