//! Two-sample tests over ensembles: the KD statistic with asymptotic and
//! permutation p-values, the quality-index (QI) baseline, and
//! Benjamini-Yekutieli FDR adjustment for families of tests.

pub mod fdr;
pub mod kd;
pub mod kolmogorov;
pub mod method;
pub mod qi;

use serde::{Deserialize, Serialize};

pub use fdr::by_fdr_adjust;
pub use kd::{
    kd_permutation_distribution, kd_statistic, kd_test, k_pn_distance, KdMethod, KdReference,
    NullDistribution, PooledPair,
};
pub use kolmogorov::{kolmogorov_cdf, kolmogorov_critical_value, kolmogorov_survival};
pub use method::{lookup_method, method_names, methods, TestMethod, TestOptions};
pub use qi::{qi_statistic, qi_test, Sided};

/// Smallest reported p-value; asymptotic tails are floored here instead of
/// underflowing to zero.
pub const P_FLOOR: f64 = 1e-300;

/// `sqrt(nm / (n + m))`, the scaling that maps the KD statistic onto the
/// Kolmogorov distribution's domain.
pub fn scale_factor(n: usize, m: usize) -> f64 {
    let n = n as f64;
    let m = m as f64;
    (n * m / (n + m)).sqrt()
}

/// Which test produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    KdAsymptotic,
    KdPermutation,
    QiNormal,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::KdAsymptotic => "kd_asymptotic",
            Method::KdPermutation => "kd_permutation",
            Method::QiNormal => "qi_normal",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a two-sample test.
///
/// For KD methods `scaled` is `sqrt(nm/(n+m)) * statistic`; for QI it is the
/// standardized z-score of the statistic under its null normal law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub scaled: f64,
    pub p_value: f64,
    pub method: Method,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
}

impl TestResult {
    pub fn reject(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}
