//! Registry of two-sample test methods behind a common trait.
//!
//! Every variant is registered under a stable name and selected at runtime
//! from configuration or command-line flags. Series runs (one fixed
//! reference ensemble tested against many samples) go through
//! [`TestMethod::run_series`], which lets a method reuse per-reference
//! precomputation; the depth-based methods override it to sort the
//! reference's point columns exactly once.

use crate::ensemble::{validate_pair, Ensemble};
use crate::error::{Error, Result};
use crate::stat::kd::{kd_test, KdMethod, KdReference};
use crate::stat::qi::{normal_cdf, qi_test, Sided};
use crate::stat::{scale_factor, Method, TestResult, P_FLOOR};
use crate::stat::kolmogorov::kolmogorov_survival;

/// Runtime knobs shared by all test methods; each method reads the fields
/// it understands and ignores the rest.
#[derive(Debug, Clone, Copy)]
pub struct TestOptions {
    /// Relabelings drawn by permutation methods (at least 99).
    pub permutations: usize,
    /// Root seed for any randomized method; replicate streams derive from it.
    pub seed: u64,
    /// Tail convention for QI.
    pub sided: Sided,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            permutations: 500,
            seed: 0,
            sided: Sided::Lower,
        }
    }
}

/// A two-sample test on grid-compatible ensembles.
pub trait TestMethod: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn run(&self, x: &Ensemble, y: &Ensemble, opts: &TestOptions) -> Result<TestResult>;

    /// Test one fixed ensemble against each sample in turn. The default just
    /// loops [`TestMethod::run`]; methods with reusable per-reference state
    /// override it.
    fn run_series(
        &self,
        reference: &Ensemble,
        samples: &[&Ensemble],
        opts: &TestOptions,
    ) -> Result<Vec<TestResult>> {
        samples.iter().map(|s| self.run(reference, s, opts)).collect()
    }
}

/// KD with p-values from the limiting Kolmogorov distribution.
pub struct KdAsymptotic;

impl TestMethod for KdAsymptotic {
    fn name(&self) -> &'static str {
        "kd-asymptotic"
    }

    fn description(&self) -> &'static str {
        "Kolmogorov depth statistic, asymptotic Kolmogorov p-value"
    }

    fn run(&self, x: &Ensemble, y: &Ensemble, _opts: &TestOptions) -> Result<TestResult> {
        kd_test(x, y, KdMethod::Asymptotic, 0, 0)
    }

    fn run_series(
        &self,
        reference: &Ensemble,
        samples: &[&Ensemble],
        _opts: &TestOptions,
    ) -> Result<Vec<TestResult>> {
        let ref_side = KdReference::new(reference);
        let n = reference.n_members();
        samples
            .iter()
            .map(|sample| {
                validate_pair(reference, sample)?;
                let forward = ref_side.one_sided_distance(sample)?;
                let backward = KdReference::new(sample).one_sided_distance(reference)?;
                let kd = forward.max(backward);
                let m = sample.n_members();
                let scaled = scale_factor(n, m) * kd;
                Ok(TestResult {
                    statistic: kd,
                    scaled,
                    p_value: kolmogorov_survival(scaled)?.max(P_FLOOR),
                    method: Method::KdAsymptotic,
                    n,
                    m,
                    permutations: None,
                })
            })
            .collect()
    }
}

/// KD with permutation p-values over random relabelings of the pool.
pub struct KdPermutation;

impl TestMethod for KdPermutation {
    fn name(&self) -> &'static str {
        "kd-permutation"
    }

    fn description(&self) -> &'static str {
        "Kolmogorov depth statistic, permutation p-value"
    }

    fn run(&self, x: &Ensemble, y: &Ensemble, opts: &TestOptions) -> Result<TestResult> {
        kd_test(x, y, KdMethod::Permutation, opts.permutations, opts.seed)
    }
}

/// Quality index with its asymptotic normal null law.
pub struct QiNormal;

impl TestMethod for QiNormal {
    fn name(&self) -> &'static str {
        "qi"
    }

    fn description(&self) -> &'static str {
        "quality index (mean depth rank), normal p-value"
    }

    fn run(&self, x: &Ensemble, y: &Ensemble, opts: &TestOptions) -> Result<TestResult> {
        qi_test(x, y, opts.sided)
    }

    fn run_series(
        &self,
        reference: &Ensemble,
        samples: &[&Ensemble],
        opts: &TestOptions,
    ) -> Result<Vec<TestResult>> {
        let side = KdReference::new(reference);
        let mut d_ref = side.depths_of(reference)?;
        d_ref.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = reference.n_members();
        samples
            .iter()
            .map(|sample| {
                validate_pair(reference, sample)?;
                let d_sample = side.depths_of(sample)?;
                let m = sample.n_members();
                let qi = d_sample
                    .iter()
                    .map(|&d| d_ref.partition_point(|&v| v <= d) as f64 / n as f64)
                    .sum::<f64>()
                    / m as f64;
                let sd = ((1.0 / 12.0) * (1.0 / n as f64 + 1.0 / m as f64)).sqrt();
                let z = (qi - 0.5) / sd;
                let p = match opts.sided {
                    Sided::Lower => normal_cdf(z),
                    Sided::Two => 2.0 * normal_cdf(-z.abs()),
                };
                Ok(TestResult {
                    statistic: qi,
                    scaled: z,
                    p_value: p.clamp(P_FLOOR, 1.0),
                    method: Method::QiNormal,
                    n,
                    m,
                    permutations: None,
                })
            })
            .collect()
    }
}

static METHODS: &[&dyn TestMethod] = &[&KdAsymptotic, &KdPermutation, &QiNormal];

/// All registered test methods.
pub fn methods() -> &'static [&'static dyn TestMethod] {
    METHODS
}

/// Registry names, in registration order.
pub fn method_names() -> Vec<&'static str> {
    METHODS.iter().map(|m| m.name()).collect()
}

/// Find a method by registry name. Accepts the short aliases used by
/// configuration files and flags: `asymptotic`, `permutation`, `kd`,
/// `qi-normal`.
pub fn lookup_method(name: &str) -> Result<&'static dyn TestMethod> {
    let canonical = match name {
        "asymptotic" | "kd" => "kd-asymptotic",
        "permutation" => "kd-permutation",
        "qi-normal" => "qi",
        other => other,
    };
    METHODS
        .iter()
        .find(|m| m.name() == canonical)
        .copied()
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown test method {name:?} (available: {})",
                method_names().join(", ")
            ))
        })
}
