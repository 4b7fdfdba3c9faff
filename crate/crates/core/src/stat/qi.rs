//! The quality index (QI): mean relative rank of one sample's depths within
//! the other's depth distribution. Under exchangeability QI is asymptotically
//! Normal(1/2, (1/12)(1/n + 1/m)).
//!
//! QI uses one ensemble as a fixed reference, so it measures outlyingness in
//! one direction only. Low QI means the second sample is outlying from the
//! first; a sample nested strictly inside the reference's spread drives QI
//! up, not down, which is why the lower tail alone can miss spread
//! reductions.

use crate::depth::SortedReference;
use crate::ensemble::{validate_pair, Ensemble};
use crate::error::Result;
use crate::stat::{Method, TestResult, P_FLOOR};

/// Which tail(s) of the null normal law to convert into a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sided {
    /// Reject for small QI (the second sample looks outlying).
    #[default]
    Lower,
    /// Reject for QI far from 1/2 in either direction.
    Two,
}

impl std::str::FromStr for Sided {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Sided::Lower),
            "two" | "two-sided" => Ok(Sided::Two),
            other => Err(crate::error::Error::InvalidParameter(format!(
                "unknown sidedness {other:?} (expected lower or two)"
            ))),
        }
    }
}

/// Standard normal distribution function.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * puruspe::erfc(-z / std::f64::consts::SQRT_2)
}

/// QI of `y` with respect to `x`: the average over `y`'s members of the
/// fraction of `x`-members whose depth (against `x`) does not exceed the
/// `y`-member's depth against `x`.
pub fn qi_statistic(x: &Ensemble, y: &Ensemble) -> Result<f64> {
    validate_pair(x, y)?;
    let reference = SortedReference::new(x);
    let mut d_x = reference.profile(x)?.into_values();
    d_x.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let d_y = reference.profile(y)?.into_values();
    let n = d_x.len() as f64;
    let mean_rank: f64 = d_y
        .iter()
        .map(|&d| d_x.partition_point(|&v| v <= d) as f64 / n)
        .sum::<f64>()
        / d_y.len() as f64;
    Ok(mean_rank)
}

/// Two-sample QI test with a normal reference distribution.
pub fn qi_test(x: &Ensemble, y: &Ensemble, sided: Sided) -> Result<TestResult> {
    let qi = qi_statistic(x, y)?;
    let n = x.n_members();
    let m = y.n_members();
    let sd = ((1.0 / 12.0) * (1.0 / n as f64 + 1.0 / m as f64)).sqrt();
    let z = (qi - 0.5) / sd;
    let p = match sided {
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

    #[test]
    fn identical_samples_concentrate_at_half() {
        // With Y = X and distinct depths, the ranks are 1/n..n/n, so QI is
        // exactly (n+1)/(2n) and |QI - 1/2| = 1/(2n). Needs depth values
        // without ties, hence generic simulated fields.
        use crate::sim::{FieldSpec, MaternParams, ProcessFamily};
        for (n, seed) in [(6usize, 3u64), (11, 4), (20, 5)] {
            let spec = FieldSpec::homogeneous(
                Grid::unit_square(5, 5),
                0.0,
                MaternParams::new(1.0, 0.4, 1.0).unwrap(),
                ProcessFamily::Gaussian,
                seed,
            )
            .unwrap();
            let ens = crate::sim::sample_fields(&spec, n).unwrap();
            let qi = qi_statistic(&ens, &ens).unwrap();
            let expect = (n as f64 + 1.0) / (2.0 * n as f64);
            assert!((qi - expect).abs() < 1e-12, "n={n}: qi={qi} vs {expect}");
            assert!((qi - 0.5).abs() <= 0.5 / n as f64 + 1e-12);
        }
    }

    #[test]
    fn outlying_sample_has_low_qi_and_small_lower_p() {
        let grid = Grid::unit_square(3, 3);
        let x = constant_fields(&grid, &(0..20).map(|k| k as f64).collect::<Vec<_>>());
        let y = constant_fields(&grid, &[100.0, 101.0, 102.0, 103.0]);
        let r = qi_test(&x, &y, Sided::Lower).unwrap();
        // Every y-member has depth 0 against x, tying only with x's own
        // extreme member: mean rank 1/n.
        assert_eq!(r.statistic, 0.05);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn nested_sample_raises_qi_so_lower_tail_does_not_reject() {
        // Y sits at the center of X: every y-member outranks most of X.
        let grid = Grid::unit_square(3, 3);
        let x = constant_fields(&grid, &(0..20).map(|k| k as f64).collect::<Vec<_>>());
        let y = constant_fields(&grid, &[9.0, 9.5, 10.0, 10.5]);
        let lower = qi_test(&x, &y, Sided::Lower).unwrap();
        assert!(lower.statistic > 0.5);
        assert!(lower.p_value > 0.5);
        let two = qi_test(&x, &y, Sided::Two).unwrap();
        assert!(two.p_value < 2.0 * lower.p_value);
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(-1.959963984540054) - 0.025).abs() < 1e-12);
    }
}
