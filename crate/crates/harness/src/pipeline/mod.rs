//! Per-time-step comparison of a fixed background ensemble against a
//! sequence of analysis ensembles: KD tests year by year, family-wise FDR
//! adjustment, trend fits, moment diagnostics, and correlation maps.

mod catalog;
mod correlation;
mod diagnostics;
pub mod synthetic;
mod trend;

pub use catalog::{ProxyCatalog, ProxyRecord};
pub use correlation::{max_r2_map, FieldSeries, R2Map};
pub use diagnostics::ensemble_diagnostics;
pub use trend::{ols_trend, TrendFit};

use serde::Serialize;

use depthtest_core::ensemble::{subset_region, Ensemble, RegionMask};
use depthtest_core::stat::{by_fdr_adjust, TestMethod, TestOptions, TestResult};

use crate::error::{HarnessError, Result};

/// A fixed background ensemble plus one analysis ensemble per time step, all
/// on the same grid.
#[derive(Debug, Clone)]
pub struct ReconstructionSeries {
    background: Ensemble,
    analyses: Vec<Ensemble>,
    times: Vec<f64>,
}

impl ReconstructionSeries {
    pub fn new(
        background: Ensemble,
        analyses: Vec<Ensemble>,
        times: Vec<f64>,
    ) -> Result<ReconstructionSeries> {
        if analyses.is_empty() {
            return Err(HarnessError::Series("no analysis ensembles".into()));
        }
        if analyses.len() != times.len() {
            return Err(HarnessError::Series(format!(
                "{} analyses for {} times",
                analyses.len(),
                times.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(HarnessError::Series("non-finite time label".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Series(
                "times must be strictly increasing".into(),
            ));
        }
        for (i, a) in analyses.iter().enumerate() {
            background
                .grid()
                .check_same(a.grid())
                .map_err(|e| HarnessError::Series(format!("analysis {i}: {e}")))?;
        }
        Ok(ReconstructionSeries {
            background,
            analyses,
            times,
        })
    }

    pub fn background(&self) -> &Ensemble {
        &self.background
    }

    pub fn analyses(&self) -> &[Ensemble] {
        &self.analyses
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The same series restricted to one region of a mask.
    pub fn restrict(&self, mask: &RegionMask, region: u32) -> Result<ReconstructionSeries> {
        let background = subset_region(&self.background, mask, region)?;
        let analyses: Vec<Ensemble> = self
            .analyses
            .iter()
            .map(|a| subset_region(a, mask, region))
            .collect::<std::result::Result<_, _>>()?;
        Ok(ReconstructionSeries {
            background,
            analyses,
            times: self.times.clone(),
        })
    }
}

/// One per-time-step test outcome with its family-adjusted p-value.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesTestRow {
    pub time: f64,
    pub statistic: f64,
    pub scaled: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub n: usize,
    pub m: usize,
}

impl SeriesTestRow {
    fn new(time: f64, result: &TestResult, p_adjusted: f64) -> SeriesTestRow {
        SeriesTestRow {
            time,
            statistic: result.statistic,
            scaled: result.scaled,
            p_raw: result.p_value,
            p_adjusted,
            n: result.n,
            m: result.m,
        }
    }
}

/// Test the background against every analysis in time order, optionally on
/// one region, then adjust all raw p-values jointly (Benjamini-Yekutieli).
///
/// The background side of the depth computation is prepared once and shared
/// across all time steps via the method's series path.
pub fn run_series_tests(
    series: &ReconstructionSeries,
    mask: Option<&RegionMask>,
    region: Option<u32>,
    method: &dyn TestMethod,
    opts: &TestOptions,
) -> Result<Vec<SeriesTestRow>> {
    let restricted;
    let active = match region {
        Some(r) => {
            let mask = mask.ok_or_else(|| {
                HarnessError::Series("region requested without a region mask".into())
            })?;
            restricted = series.restrict(mask, r)?;
            &restricted
        }
        None => series,
    };
    let samples: Vec<&Ensemble> = active.analyses.iter().collect();
    let results = method.run_series(&active.background, &samples, opts)?;
    let raw: Vec<f64> = results.iter().map(|r| r.p_value).collect();
    let adjusted = by_fdr_adjust(&raw)?;
    Ok(results
        .iter()
        .zip(active.times.iter())
        .zip(adjusted)
        .map(|((result, &time), p_adj)| SeriesTestRow::new(time, result, p_adj))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use depthtest_core::stat::lookup_method;
    use depthtest_core::{Grid, RegionMask};
    use std::sync::Arc;

    fn constant_fields(grid: &Arc<Grid>, levels: &[f64]) -> Ensemble {
        let g = grid.point_count();
        let values: Vec<f64> = levels.iter().flat_map(|&v| vec![v; g]).collect();
        Ensemble::new(grid.clone(), values, "const").unwrap()
    }

    #[test]
    fn identical_analyses_give_zero_statistics_and_unit_pvalues() {
        let grid = Grid::unit_square(3, 3);
        let bg = constant_fields(&grid, &[0.0, 1.0, 2.0, 3.0]);
        let series = ReconstructionSeries::new(
            bg.clone(),
            vec![bg.clone(), bg.clone(), bg],
            vec![850.0, 851.0, 852.0],
        )
        .unwrap();
        let method = lookup_method("kd-asymptotic").unwrap();
        let rows =
            run_series_tests(&series, None, None, method, &TestOptions::default()).unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row.statistic, 0.0);
            assert_eq!(row.p_raw, 1.0);
            assert_eq!(row.p_adjusted, 1.0);
        }
    }

    #[test]
    fn adjusted_pvalues_dominate_raw() {
        let grid = Grid::unit_square(3, 3);
        let bg = constant_fields(&grid, &[0.0, 1.0, 2.0, 3.5, 5.0]);
        let analyses = vec![
            constant_fields(&grid, &[0.2, 1.2, 2.2, 3.0]),
            constant_fields(&grid, &[10.0, 11.0, 12.0, 13.0]),
            constant_fields(&grid, &[0.1, 0.9, 2.4, 3.3]),
        ];
        let series =
            ReconstructionSeries::new(bg, analyses, vec![1.0, 2.0, 3.0]).unwrap();
        let method = lookup_method("kd-asymptotic").unwrap();
        let rows =
            run_series_tests(&series, None, None, method, &TestOptions::default()).unwrap();
        for row in rows {
            assert!(row.p_adjusted >= row.p_raw);
            assert!(row.p_adjusted <= 1.0);
        }
    }

    #[test]
    fn full_mask_region_matches_unmasked_run() {
        let grid = Grid::unit_square(3, 2);
        let bg = constant_fields(&grid, &[0.0, 1.0, 2.0, 4.0]);
        let analyses = vec![
            constant_fields(&grid, &[0.5, 1.5, 2.5, 3.0]),
            constant_fields(&grid, &[5.0, 6.0, 7.0, 8.0]),
        ];
        let series = ReconstructionSeries::new(bg, analyses, vec![0.0, 1.0]).unwrap();
        let mask = RegionMask::new(grid.clone(), vec![1; grid.point_count()]).unwrap();
        let method = lookup_method("kd-asymptotic").unwrap();
        let opts = TestOptions::default();
        let plain = run_series_tests(&series, None, None, method, &opts).unwrap();
        let masked = run_series_tests(&series, Some(&mask), Some(1), method, &opts).unwrap();
        for (a, b) in plain.iter().zip(&masked) {
            assert_eq!(a.statistic, b.statistic);
            assert_eq!(a.p_raw, b.p_raw);
        }
    }

    #[test]
    fn region_without_mask_is_an_error() {
        let grid = Grid::unit_square(2, 2);
        let bg = constant_fields(&grid, &[0.0, 1.0]);
        let series =
            ReconstructionSeries::new(bg.clone(), vec![bg], vec![0.0]).unwrap();
        let method = lookup_method("kd-asymptotic").unwrap();
        let err = run_series_tests(&series, None, Some(3), method, &TestOptions::default())
            .unwrap_err();
        assert!(err.to_string().contains("mask"));
    }

    #[test]
    fn times_must_increase() {
        let grid = Grid::unit_square(2, 2);
        let bg = constant_fields(&grid, &[0.0, 1.0]);
        let err = ReconstructionSeries::new(
            bg.clone(),
            vec![bg.clone(), bg],
            vec![2.0, 2.0],
        )
        .unwrap_err();
        assert!(err.to_string().contains("increasing"));
    }
}
