//! Study registry: each study kind (size, power, convergence) sits behind a
//! common trait and is selected by name from the configuration file.

mod convergence;
mod rates;

pub use convergence::{l2_cdf_distance, run_convergence_cell, ConvergenceCell};

use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;
use crate::error::{HarnessError, Result};

/// One rejection-rate estimate: a parameter cell and method, with its
/// Monte-Carlo standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateRow {
    pub study: String,
    pub method: String,
    pub family: String,
    pub r: f64,
    pub nu: f64,
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub sigma: f64,
    pub kappa: Option<f64>,
    /// Which parameter this cell varies from the baseline ("none" for size).
    pub vary: String,
    pub estimate: f64,
    pub std_error: f64,
    pub sims: usize,
    pub alpha: f64,
}

/// One convergence replicate: distance between the permutation null and the
/// Kolmogorov law, plus critical-value gaps at the three standard levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub r: f64,
    pub nu: f64,
    pub n: usize,
    pub m: usize,
    pub replicate: usize,
    pub l2_distance: f64,
    pub gap90: f64,
    pub gap95: f64,
    pub gap99: f64,
    pub permutations: usize,
}

#[derive(Debug, Clone)]
pub enum StudyResult {
    Rates(Vec<RateRow>),
    Convergence(Vec<ConvergenceRow>),
}

impl StudyResult {
    pub fn row_count(&self) -> usize {
        match self {
            StudyResult::Rates(rows) => rows.len(),
            StudyResult::Convergence(rows) => rows.len(),
        }
    }
}

/// A config-driven simulation study.
pub trait Study: Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    /// Study-specific configuration requirements.
    fn validate(&self, cfg: &StudyConfig) -> Result<()>;

    fn run(&self, cfg: &StudyConfig) -> Result<StudyResult>;
}

static STUDIES: &[&dyn Study] = &[
    &rates::SizeStudy,
    &rates::PowerHomogeneousStudy,
    &rates::PowerHeterogeneousStudy,
    &convergence::ConvergenceStudy,
];

pub fn studies() -> &'static [&'static dyn Study] {
    STUDIES
}

pub fn study_names() -> Vec<&'static str> {
    STUDIES.iter().map(|s| s.name()).collect()
}

/// Find a study by name; underscores and hyphens are interchangeable.
pub fn lookup_study(name: &str) -> Result<&'static dyn Study> {
    let canonical = name.replace('_', "-");
    STUDIES
        .iter()
        .find(|s| s.name() == canonical)
        .copied()
        .ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown study {name:?} (available: {})",
                study_names().join(", ")
            ))
        })
}

/// Validate and run the study named in the config.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate_common()?;
    let study = lookup_study(&cfg.study)?;
    study.validate(cfg)?;
    study.run(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_finds_all_studies() {
        for name in ["size", "power-homogeneous", "power_heterogeneous", "convergence"] {
            assert!(lookup_study(name).is_ok(), "{name}");
        }
        assert!(lookup_study("sizes").is_err());
    }
}
