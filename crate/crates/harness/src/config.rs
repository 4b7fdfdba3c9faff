//! Study configuration: one TOML schema shared by all study kinds, with
//! per-study validation in the study implementations.
//!
//! ```toml
//! study = "size"                 # size | power-homogeneous |
//!                                # power-heterogeneous | convergence
//! seed = 20240809
//! alpha = 0.05
//! sims_per_cell = 2000           # convergence: replicates per cell
//! methods = ["kd", "qi"]
//! grid = [32, 32]
//! family = "gaussian"            # or "student-t" with df = 3.0
//! permutations = 500             # convergence only
//!
//! [lattice]                      # size and convergence cells
//! r = [0.2, 0.3, 0.4, 0.5]
//! nu = [0.5, 1.0, 1.5]
//! n = [50, 100]
//! m = [50, 100]                  # convergence: omit for balanced m = n
//!
//! [baseline]                     # power studies; defaults shown
//! r = 0.4
//! nu = 1.0
//! n = 100
//! m = 50
//!
//! [vary]                         # power-homogeneous: one cell per value
//! mu = [-1.0, 0.0, 1.0]
//! sigma = [0.25, 1.0, 2.0]
//! r = [0.1, 0.4, 1.0]
//! nu = [0.5, 1.0, 2.0]
//!
//! [heterogeneous]                # power-heterogeneous
//! kappa = [0.2, 0.6, 1.0]
//! vary = ["mean", "sd"]
//! ```

use serde::{Deserialize, Serialize};

use depthtest_core::sim::ProcessFamily;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub study: String,
    pub seed: u64,
    pub alpha: f64,
    pub sims_per_cell: usize,
    pub methods: Vec<String>,
    pub grid: [usize; 2],
    #[serde(default = "default_family")]
    pub family: String,
    #[serde(default)]
    pub df: Option<f64>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub lattice: Lattice,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default)]
    pub vary: VaryLists,
    #[serde(default)]
    pub heterogeneous: Heterogeneous,
}

fn default_family() -> String {
    "gaussian".into()
}

fn default_permutations() -> usize {
    500
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    #[serde(default)]
    pub r: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub m: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
}

fn default_r() -> f64 {
    0.4
}
fn default_nu() -> f64 {
    1.0
}
fn default_n() -> usize {
    100
}
fn default_m() -> usize {
    50
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline {
            r: default_r(),
            nu: default_nu(),
            n: default_n(),
            m: default_m(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaryLists {
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub r: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
}

impl VaryLists {
    pub fn is_empty(&self) -> bool {
        self.mu.is_empty() && self.sigma.is_empty() && self.r.is_empty() && self.nu.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Heterogeneous {
    #[serde(default)]
    pub kappa: Vec<f64>,
    #[serde(default = "default_panels")]
    pub vary: Vec<String>,
}

fn default_panels() -> Vec<String> {
    vec!["mean".into(), "sd".into()]
}

impl Default for Heterogeneous {
    fn default() -> Self {
        Heterogeneous {
            kappa: Vec::new(),
            vary: default_panels(),
        }
    }
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<StudyConfig> {
        let cfg: StudyConfig = toml::from_str(text)?;
        cfg.validate_common()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<StudyConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        StudyConfig::from_toml(&text)
    }

    /// Checks shared by every study kind; study-specific requirements live
    /// in each study's `validate`.
    pub fn validate_common(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(HarnessError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.sims_per_cell < 100 {
            return Err(HarnessError::Config(format!(
                "sims_per_cell must be at least 100, got {}",
                self.sims_per_cell
            )));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Config("methods must be nonempty".into()));
        }
        for m in &self.methods {
            depthtest_core::stat::lookup_method(m)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return Err(HarnessError::Config("grid axes must be positive".into()));
        }
        self.process_family()?;
        Ok(())
    }

    pub fn process_family(&self) -> Result<ProcessFamily> {
        match self.family.as_str() {
            "gaussian" => Ok(ProcessFamily::Gaussian),
            "student-t" | "student_t" => {
                let df = self.df.ok_or_else(|| {
                    HarnessError::Config("family student-t requires df".into())
                })?;
                if df <= 2.0 {
                    return Err(HarnessError::Config(format!(
                        "student-t df must exceed 2, got {df}"
                    )));
                }
                Ok(ProcessFamily::StudentT { df })
            }
            other => Err(HarnessError::Config(format!(
                "unknown family {other:?} (expected gaussian or student-t)"
            ))),
        }
    }
}
