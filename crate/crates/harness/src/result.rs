//! Machine-readable outputs: result CSVs and the JSON run manifest.
//!
//! Writers stage output in a sibling temp file and rename on completion, so
//! a crash never leaves a partial table behind. Row order and float
//! formatting are deterministic, which makes repeated runs byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::study::StudyResult;

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Serialize rows as CSV atomically.
pub fn write_csv_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let tmp = tmp_path(path);
    {
        let mut writer = csv::Writer::from_path(&tmp).map_err(HarnessError::Csv)?;
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush().map_err(|e| HarnessError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Write whichever row schema the study produced.
pub fn write_study_csv(path: impl AsRef<Path>, result: &StudyResult) -> Result<()> {
    match result {
        StudyResult::Rates(rows) => write_csv_rows(path, rows),
        StudyResult::Convergence(rows) => write_csv_rows(path, rows),
    }
}

/// Write any serializable value as pretty JSON atomically.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let tmp = tmp_path(path);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&tmp, text.as_bytes()).map_err(|e| HarnessError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Record of one tool invocation: enough to replay the run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub library_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, seed: u64) -> RunManifest {
        RunManifest {
            subcommand: subcommand.to_string(),
            config,
            seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            finished_at: String::new(),
            wall_seconds: 0.0,
            outputs: Vec::new(),
            error: None,
        }
    }

    pub fn add_output(&mut self, path: impl AsRef<Path>) {
        self.outputs.push(path.as_ref().display().to_string());
    }

    /// Stamp the end time and write the manifest atomically.
    pub fn finish(mut self, path: impl AsRef<Path>, error: Option<String>) -> Result<()> {
        let end = chrono::Utc::now();
        if let Ok(start) = chrono::DateTime::parse_from_rfc3339(&self.started_at) {
            self.wall_seconds = (end - start.with_timezone(&chrono::Utc))
                .num_milliseconds() as f64
                / 1000.0;
        }
        self.finished_at = end.to_rfc3339();
        self.error = error;
        write_json(path, &self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::RateRow;

    #[test]
    fn csv_output_is_byte_identical_across_writes() {
        let rows = vec![RateRow {
            study: "size".into(),
            method: "kd-asymptotic".into(),
            family: "gaussian".into(),
            r: 0.4,
            nu: 1.0,
            n: 50,
            m: 50,
            mu: 0.0,
            sigma: 1.0,
            kappa: None,
            vary: "none".into(),
            estimate: 0.05,
            std_error: 0.004873397172404482,
            sims: 2000,
            alpha: 0.05,
        }];
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_csv_rows(&a, &rows).unwrap();
        write_csv_rows(&b, &rows).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        let text = fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("study,method,family,r,nu,n,m,mu,sigma,kappa,vary,"));
    }

    #[test]
    fn manifest_records_outputs_and_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut m = RunManifest::new("study", serde_json::json!({"seed": 1}), 1);
        m.add_output("results.csv");
        m.finish(&path, Some("boom".into())).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["subcommand"], "study");
        assert_eq!(v["error"], "boom");
        assert_eq!(v["outputs"][0], "results.csv");
        assert!(v["finished_at"].as_str().unwrap().len() > 10);
    }
}
