//! CSV tables, fit summaries and run manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{ExperimentConfig, PointRecord, Report};
use crate::error::{Error, Result};
use crate::observables::EnsembleSpec;
use crate::rng::{self, Purpose};

/// A CSV table held as already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column parsed as numbers; empty cells become NaN.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column(name)?;
        Some(self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
    }
}

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e9)`.
pub(crate) fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e9).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub(crate) fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Stream ids of one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationSeed {
    pub index: u64,
    pub disorder_stream: u64,
    pub initial_state_stream: u64,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub code_version: String,
    pub rng_algorithm: String,
    pub seed: u64,
    pub realizations: Vec<RealizationSeed>,
    pub config: ExperimentConfig,
    pub config_text: String,
    pub points: Vec<PointRecord>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn new(report: &Report, config: &ExperimentConfig, config_text: &str, wall_time_seconds: f64) -> Self {
        let spec = EnsembleSpec {
            n_realizations: report.points.iter().map(|p| p.n_realizations).max().unwrap_or(0),
            seed: config.ensemble.seed,
        };
        let realizations = (0..spec.n_realizations as u64)
            .map(|index| RealizationSeed {
                index,
                disorder_stream: rng::stream_id(index, Purpose::Disorder),
                initial_state_stream: rng::stream_id(index, Purpose::InitialState),
            })
            .collect();
        Self {
            experiment: report.experiment.name().to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            rng_algorithm: rng::RNG_ALGORITHM.to_string(),
            seed: spec.seed,
            realizations,
            config: config.clone(),
            config_text: config_text.to_string(),
            points: report.points.clone(),
            outputs: Vec::new(),
            warnings: report.warnings.clone(),
            threads: rayon::current_num_threads(),
            wall_time_seconds,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write every table, the summary and the manifest under `dir` with file
/// stem `name`. Returns the paths written, manifest last.
pub fn write_report(report: &Report, dir: &Path, name: &str, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (suffix, table) in &report.tables {
        let file = match suffix {
            None => format!("{name}.csv"),
            Some(s) => format!("{name}.{s}.csv"),
        };
        let path = dir.join(&file);
        write_file(&path, &table.to_csv()?)?;
        written.push(path);
    }
    if let Some(summary) = &report.summary {
        let file = if report.experiment == super::Experiment::Estimate {
            format!("{name}.json")
        } else {
            format!("{name}.fit.json")
        };
        let path = dir.join(file);
        write_file(&path, (serde_json::to_string_pretty(summary)? + "\n").as_bytes())?;
        written.push(path);
    }
    manifest.outputs = written
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let path = dir.join(format!("{name}.manifest.json"));
    write_file(&path, (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes())?;
    written.push(path);
    Ok(written)
}
