//! Config-driven experiments: each runner turns an [`ExperimentConfig`]
//! into typed results, which [`Report`] renders as CSV tables, a fit
//! summary and a manifest.
//!
//! Realizations of every scan point run in one parallel pool and are
//! reduced in (point, realization) order, so outputs do not depend on the
//! thread count.

pub mod config;
mod output;
mod runners;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use config::{
    EnsembleSection, Evolution, ExperimentConfig, GridSection, InitialState, ScanPoint, ScanVariable, Spacing,
};
pub use output::{write_report, RunManifest, Table};
pub use runners::{
    run_band_dynamics, run_estimate, run_fidelity_scan, run_leakage_scan, run_lightcone, run_reversal_scan,
    run_spectrum, BandCurve, FidelityOutput, HalfTimeRow, LeakageOutput, LeakageRow, LightconeOutput, LightconePoint,
    ReversalOutput, ReversalRow, ScanFit,
};

use crate::error::{Error, Result};
use crate::propagation::{Method, PropagatorChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Lightcone,
    BandDynamics,
    LeakageScan,
    FidelityScan,
    ReversalScan,
    Spectrum,
    Estimate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lightcone => "lightcone",
            Self::BandDynamics => "band_dynamics",
            Self::LeakageScan => "leakage_scan",
            Self::FidelityScan => "fidelity_scan",
            Self::ReversalScan => "reversal_scan",
            Self::Spectrum => "spectrum",
            Self::Estimate => "estimate",
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub propagator: Option<PropagatorChoice>,
}

/// What one scan point actually ran.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub params: crate::hamiltonian::ModelParams,
    pub n_realizations: usize,
    pub methods: BTreeSet<Method>,
}

/// Rendered results of one run.
#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    /// `(suffix, table)`; the table without suffix is `<name>.csv`.
    pub tables: Vec<(Option<&'static str>, Table)>,
    /// Fit summary (`<name>.fit.json`), or the estimate values.
    pub summary: Option<serde_json::Value>,
    pub points: Vec<PointRecord>,
    pub warnings: Vec<String>,
}

/// Check the config against the requested experiment and run it.
pub fn run(experiment: Experiment, config: &ExperimentConfig, options: &RunOptions) -> Result<Report> {
    if let Some(declared) = config.experiment {
        if declared != experiment {
            return Err(Error::config(format!(
                "config declares experiment '{}' but '{}' was requested",
                declared.name(),
                experiment.name()
            )));
        }
    }
    let mut config = config.clone();
    if let Some(p) = options.propagator {
        config.propagator = p;
    }
    match experiment {
        Experiment::Lightcone => Ok(run_lightcone(&config)?.report()),
        Experiment::BandDynamics => Ok(runners::band_dynamics_report(&run_band_dynamics(&config)?)),
        Experiment::LeakageScan => run_leakage_scan(&config)?.report(),
        Experiment::FidelityScan => run_fidelity_scan(&config)?.report(),
        Experiment::ReversalScan => run_reversal_scan(&config)?.report(),
        Experiment::Spectrum => run_spectrum(&config),
        Experiment::Estimate => run_estimate(&config),
    }
}
