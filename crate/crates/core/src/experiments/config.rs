//! Experiment configuration files.
//!
//! TOML with fixed sections; unknown keys are rejected and every error
//! names the offending line when it can be located.

use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;
use crate::propagation::{PropagatorChoice, TimeGrid};

pub const DEFAULT_REALIZATIONS: usize = 50;

/// Pattern keyword: every spin up except the central one.
pub const CENTER_DOWN: &str = "center_down";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    /// Output file stem (relative to the output directory).
    pub output: Option<String>,
    #[serde(default)]
    pub propagator: PropagatorChoice,
    #[serde(default)]
    pub evolution: Evolution,
    #[serde(default)]
    pub model: ModelSection,
    pub initial_state: Option<InitialStateSection>,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub scan: Option<ScanSection>,
    pub estimate: Option<EstimateSection>,
}

/// Which generator drives the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evolution {
    #[default]
    Full,
    Zeno,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "L")]
    pub sites: Option<usize>,
    #[serde(rename = "J")]
    pub coupling: Option<f64>,
    #[serde(rename = "B")]
    pub field: Option<f64>,
    #[serde(rename = "W")]
    pub disorder: Option<f64>,
    #[serde(rename = "Jz")]
    pub jz: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    /// x configuration, site 1 first: `+`/`-` (or `1`/`0`, `u`/`d`), or
    /// `center_down`.
    pub x_product: Option<String>,
    pub z_product: Option<String>,
    pub random_band: Option<usize>,
    /// Populate the `L - b` mirror sector too (default true).
    pub include_mirror: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Uniform,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub t_max: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub spacing: Spacing,
    /// First nonzero time of a log grid.
    pub t_min: Option<f64>,
}

impl GridSection {
    pub fn build(&self) -> Result<TimeGrid> {
        match self.spacing {
            Spacing::Uniform => TimeGrid::uniform(self.t_max, self.n_steps),
            Spacing::Log => {
                let t_min = self.t_min.ok_or_else(|| Error::config("grid.t_min is required for log spacing"))?;
                TimeGrid::logarithmic(t_min, self.t_max, self.n_steps)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_realizations() -> usize {
    DEFAULT_REALIZATIONS
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            n_realizations: DEFAULT_REALIZATIONS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScanVariable {
    W,
    Jz,
    L,
    #[serde(rename = "alpha")]
    Alpha,
    J,
    B,
    /// Band of the random initial state.
    #[serde(rename = "b")]
    Band,
}

impl ScanVariable {
    pub fn name(self) -> &'static str {
        match self {
            Self::W => "W",
            Self::Jz => "Jz",
            Self::L => "L",
            Self::Alpha => "alpha",
            Self::J => "J",
            Self::B => "B",
            Self::Band => "b",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Self::L | Self::Band)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub variable: ScanVariable,
    pub values: Vec<f64>,
    pub series: Option<SeriesSection>,
}

/// Second scan axis; every scan value is run for every series value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    pub variable: ScanVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    #[serde(default = "one_band")]
    pub b: usize,
    #[serde(default = "unit")]
    pub c1: f64,
}

fn one_band() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// Initial state of one run, resolved for a given `L` and band.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    XProduct(String),
    ZProduct(String),
    RandomBand { b: usize, include_mirror: bool },
}

/// One point of a scan: concrete parameters plus the scanned coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub params: ModelParams,
    pub initial_state: Option<InitialState>,
    /// `(variable, value)` for the scan axis and then the series axis.
    pub coordinates: Vec<(ScanVariable, f64)>,
}

impl ExperimentConfig {
    /// Parse and validate. `source` is the file text, used to locate errors.
    pub fn from_toml(source: &str) -> Result<Self> {
        let config: Self = toml::from_str(source).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of_offset(source, s.start)),
            message: e.message().to_string(),
        })?;
        config.validate(source)?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn validate(&self, source: &str) -> Result<()> {
        let err = |section: &str, key: &str, message: String| Error::Config {
            line: line_of_key(source, section, key),
            message,
        };
        let m = &self.model;
        for (key, value) in [("J", m.coupling), ("B", m.field), ("W", m.disorder), ("Jz", m.jz), ("alpha", m.alpha)] {
            if let Some(v) = value {
                if !v.is_finite() {
                    return Err(err("model", key, format!("model.{key} must be finite")));
                }
            }
        }
        for (key, value) in [("W", m.disorder), ("Jz", m.jz), ("alpha", m.alpha)] {
            if value.is_some_and(|v| v < 0.0) {
                return Err(err("model", key, format!("model.{key} must be >= 0")));
            }
        }
        if let Some(l) = m.sites {
            if !(2..=crate::basis::MAX_SITES).contains(&l) {
                return Err(err("model", "L", format!("model.L = {l} is outside 2..=30")));
            }
        }
        if let Some(grid) = &self.grid {
            if grid.n_steps < 2 {
                return Err(err("grid", "n_steps", format!("grid.n_steps must be >= 2, got {}", grid.n_steps)));
            }
            if !(grid.t_max > 0.0 && grid.t_max.is_finite()) {
                return Err(err("grid", "t_max", format!("grid.t_max must be positive, got {}", grid.t_max)));
            }
            if grid.spacing == Spacing::Log && grid.t_min.is_none() {
                return Err(err("grid", "spacing", "log spacing needs grid.t_min".into()));
            }
            if grid.spacing == Spacing::Uniform && grid.t_min.is_some() {
                return Err(err("grid", "t_min", "grid.t_min only applies to log spacing".into()));
            }
        }
        if self.ensemble.n_realizations == 0 {
            return Err(err("ensemble", "n_realizations", "ensemble.n_realizations must be >= 1".into()));
        }
        let mut scanned = Vec::new();
        if let Some(scan) = &self.scan {
            scanned.push((scan.variable, &scan.values, "scan"));
            if let Some(series) = &scan.series {
                if series.variable == scan.variable {
                    return Err(err("scan.series", "variable", "series variable repeats the scan variable".into()));
                }
                scanned.push((series.variable, &series.values, "scan.series"));
            }
        }
        for (var, values, section) in &scanned {
            if values.is_empty() {
                return Err(err(section, "values", format!("{section}.values is empty")));
            }
            for &v in values.iter() {
                if !v.is_finite() || (var.is_integer() && (v.fract() != 0.0 || v < 0.0)) {
                    return Err(err(section, "values", format!("invalid value {v} for {}", var.name())));
                }
            }
            if self.is_fixed(*var) {
                let (sec, key) = match var {
                    ScanVariable::Band => ("initial_state", "random_band"),
                    v => ("model", v.name()),
                };
                return Err(err(
                    sec,
                    key,
                    format!("{} is scanned and must not also be fixed in [{sec}]", var.name()),
                ));
            }
        }
        if m.sites.is_none() && !scanned.iter().any(|(v, _, _)| *v == ScanVariable::L) {
            return Err(err("model", "L", "model.L is required unless L is scanned".into()));
        }
        if let Some(init) = &self.initial_state {
            let kinds = [init.x_product.is_some(), init.z_product.is_some(), init.random_band.is_some()]
                .iter()
                .filter(|&&k| k)
                .count();
            let band_scanned = scanned.iter().any(|(v, _, _)| *v == ScanVariable::Band);
            if kinds > 1 || (kinds == 1 && band_scanned && init.random_band.is_none()) {
                return Err(err(
                    "initial_state",
                    "",
                    "initial_state takes exactly one of x_product, z_product, random_band".into(),
                ));
            }
            if kinds == 0 && !band_scanned {
                return Err(err("initial_state", "", "initial_state needs x_product, z_product or random_band".into()));
            }
            if init.include_mirror.is_some() && init.random_band.is_none() && !band_scanned {
                return Err(err("initial_state", "include_mirror", "include_mirror only applies to random_band".into()));
            }
        } else if scanned.iter().any(|(v, _, _)| *v == ScanVariable::Band) {
            return Err(err("scan", "variable", "scanning b needs an [initial_state] section".into()));
        }
        Ok(())
    }

    fn is_fixed(&self, var: ScanVariable) -> bool {
        let m = &self.model;
        match var {
            ScanVariable::W => m.disorder.is_some(),
            ScanVariable::Jz => m.jz.is_some(),
            ScanVariable::L => m.sites.is_some(),
            ScanVariable::Alpha => m.alpha.is_some(),
            ScanVariable::J => m.coupling.is_some(),
            ScanVariable::B => m.field.is_some(),
            ScanVariable::Band => self.initial_state.as_ref().is_some_and(|i| i.random_band.is_some()),
        }
    }

    pub fn require_grid(&self) -> Result<TimeGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::config("this experiment needs a [grid] section"))?
            .build()
    }

    /// Every scan point, scan axis outermost. A config without a scan has
    /// one point.
    pub fn points(&self) -> Result<Vec<ScanPoint>> {
        let mut combos: Vec<Vec<(ScanVariable, f64)>> = vec![vec![]];
        if let Some(scan) = &self.scan {
            combos = scan.values.iter().map(|&v| vec![(scan.variable, v)]).collect();
            if let Some(series) = &scan.series {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        series.values.iter().map(move |&v| {
                            let mut c = c.clone();
                            c.push((series.variable, v));
                            c
                        })
                    })
                    .collect();
            }
        }
        combos.into_iter().map(|c| self.point(c)).collect()
    }

    fn point(&self, coordinates: Vec<(ScanVariable, f64)>) -> Result<ScanPoint> {
        let m = &self.model;
        let mut sites = m.sites;
        let mut params = ModelParams::new(2)
            .with_coupling(m.coupling.unwrap_or(1.0))
            .with_field(m.field.unwrap_or(0.0))
            .with_disorder(m.disorder.unwrap_or(0.0))
            .with_jz(m.jz.unwrap_or(0.0))
            .with_alpha(m.alpha.unwrap_or(0.0));
        let mut band = self.initial_state.as_ref().and_then(|i| i.random_band);
        for &(var, v) in &coordinates {
            match var {
                ScanVariable::W => params.disorder = v,
                ScanVariable::Jz => params.jz = v,
                ScanVariable::L => sites = Some(v as usize),
                ScanVariable::Alpha => params.alpha = v,
                ScanVariable::J => params.coupling = v,
                ScanVariable::B => params.field = v,
                ScanVariable::Band => band = Some(v as usize),
            }
        }
        params.sites = sites.ok_or_else(|| Error::config("model.L is required"))?;
        params.validate().map_err(|e| Error::config(e.to_string()))?;
        let initial_state = match &self.initial_state {
            None => None,
            Some(init) => Some(if let Some(p) = &init.x_product {
                InitialState::XProduct(expand_pattern(p, params.sites)?)
            } else if let Some(p) = &init.z_product {
                InitialState::ZProduct(expand_pattern(p, params.sites)?)
            } else {
                let b = band.ok_or_else(|| Error::config("initial_state.random_band is required"))?;
                if 2 * b > params.sites {
                    return Err(Error::config(format!("band {b} does not exist at L = {}", params.sites)));
                }
                InitialState::RandomBand {
                    b,
                    include_mirror: init.include_mirror.unwrap_or(true),
                }
            }),
        };
        Ok(ScanPoint {
            params,
            initial_state,
            coordinates,
        })
    }
}

/// Resolve `center_down` and check the pattern length.
pub fn expand_pattern(pattern: &str, sites: usize) -> Result<String> {
    let p = if pattern == CENTER_DOWN {
        (0..sites).map(|n| if n == (sites - 1) / 2 { '-' } else { '+' }).collect()
    } else {
        pattern.to_string()
    };
    if p.chars().count() != sites {
        return Err(Error::config(format!("pattern '{p}' has {} sites, model has L = {sites}", p.chars().count())));
    }
    Ok(p)
}

fn line_of_offset(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header when `key`
/// is empty or absent.
pub(crate) fn line_of_key(source: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (k, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.starts_with('[') && line.ends_with(']') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section {
                header = Some(k + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim().trim_matches('"') == key {
                    return Some(k + 1);
                }
            }
        }
    }
    header
}
