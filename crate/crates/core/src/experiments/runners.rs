//! The seven experiment runners.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Evolution, ExperimentConfig, InitialState, ScanPoint, ScanVariable};
use super::output::{num, opt, Table};
use super::{Experiment, PointRecord, Report};
use crate::bands::{band_weight_raw, random_band_state_with, spectrum_rows, BandSector, BandTable};
use crate::basis::{basis_rotate, Basis, SpinConfiguration, StateVector};
use crate::error::{Error, Result};
use crate::fit::{gaussian_fit, log_linear_fit, log_log_fit, prefactor_fit, GaussianFit, LinearFit, PrefactorFit};
use crate::hamiltonian::{sample_disorder, x_operator, DisorderRealization, ModelParams};
use crate::observables::{
    fidelity_series, first_crossing, p_leak, reduce, reversal_time, sigma_x_profile_raw, t_half, EnsembleResult,
    EnsembleSpec, LeakageEstimate,
};
use crate::perturbation::{
    band_gap, coupling_eps, delta_e_asymptotic, delta_e_estimate, pleak_field_asymptotic, pleak_field_estimate,
    pleak_nn_asymptotic, pleak_nn_estimate, EstimateInputs,
};
use crate::propagation::{Method, Propagator, TimeGrid};
use crate::rng::{self, Purpose};
use crate::zeno::build_zeno;

/// Fidelity level down to which the Gaussian short-time fit runs.
pub const GAUSSIAN_FLOOR: f64 = 0.2;

// ---- shared machinery ----

/// Disordered or random-state points need the whole ensemble; anything
/// else is deterministic and runs once.
fn realizations_for(config: &ExperimentConfig, point: &ScanPoint) -> usize {
    let random_state = matches!(point.initial_state, Some(InitialState::RandomBand { .. }));
    if point.params.disorder == 0.0 && !random_state {
        1
    } else {
        config.ensemble.n_realizations
    }
}

fn initial_state(point: &ScanPoint, table: &BandTable, seed: u64, realization: u64) -> Result<StateVector> {
    match &point.initial_state {
        None => Err(Error::config("this experiment needs an [initial_state] section")),
        Some(InitialState::XProduct(p)) => Ok(StateVector::product(SpinConfiguration::from_pattern(p, Basis::X)?)),
        Some(InitialState::ZProduct(p)) => Ok(basis_rotate(
            &StateVector::product(SpinConfiguration::from_pattern(p, Basis::Z)?),
            Basis::X,
        )),
        Some(InitialState::RandomBand { b, include_mirror }) => {
            let sector = if *include_mirror { BandSector::Full } else { BandSector::Lower };
            let mut rng = rng::stream(seed, realization, Purpose::InitialState);
            random_band_state_with(table, *b, sector, &mut rng)
        }
    }
}

/// One realization, ready to evolve.
struct Sample {
    disorder: DisorderRealization,
    table: BandTable,
    psi0: StateVector,
}

fn sample(config: &ExperimentConfig, point: &ScanPoint, realization: u64) -> Result<Sample> {
    let table = BandTable::for_params(&point.params)?;
    let disorder = sample_disorder(&point.params, config.ensemble.seed, realization);
    let psi0 = initial_state(point, &table, config.ensemble.seed, realization)?;
    Ok(Sample { disorder, table, psi0 })
}

fn full_propagator(config: &ExperimentConfig, params: &ModelParams, s: &Sample, grid: &TimeGrid) -> Result<Propagator> {
    let op = x_operator(params, &s.disorder)?;
    Propagator::for_operator(&op, config.propagator, grid.t_max(), grid.len())
}

fn zeno_propagator(params: &ModelParams, s: &Sample) -> Result<Propagator> {
    let zh = build_zeno(params, &s.disorder, &s.table)?;
    zh.propagator_for(&zh.occupied_bands(&s.psi0))
}

fn evolution_propagator(config: &ExperimentConfig, params: &ModelParams, s: &Sample, grid: &TimeGrid) -> Result<Propagator> {
    match config.evolution {
        Evolution::Full => full_propagator(config, params, s, grid),
        Evolution::Zeno => zeno_propagator(params, s),
    }
}

/// Run `task(point, realization)` for every pair in parallel and reduce in
/// (point, realization) order.
fn run_ensemble<F>(config: &ExperimentConfig, points: &[ScanPoint], task: F) -> Result<Vec<(EnsembleResult, PointRecord)>>
where
    F: Fn(&ScanPoint, u64) -> Result<(Vec<f64>, Method)> + Sync,
{
    let counts: Vec<usize> = points.iter().map(|p| realizations_for(config, p)).collect();
    let tasks: Vec<(usize, u64)> = counts
        .iter()
        .enumerate()
        .flat_map(|(p, &n)| (0..n as u64).map(move |r| (p, r)))
        .collect();
    let mut results = tasks
        .par_iter()
        .map(|&(p, r)| task(&points[p], r))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    points
        .iter()
        .zip(&counts)
        .map(|(point, &n)| {
            let chunk: Vec<_> = results.by_ref().take(n).collect();
            let methods = chunk.iter().map(|(_, m)| *m).collect();
            let series = chunk.into_iter().map(|(v, _)| v).collect();
            let spec = EnsembleSpec {
                n_realizations: n,
                seed: config.ensemble.seed,
            };
            Ok((
                reduce(spec, series)?,
                PointRecord {
                    coordinates: point.coordinates.clone(),
                    params: point.params,
                    n_realizations: n,
                    methods,
                },
            ))
        })
        .collect()
}

fn scan_header(points: &[ScanPoint]) -> Vec<String> {
    points
        .first()
        .map(|p| p.coordinates.iter().map(|(v, _)| v.name().to_string()).collect())
        .unwrap_or_default()
}

fn coordinate_cells(coordinates: &[(ScanVariable, f64)]) -> Vec<String> {
    coordinates.iter().map(|&(_, v)| num(v)).collect()
}

fn random_band(point: &ScanPoint) -> Result<usize> {
    match point.initial_state {
        Some(InitialState::RandomBand { b, .. }) => Ok(b),
        _ => Err(Error::config("this experiment needs initial_state.random_band")),
    }
}

fn stderr_of(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Fit of one series of a scan against the scan variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanFit {
    pub variable: ScanVariable,
    /// Series coordinate the fit is restricted to.
    pub series: Option<(ScanVariable, f64)>,
    /// `log_log` or `log_linear`.
    pub kind: &'static str,
    pub points: usize,
    pub fit: Option<LinearFit>,
    /// Largest over smallest fitted value.
    pub spread_ratio: Option<f64>,
}

/// Group `(coordinates, y)` by series coordinate and fit each group.
fn scan_fits(entries: &[(&[(ScanVariable, f64)], f64)], log_linear: bool) -> Vec<ScanFit> {
    let mut groups: Vec<(Option<(ScanVariable, f64)>, Vec<(f64, f64)>)> = Vec::new();
    for (coords, y) in entries {
        let Some(&(_, x)) = coords.first() else { continue };
        let series = coords.get(1).copied();
        if !y.is_finite() {
            continue;
        }
        match groups.iter_mut().find(|(s, _)| *s == series) {
            Some((_, pts)) => pts.push((x, *y)),
            None => groups.push((series, vec![(x, *y)])),
        }
    }
    let variable = entries.first().and_then(|(c, _)| c.first()).map(|c| c.0);
    groups
        .into_iter()
        .filter_map(|(series, pts)| {
            let variable = variable?;
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
            let fit = if log_linear { log_linear_fit(&x, &y) } else { log_log_fit(&x, &y) }.ok();
            let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(ScanFit {
                variable,
                series,
                kind: if log_linear { "log_linear" } else { "log_log" },
                points: pts.len(),
                fit,
                spread_ratio: (lo > 0.0).then_some(hi / lo),
            })
        })
        .collect()
}

// ---- lightcone ----

#[derive(Debug, Clone)]
pub struct LightconePoint {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub params: ModelParams,
    pub times: Vec<f64>,
    /// `profile[k][n]`: mean `<sx_n>` at `times[k]`, site index from 0.
    pub profile: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LightconeOutput {
    pub points: Vec<LightconePoint>,
    pub records: Vec<PointRecord>,
}

pub fn run_lightcone(config: &ExperimentConfig) -> Result<LightconeOutput> {
    let grid = config.require_grid()?;
    let points = config.points()?;
    for p in &points {
        if !matches!(p.initial_state, Some(InitialState::XProduct(_) | InitialState::ZProduct(_))) {
            return Err(Error::config("lightcone needs a product initial state (x_product or z_product)"));
        }
    }
    let results = run_ensemble(config, &points, |point, r| {
        let s = sample(config, point, r)?;
        let prop = evolution_propagator(config, &point.params, &s, &grid)?;
        let mut out = Vec::with_capacity(grid.len() * point.params.sites);
        prop.run(&s.psi0, &grid, |_, _, amps| {
            out.extend(sigma_x_profile_raw(amps, point.params.sites));
            Ok(())
        })?;
        Ok((out, prop.method()))
    })?;
    let mut out = LightconeOutput {
        points: Vec::new(),
        records: Vec::new(),
    };
    for (point, (ens, record)) in points.into_iter().zip(results) {
        let l = point.params.sites;
        out.points.push(LightconePoint {
            coordinates: point.coordinates,
            params: point.params,
            times: grid.times().to_vec(),
            profile: ens.mean.chunks(l).map(<[f64]>::to_vec).collect(),
            stderr: ens.stderr.chunks(l).map(<[f64]>::to_vec).collect(),
        });
        out.records.push(record);
    }
    Ok(out)
}

impl LightconeOutput {
    pub fn report(&self) -> Report {
        let coords: Vec<String> = self
            .points
            .first()
            .map(|p| p.coordinates.iter().map(|(v, _)| v.name().to_string()).collect())
            .unwrap_or_default();
        let mut table = Table::new(coords.into_iter().chain(["t", "n", "sigma_x", "stderr"].map(String::from)));
        for p in &self.points {
            let prefix = coordinate_cells(&p.coordinates);
            for (k, &t) in p.times.iter().enumerate() {
                for n in 0..p.params.sites {
                    let mut row = prefix.clone();
                    row.extend([num(t), (n + 1).to_string(), num(p.profile[k][n]), num(p.stderr[k][n])]);
                    table.push(row);
                }
            }
        }
        Report {
            experiment: Experiment::Lightcone,
            tables: vec![(None, table)],
            summary: None,
            points: self.records.clone(),
            warnings: Vec::new(),
        }
    }
}

// ---- band dynamics and leakage ----

/// Ensemble `P_b(t)` of one scan point.
#[derive(Debug, Clone)]
pub struct BandCurve {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub params: ModelParams,
    pub band: usize,
    pub times: Vec<f64>,
    pub ensemble: EnsembleResult,
    pub record: PointRecord,
}

pub fn run_band_dynamics(config: &ExperimentConfig) -> Result<Vec<BandCurve>> {
    let grid = config.require_grid()?;
    let points = config.points()?;
    let bands = points.iter().map(random_band).collect::<Result<Vec<_>>>()?;
    let results = run_ensemble(config, &points, |point, r| {
        let b = random_band(point)?;
        let s = sample(config, point, r)?;
        let prop = evolution_propagator(config, &point.params, &s, &grid)?;
        let mut out = Vec::with_capacity(grid.len());
        prop.run(&s.psi0, &grid, |_, _, amps| {
            out.push(band_weight_raw(s.table.labels(), b, amps));
            Ok(())
        })?;
        Ok((out, prop.method()))
    })?;
    Ok(points
        .into_iter()
        .zip(bands)
        .zip(results)
        .map(|((point, band), (ensemble, record))| BandCurve {
            coordinates: point.coordinates,
            params: point.params,
            band,
            times: grid.times().to_vec(),
            ensemble,
            record,
        })
        .collect())
}

fn curve_table(curves: &[BandCurve], value: &str) -> Table {
    let coords: Vec<String> = curves
        .first()
        .map(|c| c.coordinates.iter().map(|(v, _)| v.name().to_string()).collect())
        .unwrap_or_default();
    let mut table = Table::new(coords.into_iter().chain(["t", value, "stderr"].map(String::from)));
    for c in curves {
        let prefix = coordinate_cells(&c.coordinates);
        for (k, &t) in c.times.iter().enumerate() {
            let mut row = prefix.clone();
            row.extend([num(t), num(c.ensemble.mean[k]), num(c.ensemble.stderr[k])]);
            table.push(row);
        }
    }
    table
}

pub(super) fn band_dynamics_report(curves: &[BandCurve]) -> Report {
    Report {
        experiment: Experiment::BandDynamics,
        tables: vec![(None, curve_table(curves, "P_b"))],
        summary: None,
        points: curves.iter().map(|c| c.record.clone()).collect(),
        warnings: Vec::new(),
    }
}

/// Perturbative leakage where one applies: fields and zz bonds add, and
/// only `alpha = 0` has the flat-band gaps the estimates assume.
pub fn leakage_estimate(params: &ModelParams, b: usize) -> Option<f64> {
    if params.alpha != 0.0 || (params.disorder == 0.0 && params.jz == 0.0) {
        return None;
    }
    let mut total = 0.0;
    if params.disorder > 0.0 {
        total += pleak_field_estimate(params.sites, params.coupling, params.disorder, b).ok()?;
    }
    if params.jz > 0.0 {
        if b != 1 {
            return None;
        }
        total += pleak_nn_estimate(params.sites, params.coupling, params.jz).ok()?;
    }
    Some(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageRow {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub band: usize,
    pub leakage: LeakageEstimate,
    pub stderr: f64,
    pub estimate: Option<f64>,
    /// Estimate times the fitted global prefactor.
    pub estimate_fitted: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LeakageOutput {
    pub curves: Vec<BandCurve>,
    pub rows: Vec<LeakageRow>,
    pub prefactor: Option<PrefactorFit>,
    pub fits: Vec<ScanFit>,
    pub warnings: Vec<String>,
}

pub fn run_leakage_scan(config: &ExperimentConfig) -> Result<LeakageOutput> {
    if config.scan.is_none() {
        return Err(Error::config("leakage_scan needs a [scan] section"));
    }
    let curves = run_band_dynamics(config)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for c in &curves {
        let leakage = p_leak(&c.times, &c.ensemble.mean)?;
        let each = c
            .ensemble
            .per_realization
            .iter()
            .map(|p| p_leak(&c.times, p).map(|e| e.value))
            .collect::<Result<Vec<_>>>()?;
        if !leakage.plateau_ok {
            warnings.push(format!(
                "no plateau at {:?}: leakage halves {} and {}",
                c.coordinates, leakage.first_half, leakage.second_half
            ));
        }
        let inputs = EstimateInputs {
            sites: c.params.sites,
            coupling: c.params.coupling,
            disorder: c.params.disorder,
            jz: c.params.jz,
            band: c.band,
        };
        if inputs.outside_dilute_limit() {
            warnings.push(format!("b/L above the dilute limit at {:?}", c.coordinates));
        }
        rows.push(LeakageRow {
            coordinates: c.coordinates.clone(),
            band: c.band,
            leakage,
            stderr: stderr_of(&each),
            estimate: leakage_estimate(&c.params, c.band),
            estimate_fitted: None,
        });
    }
    let with_estimate: Vec<&LeakageRow> = rows.iter().filter(|r| r.estimate.is_some()).collect();
    let observed: Vec<f64> = with_estimate.iter().map(|r| r.leakage.value).collect();
    let model: Vec<f64> = with_estimate.iter().map(|r| r.estimate.unwrap()).collect();
    let prefactor = prefactor_fit(&observed, &model).ok();
    if let Some(pf) = prefactor {
        for r in &mut rows {
            r.estimate_fitted = r.estimate.map(|e| pf.prefactor * e);
        }
    }
    let entries: Vec<(&[(ScanVariable, f64)], f64)> =
        rows.iter().map(|r| (r.coordinates.as_slice(), r.leakage.value)).collect();
    let fits = scan_fits(&entries, false);
    Ok(LeakageOutput {
        curves,
        rows,
        prefactor,
        fits,
        warnings,
    })
}

impl LeakageOutput {
    pub fn report(&self) -> Result<Report> {
        let coords: Vec<String> = self
            .rows
            .first()
            .map(|r| r.coordinates.iter().map(|(v, _)| v.name().to_string()).collect())
            .unwrap_or_default();
        let mut table = Table::new(
            coords
                .into_iter()
                .chain(["P_leak", "stderr", "estimate", "estimate_fitted", "plateau_ok"].map(String::from)),
        );
        for r in &self.rows {
            let mut row = coordinate_cells(&r.coordinates);
            row.extend([
                num(r.leakage.value),
                num(r.stderr),
                opt(r.estimate),
                opt(r.estimate_fitted),
                r.leakage.plateau_ok.to_string(),
            ]);
            table.push(row);
        }
        Ok(Report {
            experiment: Experiment::LeakageScan,
            tables: vec![(None, table), (Some("curves"), curve_table(&self.curves, "P_b"))],
            summary: Some(json!({
                "prefactor": self.prefactor,
                "fits": self.fits,
            })),
            points: self.curves.iter().map(|c| c.record.clone()).collect(),
            warnings: self.warnings.clone(),
        })
    }
}

// ---- fidelity ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfTimeRow {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub band: usize,
    /// Mean over the realizations that crossed 1/2.
    pub t_half: Option<f64>,
    pub stderr: f64,
    pub n_crossed: usize,
    pub n_realizations: usize,
    pub delta_e: Option<f64>,
    /// `c1 / dE` with the fitted `c1`.
    pub overlay: Option<f64>,
    pub gaussian: Option<GaussianFit>,
}

#[derive(Debug, Clone)]
pub struct FidelityOutput {
    pub curves: Vec<BandCurve>,
    pub rows: Vec<HalfTimeRow>,
    pub c1: Option<PrefactorFit>,
    pub fits: Vec<ScanFit>,
    pub warnings: Vec<String>,
}

pub fn run_fidelity_scan(config: &ExperimentConfig) -> Result<FidelityOutput> {
    let grid = config.require_grid()?;
    let points = config.points()?;
    let bands = points.iter().map(random_band).collect::<Result<Vec<_>>>()?;
    let results = run_ensemble(config, &points, |point, r| {
        let s = sample(config, point, r)?;
        let full = full_propagator(config, &point.params, &s, &grid)?;
        let zeno = zeno_propagator(&point.params, &s)?;
        Ok((fidelity_series(&s.psi0, &grid, &full, &zeno)?, full.method()))
    })?;
    let curves: Vec<BandCurve> = points
        .into_iter()
        .zip(bands)
        .zip(results)
        .map(|((point, band), (ensemble, record))| BandCurve {
            coordinates: point.coordinates,
            params: point.params,
            band,
            times: grid.times().to_vec(),
            ensemble,
            record,
        })
        .collect();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for c in &curves {
        let mut crossed = Vec::new();
        for (r, f) in c.ensemble.per_realization.iter().enumerate() {
            match t_half(&c.times, f) {
                Ok(t) => crossed.push(t),
                Err(e @ Error::NoCrossing { .. }) => warnings.push(format!("realization {r} at {:?}: {e}", c.coordinates)),
                Err(e) => return Err(e),
            }
        }
        if crossed.is_empty() {
            return Err(Error::NoCrossing {
                what: "fidelity half time (every realization)",
                horizon: *c.times.last().unwrap(),
            });
        }
        let t_mean = Some(crossed.iter().sum::<f64>() / crossed.len() as f64);
        let p = &c.params;
        let delta_e = (p.alpha == 0.0 && p.jz == 0.0 && p.disorder > 0.0)
            .then(|| delta_e_estimate(p.sites, p.coupling, p.disorder, c.band).ok())
            .flatten();
        let gaussian = match gaussian_fit(&c.times, &c.ensemble.mean, GAUSSIAN_FLOOR) {
            Ok(g) => Some(g),
            Err(e) => {
                warnings.push(format!("Gaussian fit at {:?}: {e}", c.coordinates));
                None
            }
        };
        rows.push(HalfTimeRow {
            coordinates: c.coordinates.clone(),
            band: c.band,
            t_half: t_mean,
            stderr: stderr_of(&crossed),
            n_crossed: crossed.len(),
            n_realizations: c.ensemble.n_realizations,
            delta_e,
            overlay: None,
            gaussian,
        });
    }
    let usable: Vec<&HalfTimeRow> = rows
        .iter()
        .filter(|r| r.delta_e.is_some() && r.t_half.is_some() && r.n_crossed == r.n_realizations)
        .collect();
    let observed: Vec<f64> = usable.iter().map(|r| r.t_half.unwrap()).collect();
    let model: Vec<f64> = usable.iter().map(|r| 1.0 / r.delta_e.unwrap()).collect();
    let c1 = prefactor_fit(&observed, &model).ok();
    if let Some(c1) = c1 {
        for r in &mut rows {
            r.overlay = r.delta_e.map(|d| c1.prefactor / d);
        }
    }
    let entries: Vec<(&[(ScanVariable, f64)], f64)> = rows
        .iter()
        .map(|r| (r.coordinates.as_slice(), r.t_half.unwrap_or(f64::NAN)))
        .collect();
    let fits = scan_fits(&entries, false);
    Ok(FidelityOutput {
        curves,
        rows,
        c1,
        fits,
        warnings,
    })
}

impl FidelityOutput {
    pub fn report(&self) -> Result<Report> {
        let coords: Vec<String> = self
            .rows
            .first()
            .map(|r| {
                r.coordinates
                    .iter()
                    .filter(|(v, _)| *v != ScanVariable::Band)
                    .map(|(v, _)| v.name().to_string())
                    .collect()
            })
            .unwrap_or_default();
        // b always has its own column
        let mut table = Table::new(coords.into_iter().chain(
            [
                "b",
                "T_half",
                "stderr",
                "n_crossed",
                "delta_e",
                "c1_over_delta_e",
                "gauss_tau",
                "gauss_r2",
            ]
            .map(String::from),
        ));
        for r in &self.rows {
            let mut row: Vec<String> = r
                .coordinates
                .iter()
                .filter(|(v, _)| *v != ScanVariable::Band)
                .map(|&(_, x)| num(x))
                .collect();
            row.extend([
                r.band.to_string(),
                opt(r.t_half),
                num(r.stderr),
                r.n_crossed.to_string(),
                opt(r.delta_e),
                opt(r.overlay),
                opt(r.gaussian.map(|g| g.tau)),
                opt(r.gaussian.map(|g| g.r_squared)),
            ]);
            table.push(row);
        }
        Ok(Report {
            experiment: Experiment::FidelityScan,
            tables: vec![(None, curve_table(&self.curves, "F")), (Some("thalf"), table)],
            summary: Some(json!({
                "c1": self.c1,
                "fits": self.fits,
                "gaussian_floor": GAUSSIAN_FLOOR,
            })),
            points: self.curves.iter().map(|c| c.record.clone()).collect(),
            warnings: self.warnings.clone(),
        })
    }
}

// ---- reversal ----

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReversalRow {
    pub coordinates: Vec<(ScanVariable, f64)>,
    pub sites: usize,
    pub alpha: f64,
    /// Reversal time, or the horizon when no crossing was seen.
    pub tau_rev: f64,
    pub lower_bound: bool,
    /// First zero crossing of the mean background polarization.
    pub background_crossing: Option<f64>,
    /// Grid steps between the two crossings.
    pub step_gap: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ReversalOutput {
    pub rows: Vec<ReversalRow>,
    pub times: Vec<f64>,
    /// Per row: central and mean background polarization on the grid.
    pub central: Vec<Vec<f64>>,
    pub background: Vec<Vec<f64>>,
    pub fits: Vec<ScanFit>,
    pub records: Vec<PointRecord>,
}

fn step_index(times: &[f64], t: f64) -> usize {
    times.iter().position(|&s| s >= t).unwrap_or(times.len())
}

pub fn run_reversal_scan(config: &ExperimentConfig) -> Result<ReversalOutput> {
    let grid = config.require_grid()?;
    let points = config.points()?;
    for p in &points {
        if p.params.sites % 2 == 0 {
            return Err(Error::config(format!("reversal_scan needs odd L, got {}", p.params.sites)));
        }
        if p.params.field == 0.0 {
            return Err(Error::config("reversal_scan needs B != 0"));
        }
        let expected = super::config::expand_pattern(super::config::CENTER_DOWN, p.params.sites)?;
        if p.initial_state != Some(InitialState::XProduct(expected)) {
            return Err(Error::config("reversal_scan needs x_product = \"center_down\""));
        }
    }
    let results = run_ensemble(config, &points, |point, r| {
        let s = sample(config, point, r)?;
        let prop = full_propagator(config, &point.params, &s, &grid)?;
        let l = point.params.sites;
        let center = (l - 1) / 2;
        let mut central = Vec::with_capacity(grid.len());
        let mut background = Vec::with_capacity(grid.len());
        prop.run(&s.psi0, &grid, |_, _, amps| {
            let profile = sigma_x_profile_raw(amps, l);
            central.push(profile[center]);
            background.push((profile.iter().sum::<f64>() - profile[center]) / (l - 1) as f64);
            Ok(())
        })?;
        central.extend(background);
        Ok((central, prop.method()))
    })?;
    let times = grid.times().to_vec();
    let n = times.len();
    let mut out = ReversalOutput {
        rows: Vec::new(),
        times: times.clone(),
        central: Vec::new(),
        background: Vec::new(),
        fits: Vec::new(),
        records: Vec::new(),
    };
    for (point, (ens, record)) in points.into_iter().zip(results) {
        let (central, background) = ens.mean.split_at(n);
        let (tau_rev, lower_bound) = match reversal_time(&times, central) {
            Ok(t) => (t, false),
            Err(Error::NoCrossing { .. }) => (grid.t_max(), true),
            Err(e) => return Err(e),
        };
        let background_crossing = first_crossing(&times, background, 0.0, "background reversal").ok();
        let step_gap = match (lower_bound, background_crossing) {
            (false, Some(tb)) => Some(step_index(&times, tau_rev).abs_diff(step_index(&times, tb))),
            _ => None,
        };
        out.rows.push(ReversalRow {
            coordinates: point.coordinates,
            sites: point.params.sites,
            alpha: point.params.alpha,
            tau_rev,
            lower_bound,
            background_crossing,
            step_gap,
        });
        out.central.push(central.to_vec());
        out.background.push(background.to_vec());
        out.records.push(record);
    }
    let entries: Vec<(&[(ScanVariable, f64)], f64)> = out
        .rows
        .iter()
        .map(|r| (r.coordinates.as_slice(), if r.lower_bound { f64::NAN } else { r.tau_rev }))
        .collect();
    out.fits = scan_fits(&entries, true);
    Ok(out)
}

impl ReversalOutput {
    pub fn report(&self) -> Result<Report> {
        let mut table = Table::new(["L", "alpha", "tau_rev", "lower_bound", "background_crossing", "step_gap"]);
        let mut series = Table::new(["L", "alpha", "t", "central", "background"]);
        for (k, r) in self.rows.iter().enumerate() {
            table.push(vec![
                r.sites.to_string(),
                num(r.alpha),
                num(r.tau_rev),
                r.lower_bound.to_string(),
                opt(r.background_crossing),
                r.step_gap.map(|g| g.to_string()).unwrap_or_default(),
            ]);
            for (j, &t) in self.times.iter().enumerate() {
                series.push(vec![
                    r.sites.to_string(),
                    num(r.alpha),
                    num(t),
                    num(self.central[k][j]),
                    num(self.background[k][j]),
                ]);
            }
        }
        let warnings = self
            .rows
            .iter()
            .filter(|r| r.lower_bound)
            .map(|r| format!("no reversal within the horizon at L = {}, alpha = {}", r.sites, r.alpha))
            .collect();
        Ok(Report {
            experiment: Experiment::ReversalScan,
            tables: vec![(None, table), (Some("series"), series)],
            summary: Some(json!({ "fits": self.fits })),
            points: self.records.clone(),
            warnings,
        })
    }
}

// ---- spectrum and estimate ----

pub fn run_spectrum(config: &ExperimentConfig) -> Result<Report> {
    let points = config.points()?;
    let mut table = Table::new(
        scan_header(&points)
            .into_iter()
            .chain(["b", "E_b", "dimension", "v_min", "v_max"].map(String::from)),
    );
    let mut records = Vec::new();
    for p in &points {
        let bands = BandTable::for_params(&p.params)?;
        for (b, e, dim) in spectrum_rows(&bands)? {
            let (lo, hi) = bands.v_range(b)?;
            let mut row = coordinate_cells(&p.coordinates);
            row.extend([b.to_string(), opt(e), dim.to_string(), num(lo), num(hi)]);
            table.push(row);
        }
        records.push(PointRecord {
            coordinates: p.coordinates.clone(),
            params: p.params,
            n_realizations: 0,
            methods: BTreeSet::new(),
        });
    }
    Ok(Report {
        experiment: Experiment::Spectrum,
        tables: vec![(None, table)],
        summary: None,
        points: records,
        warnings: Vec::new(),
    })
}

fn estimate_values(p: &ModelParams, b: usize, c1: f64) -> Value {
    let (l, j, w) = (p.sites, p.coupling, p.disorder);
    let inputs = EstimateInputs {
        sites: l,
        coupling: j,
        disorder: w,
        jz: p.jz,
        band: b,
    };
    let below = (b > 0).then(|| band_gap(l, j, b - 1, b).ok()).flatten();
    let above = band_gap(l, j, b, b + 1).ok();
    let delta_e = delta_e_estimate(l, j, w, b).ok();
    json!({
        "L": l,
        "J": j,
        "W": w,
        "Jz": p.jz,
        "b": b,
        "dilute_warning": inputs.outside_dilute_limit(),
        "coupling_eps": coupling_eps(w),
        "band_gap_below": below,
        "band_gap_above": above,
        "pleak_field": pleak_field_estimate(l, j, w, b).ok(),
        "pleak_field_asymptotic": pleak_field_asymptotic(l, j, w),
        "pleak_nn": (b == 1).then(|| pleak_nn_estimate(l, j, p.jz).ok()).flatten(),
        "pleak_nn_asymptotic": pleak_nn_asymptotic(l, j, p.jz),
        "delta_e": delta_e,
        "delta_e_asymptotic": delta_e_asymptotic(l, j, w),
        "c1": c1,
        "t_half": delta_e.filter(|d| *d > 0.0).map(|d| c1 / d),
    })
}

pub fn run_estimate(config: &ExperimentConfig) -> Result<Report> {
    let points = config.points()?;
    let (b, c1) = config.estimate.as_ref().map(|e| (e.b, e.c1)).unwrap_or((1, 1.0));
    let mut values: Vec<Value> = Vec::new();
    for p in &points {
        let band = match p.initial_state {
            Some(InitialState::RandomBand { b, .. }) => b,
            _ => b,
        };
        let mut v = estimate_values(&p.params, band, c1);
        for (var, x) in &p.coordinates {
            v["scan"][var.name()] = json!(x);
        }
        values.push(v);
    }
    let summary = if values.len() == 1 { values.pop().unwrap() } else { Value::Array(values) };
    Ok(Report {
        experiment: Experiment::Estimate,
        tables: Vec::new(),
        summary: Some(summary),
        points: points
            .iter()
            .map(|p| PointRecord {
                coordinates: p.coordinates.clone(),
                params: p.params,
                n_realizations: 0,
                methods: BTreeSet::new(),
            })
            .collect(),
        warnings: Vec::new(),
    })
}
