//! Measured quantities and the disorder ensemble.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::band_weight_raw;
use crate::basis::{basis_rotate, Basis, StateVector};
use crate::error::{Error, Result};
use crate::propagation::{Propagator, TimeGrid};

/// Relative agreement required between the two halves of the plateau window.
pub const PLATEAU_TOLERANCE: f64 = 0.10;

/// Values on a time grid; each entry is a scalar (length 1) or a per-site
/// vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ObservableSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidGrid(format!("{} times but {} values", times.len(), values.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("series contains non-finite values".into()));
        }
        Ok(Self {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn scalar(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(label, times, values.into_iter().map(|v| vec![v]).collect())
    }

    /// First component at every time.
    pub fn scalars(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0]).collect()
    }
}

/// `<sx_n>` for every site, evaluated in the x basis.
pub fn sigma_x_profile(psi: &StateVector) -> Vec<f64> {
    match psi.basis() {
        Basis::X => sigma_x_profile_raw(psi.amplitudes(), psi.sites()),
        Basis::Z => {
            let x = basis_rotate(psi, Basis::X);
            sigma_x_profile_raw(x.amplitudes(), x.sites())
        }
    }
}

pub(crate) fn sigma_x_profile_raw(amps: &[Complex64], sites: usize) -> Vec<f64> {
    let mut up = vec![0.0; sites];
    let mut total = 0.0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        total += p;
        let mut bits = i;
        while bits != 0 {
            let n = bits.trailing_zeros() as usize;
            up[n] += p;
            bits &= bits - 1;
        }
    }
    up.into_iter().map(|u| 2.0 * u - total).collect()
}

/// `|<psi0|psi_t>|^2`.
pub fn survival_probability(psi0: &StateVector, psi_t: &StateVector) -> Result<f64> {
    Ok(psi0.inner(psi_t)?.norm_sqr().clamp(0.0, 1.0))
}

/// `|<psi0| e^{i H_Z t} e^{-i H t} |psi0>|^2`.
pub fn fidelity_zeno(psi0: &StateVector, t: f64, full: &Propagator, zeno: &Propagator) -> Result<f64> {
    let grid = TimeGrid::new(if t == 0.0 { vec![0.0] } else { vec![0.0, t] })?;
    Ok(*fidelity_series(psi0, &grid, full, zeno)?.last().unwrap())
}

/// Zeno fidelity on every grid time; both evolutions advance in lockstep.
pub fn fidelity_series(psi0: &StateVector, grid: &TimeGrid, full: &Propagator, zeno: &Propagator) -> Result<Vec<f64>> {
    let mut a = full.start(psi0)?;
    let mut b = zeno.start(psi0)?;
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        a.advance_to(t)?;
        b.advance_to(t)?;
        a.norm_drift()?;
        let overlap = crate::basis::inner(b.state(), a.state());
        out.push(overlap.norm_sqr().clamp(0.0, 1.0));
    }
    Ok(out)
}

/// `P_b(t)` under `prop`.
pub fn band_probability_series(prop: &Propagator, psi0: &StateVector, grid: &TimeGrid, labels: &[u8], b: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    prop.run(psi0, grid, |_, _, amps| {
        out.push(band_weight_raw(labels, b, amps));
        Ok(())
    })?;
    Ok(out)
}

/// Long-time leakage with its plateau check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeakageEstimate {
    pub value: f64,
    /// Mean leakage over the first and second half of the window.
    pub first_half: f64,
    pub second_half: f64,
    pub plateau_ok: bool,
}

/// `1 - <P_b>` averaged over the final third of the grid. The two halves of
/// that window must agree within [`PLATEAU_TOLERANCE`] (relative, on the
/// leakage) for `plateau_ok`.
pub fn p_leak(times: &[f64], probability: &[f64]) -> Result<LeakageEstimate> {
    if times.len() != probability.len() || times.len() < 3 {
        return Err(Error::InvalidGrid("leakage needs at least 3 matching samples".into()));
    }
    let t_max = *times.last().unwrap();
    let start = times.iter().position(|&t| t >= 2.0 * t_max / 3.0).unwrap();
    let window: Vec<f64> = probability[start..].iter().map(|p| 1.0 - p).collect();
    if window.len() < 2 {
        return Err(Error::InvalidGrid("plateau window holds fewer than 2 samples".into()));
    }
    let mid = window.len() / 2;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let first_half = mean(&window[..mid]);
    let second_half = mean(&window[mid..]);
    let value = mean(&window);
    let scale = first_half.abs().max(second_half.abs());
    let plateau_ok = (first_half - second_half).abs() <= PLATEAU_TOLERANCE * scale || scale < 1e-12;
    Ok(LeakageEstimate {
        value,
        first_half,
        second_half,
        plateau_ok,
    })
}

/// First time `values` reaches `level` coming from its initial side,
/// linearly interpolated.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64, what: &'static str) -> Result<f64> {
    let horizon = times.last().copied().unwrap_or(0.0);
    let Some(&v0) = values.first() else {
        return Err(Error::NoCrossing { what, horizon });
    };
    let above = v0 > level;
    for k in 1..values.len().min(times.len()) {
        let crossed = if above { values[k] <= level } else { values[k] >= level };
        if crossed {
            let (t0, t1) = (times[k - 1], times[k]);
            let (y0, y1) = (values[k - 1], values[k]);
            if y1 == y0 {
                return Ok(t1);
            }
            return Ok(t0 + (level - y0) * (t1 - t0) / (y1 - y0));
        }
    }
    Err(Error::NoCrossing { what, horizon })
}

/// First time the fidelity drops to 1/2.
pub fn t_half(times: &[f64], fidelity: &[f64]) -> Result<f64> {
    first_crossing(times, fidelity, 0.5, "fidelity half time")
}

/// First zero crossing of the central spin polarization.
pub fn reversal_time(times: &[f64], polarization: &[f64]) -> Result<f64> {
    first_crossing(times, polarization, 0.0, "spin reversal")
}

/// Ensemble size and the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnsembleSpec {
    pub n_realizations: usize,
    pub seed: u64,
}

/// Mean over realizations with the per-realization series retained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub mean: Vec<f64>,
    /// Standard error of the mean (sample standard deviation over `sqrt n`).
    pub stderr: Vec<f64>,
    pub n_realizations: usize,
    pub seed: u64,
    pub per_realization: Vec<Vec<f64>>,
}

/// Run `compute(index)` for every realization in parallel and reduce in
/// index order, so the result does not depend on scheduling.
pub fn ensemble_average<F>(spec: EnsembleSpec, compute: F) -> Result<EnsembleResult>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    if spec.n_realizations == 0 {
        return Err(Error::InvalidParams("an ensemble needs at least one realization".into()));
    }
    let per_realization = (0..spec.n_realizations as u64)
        .into_par_iter()
        .map(&compute)
        .collect::<Result<Vec<_>>>()?;
    reduce(spec, per_realization)
}

/// Ordered reduction of already computed realizations.
pub fn reduce(spec: EnsembleSpec, per_realization: Vec<Vec<f64>>) -> Result<EnsembleResult> {
    let n = per_realization.len();
    if n == 0 {
        return Err(Error::InvalidParams("an ensemble needs at least one realization".into()));
    }
    let width = per_realization[0].len();
    if per_realization.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidParams("realizations returned series of different lengths".into()));
    }
    let mut mean = vec![0.0; width];
    for r in &per_realization {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let stderr = (0..width)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            let var = per_realization.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        })
        .collect();
    Ok(EnsembleResult {
        mean,
        stderr,
        n_realizations: n,
        seed: spec.seed,
        per_realization,
    })
}
