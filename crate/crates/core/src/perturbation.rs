//! Closed-form perturbative estimates for leakage and band spreading.
//!
//! Each estimate comes as the finite-L expression and, where useful, its
//! large-L leading term. Estimates assume few excitations; [`EstimateInputs`]
//! carries a warning flag once `b / L > 1/4`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bands::band_energy;
use crate::error::{Error, Result};
use crate::hamiltonian::DisorderRealization;

/// Ratio `b / L` above which estimates are flagged.
pub const DILUTE_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateInputs {
    pub sites: usize,
    pub coupling: f64,
    pub disorder: f64,
    pub jz: f64,
    pub band: usize,
}

impl EstimateInputs {
    /// True when the excitation density is too high for the estimates.
    pub fn outside_dilute_limit(&self) -> bool {
        self.band as f64 / self.sites as f64 > DILUTE_LIMIT
    }
}

/// Typical field coupling `W / sqrt 12`, the rms of a uniform field on
/// `[-W/2, W/2]`.
pub fn coupling_eps(disorder: f64) -> f64 {
    disorder / 12f64.sqrt()
}

/// `E_b - E_b'`.
pub fn band_gap(sites: usize, coupling: f64, b: usize, b_prime: usize) -> Result<f64> {
    Ok(band_energy(sites, coupling, b)? - band_energy(sites, coupling, b_prime)?)
}

/// Leakage of a band-`b` state through the random fields: each of the `b`
/// flips to band `b - 1` and `L - b` flips to band `b + 1` contributes
/// `eps^2 / gap^2`.
pub fn pleak_field_estimate(sites: usize, coupling: f64, disorder: f64, b: usize) -> Result<f64> {
    if 2 * (b + 1) > sites {
        return Err(Error::Estimate(format!("band {b} has no upper neighbour at L = {sites}")));
    }
    let eps2 = coupling_eps(disorder).powi(2);
    let down = if b == 0 {
        0.0
    } else {
        b as f64 * eps2 / band_gap(sites, coupling, b - 1, b)?.powi(2)
    };
    let up = (sites - b) as f64 * eps2 / band_gap(sites, coupling, b, b + 1)?.powi(2);
    Ok(down + up)
}

/// Large-L form of [`pleak_field_estimate`]: `W^2 / (48 J^2 L)`.
pub fn pleak_field_asymptotic(sites: usize, coupling: f64, disorder: f64) -> f64 {
    disorder * disorder / (48.0 * coupling * coupling * sites as f64)
}

/// Band-1 leakage through the zz bonds: `(L - 3)/8 * Jz^2 / (J^2 (2L - 8)^2)`.
pub fn pleak_nn_estimate(sites: usize, coupling: f64, jz: f64) -> Result<f64> {
    if sites <= 4 {
        return Err(Error::Estimate(format!("zz leakage estimate needs L > 4, got {sites}")));
    }
    let l = sites as f64;
    Ok((l - 3.0) / 8.0 * jz * jz / (coupling * coupling * (2.0 * l - 8.0).powi(2)))
}

/// Large-L form of [`pleak_nn_estimate`]: `Jz^2 / (32 J^2 L)`.
pub fn pleak_nn_asymptotic(sites: usize, coupling: f64, jz: f64) -> f64 {
    jz * jz / (32.0 * coupling * coupling * sites as f64)
}

/// Second-order degenerate perturbation matrix of band 1 in the fields
/// `h`: its eigenvalues are the level shifts.
pub fn build_c_matrix(h: &DisorderRealization, sites: usize, coupling: f64) -> Result<DMatrix<f64>> {
    if sites <= 3 {
        return Err(Error::Estimate(format!("band-1 second-order matrix needs L > 3, got {sites}")));
    }
    if h.fields.len() != sites {
        return Err(Error::SiteMismatch {
            left: sites,
            right: h.fields.len(),
        });
    }
    let to_lower = 1.0 / (band_energy(sites, coupling, 1)? - band_energy(sites, coupling, 0)?);
    let to_upper = 1.0 / (band_energy(sites, coupling, 1)? - band_energy(sites, coupling, 2)?);
    let f = &h.fields;
    let total: f64 = f.iter().map(|x| x * x).sum();
    Ok(DMatrix::from_fn(sites, sites, |k, s| {
        if k == s {
            f[s] * f[s] * to_lower + (total - f[s] * f[s]) * to_upper
        } else {
            f[k] * f[s] * (to_lower + to_upper)
        }
    }))
}

/// Band spreading from the second-order estimate, any band:
/// `dE^2 = W^4/(180 J^2) [b/(2b - L - 1)^2 + (L - b)/(L - 2b - 1)^2]`.
pub fn delta_e_estimate(sites: usize, coupling: f64, disorder: f64, b: usize) -> Result<f64> {
    if sites <= 2 * b + 1 {
        return Err(Error::Estimate(format!("spreading estimate needs L > 2b + 1, got L = {sites}, b = {b}")));
    }
    let (l, bf) = (sites as f64, b as f64);
    let bracket = bf / (2.0 * bf - l - 1.0).powi(2) + (l - bf) / (l - 2.0 * bf - 1.0).powi(2);
    Ok((disorder.powi(4) / (180.0 * coupling * coupling) * bracket).sqrt())
}

/// The band-1 special case written out:
/// `dE^2 = W^4/(180 J^2) [1/(L - 1)^2 + (L - 1)/(L - 3)^2]`.
pub fn delta_e_band1(sites: usize, coupling: f64, disorder: f64) -> Result<f64> {
    if sites <= 3 {
        return Err(Error::Estimate(format!("spreading estimate needs L > 3, got {sites}")));
    }
    let l = sites as f64;
    let bracket = 1.0 / (l - 1.0).powi(2) + (l - 1.0) / (l - 3.0).powi(2);
    Ok((disorder.powi(4) / (180.0 * coupling * coupling) * bracket).sqrt())
}

/// Large-L spreading, `W^2 / (J sqrt(180 L))`.
pub fn delta_e_asymptotic(sites: usize, coupling: f64, disorder: f64) -> f64 {
    disorder * disorder / (coupling * (180.0 * sites as f64).sqrt())
}

/// `c1 / dE`.
pub fn t_half_estimate(sites: usize, coupling: f64, disorder: f64, b: usize, c1: f64) -> Result<f64> {
    let de = delta_e_estimate(sites, coupling, disorder, b)?;
    if de <= 0.0 {
        return Err(Error::Estimate("zero band spreading gives no half time".into()));
    }
    Ok(c1 / de)
}
