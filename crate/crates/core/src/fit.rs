//! Least-squares fits used by the scan summaries.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Estimate(format!("a line fit needs 2+ matching points, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Estimate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let predicted: Vec<f64> = x.iter().map(|a| slope * a + intercept).collect();
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: r_squared(y, &predicted),
    })
}

/// Line through `(ln x, ln y)`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    linear_fit(&positive_logs(x)?, &positive_logs(y)?)
}

/// Line through `(x, ln y)`.
pub fn log_linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    linear_fit(x, &positive_logs(y)?)
}

fn positive_logs(v: &[f64]) -> Result<Vec<f64>> {
    v.iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Ok(a.ln())
            } else {
                Err(Error::Estimate(format!("cannot take the log of {a}")))
            }
        })
        .collect()
}

/// `1 - SS_res / SS_tot`.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|o| (o - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(o, p)| (o - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - ss_res / ss_tot
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrefactorFit {
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Best `c` in `observed ~ c * model`, with R^2 of the scaled model.
pub fn prefactor_fit(observed: &[f64], model: &[f64]) -> Result<PrefactorFit> {
    if observed.len() != model.len() || observed.is_empty() {
        return Err(Error::Estimate("prefactor fit needs matching non-empty series".into()));
    }
    let mm: f64 = model.iter().map(|m| m * m).sum();
    if mm == 0.0 {
        return Err(Error::Estimate("model is identically zero".into()));
    }
    let prefactor = observed.iter().zip(model).map(|(o, m)| o * m).sum::<f64>() / mm;
    let predicted: Vec<f64> = model.iter().map(|m| prefactor * m).collect();
    Ok(PrefactorFit {
        prefactor,
        r_squared: r_squared(observed, &predicted),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    /// Decay time in `exp(-(t / tau)^2)`.
    pub tau: f64,
    pub r_squared: f64,
    /// Samples used.
    pub points: usize,
}

/// Fit `exp(-(t / tau)^2)` to the samples before the series first drops
/// below `floor`, by least squares on `F` itself. The search starts from
/// the line through `(t^2, ln F)` and refines `tau` by golden section.
pub fn gaussian_fit(times: &[f64], values: &[f64], floor: f64) -> Result<GaussianFit> {
    let end = values.iter().position(|&v| v < floor).unwrap_or(values.len());
    let (t, f) = (&times[..end], &values[..end]);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(f)
        .filter(|(&ti, &fi)| ti > 0.0 && fi > 0.0)
        .map(|(&ti, &fi)| (ti * ti, fi.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Estimate("too few samples above the floor for a Gaussian fit".into()));
    }
    let num: f64 = pts.iter().map(|(s, l)| s * l).sum();
    let den: f64 = pts.iter().map(|(s, _)| s * s).sum();
    let rate = -num / den;
    if rate <= 0.0 {
        return Err(Error::Estimate("series does not decay".into()));
    }
    let model = |tau: f64| -> Vec<f64> { t.iter().map(|ti| (-(ti / tau).powi(2)).exp()).collect() };
    let ssr = |log_tau: f64| -> f64 {
        model(log_tau.exp()).iter().zip(f).map(|(m, o)| (m - o).powi(2)).sum()
    };
    let start = (1.0 / rate.sqrt()).ln();
    let (mut a, mut b) = (start - 2.0, start + 2.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (ssr(c), ssr(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ssr(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ssr(d);
        }
    }
    let tau = (0.5 * (a + b)).exp();
    Ok(GaussianFit {
        tau,
        r_squared: r_squared(f, &model(tau)),
        points: end,
    })
}
