//! Unitary time evolution `exp(-iHt)`.
//!
//! Three routes share one interface:
//!
//! * [`Method::Dense`]: full eigendecomposition (split into the two global
//!   spin-flip parity sectors when the operator allows it), then exact
//!   phases at any requested time.
//! * [`Method::Chebyshev`]: Chebyshev expansion of the step propagator with
//!   Bessel-function coefficients, driven by matrix-free operator products.
//! * [`Method::Diagonal`]: pure phases for diagonal operators.
//!
//! A [`Propagator`] is immutable and can be shared between threads. Each
//! run creates its own [`Trajectory`], which owns all mutable buffers.

pub mod bessel;
mod chebyshev;
mod dense;
pub mod eigen;
pub mod lanczos;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, StateVector};
use crate::error::{Error, Result};
use crate::hamiltonian::{SparseOperator, TermList, DENSE_LIMIT};

pub use chebyshev::{ChebyshevPropagator, DEFAULT_TOLERANCE};
pub use dense::{BlockSpectrum, DenseSpectrum};
pub use eigen::{eigensolve_sym, SymmetricEigen};
pub use lanczos::{spectral_bounds, spectral_bounds_op, SpectralBounds, SPECTRAL_PADDING};

/// Norm drift above this aborts a run.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// Sample times, strictly increasing and starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("no sample times".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first time must be 0, got {}", times[0])));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite time {t}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("times not increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { times })
    }

    /// `n_steps + 1` equally spaced times on `[0, t_max]`.
    pub fn uniform(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || n_steps == 0 {
            return Err(Error::InvalidGrid(format!("need t_max > 0 and n_steps >= 1, got {t_max} and {n_steps}")));
        }
        let dt = t_max / n_steps as f64;
        let mut times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        times[n_steps] = t_max;
        Self::new(times)
    }

    /// Zero followed by `n_points` log-spaced times from `t_min` to `t_max`.
    pub fn logarithmic(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < t_min < t_max and at least 2 points, got {t_min}, {t_max}, {n_points}"
            )));
        }
        let (a, b) = (t_min.ln(), t_max.ln());
        let mut times = vec![0.0];
        times.extend((0..n_points).map(|k| (a + (b - a) * k as f64 / (n_points - 1) as f64).exp()));
        times[n_points] = t_max;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dense,
    Chebyshev,
    Diagonal,
    /// Dense, restricted to invariant blocks.
    BandBlocks,
}

/// User-facing propagator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorChoice {
    #[default]
    Auto,
    Dense,
    #[serde(alias = "chebyshev")]
    Cheby,
}

impl std::str::FromStr for PropagatorChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "dense" => Ok(Self::Dense),
            "cheby" | "chebyshev" => Ok(Self::Cheby),
            other => Err(Error::config(format!("unknown propagator '{other}' (expected auto, dense or cheby)"))),
        }
    }
}

/// States sampled on a grid.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub method: Method,
    /// Largest deviation of the state norm from its initial value.
    pub accuracy: f64,
}

/// A prepared propagator for one Hamiltonian.
#[derive(Debug, Clone)]
pub enum Propagator {
    Dense(DenseSpectrum),
    Chebyshev(ChebyshevPropagator),
    Diagonal { basis: Basis, sites: usize, energies: Vec<f64> },
    Blocks(BlockSpectrum),
}

impl Propagator {
    /// Prepare `op` with the requested method. `horizon` and `samples`
    /// describe the intended run and only matter for `Auto`.
    pub fn for_operator(op: &SparseOperator, choice: PropagatorChoice, horizon: f64, samples: usize) -> Result<Self> {
        if op.is_diagonal() {
            return Ok(Self::diagonal(op));
        }
        let method = match choice {
            PropagatorChoice::Dense => Method::Dense,
            PropagatorChoice::Cheby => Method::Chebyshev,
            PropagatorChoice::Auto => auto_method(op, horizon, samples),
        };
        match method {
            Method::Dense => Ok(Self::Dense(DenseSpectrum::from_operator(op)?)),
            _ => Ok(Self::Chebyshev(ChebyshevPropagator::new(op.clone(), DEFAULT_TOLERANCE)?)),
        }
    }

    pub fn diagonal(op: &SparseOperator) -> Self {
        Self::Diagonal {
            basis: op.basis(),
            sites: op.sites(),
            energies: op.diagonal().to_vec(),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            Self::Dense(_) => Method::Dense,
            Self::Chebyshev(_) => Method::Chebyshev,
            Self::Diagonal { .. } => Method::Diagonal,
            Self::Blocks(_) => Method::BandBlocks,
        }
    }

    pub fn basis(&self) -> Basis {
        match self {
            Self::Dense(d) => d.basis(),
            Self::Chebyshev(c) => c.operator().basis(),
            Self::Diagonal { basis, .. } => *basis,
            Self::Blocks(b) => b.basis(),
        }
    }

    pub fn sites(&self) -> usize {
        match self {
            Self::Dense(d) => d.sites(),
            Self::Chebyshev(c) => c.operator().sites(),
            Self::Diagonal { sites, .. } => *sites,
            Self::Blocks(b) => b.sites(),
        }
    }

    fn check(&self, psi0: &StateVector) -> Result<()> {
        if psi0.sites() != self.sites() {
            return Err(Error::SiteMismatch {
                left: self.sites(),
                right: psi0.sites(),
            });
        }
        if psi0.basis() != self.basis() {
            return Err(Error::BasisMismatch {
                expected: self.basis(),
                found: psi0.basis(),
            });
        }
        Ok(())
    }

    /// Start a trajectory at `t = 0` from `psi0`.
    pub fn start(&self, psi0: &StateVector) -> Result<Trajectory<'_>> {
        self.check(psi0)?;
        let amps = psi0.amplitudes();
        let inner = match self {
            Self::Dense(d) => TrajectoryInner::Dense(d.prepare(amps)),
            Self::Chebyshev(c) => TrajectoryInner::Chebyshev(c.prepare(amps)),
            Self::Diagonal { energies, .. } => TrajectoryInner::Diagonal {
                energies,
                initial: amps.to_vec(),
            },
            Self::Blocks(b) => TrajectoryInner::Blocks(b.prepare(amps)?),
        };
        Ok(Trajectory {
            time: 0.0,
            state: amps.to_vec(),
            initial_norm: psi0.norm(),
            basis: psi0.basis(),
            inner,
        })
    }

    /// Evolve `psi0` over `grid`, calling `observe(index, time, state)` at
    /// every grid point. Returns the largest norm drift seen.
    pub fn run<F>(&self, psi0: &StateVector, grid: &TimeGrid, mut observe: F) -> Result<f64>
    where
        F: FnMut(usize, f64, &[Complex64]) -> Result<()>,
    {
        let mut traj = self.start(psi0)?;
        let mut drift: f64 = 0.0;
        for (k, &t) in grid.times().iter().enumerate() {
            traj.advance_to(t)?;
            drift = drift.max(traj.norm_drift()?);
            observe(k, t, traj.state())?;
        }
        Ok(drift)
    }

    pub fn evolve(&self, psi0: &StateVector, grid: &TimeGrid) -> Result<EvolutionResult> {
        let mut states = Vec::with_capacity(grid.len());
        let basis = psi0.basis();
        let accuracy = self.run(psi0, grid, |_, _, amps| {
            states.push(StateVector::from_amplitudes(amps.to_vec(), basis)?);
            Ok(())
        })?;
        Ok(EvolutionResult {
            times: grid.times().to_vec(),
            states,
            method: self.method(),
            accuracy,
        })
    }
}

/// Cost model for `Auto`: dense eigendecomposition against Chebyshev
/// operator products, in rough seconds. Dense is only considered within
/// `DENSE_LIMIT`.
pub fn auto_method(op: &SparseOperator, horizon: f64, samples: usize) -> Method {
    if op.is_diagonal() {
        return Method::Diagonal;
    }
    if op.sites() > DENSE_LIMIT {
        return Method::Chebyshev;
    }
    let dim = op.dim() as f64;
    let block = if op.has_global_flip_symmetry() { dim / 2.0 } else { dim };
    let blocks = dim / block;
    let dense = blocks * 1.5e-9 * block.powi(3) + samples as f64 * 2e-9 * dim * block;
    let (lo, hi) = op.gershgorin_bounds();
    // Gershgorin overestimates the width by roughly this factor on these models
    let half_width = 0.25 * (hi - lo);
    let products = half_width * horizon + 15.0 * samples as f64;
    let cheby = products * dim * (op.flips().len() as f64 + 1.0) * 2e-9;
    if dense < cheby {
        Method::Dense
    } else {
        Method::Chebyshev
    }
}

enum TrajectoryInner<'a> {
    Dense(dense::DenseCoefficients<'a>),
    Chebyshev(chebyshev::ChebyshevStepper<'a>),
    Diagonal { energies: &'a [f64], initial: Vec<Complex64> },
    Blocks(dense::BlockCoefficients<'a>),
}

/// One state moving forward in time under a [`Propagator`].
pub struct Trajectory<'a> {
    time: f64,
    state: Vec<Complex64>,
    initial_norm: f64,
    basis: Basis,
    inner: TrajectoryInner<'a>,
}

impl Trajectory<'_> {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn to_state_vector(&self) -> StateVector {
        StateVector::from_amplitudes(self.state.clone(), self.basis).expect("trajectory dimension is a power of two")
    }

    /// Move to time `t >= self.time()`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.time {
            return Err(Error::InvalidGrid(format!("cannot step backwards from {} to {t}", self.time)));
        }
        match &mut self.inner {
            TrajectoryInner::Dense(c) => c.state_at(t, &mut self.state),
            TrajectoryInner::Chebyshev(s) => s.step(&mut self.state, t - self.time)?,
            TrajectoryInner::Blocks(b) => b.state_at(t, &mut self.state),
            TrajectoryInner::Diagonal { energies, initial } => {
                for ((o, &a), &e) in self.state.iter_mut().zip(initial.iter()).zip(energies.iter()) {
                    *o = a * Complex64::from_polar(1.0, -e * t);
                }
            }
        }
        self.time = t;
        Ok(())
    }

    /// `| ||psi(t)|| - ||psi(0)|| |`, failing above [`NORM_DRIFT_LIMIT`].
    pub fn norm_drift(&self) -> Result<f64> {
        let norm = self.state.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - self.initial_norm).abs();
        if drift > NORM_DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::NormDrift {
                drift,
                limit: NORM_DRIFT_LIMIT,
                time: self.time,
            });
        }
        Ok(drift)
    }
}

/// Exact evolution through the eigendecomposition of a dense Hermitian
/// (real symmetric) matrix.
pub fn evolve_dense(h: &DMatrix<f64>, psi0: &StateVector, grid: &TimeGrid) -> Result<EvolutionResult> {
    if h.nrows() > 1 << DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            sites: psi0.sites(),
            limit: DENSE_LIMIT,
        });
    }
    if h.nrows() != psi0.dim() {
        return Err(Error::SiteMismatch {
            left: h.nrows().trailing_zeros() as usize,
            right: psi0.sites(),
        });
    }
    let spectrum = DenseSpectrum::from_matrix(h, psi0.basis())?;
    Propagator::Dense(spectrum).evolve(psi0, grid)
}

/// Chebyshev evolution of `terms` with per-step truncation error `tol`.
pub fn evolve_chebyshev(terms: &TermList, psi0: &StateVector, grid: &TimeGrid, tol: f64) -> Result<EvolutionResult> {
    let prop = ChebyshevPropagator::new(terms.compile(), tol)?;
    Propagator::Chebyshev(prop).evolve(psi0, grid)
}
