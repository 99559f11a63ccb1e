use std::collections::HashMap;

use num_complex::Complex64;

use super::bessel::bessel_j_orders;
use super::lanczos::{spectral_bounds_op, SpectralBounds};
use crate::error::{Error, Result};
use crate::hamiltonian::SparseOperator;

/// Default per-step truncation tolerance in vector norm.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Longer steps are split so that `half_width * dt` stays below this.
const MAX_SCALED_STEP: f64 = 250.0;
const MAX_ORDER: usize = 4096;

/// `exp(-iH dt)` as a truncated Chebyshev series in `(H - center) / half_width`.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    op: SparseOperator,
    bounds: SpectralBounds,
    tol: f64,
}

impl ChebyshevPropagator {
    pub fn new(op: SparseOperator, tol: f64) -> Result<Self> {
        if !(tol >= 1e-12) {
            return Err(Error::InvalidParams(format!("Chebyshev tolerance must be >= 1e-12, got {tol}")));
        }
        let bounds = spectral_bounds_op(&op);
        Ok(Self { op, bounds, tol })
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    pub fn bounds(&self) -> SpectralBounds {
        self.bounds
    }

    /// Expansion coefficients `c_k = (2 - delta_k0) (-i)^k J_k(a dt)` truncated
    /// where the remaining tail is below the tolerance.
    pub fn coefficients(&self, dt: f64) -> Result<Vec<Complex64>> {
        let x = self.bounds.half_width() * dt;
        let order = (x.ceil() as usize + 20 + (8.0 * x.cbrt()) as usize).min(MAX_ORDER);
        let j = bessel_j_orders(x, order);
        // tail bound: |T_k| <= 1 on the enclosure
        let mut tail = 0.0;
        let mut keep = None;
        for k in (0..=order).rev() {
            if tail + 2.0 * j[k].abs() > self.tol {
                keep = Some(k);
                break;
            }
            tail += 2.0 * j[k].abs();
        }
        let keep = keep.unwrap_or(0);
        if keep + 1 > order {
            return Err(Error::ChebyshevOrder {
                max_order: order,
                scaled_step: x,
            });
        }
        let mut c = Vec::with_capacity(keep + 1);
        let mut phase = Complex64::new(1.0, 0.0);
        for (k, &jk) in j.iter().enumerate().take(keep + 1) {
            let w = if k == 0 { 1.0 } else { 2.0 };
            c.push(phase * (w * jk));
            phase *= Complex64::new(0.0, -1.0);
        }
        Ok(c)
    }

    pub(super) fn prepare(&self, psi0: &[Complex64]) -> ChebyshevStepper<'_> {
        let n = psi0.len();
        ChebyshevStepper {
            prop: self,
            cache: HashMap::new(),
            prev: vec![Complex64::default(); n],
            cur: vec![Complex64::default(); n],
            next: vec![Complex64::default(); n],
            acc: vec![Complex64::default(); n],
        }
    }
}

/// Per-trajectory scratch buffers and coefficient cache.
pub(super) struct ChebyshevStepper<'a> {
    prop: &'a ChebyshevPropagator,
    cache: HashMap<u64, Vec<Complex64>>,
    prev: Vec<Complex64>,
    cur: Vec<Complex64>,
    next: Vec<Complex64>,
    acc: Vec<Complex64>,
}

impl ChebyshevStepper<'_> {
    /// Advance `psi` by `dt`, in substeps if `dt` is long.
    pub(super) fn step(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let a = self.prop.bounds.half_width();
        let pieces = ((a * dt) / MAX_SCALED_STEP).ceil().max(1.0) as usize;
        let h = dt / pieces as f64;
        for _ in 0..pieces {
            self.single(psi, h)?;
        }
        Ok(())
    }

    fn single(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            let c = self.prop.coefficients(dt)?;
            // grids have few distinct step lengths; log grids have many
            if self.cache.len() > 64 {
                self.cache.clear();
            }
            self.cache.insert(key, c);
        }
        let coeffs = &self.cache[&key];
        let center = self.prop.bounds.center();
        let scale = 1.0 / self.prop.bounds.half_width();
        let op = &self.prop.op;

        self.prev.copy_from_slice(psi);
        for (acc, &p) in self.acc.iter_mut().zip(psi.iter()) {
            *acc = p * coeffs[0];
        }
        if coeffs.len() > 1 {
            // T_1 psi = (H - c) psi / a
            op.apply(&self.prev, &mut self.cur);
            for (c, &p) in self.cur.iter_mut().zip(self.prev.iter()) {
                *c = (*c - p * center) * scale;
            }
            for (acc, &c) in self.acc.iter_mut().zip(self.cur.iter()) {
                *acc += c * coeffs[1];
            }
        }
        for &ck in coeffs.iter().skip(2) {
            op.apply(&self.cur, &mut self.next);
            let two_scale = 2.0 * scale;
            for ((n, &c), (&p, acc)) in self
                .next
                .iter_mut()
                .zip(self.cur.iter())
                .zip(self.prev.iter().zip(self.acc.iter_mut()))
            {
                *n = (*n - c * center) * two_scale - p;
                *acc += *n * ck;
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            std::mem::swap(&mut self.cur, &mut self.next);
        }
        let phase = Complex64::from_polar(1.0, -center * dt);
        for (o, &acc) in psi.iter_mut().zip(self.acc.iter()) {
            *o = acc * phase;
        }
        Ok(())
    }
}
