//! The long-range chain `H = H0 + V` as a list of Pauli terms.
//!
//! `H0 = sum_n (B + h_n) sz_n + sum_n Jz sz_n sz_{n+1}` and
//! `V = sum_{n<m} J / |n - m|^alpha sx_n sx_m`, open boundaries, V not
//! rescaled with L. In the z basis the fields are diagonal and V flips
//! pairs; in the x basis V is diagonal and every field term flips one spin
//! with matrix element exactly `B + h_n` (each zz bond flips two adjacent
//! spins with element `Jz`).

use std::ops::{AddAssign, Mul};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{band_label, check_sites, Basis, StateVector};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

/// Largest chain for which a dense `2^L x 2^L` matrix is built.
pub const DENSE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sites: usize,
    /// Uniform transverse field `B`.
    pub field: f64,
    /// Disorder width `W`; `h_n` is uniform on `[-W/2, W/2]`.
    pub disorder: f64,
    /// Long-range coupling `J`.
    pub coupling: f64,
    /// Nearest-neighbour zz coupling `Jz`.
    pub jz: f64,
    pub alpha: f64,
}

impl ModelParams {
    pub fn new(sites: usize) -> Self {
        Self {
            sites,
            field: 0.0,
            disorder: 0.0,
            coupling: 1.0,
            jz: 0.0,
            alpha: 0.0,
        }
    }

    pub fn with_field(mut self, field: f64) -> Self {
        self.field = field;
        self
    }

    pub fn with_disorder(mut self, width: f64) -> Self {
        self.disorder = width;
        self
    }

    pub fn with_coupling(mut self, j: f64) -> Self {
        self.coupling = j;
        self
    }

    pub fn with_jz(mut self, jz: f64) -> Self {
        self.jz = jz;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_sites(self.sites)?;
        if self.sites < 2 {
            return Err(Error::InvalidParams("L must be at least 2".into()));
        }
        let finite = [self.field, self.disorder, self.coupling, self.jz, self.alpha]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.disorder < 0.0 {
            return Err(Error::InvalidParams(format!("W = {} < 0", self.disorder)));
        }
        if self.jz < 0.0 {
            return Err(Error::InvalidParams(format!("Jz = {} < 0", self.jz)));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidParams(format!("alpha = {} < 0", self.alpha)));
        }
        Ok(())
    }

    /// `J / |n - m|^alpha` for sites `n != m`.
    pub fn pair_coupling(&self, n: usize, m: usize) -> f64 {
        let d = n.abs_diff(m) as f64;
        self.coupling / d.powf(self.alpha)
    }
}

/// One draw of the random fields `h_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    pub seed: u64,
    pub realization_index: u64,
}

impl DisorderRealization {
    pub fn clean(sites: usize) -> Self {
        Self {
            fields: vec![0.0; sites],
            seed: 0,
            realization_index: 0,
        }
    }

    pub fn from_fields(fields: Vec<f64>) -> Self {
        Self {
            fields,
            seed: 0,
            realization_index: 0,
        }
    }
}

/// Draw `h_n = W (u_n - 1/2)` with `u_n` from the disorder stream of
/// `(seed, realization_index)`.
pub fn sample_disorder(params: &ModelParams, seed: u64, realization_index: u64) -> DisorderRealization {
    let mut rng = rng::stream(seed, realization_index, Purpose::Disorder);
    let fields = (0..params.sites)
        .map(|_| {
            let u: f64 = rng.random();
            params.disorder * (u - 0.5)
        })
        .collect();
    DisorderRealization {
        fields,
        seed,
        realization_index,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    /// `sz_n`, diagonal in z.
    ZField { site: usize },
    /// `sz_n sz_{n+1}`, diagonal in z.
    ZZ { site: usize },
    /// `sx_n sx_m`, pair flip in z.
    XX { left: usize, right: usize },
    /// `sx_n sx_m`, diagonal in x.
    XDiag { left: usize, right: usize },
    /// `sz_n` written in x: flips spin `n`.
    XFlip { site: usize },
    /// `sz_n sz_{n+1}` written in x: flips spins `n` and `n + 1`.
    XXFlipPair { site: usize },
    /// Square of the total x magnetization `M_x = sum_n sx_n / 2`.
    MxSquared,
    Identity,
}

impl TermKind {
    fn allowed_in(&self, basis: Basis) -> bool {
        match self {
            TermKind::ZField { .. } | TermKind::ZZ { .. } | TermKind::XX { .. } => basis == Basis::Z,
            TermKind::XDiag { .. } | TermKind::XFlip { .. } | TermKind::XXFlipPair { .. } => {
                basis == Basis::X
            }
            TermKind::MxSquared | TermKind::Identity => true,
        }
    }

    fn max_site(&self) -> Option<usize> {
        match *self {
            TermKind::ZField { site } | TermKind::XFlip { site } => Some(site),
            TermKind::ZZ { site } | TermKind::XXFlipPair { site } => Some(site + 1),
            TermKind::XX { left, right } | TermKind::XDiag { left, right } => Some(left.max(right)),
            TermKind::MxSquared | TermKind::Identity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: f64,
    pub kind: TermKind,
}

/// Sum of real-coefficient Pauli terms in one basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermList {
    sites: usize,
    basis: Basis,
    terms: Vec<Term>,
}

impl TermList {
    pub fn new(sites: usize, basis: Basis) -> Self {
        Self {
            sites,
            basis,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, coefficient: f64, kind: TermKind) -> Result<()> {
        if !coefficient.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite coefficient for {kind:?}")));
        }
        if !kind.allowed_in(self.basis) {
            return Err(Error::InvalidParams(format!(
                "term {kind:?} is not expressible in the {:?} basis",
                self.basis
            )));
        }
        if let TermKind::XX { left, right } | TermKind::XDiag { left, right } = kind {
            if left == right {
                return Err(Error::InvalidParams("pair term on a single site".into()));
            }
        }
        if kind.max_site().is_some_and(|s| s >= self.sites) {
            return Err(Error::InvalidParams(format!("{kind:?} exceeds L = {}", self.sites)));
        }
        self.terms.push(Term { coefficient, kind });
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when no term moves amplitude between configurations.
    pub fn is_diagonal(&self) -> bool {
        self.compile().is_diagonal()
    }

    pub fn compile(&self) -> SparseOperator {
        let dim = 1usize << self.sites;
        let mut diag = vec![0.0; dim];
        let mut flips: Vec<Flip> = Vec::new();
        let mut collective = 0.0;
        let mut add_flip = |mask: u32, coefficient: f64| {
            match flips.iter_mut().find(|f| f.mask == mask) {
                Some(f) => f.coefficient += coefficient,
                None => flips.push(Flip { mask, coefficient }),
            }
        };
        for term in &self.terms {
            let c = term.coefficient;
            match term.kind {
                TermKind::ZField { site } => add_diag(&mut diag, c, 1 << site),
                TermKind::ZZ { site } => add_diag(&mut diag, c, 0b11 << site),
                TermKind::XDiag { left, right } => add_diag(&mut diag, c, (1 << left) | (1 << right)),
                TermKind::XX { left, right } => add_flip((1 << left) | (1 << right), c),
                TermKind::XFlip { site } => add_flip(1 << site, c),
                TermKind::XXFlipPair { site } => add_flip(0b11 << site, c),
                TermKind::Identity => diag.iter_mut().for_each(|d| *d += c),
                TermKind::MxSquared => match self.basis {
                    Basis::X => {
                        for (i, d) in diag.iter_mut().enumerate() {
                            let m = magnetization(i as u32, self.sites);
                            *d += c * m * m;
                        }
                    }
                    Basis::Z => collective += c,
                },
            }
        }
        flips.retain(|f| f.coefficient != 0.0);
        SparseOperator {
            sites: self.sites,
            basis: self.basis,
            diag,
            flips,
            collective_mx2: collective,
            band_filter: None,
        }
    }
}

fn add_diag(diag: &mut [f64], c: f64, mask: u32) {
    for (i, d) in diag.iter_mut().enumerate() {
        // product of spins over the mask: -1 per cleared bit
        let cleared = (!(i as u32) & mask).count_ones();
        *d += if cleared % 2 == 0 { c } else { -c };
    }
}

/// `sum_n s_n / 2` for a bit pattern read as spins.
pub(crate) fn magnetization(bits: u32, sites: usize) -> f64 {
    let up = bits.count_ones() as f64;
    up - sites as f64 / 2.0
}

/// Element types an operator can act on.
pub trait Amplitude: Copy + Zero + AddAssign + Mul<f64, Output = Self> + Send + Sync {}
impl<T> Amplitude for T where T: Copy + Zero + AddAssign + Mul<f64, Output = T> + Send + Sync {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flip {
    pub mask: u32,
    pub coefficient: f64,
}

/// A compiled operator: a diagonal plus bit-flip terms with real
/// coefficients. Applying it costs `O(2^L * #flips)` and never builds a
/// matrix.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    sites: usize,
    basis: Basis,
    diag: Vec<f64>,
    flips: Vec<Flip>,
    collective_mx2: f64,
    /// When set, a flip `i -> i ^ mask` only acts if both ends carry the
    /// same label.
    band_filter: Option<Arc<Vec<u8>>>,
}

impl SparseOperator {

    /// Keep only flips that stay inside the same x band.
    pub(crate) fn restrict_to_bands(mut self) -> Self {
        let sites = self.sites;
        let labels: Vec<u8> = (0..1u32 << sites).map(|i| band_label(i, sites) as u8).collect();
        // a flip that can never stay inside a band is dropped outright
        self.flips.retain(|f| {
            (0..1u32 << sites).any(|i| labels[i as usize] == labels[(i ^ f.mask) as usize])
        });
        self.band_filter = Some(Arc::new(labels));
        self
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn flips(&self) -> &[Flip] {
        &self.flips
    }

    pub fn is_diagonal(&self) -> bool {
        self.flips.is_empty() && self.collective_mx2 == 0.0
    }

    /// `out = self * input`.
    pub fn apply<T: Amplitude>(&self, input: &[T], out: &mut [T]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        for ((o, &x), &d) in out.iter_mut().zip(input).zip(&self.diag) {
            *o = x * d;
        }
        match &self.band_filter {
            None => {
                for flip in &self.flips {
                    let mask = flip.mask as usize;
                    let c = flip.coefficient;
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += input[i ^ mask] * c;
                    }
                }
            }
            Some(labels) => {
                for flip in &self.flips {
                    let mask = flip.mask as usize;
                    let c = flip.coefficient;
                    for (i, o) in out.iter_mut().enumerate() {
                        let j = i ^ mask;
                        if labels[i] == labels[j] {
                            *o += input[j] * c;
                        }
                    }
                }
            }
        }
        if self.collective_mx2 != 0.0 {
            let once = self.apply_mx(input);
            let twice = self.apply_mx(&once);
            for (o, t) in out.iter_mut().zip(twice) {
                *o += t * self.collective_mx2;
            }
        }
    }

    /// `M_x` in the z basis: half the sum of single-site flips.
    fn apply_mx<T: Amplitude>(&self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); input.len()];
        for site in 0..self.sites {
            let mask = 1usize << site;
            for (i, o) in out.iter_mut().enumerate() {
                *o += input[i ^ mask] * 0.5;
            }
        }
        out
    }

    /// Row-sum (Gershgorin) enclosure of the spectrum.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let off: f64 = self.flips.iter().map(|f| f.coefficient.abs()).sum::<f64>()
            + self.collective_mx2.abs() * (self.sites * self.sites) as f64 / 4.0;
        let lo = self.diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo - off, hi + off)
    }

    /// Whether the operator commutes with flipping every bit.
    pub fn has_global_flip_symmetry(&self) -> bool {
        if self.collective_mx2 != 0.0 {
            return false;
        }
        let full = self.dim() - 1;
        (0..self.dim()).all(|i| self.diag[i] == self.diag[full ^ i])
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.sites > DENSE_LIMIT {
            return Err(Error::DenseTooLarge {
                sites: self.sites,
                limit: DENSE_LIMIT,
            });
        }
        let dim = self.dim();
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut unit = vec![0.0f64; dim];
        let mut col = vec![0.0f64; dim];
        for j in 0..dim {
            unit[j] = 1.0;
            self.apply(&unit, &mut col);
            unit[j] = 0.0;
            m.column_mut(j).copy_from_slice(&col);
        }
        Ok(m)
    }
}

fn check_state(op: &SparseOperator, psi: &StateVector) -> Result<()> {
    if op.sites != psi.sites() {
        return Err(Error::SiteMismatch {
            left: op.sites,
            right: psi.sites(),
        });
    }
    if op.basis != psi.basis() {
        return Err(Error::BasisMismatch {
            expected: op.basis,
            found: psi.basis(),
        });
    }
    Ok(())
}

impl SparseOperator {
    pub fn matvec(&self, psi: &StateVector) -> Result<StateVector> {
        check_state(self, psi)?;
        let mut out = vec![Complex64::zero(); self.dim()];
        self.apply(psi.amplitudes(), &mut out);
        StateVector::from_amplitudes(out, self.basis)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<Complex64> {
        let h = self.matvec(psi)?;
        psi.inner(&h)
    }
}

/// `H psi` applied term by term.
pub fn matvec(terms: &TermList, psi: &StateVector) -> Result<StateVector> {
    terms.compile().matvec(psi)
}

/// Dense real symmetric matrix of `terms` (L <= 12).
pub fn dense_matrix(terms: &TermList) -> Result<DMatrix<f64>> {
    if terms.sites() > DENSE_LIMIT {
        return Err(Error::DenseTooLarge {
            sites: terms.sites(),
            limit: DENSE_LIMIT,
        });
    }
    terms.compile().dense()
}

fn check_realization(params: &ModelParams, realization: &DisorderRealization) -> Result<()> {
    params.validate()?;
    if realization.fields.len() != params.sites {
        return Err(Error::InvalidParams(format!(
            "disorder has {} fields for L = {}",
            realization.fields.len(),
            params.sites
        )));
    }
    Ok(())
}

/// `H` in the z basis.
pub fn build_terms(params: &ModelParams, realization: &DisorderRealization) -> Result<TermList> {
    check_realization(params, realization)?;
    let l = params.sites;
    let mut t = TermList::new(l, Basis::Z);
    for (n, h) in realization.fields.iter().enumerate() {
        t.push(params.field + h, TermKind::ZField { site: n })?;
    }
    for n in 0..l - 1 {
        t.push(params.jz, TermKind::ZZ { site: n })?;
    }
    for n in 0..l {
        for m in n + 1..l {
            t.push(params.pair_coupling(n, m), TermKind::XX { left: n, right: m })?;
        }
    }
    Ok(t)
}

/// `H` in the x basis: V diagonal, fields and zz bonds as spin flips.
pub fn build_terms_x(params: &ModelParams, realization: &DisorderRealization) -> Result<TermList> {
    check_realization(params, realization)?;
    let l = params.sites;
    let mut t = TermList::new(l, Basis::X);
    for (n, h) in realization.fields.iter().enumerate() {
        t.push(params.field + h, TermKind::XFlip { site: n })?;
    }
    for n in 0..l - 1 {
        t.push(params.jz, TermKind::XXFlipPair { site: n })?;
    }
    for n in 0..l {
        for m in n + 1..l {
            t.push(params.pair_coupling(n, m), TermKind::XDiag { left: n, right: m })?;
        }
    }
    Ok(t)
}

/// Long-range part `V` alone in the requested basis.
pub fn build_long_range_terms(params: &ModelParams, basis: Basis) -> Result<TermList> {
    params.validate()?;
    let l = params.sites;
    let mut t = TermList::new(l, basis);
    for n in 0..l {
        for m in n + 1..l {
            let kind = match basis {
                Basis::Z => TermKind::XX { left: n, right: m },
                Basis::X => TermKind::XDiag { left: n, right: m },
            };
            t.push(params.pair_coupling(n, m), kind)?;
        }
    }
    Ok(t)
}

/// The all-to-all (`alpha = 0`) Hamiltonian through the collective
/// magnetization: `H0 + 2 J M_x^2 - J L / 2`, in the z basis.
pub fn build_mx_form(params: &ModelParams, realization: &DisorderRealization) -> Result<TermList> {
    check_realization(params, realization)?;
    if params.alpha != 0.0 {
        return Err(Error::InvalidParams(format!(
            "the collective form needs alpha = 0, got {}",
            params.alpha
        )));
    }
    let l = params.sites;
    let mut t = TermList::new(l, Basis::Z);
    for (n, h) in realization.fields.iter().enumerate() {
        t.push(params.field + h, TermKind::ZField { site: n })?;
    }
    for n in 0..l - 1 {
        t.push(params.jz, TermKind::ZZ { site: n })?;
    }
    t.push(2.0 * params.coupling, TermKind::MxSquared)?;
    t.push(-params.coupling * l as f64 / 2.0, TermKind::Identity)?;
    Ok(t)
}

/// Compiled x-basis Hamiltonian, the form every propagator runs on.
pub fn x_operator(params: &ModelParams, realization: &DisorderRealization) -> Result<SparseOperator> {
    Ok(build_terms_x(params, realization)?.compile())
}
