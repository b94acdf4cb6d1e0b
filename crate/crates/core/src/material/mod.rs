//! Material laws `M(d^-1) = M0 + sum_alpha d^-alpha M_alpha + d^-1 M1 + d^-1 M2(d^-1)`
//! over a finite-dimensional state space.

mod fokker_planck;
mod kelvin_voigt;
pub mod text;

pub use self::fokker_planck::{fokker_planck_material, FokkerPlanckBlocks};
pub use self::kelvin_voigt::{kelvin_voigt_material, stress_coercivity, KelvinVoigt, DEFAULT_TAIL_TERMS};
pub use self::text::{law_to_text, parse_law, read_law};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fraccalc::symbol_power_unchecked;
use crate::linalg::{max_abs, min_eigenvalue, CMatrix, CVector};
use crate::timegrid::{forward_transform, inverse_transform, Signal, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("{name}: expected a {expected}x{expected} block, got {rows}x{cols}")]
    BlockShape { name: String, expected: usize, rows: usize, cols: usize },
    #[error("{0} must be selfadjoint")]
    NotSelfadjoint(String),
    #[error("m0 must be nonnegative (min eigenvalue {0:.3e})")]
    NegativeM0(f64),
    #[error("fractional exponent {0} outside (0, 1)")]
    ExponentOutOfRange(f64),
    #[error("fractional exponents must be strictly increasing ({0} after {1})")]
    ExponentsNotIncreasing(f64, f64),
    #[error("tail exponent must be finite and nonnegative, got {0}")]
    BadTailExponent(f64),
    #[error("tail radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("z = {0} outside the admissible region")]
    InadmissibleArgument(Complex64),
    #[error("rho = {rho} too small for the tail series (needs rho > {min})")]
    RhoBelowTailRadius { rho: f64, min: f64 },
    #[error("signal dimension {got} does not match law dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} must be strictly positive definite")]
    NotPositiveDefinite(String),
    #[error("fractional order {0} outside {1}")]
    OrderOutOfRange(f64, &'static str),
    #[error("Neumann series diverges at rho = {rho}: rho^-alpha K1 = {ratio:.4} >= 1")]
    SeriesDivergent { rho: f64, ratio: f64 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

/// Relative Hermitian tolerance for operator blocks.
const SELFADJOINT_TOL: f64 = 1e-12;

/// A dense `d x d` block, optionally flagged selfadjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    entries: CMatrix,
    selfadjoint: bool,
}

impl OperatorBlock {
    pub fn general(entries: CMatrix) -> Self {
        Self { entries, selfadjoint: false }
    }

    /// Validates `|m - m^H|_max <= 1e-12 |m|_max` and stores the exact Hermitian part.
    pub fn selfadjoint(name: &str, entries: CMatrix) -> Result<Self, MaterialError> {
        if !is_selfadjoint(&entries) {
            return Err(MaterialError::NotSelfadjoint(name.to_string()));
        }
        Ok(Self { entries: crate::linalg::hermitian_part(&entries), selfadjoint: true })
    }

    pub fn zeros(d: usize) -> Self {
        Self { entries: CMatrix::zeros(d, d), selfadjoint: true }
    }

    pub fn identity(d: usize) -> Self {
        Self { entries: CMatrix::identity(d, d), selfadjoint: true }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}

pub(crate) fn is_selfadjoint(m: &CMatrix) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= SELFADJOINT_TOL * max_abs(m)
}

/// Power-series part `M2(z) = sum_gamma z^gamma T_gamma`, valid for `|z| < 2 r`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSeries {
    pub terms: Vec<(f64, OperatorBlock)>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLaw {
    dim: usize,
    m0: OperatorBlock,
    frac: Vec<(f64, OperatorBlock)>,
    m1: OperatorBlock,
    tail: Option<TailSeries>,
}

/// Incremental construction; [`LawBuilder::build`] validates every invariant.
#[derive(Debug, Clone)]
pub struct LawBuilder {
    dim: usize,
    m0: Option<CMatrix>,
    frac: Vec<(f64, CMatrix)>,
    m1: Option<CMatrix>,
    tail: Vec<(f64, CMatrix)>,
    radius: Option<f64>,
}

impl LawBuilder {
    pub fn m0(mut self, m: CMatrix) -> Self {
        self.m0 = Some(m);
        self
    }

    pub fn frac(mut self, alpha: f64, m: CMatrix) -> Self {
        self.frac.push((alpha, m));
        self
    }

    pub fn m1(mut self, m: CMatrix) -> Self {
        self.m1 = Some(m);
        self
    }

    pub fn tail(mut self, gamma: f64, m: CMatrix) -> Self {
        self.tail.push((gamma, m));
        self
    }

    pub fn radius(mut self, r: f64) -> Self {
        self.radius = Some(r);
        self
    }

    pub fn build(self) -> Result<MaterialLaw, MaterialError> {
        let d = self.dim;
        if d == 0 {
            return Err(MaterialError::ZeroDimension);
        }
        let shape = |name: &str, m: &CMatrix| {
            if m.nrows() != d || m.ncols() != d {
                return Err(MaterialError::BlockShape {
                    name: name.to_string(),
                    expected: d,
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            Ok(())
        };
        let m0 = self.m0.unwrap_or_else(|| CMatrix::zeros(d, d));
        shape("m0", &m0)?;
        let m0 = OperatorBlock::selfadjoint("m0", m0)?;
        let lmin = min_eigenvalue(m0.matrix());
        if lmin < -1e-12 * max_abs(m0.matrix()).max(1.0) {
            return Err(MaterialError::NegativeM0(lmin));
        }
        let mut frac = Vec::with_capacity(self.frac.len());
        for (alpha, m) in self.frac {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(MaterialError::ExponentOutOfRange(alpha));
            }
            if let Some((prev, _)) = frac.last() {
                if alpha <= *prev {
                    return Err(MaterialError::ExponentsNotIncreasing(alpha, *prev));
                }
            }
            let name = format!("frac {alpha}");
            shape(&name, &m)?;
            frac.push((alpha, OperatorBlock::selfadjoint(&name, m)?));
        }
        let m1 = self.m1.unwrap_or_else(|| CMatrix::zeros(d, d));
        shape("m1", &m1)?;
        let tail = if self.tail.is_empty() {
            None
        } else {
            let radius = self.radius.unwrap_or(f64::INFINITY);
            if !(radius > 0.0) {
                return Err(MaterialError::BadRadius(radius));
            }
            let mut terms = Vec::with_capacity(self.tail.len());
            for (gamma, m) in self.tail {
                if !(gamma >= 0.0 && gamma.is_finite()) {
                    return Err(MaterialError::BadTailExponent(gamma));
                }
                shape(&format!("tail {gamma}"), &m)?;
                terms.push((gamma, OperatorBlock::general(m)));
            }
            Some(TailSeries { terms, radius })
        };
        Ok(MaterialLaw { dim: d, m0, frac, m1: OperatorBlock::general(m1), tail })
    }
}

impl MaterialLaw {
    pub fn builder(dim: usize) -> LawBuilder {
        LawBuilder { dim, m0: None, frac: Vec::new(), m1: None, tail: Vec::new(), radius: None }
    }

    /// `M = m0` (a purely "parabolic" law when `m0 > 0`).
    pub fn from_m0(m0: CMatrix) -> Result<Self, MaterialError> {
        Self::builder(m0.nrows()).m0(m0).build()
    }

    pub fn identity(d: usize) -> Self {
        Self::from_m0(CMatrix::identity(d, d)).expect("identity is a valid law")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m0(&self) -> &CMatrix {
        self.m0.matrix()
    }

    /// `(alpha, M_alpha)` with strictly increasing exponents.
    pub fn frac(&self) -> impl Iterator<Item = (f64, &CMatrix)> + '_ {
        self.frac.iter().map(|(a, b)| (*a, b.matrix()))
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.frac.iter().map(|(a, _)| *a).collect()
    }

    pub fn m1(&self) -> &CMatrix {
        self.m1.matrix()
    }

    pub fn tail(&self) -> Option<&TailSeries> {
        self.tail.as_ref()
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }

    /// `rho` must satisfy `1/rho < 2 r` so that `|z| <= 1/rho` lies inside the tail's disc.
    pub fn check_rho(&self, rho: f64) -> Result<(), MaterialError> {
        if let Some(t) = &self.tail {
            let min = 1.0 / (2.0 * t.radius);
            if rho <= min {
                return Err(MaterialError::RhoBelowTailRadius { rho, min });
            }
        }
        Ok(())
    }

    /// `M(z)` for `Re z > 0` (and `|z| < 2r` with a tail).
    pub fn symbol(&self, z: Complex64) -> Result<CMatrix, MaterialError> {
        if !(z.re > 0.0) || !z.is_finite() {
            return Err(MaterialError::InadmissibleArgument(z));
        }
        if let Some(t) = &self.tail {
            if z.norm() >= 2.0 * t.radius {
                return Err(MaterialError::InadmissibleArgument(z));
            }
        }
        let zpow = |g: f64| if g == 0.0 { Complex64::new(1.0, 0.0) } else { (z.ln() * g).exp() };
        let mut out = self.m0.matrix().clone();
        for (a, m) in &self.frac {
            out += m.matrix() * zpow(*a);
        }
        out += self.m1.matrix() * z;
        if let Some(t) = &self.tail {
            for (g, m) in &t.terms {
                out += m.matrix() * (z * zpow(*g));
            }
        }
        Ok(out)
    }

    /// `M(1/(i lambda + rho))`, using the principal power of `i lambda + rho` directly.
    pub fn symbol_at(&self, lambda: f64, rho: f64) -> Result<CMatrix, MaterialError> {
        self.check_rho(rho)?;
        let s = Complex64::new(rho, lambda);
        let mut out = self.m0.matrix().clone();
        for (a, m) in &self.frac {
            out += m.matrix() * symbol_power_unchecked(-a, lambda, rho);
        }
        out += self.m1.matrix() * s.inv();
        out += self.tail_symbol(lambda, rho) * s.inv();
        Ok(out)
    }

    /// `s M(1/s) = s m0 + sum s^(1-alpha) M_alpha + m1 + sum s^-gamma T_gamma` with `s = i lambda + rho`.
    pub fn evolution_symbol(&self, lambda: f64, rho: f64) -> CMatrix {
        let s = Complex64::new(rho, lambda);
        let mut out = self.m0.matrix() * s;
        for (a, m) in &self.frac {
            out += m.matrix() * symbol_power_unchecked(1.0 - a, lambda, rho);
        }
        out += self.m1.matrix();
        out += self.tail_symbol(lambda, rho);
        out
    }

    /// `M2(1/s) = sum s^-gamma T_gamma`; zero without a tail.
    pub fn tail_symbol(&self, lambda: f64, rho: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        if let Some(t) = &self.tail {
            for (g, m) in &t.terms {
                out += m.matrix() * symbol_power_unchecked(-g, lambda, rho);
            }
        }
        out
    }

    /// Law whose symbol is the sum of both symbols.
    pub fn sum(&self, other: &MaterialLaw) -> Result<MaterialLaw, MaterialError> {
        if self.dim != other.dim {
            return Err(MaterialError::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut frac: Vec<(f64, CMatrix)> = self.frac().map(|(a, m)| (a, m.clone())).collect();
        for (a, m) in other.frac() {
            match frac.iter_mut().find(|(b, _)| *b == a) {
                Some((_, acc)) => *acc += m,
                None => frac.push((a, m.clone())),
            }
        }
        frac.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut b = Self::builder(self.dim).m0(self.m0() + other.m0()).m1(self.m1() + other.m1());
        for (a, m) in frac {
            b = b.frac(a, m);
        }
        let mut radius = f64::INFINITY;
        for t in [&self.tail, &other.tail].into_iter().flatten() {
            radius = radius.min(t.radius);
            for (g, m) in &t.terms {
                b = b.tail(*g, m.matrix().clone());
            }
        }
        b.radius(radius).build()
    }
}

/// Multiplies each frequency bin by `M(1/(i lambda_k + rho))`.
pub fn apply_material(law: &MaterialLaw, u: &Signal) -> Result<Signal, MaterialError> {
    if u.dim() != law.dim {
        return Err(MaterialError::DimensionMismatch { expected: law.dim, got: u.dim() });
    }
    let grid = *u.grid();
    let rho = grid.rho();
    law.check_rho(rho)?;
    let spec = forward_transform(u);
    let d = law.dim;
    let mut coeffs = spec.coefficients().to_vec();
    coeffs.par_chunks_mut(d).enumerate().for_each(|(k, chunk)| {
        let m = law.symbol_at(grid.frequency(k), rho).expect("rho validated above");
        let v = &m * CVector::from_column_slice(chunk);
        chunk.copy_from_slice(v.as_slice());
    });
    let spec = Spectrum::from_coefficients(grid, d, coeffs).expect("shape preserved");
    Ok(inverse_transform(&spec))
}
