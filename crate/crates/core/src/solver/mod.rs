//! Frequency-domain solution of `(d/dt M(d/dt^-1) + A) U = f`.
//!
//! After the Fourier–Laplace transform the problem decouples into one dense
//! system `B_k u_k = f_k` per frequency with
//! `B_k = (i lambda_k + rho) M(1/(i lambda_k + rho)) + A`.

mod ivp;
mod oracle;

pub use self::ivp::{impulse_exponent, ivp_solve_delta, ivp_solve_history, DeltaSource, IvpSolution};
pub use self::oracle::{crank_nicolson_reference, time_stepping_oracle};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fraccalc::FracError;
use crate::linalg::{CMatrix, CVector};
use crate::material::{MaterialError, MaterialLaw};
use crate::spatial::SkewOperator;
use crate::timegrid::{forward_transform, inverse_transform, weighted_norm, GridError, Signal, Spectrum, TimeGrid};
use crate::wellposed::WellposednessReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("signal grid differs from the problem grid")]
    GridMismatch,
    #[error("system matrix is singular at lambda = {lambda}")]
    Singular { lambda: f64 },
    #[error("certificate does not hold")]
    NotCertified,
    #[error("rho = {rho} is below the certified threshold {threshold}")]
    RhoBelowThreshold { rho: f64, threshold: f64 },
    #[error("source node {node} outside grid of {n_steps} nodes")]
    NodeOutOfRange { node: usize, n_steps: usize },
    #[error("weight vector is not in the range of the impulse block (relative defect {0:.3e})")]
    NotInRange(f64),
    #[error("right-hand side is not supported after t = {t0} (relative mass before: {ratio:.3e})")]
    NotCausal { t0: f64, ratio: f64 },
    #[error("the time-stepping oracle does not support power-series tails")]
    TailUnsupported,
    #[error("{0}")]
    Structure(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Frac(#[from] FracError),
}

/// Relative mass tolerated before the support of a causal right-hand side.
const CAUSAL_TOL: f64 = 1e-12;

/// Material law, skew spatial operator and time grid (whose `rho` is used).
#[derive(Debug, Clone)]
pub struct EvolutionaryProblem {
    law: MaterialLaw,
    a: SkewOperator,
    grid: TimeGrid,
}

impl EvolutionaryProblem {
    pub fn new(law: MaterialLaw, a: SkewOperator, grid: TimeGrid) -> Result<Self, SolverError> {
        if a.dim() != law.dim() {
            return Err(SolverError::DimensionMismatch { expected: law.dim(), got: a.dim() });
        }
        law.check_rho(grid.rho())?;
        Ok(Self { law, a, grid })
    }

    /// As [`new`](Self::new), additionally requiring a passing certificate
    /// with `rho` above its threshold.
    pub fn certified(
        law: MaterialLaw,
        a: SkewOperator,
        grid: TimeGrid,
        report: &WellposednessReport,
    ) -> Result<Self, SolverError> {
        if !report.passed {
            return Err(SolverError::NotCertified);
        }
        if grid.rho() < report.rho_threshold {
            return Err(SolverError::RhoBelowThreshold { rho: grid.rho(), threshold: report.rho_threshold });
        }
        Self::new(law, a, grid)
    }

    pub fn law(&self) -> &MaterialLaw {
        &self.law
    }

    pub fn a(&self) -> &SkewOperator {
        &self.a
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn rho(&self) -> f64 {
        self.grid.rho()
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    /// `B(lambda) = (i lambda + rho) M(1/(i lambda + rho)) + A`.
    pub fn system_matrix(&self, lambda: f64) -> CMatrix {
        self.law.evolution_symbol(lambda, self.rho()) + self.a.to_complex()
    }

    fn check_signal(&self, f: &Signal) -> Result<(), SolverError> {
        if f.dim() != self.dim() {
            return Err(SolverError::DimensionMismatch { expected: self.dim(), got: f.dim() });
        }
        if f.grid() != &self.grid {
            return Err(SolverError::GridMismatch);
        }
        Ok(())
    }
}

/// `max(threshold, damping / T)`: the smallest admissible weight that also
/// damps wrap-around by `exp(-damping)`.
pub fn default_rho(threshold: Option<f64>, span: f64, damping: f64) -> f64 {
    let budget = damping / span;
    threshold.map_or(budget, |t| t.max(budget))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: Signal,
    /// `max_k |B_k u_k - f_k| / |f_k|` over bins with nonzero data.
    pub max_relative_residual: f64,
}

pub fn solve(p: &EvolutionaryProblem, f: &Signal) -> Result<Signal, SolverError> {
    Ok(solve_detailed(p, f)?.u)
}

/// Solve with per-frequency residual diagnostics.
pub fn solve_detailed(p: &EvolutionaryProblem, f: &Signal) -> Result<Solution, SolverError> {
    p.check_signal(f)?;
    let (u, res) = solve_spectrum(p, &forward_transform(f))?;
    Ok(Solution { u: inverse_transform(&u), max_relative_residual: res })
}

pub(crate) fn solve_spectrum(p: &EvolutionaryProblem, rhs: &Spectrum) -> Result<(Spectrum, f64), SolverError> {
    let d = p.dim();
    let grid = p.grid;
    let a = p.a.to_complex();
    let mut coeffs = rhs.coefficients().to_vec();
    let residuals: Vec<Result<f64, SolverError>> = coeffs
        .par_chunks_mut(d)
        .enumerate()
        .map(|(k, chunk)| {
            let lambda = grid.frequency(k);
            let b = p.law.evolution_symbol(lambda, grid.rho()) + &a;
            let rhs = CVector::from_column_slice(chunk);
            let rhs_norm = rhs.norm();
            if rhs_norm == 0.0 {
                return Ok(0.0);
            }
            let lu = b.clone().lu();
            let u = lu.u();
            let pivots = u.diagonal().map(|z| z.norm());
            if pivots.min() <= 1e-14 * pivots.max().max(f64::MIN_POSITIVE) {
                return Err(SolverError::Singular { lambda });
            }
            let x = lu.solve(&rhs).ok_or(SolverError::Singular { lambda })?;
            let res = (&b * &x - &rhs).norm() / rhs_norm;
            chunk.copy_from_slice(x.as_slice());
            Ok(res)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in residuals {
        worst = worst.max(r?);
    }
    Ok((Spectrum::from_coefficients(grid, d, coeffs)?, worst))
}

/// Relative weighted mass of `f` strictly before `t0`.
pub fn relative_mass_before(f: &Signal, t0: f64) -> f64 {
    let total = weighted_norm(f);
    if total == 0.0 {
        return 0.0;
    }
    weighted_norm(&f.truncated_before(t0)) / total
}

/// `|chi_{<a} U|_rho / |U|_rho` for the solution of `p` with data supported
/// in `[a, inf)`; zero for vanishing `U`.
pub fn causality_check(p: &EvolutionaryProblem, f: &Signal, a: f64) -> Result<f64, SolverError> {
    p.check_signal(f)?;
    let ratio = relative_mass_before(f, a);
    if ratio > CAUSAL_TOL {
        return Err(SolverError::NotCausal { t0: a, ratio });
    }
    let u = solve(p, f)?;
    Ok(relative_mass_before(&u, a))
}

/// Residual of the flux relation `Phi + mu11^-1 (grad theta + mu10 theta)`
/// for a Fokker–Planck structured problem, where `A = [[0, div], [grad, 0]]`
/// splits the state into `(theta, Phi)` and the law acts on `Phi` only through `m1`.
pub fn fokker_planck_reduce(p: &EvolutionaryProblem, u: &Signal) -> Result<Signal, SolverError> {
    p.check_signal(u)?;
    let (dt, dp) = p.a.block_dims();
    let law = &p.law;
    let tail_rows_zero = law
        .tail()
        .is_none_or(|t| t.terms.iter().all(|(_, m)| rows_zero(m.matrix(), dt)));
    if !rows_zero(law.m0(), dt) || !law.frac().all(|(_, m)| rows_zero(m, dt)) || !tail_rows_zero {
        return Err(SolverError::Structure("law acts on the flux block beyond m1".into()));
    }
    let m1 = law.m1();
    let mu10 = m1.view((dt, 0), (dp, dt)).into_owned();
    let mu11 = m1.view((dt, dt), (dp, dp)).into_owned();
    let mu11_inv = mu11
        .try_inverse()
        .ok_or_else(|| SolverError::Structure("mu11 is singular".into()))?;
    let grad: CMatrix = p.a.lower_block().map(|x| Complex64::new(x, 0.0));
    let coupling = &mu11_inv * (grad + mu10);
    let grid = *u.grid();
    let mut out = Signal::zeros(grid, dp)?;
    for j in 0..grid.n_steps() {
        let x = u.at(j);
        let theta = CVector::from_column_slice(&x[..dt]);
        let phi = CVector::from_column_slice(&x[dt..]);
        let r = phi + &coupling * theta;
        out.at_mut(j).copy_from_slice(r.as_slice());
    }
    Ok(out)
}

fn rows_zero(m: &CMatrix, from: usize) -> bool {
    m.rows(from, m.nrows() - from).iter().all(|z| z.norm() == 0.0)
}

/// Dense `(A + I)^-1`, the discrete `H_{-1}` weighting of the spatial state.
pub fn h_minus_one_weight(a: &SkewOperator) -> CMatrix {
    let d = a.dim();
    let m: DMatrix<f64> = a.entries() + DMatrix::identity(d, d);
    // A + I has eigenvalues 1 + i mu with real mu, hence is always invertible
    m.try_inverse().expect("A + I invertible for skew A").map(|x| Complex64::new(x, 0.0))
}
