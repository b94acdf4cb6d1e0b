//! Initial data as impulses. The impulse block is the first fractional
//! coefficient `M_alpha` (or `M0` with `alpha = 0` for laws without
//! fractional terms).

use num_complex::Complex64;

use super::{h_minus_one_weight, relative_mass_before, solve, EvolutionaryProblem, SolverError};
use crate::fraccalc::apply_frac_power;
use crate::linalg::{range_projector, CMatrix, CVector};
use crate::material::MaterialLaw;
use crate::timegrid::{discrete_delta, Signal};

/// Impulse `delta_{t_node} (x) W`, discretised as `(1/dt) W` at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSource {
    pub node_index: usize,
    pub weight_vector: Vec<Complex64>,
}

impl DeltaSource {
    pub fn new(node_index: usize, weight_vector: Vec<Complex64>) -> Self {
        Self { node_index, weight_vector }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpSolution {
    pub u: Signal,
    /// `|(A+I)^-1 D| / |(A+I)^-1 W|` where `D` is the one-node-offset jump of
    /// `d^-alpha M_alpha U - chi W` across the source node (absolute if `W = 0`).
    pub jump_defect: f64,
}

fn impulse_block(law: &MaterialLaw) -> (f64, CMatrix) {
    match law.frac().next() {
        Some((a, m)) => (a, m.clone()),
        None => (0.0, law.m0().clone()),
    }
}

/// Fractional order and coefficient block the impulse acts through.
pub fn impulse_exponent(law: &MaterialLaw) -> f64 {
    impulse_block(law).0
}

fn apply_matrix(m: &CMatrix, u: &Signal) -> Signal {
    let mut out = u.clone();
    for j in 0..u.grid().n_steps() {
        let v = m * CVector::from_column_slice(u.at(j));
        out.at_mut(j).copy_from_slice(v.as_slice());
    }
    out
}

fn check_source(p: &EvolutionaryProblem, node: usize, w: &[Complex64], block: &CMatrix) -> Result<(), SolverError> {
    let n_steps = p.grid().n_steps();
    if node == 0 || node + 1 >= n_steps {
        return Err(SolverError::NodeOutOfRange { node, n_steps });
    }
    if w.len() != p.dim() {
        return Err(SolverError::DimensionMismatch { expected: p.dim(), got: w.len() });
    }
    let w = CVector::from_column_slice(w);
    let norm = w.norm();
    if norm > 0.0 {
        let proj = range_projector(block, 1e-10);
        let defect = (&w - &proj * &w).norm() / norm;
        if defect > 1e-8 {
            return Err(SolverError::NotInRange(defect));
        }
    }
    Ok(())
}

/// Data produced by spectral operators carries round-off mass before its
/// support, so the precondition is looser than for raw loads.
const IVP_CAUSAL_TOL: f64 = 1e-8;

fn check_causal(f: &Signal, t0: f64) -> Result<(), SolverError> {
    let ratio = relative_mass_before(f, t0);
    if ratio > IVP_CAUSAL_TOL {
        return Err(SolverError::NotCausal { t0, ratio });
    }
    Ok(())
}

/// Solves with right-hand side `F + delta (x) W`, then measures how well
/// `d^-alpha M_alpha U` jumps by `W` across the source node.
pub fn ivp_solve_delta(p: &EvolutionaryProblem, f: &Signal, src: &DeltaSource) -> Result<IvpSolution, SolverError> {
    p.check_signal(f)?;
    let (alpha, block) = impulse_block(p.law());
    let node = src.node_index;
    check_source(p, node, &src.weight_vector, &block)?;
    let grid = *p.grid();
    check_causal(f, grid.time(node))?;

    let delta = discrete_delta(grid, node, &src.weight_vector)?;
    let u = solve(p, &f.add(&delta)?)?;

    let y = apply_frac_power(-alpha, &apply_matrix(&block, &u))?;
    let step = apply_frac_power(-1.0, &delta)?;
    let smooth = y.sub(&step)?;
    let jump: CVector = CVector::from_column_slice(smooth.at(node + 1)) - CVector::from_column_slice(smooth.at(node - 1));
    let h = h_minus_one_weight(p.a());
    let w_norm = (&h * CVector::from_column_slice(&src.weight_vector)).norm();
    let d_norm = (&h * jump).norm();
    let jump_defect = if w_norm > 0.0 { d_norm / w_norm } else { d_norm };
    Ok(IvpSolution { u, jump_defect })
}

/// Solves the history formulation `d^(1-alpha)(M_alpha V - chi V_alpha) + ... = G`
/// as `(d M(d^-1) + A) V = G + d^-alpha delta (x) V_alpha`.
pub fn ivp_solve_history(
    p: &EvolutionaryProblem,
    g: &Signal,
    node: usize,
    v_alpha: &[Complex64],
) -> Result<Signal, SolverError> {
    p.check_signal(g)?;
    let (alpha, block) = impulse_block(p.law());
    check_source(p, node, v_alpha, &block)?;
    let grid = *p.grid();
    check_causal(g, grid.time(node))?;
    let history = apply_frac_power(-alpha, &discrete_delta(grid, node, v_alpha)?)?;
    solve(p, &g.add(&history)?)
}
