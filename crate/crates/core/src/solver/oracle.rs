//! Time-marching references, independent of the transform.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{EvolutionaryProblem, SolverError, CAUSAL_TOL};
use crate::linalg::{CMatrix, CVector};
use crate::timegrid::{weighted_norm, Signal, TimeGrid};

/// Backward-difference convolution weights of `d^gamma`:
/// coefficients of `((1 - z) / dt)^gamma`.
fn cq_weights(gamma: f64, dt: f64, n: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(n);
    let mut w = 1.0;
    for k in 0..n {
        if k > 0 {
            w *= (k as f64 - 1.0 - gamma) / k as f64;
        }
        g.push(w);
    }
    let scale = dt.powf(-gamma);
    g.iter().map(|x| x * scale).collect()
}

fn first_node_from(grid: &TimeGrid, t0: f64) -> Option<usize> {
    (0..grid.n_steps()).find(|&j| grid.time(j) >= t0 - 1e-9 * grid.dt())
}

fn check_support(f: &Signal, t0: f64) -> Result<(), SolverError> {
    let total = weighted_norm(f);
    if total == 0.0 {
        return Ok(());
    }
    let ratio = weighted_norm(&f.truncated_before(t0 - 1e-9 * f.grid().dt())) / total;
    if ratio > CAUSAL_TOL {
        return Err(SolverError::NotCausal { t0, ratio });
    }
    Ok(())
}

fn lu_solver(k: CMatrix) -> Result<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, SolverError> {
    let lu = k.lu();
    if !lu.is_invertible() {
        return Err(SolverError::Singular { lambda: f64::NAN });
    }
    Ok(lu)
}

/// Implicit-Euler convolution quadrature for
/// `d(M0 U) + sum d^(1-alpha)(M_alpha U) + M1 U + A U = f`, marching from the
/// first node at or after `t0` with zero state before. First order in `dt`.
pub fn time_stepping_oracle(p: &EvolutionaryProblem, f: &Signal, t0: f64) -> Result<Signal, SolverError> {
    p.check_signal(f)?;
    let law = p.law();
    if law.has_tail() {
        return Err(SolverError::TailUnsupported);
    }
    check_support(f, t0)?;
    let grid = *p.grid();
    let d = p.dim();
    let mut out = Signal::zeros(grid, d)?;
    let Some(j0) = first_node_from(&grid, t0) else {
        return Ok(out);
    };
    let steps = grid.n_steps() - j0;
    let dt = grid.dt();

    // (weights, block) for every memory term; M0 only reaches one step back
    let mut terms: Vec<(Vec<f64>, CMatrix)> = Vec::new();
    if law.m0().iter().any(|z| z.norm() > 0.0) {
        terms.push((cq_weights(1.0, dt, 2.min(steps)), law.m0().clone()));
    }
    for (a, m) in law.frac() {
        terms.push((cq_weights(1.0 - a, dt, steps), m.clone()));
    }

    let mut k = law.m1() + p.a().to_complex();
    for (w, m) in &terms {
        k += m * Complex64::new(w[0], 0.0);
    }
    let lu = lu_solver(k)?;

    // history[t] holds M_t U_n for every past step, flattened
    let mut history: Vec<Vec<Complex64>> = terms.iter().map(|_| Vec::with_capacity(steps * d)).collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); d];
    for n in 0..steps {
        rhs.copy_from_slice(f.at(j0 + n));
        for ((w, _), hist) in terms.iter().zip(&history) {
            for kk in 1..w.len().min(n + 1) {
                let wk = w[kk];
                let past = &hist[(n - kk) * d..(n - kk + 1) * d];
                for (r, y) in rhs.iter_mut().zip(past) {
                    *r -= y * wk;
                }
            }
        }
        let x = lu.solve(&CVector::from_column_slice(&rhs)).ok_or(SolverError::Singular { lambda: f64::NAN })?;
        out.at_mut(j0 + n).copy_from_slice(x.as_slice());
        for ((_, m), hist) in terms.iter().zip(history.iter_mut()) {
            hist.extend_from_slice((m * &x).as_slice());
        }
    }
    Ok(out)
}

/// Crank–Nicolson for `mass u' + stiffness u = f` with zero state before `t0`.
/// Second order in `dt` on smooth data.
pub fn crank_nicolson_reference(
    mass: &DMatrix<f64>,
    stiffness: &DMatrix<f64>,
    f: &Signal,
    t0: f64,
) -> Result<Signal, SolverError> {
    let d = mass.nrows();
    if mass.shape() != (d, d) || stiffness.shape() != (d, d) || f.dim() != d {
        return Err(SolverError::DimensionMismatch { expected: d, got: f.dim() });
    }
    check_support(f, t0)?;
    let grid = *f.grid();
    let mut out = Signal::zeros(grid, d)?;
    let Some(j0) = first_node_from(&grid, t0) else {
        return Ok(out);
    };
    let dt = grid.dt();
    let cplx = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let lhs = cplx(&(mass / dt + stiffness * 0.5));
    let rhs_op = cplx(&(mass / dt - stiffness * 0.5));
    let lu = lu_solver(lhs)?;
    let mut prev_u = CVector::zeros(d);
    let mut prev_f = CVector::zeros(d);
    for j in j0..grid.n_steps() {
        let fj = CVector::from_column_slice(f.at(j));
        let r = &rhs_op * &prev_u + (&fj + &prev_f) * Complex64::new(0.5, 0.0);
        let u = lu.solve(&r).ok_or(SolverError::Singular { lambda: f64::NAN })?;
        out.at_mut(j).copy_from_slice(u.as_slice());
        prev_u = u;
        prev_f = fj;
    }
    Ok(out)
}
