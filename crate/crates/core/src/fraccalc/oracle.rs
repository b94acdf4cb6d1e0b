//! Time-domain quadratures for the Riemann–Liouville integral and the
//! RL / Caputo derivatives, independent of the spectral path.

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::gamma as gamma_fn;

use super::FracError;
use crate::timegrid::Signal;

fn check_order(alpha: f64) -> Result<(), FracError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(FracError::OrderOutOfRange(alpha))
    }
}

/// `(1/Gamma(alpha)) int_{t_start}^t (t-s)^(alpha-1) u(s) ds` by product
/// integration: `u` is the cell average on each cell and the kernel is
/// integrated exactly. The value at node `j` only uses cells left of `t_j`.
pub fn rl_integral_oracle(alpha: f64, u: &Signal) -> Result<Signal, FracError> {
    check_order(alpha)?;
    Ok(rl_integral(alpha, u))
}

fn rl_integral(alpha: f64, u: &Signal) -> Signal {
    let grid = *u.grid();
    let n = grid.n_steps();
    let dim = u.dim();
    let scale = grid.dt().powf(alpha) / gamma_fn(alpha + 1.0);
    // w[l] weighs the cell that ends l steps before the output node
    let weights: Vec<f64> = (0..n)
        .map(|l| if l == 0 { 0.0 } else { scale * ((l as f64).powf(alpha) - ((l - 1) as f64).powf(alpha)) })
        .collect();
    let cells: Vec<Complex64> = (0..n - 1)
        .flat_map(|m| (0..dim).map(move |i| (m, i)))
        .map(|(m, i)| (u.at(m)[i] + u.at(m + 1)[i]) * 0.5)
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n * dim];
    values.par_chunks_mut(dim).enumerate().for_each(|(j, out)| {
        for m in 0..j {
            let w = weights[j - m];
            for (o, c) in out.iter_mut().zip(&cells[m * dim..(m + 1) * dim]) {
                *o += c * w;
            }
        }
    });
    Signal::from_values(grid, dim, values).expect("shape preserved")
}

/// Second-order central differences, one-sided at the ends.
fn time_derivative(u: &Signal) -> Signal {
    let grid = *u.grid();
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut out = u.clone();
    for j in 0..n {
        let (lo, hi, h) = match j {
            0 => (0, 1, dt),
            _ if j == n - 1 => (n - 2, n - 1, dt),
            _ => (j - 1, j + 1, 2.0 * dt),
        };
        for i in 0..u.dim() {
            out.at_mut(j)[i] = (u.at(hi)[i] - u.at(lo)[i]) / h;
        }
    }
    out
}

fn cutoff_node(u: &Signal, a: f64) -> Result<usize, FracError> {
    let grid = u.grid();
    let x = (a - grid.t_start()) / grid.dt();
    let j = x.round();
    if (x - j).abs() > 1e-9 * x.abs().max(1.0) || j < 0.0 || j >= grid.n_steps() as f64 {
        return Err(FracError::CutoffOffGrid(a));
    }
    Ok(j as usize)
}

fn zero_before(u: &Signal, node: usize) -> Signal {
    let mut out = u.clone();
    for j in 0..node {
        out.at_mut(j).iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    }
    out
}

/// `d/dt I^(1-gamma) (chi_(a,inf) u)`: cut-off applied before integrating.
pub fn riemann_liouville_derivative_oracle(gamma: f64, a: f64, u: &Signal) -> Result<Signal, FracError> {
    check_order(gamma)?;
    let node = cutoff_node(u, a)?;
    let integral = rl_integral(1.0 - gamma, &zero_before(u, node));
    Ok(time_derivative(&integral))
}

/// `I^(1-gamma) (chi_(a,inf) u')`: the integer derivative acts first, so
/// constants are annihilated.
pub fn caputo_derivative_oracle(gamma: f64, a: f64, u: &Signal) -> Result<Signal, FracError> {
    check_order(gamma)?;
    let node = cutoff_node(u, a)?;
    let du = zero_before(&time_derivative(u), node);
    Ok(rl_integral(1.0 - gamma, &du))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraccalc::apply_frac_power;
    use crate::timegrid::{weighted_norm, TimeGrid};
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    use crate::timegrid::profiles::bump;

    #[test]
    fn rejects_bad_order() {
        let g = TimeGrid::new(0.0, 0.1, 8, 1.0).unwrap();
        let u = Signal::zeros(g, 1).unwrap();
        assert_eq!(rl_integral_oracle(0.0, &u).unwrap_err(), FracError::OrderOutOfRange(0.0));
        assert!(rl_integral_oracle(1.0, &u).is_err());
        assert!(caputo_derivative_oracle(1.5, 0.0, &u).is_err());
        assert!(riemann_liouville_derivative_oracle(-0.2, 0.0, &u).is_err());
        assert_eq!(
            caputo_derivative_oracle(0.5, 0.05, &u).unwrap_err(),
            FracError::CutoffOffGrid(0.05)
        );
    }

    #[test]
    fn zero_in_zero_out() {
        let g = TimeGrid::new(-1.0, 0.01, 256, 1.0).unwrap();
        let u = Signal::zeros(g, 2).unwrap();
        assert_eq!(rl_integral_oracle(0.3, &u).unwrap().max_abs(), 0.0);
        assert_eq!(caputo_derivative_oracle(0.3, 0.0, &u).unwrap().max_abs(), 0.0);
        assert_eq!(riemann_liouville_derivative_oracle(0.3, 0.0, &u).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn half_integral_of_step() {
        let g = TimeGrid::new(-1.0, 1.0 / 512.0, 2048, 1.0).unwrap();
        let u = Signal::from_fn(g, 1, |t, _| c(if t >= 0.0 { 1.0 } else { 0.0 })).unwrap();
        let v = rl_integral_oracle(0.5, &u).unwrap();
        for j in 0..g.n_steps() {
            let t = g.time(j);
            let expected = if t > 0.0 { 2.0 * (t / PI).sqrt() } else { 0.0 };
            // the half-weighted cell straddling t = 0 perturbs the result by O(dt^(1/2))
            assert!((v.at(j)[0].re - expected).abs() < 0.03, "t={t}");
            if t > 0.5 {
                assert!((v.at(j)[0].re - expected).abs() < 2e-3 * expected, "t={t}");
            }
        }
    }

    #[test]
    fn output_is_causal() {
        let g = TimeGrid::new(0.0, 0.01, 128, 1.0).unwrap();
        let mut u = Signal::zeros(g, 1).unwrap();
        u.at_mut(70)[0] = c(1.0);
        let v = rl_integral_oracle(0.4, &u).unwrap();
        // cell 69 touches node 70, so node 70 is the first that may respond
        assert!((0..=69).all(|j| v.at(j)[0].norm() == 0.0));
        assert!(v.at(71)[0].norm() > 0.0);
    }

    #[test]
    fn agrees_with_spectral_integral() {
        let g = TimeGrid::new(-1.0, 8.0 / 4096.0, 4096, 5.0).unwrap();
        let u = Signal::from_fn(g, 1, |t, _| c(bump(t, 0.0, 2.0))).unwrap();
        let a = rl_integral_oracle(0.5, &u).unwrap();
        let b = apply_frac_power(-0.5, &u).unwrap();
        let rel = weighted_norm(&a.sub(&b).unwrap()) / weighted_norm(&b);
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn rl_derivative_matches_spectral_on_supported_input() {
        let g = TimeGrid::new(-1.0, 8.0 / 4096.0, 4096, 5.0).unwrap();
        let u = Signal::from_fn(g, 1, |t, _| c(bump(t, 0.0, 2.0))).unwrap();
        let a = riemann_liouville_derivative_oracle(0.4, 0.0, &u).unwrap();
        let b = apply_frac_power(0.4, &u).unwrap();
        let rel = weighted_norm(&a.sub(&b).unwrap()) / weighted_norm(&b);
        assert!(rel < 1e-3, "{rel}");
        let caputo = caputo_derivative_oracle(0.4, 0.0, &u).unwrap();
        let rel = weighted_norm(&caputo.sub(&b).unwrap()) / weighted_norm(&b);
        assert!(rel < 1e-3, "{rel}");
    }

    #[test]
    fn constants_separate_caputo_from_rl() {
        let g = TimeGrid::new(0.0, 1.0 / 256.0, 1024, 1.0).unwrap();
        let u = Signal::from_fn(g, 1, |_, _| c(3.0)).unwrap();
        let cap = caputo_derivative_oracle(0.5, 0.0, &u).unwrap();
        assert!(cap.max_abs() < 1e-12);
        let rl = riemann_liouville_derivative_oracle(0.5, 0.0, &u).unwrap();
        // RL derivative of a constant is c t^(-gamma) / Gamma(1-gamma)
        let j = 512;
        let t = g.time(j);
        let expected = 3.0 / (t.sqrt() * PI.sqrt());
        assert!((rl.at(j)[0].re - expected).abs() < 1e-2 * expected);
    }
}
