//! Exponentially weighted time grids and the discrete Fourier–Laplace transform.
//!
//! A [`TimeGrid`] samples the weighted space of time signals with inner
//! product `<u|v>_rho = sum_j <u_j|v_j> exp(-2 rho t_j) dt`. The forward
//! transform removes the weight and applies a unitary DFT, so that
//! `||u||_rho` equals the plain l2 norm of the spectrum and the time
//! derivative becomes multiplication by `i lambda + rho`.

pub(crate) mod csv;
pub mod profiles;

pub use self::csv::{read_signal_csv, signal_from_csv, signal_to_csv, write_signal_csv};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use thiserror::Error;

/// Default lower bound on `rho * T` for causal solves. Wrap-around terms of
/// the periodic discrete transform are damped by `exp(-rho T)`.
pub const DEFAULT_DAMPING: f64 = 30.0;

/// Largest admissible `rho * |t|` on the grid; beyond this the weight
/// `exp(+-rho t)` leaves the range of `f64`.
const MAX_WEIGHT_EXPONENT: f64 = 700.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("time step must be positive and finite, got {0}")]
    NonPositiveStep(f64),
    #[error("weight parameter rho must be positive and finite, got {0}")]
    NonPositiveRho(f64),
    #[error("n_steps must be a power of two and at least 2, got {0}")]
    BadStepCount(usize),
    #[error("t_start must be finite, got {0}")]
    NonFiniteStart(f64),
    #[error("weight exp(rho t) overflows on this grid (rho*|t| reaches {0:.1})")]
    WeightOverflow(f64),
    #[error("damping rho*T = {actual:.3} is below the required {required:.3}")]
    InsufficientDamping { actual: f64, required: f64 },
    #[error("signal has {got} values, expected {expected} (n_steps x dim)")]
    LengthMismatch { expected: usize, got: usize },
    #[error("signal dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("signals live on different grids")]
    GridMismatch,
    #[error("{0}")]
    Csv(String),
}

/// Uniform grid `t_j = t_start + j dt`, `j = 0..n_steps`, carrying the
/// exponential weight parameter `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    dt: f64,
    n_steps: usize,
    rho: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize, rho: f64) -> Result<Self, GridError> {
        if !t_start.is_finite() {
            return Err(GridError::NonFiniteStart(t_start));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GridError::NonPositiveStep(dt));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(GridError::NonPositiveRho(rho));
        }
        if n_steps < 2 || !n_steps.is_power_of_two() {
            return Err(GridError::BadStepCount(n_steps));
        }
        let grid = Self {
            t_start,
            dt,
            n_steps,
            rho,
        };
        let reach = rho * t_start.abs().max(grid.t_end().abs());
        if reach > MAX_WEIGHT_EXPONENT {
            return Err(GridError::WeightOverflow(reach));
        }
        Ok(grid)
    }

    /// Grid covering `[t_start, t_start + span)` with `n_steps` nodes.
    pub fn with_span(t_start: f64, span: f64, n_steps: usize, rho: f64) -> Result<Self, GridError> {
        Self::new(t_start, span / n_steps as f64, n_steps, rho)
    }

    /// IVP layout: a quarter of the window before `t = 0`, three quarters after.
    pub fn centered_for_ivp(span: f64, n_steps: usize, rho: f64) -> Result<Self, GridError> {
        Self::with_span(-0.25 * span, span, n_steps, rho)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Total span `T = n_steps * dt`.
    pub fn span(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Last grid node.
    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps - 1)
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t_start + j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(move |j| self.time(j))
    }

    /// `rho * T`, the damping of wrap-around contributions.
    pub fn damping(&self) -> f64 {
        self.rho * self.span()
    }

    pub fn ensure_damping(&self, required: f64) -> Result<(), GridError> {
        let actual = self.damping();
        if actual < required {
            return Err(GridError::InsufficientDamping { actual, required });
        }
        Ok(())
    }

    /// Same nodes, different weight.
    pub fn with_rho(&self, rho: f64) -> Result<Self, GridError> {
        Self::new(self.t_start, self.dt, self.n_steps, rho)
    }

    /// Signed angular frequency of DFT bin `k`, in `(-pi/dt, pi/dt]`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.n_steps as isize;
        let k = k as isize;
        let signed = if k <= n / 2 { k } else { k - n };
        2.0 * PI * signed as f64 / self.span()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_steps).map(|k| self.frequency(k)).collect()
    }

    /// Index of the node closest to `t`, clamped to the grid.
    pub fn nearest_node(&self, t: f64) -> usize {
        let j = ((t - self.t_start) / self.dt).round();
        j.clamp(0.0, (self.n_steps - 1) as f64) as usize
    }

    /// `exp(-rho t_j)`.
    pub fn weight(&self, j: usize) -> f64 {
        (-self.rho * self.time(j)).exp()
    }

    fn same_nodes(&self, other: &TimeGrid) -> bool {
        self == other
    }
}

/// Vector-valued samples: `dim` complex components at every grid node,
/// stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: TimeGrid,
    dim: usize,
    values: Vec<Complex64>,
}

/// Frequency-domain coefficients in natural FFT order; see
/// [`TimeGrid::frequency`] for the bin-to-frequency map.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: TimeGrid,
    dim: usize,
    coefficients: Vec<Complex64>,
}

macro_rules! node_major_accessors {
    ($ty:ident, $field:ident) => {
        impl $ty {
            pub fn grid(&self) -> &TimeGrid {
                &self.grid
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn len(&self) -> usize {
                self.grid.n_steps
            }

            pub fn is_empty(&self) -> bool {
                false
            }

            /// Vector at node / bin `j`.
            pub fn at(&self, j: usize) -> &[Complex64] {
                &self.$field[j * self.dim..(j + 1) * self.dim]
            }

            pub fn at_mut(&mut self, j: usize) -> &mut [Complex64] {
                &mut self.$field[j * self.dim..(j + 1) * self.dim]
            }

            /// Flat node-major storage.
            pub fn as_slice(&self) -> &[Complex64] {
                &self.$field
            }

            /// Samples of one component.
            pub fn component(&self, i: usize) -> Vec<Complex64> {
                self.$field.iter().skip(i).step_by(self.dim).copied().collect()
            }

            fn set_component(&mut self, i: usize, data: &[Complex64]) {
                for (j, v) in data.iter().enumerate() {
                    self.$field[j * self.dim + i] = *v;
                }
            }
        }
    };
}

node_major_accessors!(Signal, values);
node_major_accessors!(Spectrum, coefficients);

impl Signal {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        Ok(Self {
            grid,
            dim,
            values: vec![Complex64::new(0.0, 0.0); grid.n_steps * dim],
        })
    }

    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<Complex64>) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        if values.len() != grid.n_steps * dim {
            return Err(GridError::LengthMismatch {
                expected: grid.n_steps * dim,
                got: values.len(),
            });
        }
        Ok(Self { grid, dim, values })
    }

    /// Builds a signal from `f(t, component)`.
    pub fn from_fn(
        grid: TimeGrid,
        dim: usize,
        mut f: impl FnMut(f64, usize) -> Complex64,
    ) -> Result<Self, GridError> {
        let mut s = Self::zeros(grid, dim)?;
        for j in 0..grid.n_steps {
            let t = grid.time(j);
            for (i, v) in s.at_mut(j).iter_mut().enumerate() {
                *v = f(t, i);
            }
        }
        Ok(s)
    }

    /// Scalar time profile times a fixed spatial vector.
    pub fn separable(grid: TimeGrid, profile: impl Fn(f64) -> f64, vector: &[Complex64]) -> Result<Self, GridError> {
        Self::from_fn(grid, vector.len(), |t, i| vector[i] * profile(t))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scaled(&self, c: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal, GridError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal, GridError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Signal, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Signal, GridError> {
        self.check_compatible(other)?;
        Ok(Signal {
            grid: self.grid,
            dim: self.dim,
            values: self.values.iter().zip(&other.values).map(|(a, b)| op(*a, *b)).collect(),
        })
    }

    fn check_compatible(&self, other: &Signal) -> Result<(), GridError> {
        if !self.grid.same_nodes(&other.grid) {
            return Err(GridError::GridMismatch);
        }
        if self.dim != other.dim {
            return Err(GridError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// Zeroes every node with `t_j >= cut` (keeps the part strictly before `cut`).
    pub fn truncated_before(&self, cut: f64) -> Signal {
        let mut out = self.clone();
        for j in 0..self.grid.n_steps {
            if self.grid.time(j) >= cut {
                out.at_mut(j).iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Zeroes every node with `t_j < cut`.
    pub fn truncated_after(&self, cut: f64) -> Signal {
        let mut out = self.clone();
        for j in 0..self.grid.n_steps {
            if self.grid.time(j) < cut {
                out.at_mut(j).iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            }
        }
        out
    }

    /// Same samples reinterpreted with a different weight.
    pub fn with_grid(&self, grid: TimeGrid) -> Result<Signal, GridError> {
        if grid.n_steps != self.grid.n_steps {
            return Err(GridError::GridMismatch);
        }
        Ok(Signal {
            grid,
            dim: self.dim,
            values: self.values.clone(),
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Spectrum {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        Ok(Self {
            grid,
            dim,
            coefficients: vec![Complex64::new(0.0, 0.0); grid.n_steps * dim],
        })
    }

    pub fn from_coefficients(grid: TimeGrid, dim: usize, coefficients: Vec<Complex64>) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::ZeroDimension);
        }
        if coefficients.len() != grid.n_steps * dim {
            return Err(GridError::LengthMismatch {
                expected: grid.n_steps * dim,
                got: coefficients.len(),
            });
        }
        Ok(Self {
            grid,
            dim,
            coefficients,
        })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `(lambda_k, coefficient vector)` pairs in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, &[Complex64])> + '_ {
        (0..self.grid.n_steps).map(move |k| (self.grid.frequency(k), self.at(k)))
    }

    /// l2 norm of all coefficients.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies bin `k` by `symbol(lambda_k)`.
    pub fn map_scalar(&self, symbol: impl Fn(f64) -> Complex64 + Sync) -> Spectrum {
        let mut out = self.clone();
        let dim = self.dim;
        let grid = self.grid;
        out.coefficients
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(k, chunk)| {
                let s = symbol(grid.frequency(k));
                chunk.iter_mut().for_each(|c| *c *= s);
            });
        out
    }
}

fn fft_component(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    fft.process(data);
}

/// Discrete Fourier–Laplace transform: multiply by `sqrt(dt) exp(-rho t_j)`,
/// then unitary DFT (`exp(-i lambda t)` kernel, `1/sqrt(n)` normalisation).
pub fn forward_transform(u: &Signal) -> Spectrum {
    let grid = u.grid;
    let n = grid.n_steps;
    let scale = (grid.dt / n as f64).sqrt();
    let weights: Vec<f64> = (0..n).map(|j| grid.weight(j) * scale).collect();
    let components: Vec<Vec<Complex64>> = (0..u.dim)
        .into_par_iter()
        .map(|i| {
            let mut buf: Vec<Complex64> = u.component(i).iter().zip(&weights).map(|(v, w)| v * w).collect();
            fft_component(&mut buf, false);
            buf
        })
        .collect();
    let mut out = Spectrum::zeros(grid, u.dim).expect("dimension already validated");
    for (i, c) in components.iter().enumerate() {
        out.set_component(i, c);
    }
    out
}

/// Adjoint (= inverse) of [`forward_transform`].
pub fn inverse_transform(s: &Spectrum) -> Signal {
    let grid = s.grid;
    let n = grid.n_steps;
    let scale = 1.0 / (grid.dt * n as f64).sqrt();
    let weights: Vec<f64> = (0..n).map(|j| scale / grid.weight(j)).collect();
    let components: Vec<Vec<Complex64>> = (0..s.dim)
        .into_par_iter()
        .map(|i| {
            let mut buf = s.component(i);
            fft_component(&mut buf, true);
            buf.iter_mut().zip(&weights).for_each(|(v, w)| *v *= w);
            buf
        })
        .collect();
    let mut out = Signal::zeros(grid, s.dim).expect("dimension already validated");
    for (i, c) in components.iter().enumerate() {
        out.set_component(i, c);
    }
    out
}

/// `|u|_{rho,0,0}` as the Riemann sum `sqrt(sum_j |u_j|^2 exp(-2 rho t_j) dt)`.
pub fn weighted_norm(u: &Signal) -> f64 {
    let grid = u.grid;
    (0..grid.n_steps)
        .map(|j| {
            let w = grid.weight(j);
            u.at(j).iter().map(|v| v.norm_sqr()).sum::<f64>() * w * w
        })
        .map(|x| x * grid.dt)
        .sum::<f64>()
        .sqrt()
}

/// `<u|v>_rho`, conjugate-linear in `u`.
pub fn weighted_inner(u: &Signal, v: &Signal) -> Result<Complex64, GridError> {
    u.check_compatible(v)?;
    let grid = u.grid;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..grid.n_steps {
        let w = grid.weight(j);
        let dot: Complex64 = u.at(j).iter().zip(v.at(j)).map(|(a, b)| a.conj() * b).sum();
        acc += dot * (w * w);
    }
    Ok(acc * grid.dt)
}

/// Applies a scalar spectral multiplier `symbol(lambda)` through the
/// Fourier–Laplace transform.
pub fn apply_scalar_multiplier(u: &Signal, symbol: impl Fn(f64) -> Complex64 + Sync) -> Signal {
    inverse_transform(&forward_transform(u).map_scalar(symbol))
}

/// The discrete delta `(1/dt) e_node` times `vector`.
pub fn discrete_delta(grid: TimeGrid, node: usize, vector: &[Complex64]) -> Result<Signal, GridError> {
    let mut s = Signal::zeros(grid, vector.len())?;
    let inv_dt = 1.0 / grid.dt;
    s.at_mut(node).iter_mut().zip(vector).for_each(|(a, b)| *a = b * inv_dt);
    Ok(s)
}
