//! Fractional powers of the time derivative as spectral multipliers.
//!
//! On the weighted grid the derivative has symbol `i lambda + rho`, so
//! `d^gamma` acts on bin `k` as `(i lambda_k + rho)^gamma` (principal branch).
//! The real part of the symbol never vanishes, which keeps every power on
//! one sheet and makes the family commute and compose exactly.

mod oracle;

pub use self::oracle::{caputo_derivative_oracle, riemann_liouville_derivative_oracle, rl_integral_oracle};

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::timegrid::{apply_scalar_multiplier, GridError, Signal};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("order {0} outside the open interval (0, 1)")]
    OrderOutOfRange(f64),
    #[error("exponent must be finite, got {0}")]
    NonFiniteExponent(f64),
    #[error("interval maximum {0} outside (0, 1)")]
    IntervalOutOfRange(f64),
    #[error("cut-off {0} is not a grid node")]
    CutoffOffGrid(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Order of a fractional power; negative values integrate.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracExponent(f64);

impl FracExponent {
    pub fn new(gamma: f64) -> Result<Self, FracError> {
        if !gamma.is_finite() {
            return Err(FracError::NonFiniteExponent(gamma));
        }
        Ok(Self(gamma))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `ceil(gamma)`: the integer part of the split `d^gamma = d^ceil * d^(gamma - ceil)`.
    pub fn ceil(self) -> i64 {
        self.0.ceil() as i64
    }

    /// `gamma - ceil(gamma)`, in `(-1, 0]`.
    pub fn fractional_part(self) -> f64 {
        self.0 - self.0.ceil()
    }
}

/// `(i lambda + rho)^gamma` on the principal branch.
pub fn symbol_power(gamma: f64, lambda: f64, rho: f64) -> Result<Complex64, FracError> {
    if !(rho > 0.0) {
        return Err(FracError::NonPositiveRho(rho));
    }
    if !gamma.is_finite() {
        return Err(FracError::NonFiniteExponent(gamma));
    }
    Ok(symbol_power_unchecked(gamma, lambda, rho))
}

pub(crate) fn symbol_power_unchecked(gamma: f64, lambda: f64, rho: f64) -> Complex64 {
    if gamma == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    // principal log of rho + i lambda; hypot keeps precision for |lambda| >> rho
    let log = Complex64::new(rho.hypot(lambda).ln(), lambda.atan2(rho));
    (log * gamma).exp()
}

/// `d^gamma u`, conjugating the symbol by the Fourier–Laplace transform.
pub fn apply_frac_power(gamma: f64, u: &Signal) -> Result<Signal, FracError> {
    let gamma = FracExponent::new(gamma)?.value();
    let rho = u.grid().rho();
    Ok(apply_scalar_multiplier(u, |lambda| symbol_power_unchecked(gamma, lambda, rho)))
}

/// `phi_alpha(rho) = Re((i t + rho)^(1 - alpha))`, the weight that multiplies
/// `M_alpha` in the Hermitian part of `d M(d^-1)`.
pub fn phi_alpha(alpha: f64, rho: f64, t: f64) -> f64 {
    symbol_power_unchecked(1.0 - alpha, t, rho).re
}

/// Threshold above which `alpha -> Re((i t + rho)^alpha)` is nondecreasing
/// on `(0, interval_max]` for every `t`: `exp(pi/2 * tan(interval_max * pi/2))`.
pub fn rho0_for(interval_max: f64) -> Result<f64, FracError> {
    if !(interval_max > 0.0 && interval_max < 1.0) {
        return Err(FracError::IntervalOutOfRange(interval_max));
    }
    Ok((FRAC_PI_2 * (interval_max * FRAC_PI_2).tan()).exp())
}
