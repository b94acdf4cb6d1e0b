//! Fractional evolutionary equations on exponentially weighted time grids:
//! the Fourier–Laplace functional calculus of the time derivative, material
//! laws built from fractional integrals, a certificate for their
//! well-posedness, and a causal frequency-domain solver with time-stepping
//! references.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod fraccalc;
pub mod linalg;
pub mod material;
pub mod solver;
pub mod spatial;
pub mod timegrid;
pub mod wellposed;

use thiserror::Error;

/// Any failure, prefixed with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("timegrid: {0}")]
    Grid(#[from] timegrid::GridError),
    #[error("fraccalc: {0}")]
    Frac(#[from] fraccalc::FracError),
    #[error("material: {0}")]
    Material(#[from] material::MaterialError),
    #[error("wellposed: {0}")]
    Wellposed(#[from] wellposed::WellposedError),
    #[error("spatial: {0}")]
    Spatial(#[from] spatial::SpatialError),
    #[error("solver: {0}")]
    Solver(#[from] solver::SolverError),
    #[error("config: {0}")]
    Config(#[from] cli::ConfigError),
    #[error("cli: {0}")]
    Io(String),
}
