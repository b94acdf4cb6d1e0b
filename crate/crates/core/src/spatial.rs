//! Staggered-grid skew-symmetric operators on `(0, n_cells h)` with homogeneous
//! Dirichlet data on the node unknown.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg::{real_to_complex, CMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("need at least 2 cells, got {0}")]
    TooFewCells(usize),
    #[error("mesh width must be positive and finite, got {0}")]
    BadMeshWidth(f64),
    #[error("operator is not skew-symmetric (defect {0:.3e})")]
    NotSkew(f64),
    #[error("block dims ({0}, {1}) do not partition dimension {2}")]
    BadBlockDims(usize, usize, usize),
}

/// Real skew-symmetric matrix with a two-block partition `(d1, d2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewOperator {
    entries: DMatrix<f64>,
    block_dims: (usize, usize),
}

impl SkewOperator {
    /// Validates skew-symmetry to `1e-12 |A|`.
    pub fn new(entries: DMatrix<f64>, block_dims: (usize, usize)) -> Result<Self, SpatialError> {
        let d = entries.nrows();
        if entries.ncols() != d || block_dims.0 + block_dims.1 != d {
            return Err(SpatialError::BadBlockDims(block_dims.0, block_dims.1, d));
        }
        let op = Self { entries, block_dims };
        let defect = skewness_defect(&op);
        if defect > 1e-12 * op.entries.amax() {
            return Err(SpatialError::NotSkew(defect));
        }
        Ok(op)
    }

    /// The zero operator on `C^d` (no spatial coupling), as one block.
    pub fn zero(d: usize) -> Self {
        Self { entries: DMatrix::zeros(d, d), block_dims: (d, 0) }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn block_dims(&self) -> (usize, usize) {
        self.block_dims
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_complex(&self) -> CMatrix {
        real_to_complex(&self.entries)
    }

    /// Lower-left block (`grad` for the diffusion operator).
    pub fn lower_block(&self) -> DMatrix<f64> {
        let (d1, d2) = self.block_dims;
        self.entries.view((d1, 0), (d2, d1)).into_owned()
    }

    pub fn upper_block(&self) -> DMatrix<f64> {
        let (d1, d2) = self.block_dims;
        self.entries.view((0, d1), (d1, d2)).into_owned()
    }

    pub fn negated(&self) -> Self {
        Self { entries: -&self.entries, block_dims: self.block_dims }
    }

    /// Row-per-line CSV, for debugging.
    pub fn to_csv(&self) -> String {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}

fn check_mesh(n_cells: usize, h: f64) -> Result<(), SpatialError> {
    if n_cells < 2 {
        return Err(SpatialError::TooFewCells(n_cells));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(SpatialError::BadMeshWidth(h));
    }
    Ok(())
}

/// Forward-difference gradient from the `n_cells - 1` interior nodes to the
/// `n_cells` cells; boundary node values are zero.
pub fn gradient_1d(n_cells: usize, h: f64) -> Result<DMatrix<f64>, SpatialError> {
    check_mesh(n_cells, h)?;
    let mut g = DMatrix::zeros(n_cells, n_cells - 1);
    for cell in 0..n_cells {
        if cell < n_cells - 1 {
            g[(cell, cell)] = 1.0 / h;
        }
        if cell > 0 {
            g[(cell, cell - 1)] = -1.0 / h;
        }
    }
    Ok(g)
}

/// `[[0, div], [grad, 0]]` with `div = -grad^T`; the first block holds the
/// node unknown (dimension `n_cells - 1`), the second the cell flux.
pub fn build_grad_div_1d(n_cells: usize, h: f64) -> Result<SkewOperator, SpatialError> {
    let g = gradient_1d(n_cells, h)?;
    let (n1, n2) = (n_cells - 1, n_cells);
    let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
    a.view_mut((n1, 0), (n2, n1)).copy_from(&g);
    a.view_mut((0, n1), (n1, n2)).copy_from(&(-g.transpose()));
    Ok(SkewOperator { entries: a, block_dims: (n1, n2) })
}

/// `[[0, -Div], [-Grad, 0]]`: the diffusion stencil with both blocks negated.
pub fn build_elasticity_1d(n_cells: usize, h: f64) -> Result<SkewOperator, SpatialError> {
    Ok(build_grad_div_1d(n_cells, h)?.negated())
}

/// `max |A + A^T|`.
pub fn skewness_defect(a: &SkewOperator) -> f64 {
    (&a.entries + a.entries.transpose()).amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_cell_stencil() {
        let a = build_grad_div_1d(2, 1.0).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(a.entries(), &expect);
        assert_eq!(a.lower_block(), DMatrix::from_column_slice(2, 1, &[1.0, -1.0]));
        assert_eq!(a.upper_block(), DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
        let e = build_elasticity_1d(2, 1.0).unwrap();
        assert_eq!(e.entries(), &(-expect));
        assert_eq!(skewness_defect(&a), 0.0);
        assert_eq!(skewness_defect(&e), 0.0);
    }

    #[test]
    fn rejects_bad_mesh() {
        assert_eq!(build_grad_div_1d(1, 1.0), Err(SpatialError::TooFewCells(1)));
        assert_eq!(build_elasticity_1d(4, 0.0), Err(SpatialError::BadMeshWidth(0.0)));
        assert!(build_grad_div_1d(4, f64::NAN).is_err());
    }

    #[test]
    fn defect_of_symmetric_perturbation() {
        let eps = 1e-3;
        let a = build_grad_div_1d(5, 0.2).unwrap();
        let bumped = SkewOperator { entries: a.entries() + DMatrix::identity(9, 9) * eps, block_dims: (4, 5) };
        assert!((skewness_defect(&bumped) - 2.0 * eps).abs() < 1e-15);
        assert!(matches!(SkewOperator::new(bumped.entries.clone(), (4, 5)), Err(SpatialError::NotSkew(_))));
        assert_eq!(skewness_defect(&SkewOperator::zero(3)), 0.0);
        assert!(matches!(SkewOperator::new(DMatrix::zeros(3, 3), (1, 1)), Err(SpatialError::BadBlockDims(..))));
    }

    #[test]
    fn spectrum_is_imaginary_and_bounded() {
        for (n, h) in [(2, 1.0), (8, 0.125), (33, 0.03)] {
            let a = build_grad_div_1d(n, h).unwrap();
            let eig = a.entries().complex_eigenvalues();
            let scale = 2.0 / h;
            for z in eig.iter() {
                assert!(z.re.abs() <= 1e-10 * scale, "{z}");
                assert!(z.norm() <= scale * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn energy_neutral_and_adjoint(n in 2usize..40, h in 0.01f64..2.0, seed in proptest::collection::vec(-1.0f64..1.0, 80)) {
            let a = build_grad_div_1d(n, h).unwrap();
            let d = a.dim();
            let u = nalgebra::DVector::from_iterator(d, seed.iter().cycle().take(d).copied());
            let energy = u.dot(&(a.entries() * &u));
            prop_assert!(energy.abs() <= 1e-12 * a.entries().norm() * u.norm_squared());

            let g = gradient_1d(n, h).unwrap();
            let x = nalgebra::DVector::from_iterator(n - 1, seed.iter().copied().take(n - 1));
            let y = nalgebra::DVector::from_iterator(n, seed.iter().rev().copied().take(n));
            let div_y = a.upper_block() * &y;
            prop_assert!(((&g * &x).dot(&y) + x.dot(&div_y)).abs() <= 1e-12 * (1.0 + (&g * &x).norm() * y.norm()));
        }
    }
}
