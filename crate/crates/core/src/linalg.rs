//! Dense complex matrix helpers shared by the material, certificate and solver code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| c(x, 0.0))
}

/// `(m + m^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Spectral norm; zero for empty matrices.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part; `+inf` for an empty matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    hermitian_part(m).symmetric_eigenvalues().min()
}

/// `[a, b]` horizontally.
pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Orthonormal basis (as columns) of the eigenvectors whose eigenvalue
/// exceeds `threshold`, plus the complementary basis.
pub fn split_by_eigenvalue(m: &CMatrix, threshold: f64) -> (CMatrix, CMatrix) {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let above: Vec<usize> = (0..n).filter(|&i| values[i] > threshold).collect();
    let below: Vec<usize> = (0..n).filter(|&i| values[i] <= threshold).collect();
    let pick = |idx: &[usize]| CMatrix::from_fn(n, idx.len(), |r, col| vectors[(r, idx[col])]);
    (pick(&above), pick(&below))
}

/// `f(m)` for Hermitian `m` via its eigen-decomposition.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let scaled = CMatrix::from_fn(n, n, |r, col| vectors[(r, col)] * f(values[col]));
    scaled * vectors.adjoint()
}

/// Inverse of a square matrix, `None` if numerically singular.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    if m.is_empty() {
        return Some(m.clone());
    }
    m.clone().try_inverse()
}

/// Orthogonal projector onto the column space of `m` (rank tolerance relative to `||m||`).
pub fn range_projector(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = m.nrows();
    if m.is_empty() {
        return CMatrix::zeros(n, n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let mut p = CMatrix::zeros(n, n);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > rel_tol * smax && *s > 0.0 {
            let col = u.column(k);
            p += col * col.adjoint();
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let recon = &vecs * CMatrix::from_diagonal(&CVector::from_iterator(2, vals.iter().map(|v| c(*v, 0.0)))) * vecs.adjoint();
        assert!(max_abs(&(recon - m)) < 1e-12);
    }

    #[test]
    fn split_and_functions() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 0.0), c(4.0, 0.0)]));
        let (range, null) = split_by_eigenvalue(&m, 1e-10);
        assert_eq!((range.ncols(), null.ncols()), (1, 1));
        let sq = hermitian_function(&m, |x| x.max(0.0).sqrt());
        assert!((sq[(1, 1)] - c(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(min_eigenvalue(&CMatrix::zeros(0, 0)), f64::INFINITY);
        let p = range_projector(&m, 1e-8);
        assert!((p[(1, 1)] - c(1.0, 0.0)).norm() < 1e-12 && p[(0, 0)].norm() < 1e-12);
    }
}
