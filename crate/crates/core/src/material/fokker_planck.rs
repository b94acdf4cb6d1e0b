use super::{MaterialError, MaterialLaw};
use crate::linalg::{block_diag, hermitian_part, max_abs, min_eigenvalue, CMatrix};

/// Coefficient blocks of the (fractional) Fokker–Planck law on `theta (+) Phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct FokkerPlanckBlocks {
    pub kappa: CMatrix,
    pub mu00: CMatrix,
    pub mu01: CMatrix,
    pub mu10: CMatrix,
    pub mu11: CMatrix,
}

impl FokkerPlanckBlocks {
    /// Scalar multiples of the identity with zero coupling `mu01 = mu10 = 0`.
    pub fn scalar(d_theta: usize, d_phi: usize, kappa: f64, mu00: f64, mu11: f64) -> Self {
        let eye = |n: usize, s: f64| CMatrix::identity(n, n).scale(s);
        Self {
            kappa: eye(d_theta, kappa),
            mu00: eye(d_theta, mu00),
            mu01: CMatrix::zeros(d_theta, d_phi),
            mu10: CMatrix::zeros(d_phi, d_theta),
            mu11: eye(d_phi, mu11),
        }
    }

    pub fn d_theta(&self) -> usize {
        self.kappa.nrows()
    }

    pub fn d_phi(&self) -> usize {
        self.mu11.nrows()
    }

    fn mu(&self) -> CMatrix {
        let (a, b) = (self.d_theta(), self.d_phi());
        let mut m = CMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.mu00);
        m.view_mut((0, a), (a, b)).copy_from(&self.mu01);
        m.view_mut((a, 0), (b, a)).copy_from(&self.mu10);
        m.view_mut((a, a), (b, b)).copy_from(&self.mu11);
        m
    }
}

fn strictly_positive(m: &CMatrix) -> bool {
    let lmin = min_eigenvalue(m);
    lmin > 0.0 && lmin >= 1e-8 * max_abs(m)
}

/// `M_alpha = diag(kappa, 0)`, `M1 = mu`, `M0 = 0`.
///
/// `alpha = 0` is accepted as the classical limit, where `kappa` moves into `M0`
/// and the law describes ordinary diffusion.
pub fn fokker_planck_material(blocks: &FokkerPlanckBlocks, alpha: f64) -> Result<MaterialLaw, MaterialError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(MaterialError::OrderOutOfRange(alpha, "[0, 1)"));
    }
    let (a, b) = (blocks.d_theta(), blocks.d_phi());
    let shapes = [
        ("kappa", &blocks.kappa, a, a),
        ("mu00", &blocks.mu00, a, a),
        ("mu01", &blocks.mu01, a, b),
        ("mu10", &blocks.mu10, b, a),
        ("mu11", &blocks.mu11, b, b),
    ];
    for (name, m, r, c) in shapes {
        if m.shape() != (r, c) {
            return Err(MaterialError::BlockShape { name: name.into(), expected: r, rows: m.nrows(), cols: m.ncols() });
        }
    }
    if !super::is_selfadjoint(&blocks.kappa) {
        return Err(MaterialError::NotSelfadjoint("kappa".into()));
    }
    if !strictly_positive(&blocks.kappa) {
        return Err(MaterialError::NotPositiveDefinite("kappa".into()));
    }
    if !strictly_positive(&hermitian_part(&blocks.mu11)) {
        return Err(MaterialError::NotPositiveDefinite("Re mu11".into()));
    }
    let kappa = block_diag(&blocks.kappa, &CMatrix::zeros(b, b));
    let law = MaterialLaw::builder(a + b).m1(blocks.mu());
    if alpha == 0.0 {
        law.m0(kappa).build()
    } else {
        law.frac(alpha, kappa).build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use num_complex::Complex64;

    #[test]
    fn scalar_symbol() {
        let law = fokker_planck_material(&FokkerPlanckBlocks::scalar(1, 1, 1.0, 0.0, 1.0), 0.4).unwrap();
        let z = Complex64::new(2.0, -1.5).inv();
        let m = law.symbol(z).unwrap();
        assert!((m[(0, 0)] - z.powf(0.4)).norm() < 1e-14);
        assert!((m[(1, 1)] - z).norm() < 1e-14);
        assert_eq!(m[(0, 1)], c(0.0, 0.0));
        assert_eq!(m[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn coupling_enters_m1() {
        let mut blocks = FokkerPlanckBlocks::scalar(2, 3, 1.0, 0.5, 2.0);
        blocks.mu01[(1, 2)] = c(0.25, 0.0);
        let law = fokker_planck_material(&blocks, 0.5).unwrap();
        assert_eq!(law.m1()[(1, 4)], c(0.25, 0.0));
        assert_eq!(law.m1()[(0, 0)], c(0.5, 0.0));
        assert_eq!(law.m1()[(3, 3)], c(2.0, 0.0));
        assert_eq!(law.exponents(), vec![0.5]);
    }

    #[test]
    fn classical_limit_moves_kappa_to_m0() {
        let law = fokker_planck_material(&FokkerPlanckBlocks::scalar(2, 2, 3.0, 0.0, 1.0), 0.0).unwrap();
        assert!(law.exponents().is_empty());
        assert_eq!(law.m0()[(1, 1)], c(3.0, 0.0));
        assert_eq!(law.m0()[(2, 2)], c(0.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive_blocks() {
        let bad_kappa = FokkerPlanckBlocks::scalar(1, 1, 0.0, 0.0, 1.0);
        assert_eq!(
            fokker_planck_material(&bad_kappa, 0.5).unwrap_err(),
            MaterialError::NotPositiveDefinite("kappa".into())
        );
        let mut skew_mu = FokkerPlanckBlocks::scalar(1, 2, 1.0, 0.0, 0.0);
        skew_mu.mu11 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        assert!(fokker_planck_material(&skew_mu, 0.5).is_err());
        assert!(fokker_planck_material(&FokkerPlanckBlocks::scalar(1, 1, 1.0, 0.0, 1.0), 1.0).is_err());
    }
}
