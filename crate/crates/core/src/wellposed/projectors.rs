use std::fs;
use std::path::Path;

use super::WellposedError;
use crate::linalg::{spectral_norm, split_by_eigenvalue, CMatrix};
use crate::material::text::{format_matrix, parse_dim, parse_entries, parse_matrix};
use crate::material::MaterialError;

const PROJ_TOL: f64 = 1e-10;

/// Orthogonal projectors `P0 + F0 + Q0 = 1`, with orthonormal column bases of their ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorTriple {
    p0: CMatrix,
    f0: CMatrix,
    q0: CMatrix,
    basis_p: CMatrix,
    basis_f: CMatrix,
    basis_q: CMatrix,
}

fn check_projector(name: &str, p: &CMatrix) -> Result<(), WellposedError> {
    let bad = |what: String| Err(WellposedError::Projector(format!("{name}: {what}")));
    let defect = spectral_norm(&(p - p.adjoint()));
    if defect > PROJ_TOL {
        return bad(format!("not selfadjoint (defect {defect:.3e})"));
    }
    let defect = spectral_norm(&(p * p - p));
    if defect > PROJ_TOL {
        return bad(format!("not idempotent (defect {defect:.3e})"));
    }
    Ok(())
}

impl ProjectorTriple {
    pub fn new(p0: CMatrix, f0: CMatrix, q0: CMatrix) -> Result<Self, WellposedError> {
        let d = p0.nrows();
        for (name, m) in [("p0", &p0), ("f0", &f0), ("q0", &q0)] {
            if m.shape() != (d, d) {
                return Err(WellposedError::Projector(format!("{name}: expected {d}x{d}, got {:?}", m.shape())));
            }
            check_projector(name, m)?;
        }
        let defect = spectral_norm(&(&p0 + &f0 + &q0 - CMatrix::identity(d, d)));
        if defect > PROJ_TOL {
            return Err(WellposedError::Projector(format!("p0 + f0 + q0 != I (defect {defect:.3e})")));
        }
        for (name, a, b) in [("p0 f0", &p0, &f0), ("p0 q0", &p0, &q0), ("f0 q0", &f0, &q0)] {
            let defect = spectral_norm(&(a * b));
            if defect > PROJ_TOL {
                return Err(WellposedError::Projector(format!("{name} != 0 (defect {defect:.3e})")));
            }
        }
        let basis = |m: &CMatrix| split_by_eigenvalue(m, 0.5).0;
        Ok(Self { basis_p: basis(&p0), basis_f: basis(&f0), basis_q: basis(&q0), p0, f0, q0 })
    }

    pub fn dim(&self) -> usize {
        self.p0.nrows()
    }

    pub fn p0(&self) -> &CMatrix {
        &self.p0
    }

    pub fn f0(&self) -> &CMatrix {
        &self.f0
    }

    pub fn q0(&self) -> &CMatrix {
        &self.q0
    }

    /// Isometry `iota_P` with `iota_P iota_P^* = P0`.
    pub fn basis_p(&self) -> &CMatrix {
        &self.basis_p
    }

    pub fn basis_f(&self) -> &CMatrix {
        &self.basis_f
    }

    pub fn basis_q(&self) -> &CMatrix {
        &self.basis_q
    }
}

/// Same key/value format as law files with keys `dim`, `p0`, `f0`, `q0`;
/// an omitted projector is zero.
pub fn parse_projectors(text: &str) -> Result<ProjectorTriple, WellposedError> {
    let entries = parse_entries(text)?;
    let d = parse_dim(&entries)?;
    let mut mats: [Option<CMatrix>; 3] = [None, None, None];
    for e in &entries {
        let slot = match (e.key.as_str(), &e.arg) {
            ("dim", None) => continue,
            ("p0", None) => 0,
            ("f0", None) => 1,
            ("q0", None) => 2,
            _ => {
                return Err(MaterialError::Parse { line: e.line, msg: format!("unknown key `{}`", e.key) }.into());
            }
        };
        if mats[slot].is_some() {
            return Err(MaterialError::Parse { line: e.line, msg: format!("duplicate key `{}`", e.key) }.into());
        }
        mats[slot] = Some(parse_matrix(&e.value, d, e.line)?);
    }
    let [p, f, q] = mats.map(|m| m.unwrap_or_else(|| CMatrix::zeros(d, d)));
    ProjectorTriple::new(p, f, q)
}

pub fn projectors_to_text(proj: &ProjectorTriple) -> String {
    format!(
        "dim = {}\np0 = {}\nf0 = {}\nq0 = {}\n",
        proj.dim(),
        format_matrix(&proj.p0),
        format_matrix(&proj.f0),
        format_matrix(&proj.q0)
    )
}

pub fn read_projectors(path: impl AsRef<Path>) -> Result<ProjectorTriple, WellposedError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| WellposedError::Material(MaterialError::Io(format!("{}: {e}", path.display()))))?;
    parse_projectors(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs};
    use proptest::prelude::*;

    #[test]
    fn validation() {
        let d = |v: [f64; 2]| CMatrix::from_diagonal(&crate::linalg::CVector::from_iterator(2, v.iter().map(|x| c(*x, 0.0))));
        assert!(ProjectorTriple::new(d([1., 0.]), d([0., 1.]), d([0., 0.])).is_ok());
        assert!(ProjectorTriple::new(d([1., 0.]), d([0., 0.]), d([0., 0.])).is_err());
        assert!(ProjectorTriple::new(d([2., 0.]), d([0., 0.]), d([0., 1.])).is_err());
        assert!(ProjectorTriple::new(d([1., 0.]), d([1., 0.]), d([0., 1.])).is_err());
    }

    #[test]
    fn parse_and_print() {
        let proj = parse_projectors("dim = 3\np0 = diag(1,0,0)\nf0 = diag(0,1,0)\nq0 = diag(0,0,1)\n").unwrap();
        assert_eq!(proj.basis_f().ncols(), 1);
        assert_eq!(parse_projectors(&projectors_to_text(&proj)).unwrap(), proj);
        assert!(parse_projectors("dim = 1\np0 = 1\np0 = 1\n").is_err());
        assert!(parse_projectors("dim = 1\nx0 = 1\n").is_err());
        // omitted f0 and q0 default to zero
        assert!(parse_projectors("dim = 2\np0 = identity\n").is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// Rotated coordinate projectors: bases reconstruct the projectors and are isometries.
        #[test]
        fn bases_factor_projectors(theta in 0.0f64..6.3, phi in 0.0f64..6.3, split in 0usize..3) {
            let (ct, st) = (theta.cos(), theta.sin());
            let u = CMatrix::from_row_slice(3, 3, &[
                c(ct, 0.0), c(-st, 0.0), c(0.0, 0.0),
                c(st * phi.cos(), st * phi.sin()), c(ct * phi.cos(), ct * phi.sin()), c(0.0, 0.0),
                c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0),
            ]);
            let e = |i: usize| {
                let mut m = CMatrix::zeros(3, 3);
                m[(i, i)] = c(1.0, 0.0);
                &u * m * u.adjoint()
            };
            let (p, f, q) = match split {
                0 => (e(0), e(1), e(2)),
                1 => (e(0) + e(1), CMatrix::zeros(3, 3), e(2)),
                _ => (CMatrix::zeros(3, 3), e(0), e(1) + e(2)),
            };
            let proj = ProjectorTriple::new(p, f, q).unwrap();
            for (b, m) in [(proj.basis_p(), proj.p0()), (proj.basis_f(), proj.f0()), (proj.basis_q(), proj.q0())] {
                prop_assert!(max_abs(&(b * b.adjoint() - m)) <= 1e-10);
                prop_assert!(max_abs(&(b.adjoint() * b - CMatrix::identity(b.ncols(), b.ncols()))) <= 1e-10);
            }
        }
    }
}
