//! Fractional Kelvin–Voigt law `diag(eta, (C + D d^alpha)^-1)` expanded into
//! the material-law normal form via a Neumann series on the range of `D`.

use num_complex::Complex64;

use super::{is_selfadjoint, MaterialError, MaterialLaw};
use crate::fraccalc::symbol_power_unchecked;
use crate::linalg::{
    block_diag, hermitian_function, hermitian_part, inverse, max_abs, min_eigenvalue, spectral_norm,
    split_by_eigenvalue, CMatrix,
};

pub const DEFAULT_TAIL_TERMS: usize = 8;

/// Exponents within this distance of 1 are treated as the `M1` term.
const UNIT_EXPONENT_TOL: f64 = 1e-12;

/// The constructed law together with the constants of its remainder estimate.
#[derive(Debug, Clone)]
pub struct KelvinVoigt {
    pub law: MaterialLaw,
    pub alpha: f64,
    /// `|W sqrt(D11^-1)|^2`
    pub k0: f64,
    /// `|sqrt(D11^-1) C~11 sqrt(D11^-1)|`
    pub k1: f64,
    /// Lower bound `C + D rho^alpha >= c0` ...
    pub c0: f64,
    /// ... valid for `rho >= c0_rho`.
    pub c0_rho: f64,
    /// Index `n` of the first series term stored in the tail.
    pub tail_start: usize,
    eta: CMatrix,
    c: CMatrix,
    d: CMatrix,
}

impl KelvinVoigt {
    /// `rho^-alpha K1`; the Neumann series converges for values below 1.
    pub fn series_ratio(&self, rho: f64) -> f64 {
        rho.powf(-self.alpha) * self.k1
    }

    /// Geometric bound on `sup_lambda |M2(1/(i lambda + rho))|` for the full
    /// (untruncated) tail: `K0 rho^(1-(n+1) alpha) K1^n / (1 - rho^-alpha K1)`
    /// with `n` the first tail index. For `1/alpha` integral this is
    /// `K0 rho^-alpha K1^ceil(1/alpha) / (1 - rho^-alpha K1)`.
    pub fn remainder_bound(&self, rho: f64) -> Result<f64, MaterialError> {
        let ratio = self.series_ratio(rho);
        if ratio >= 1.0 {
            return Err(MaterialError::SeriesDivergent { rho, ratio });
        }
        let n = self.tail_start as f64;
        Ok(self.k0 * rho.powf(1.0 - (n + 1.0) * self.alpha) * self.k1.powf(n) / (1.0 - ratio))
    }

    /// `diag(eta, (C + D (i lambda + rho)^alpha)^-1)` by direct inversion.
    pub fn direct_symbol(&self, lambda: f64, rho: f64) -> Result<CMatrix, MaterialError> {
        let s_alpha = symbol_power_unchecked(self.alpha, lambda, rho);
        let stress = &self.c + &self.d * s_alpha;
        let inv = inverse(&stress).ok_or_else(|| MaterialError::NotPositiveDefinite("C + D s^alpha".into()))?;
        Ok(block_diag(&self.eta, &inv))
    }
}

fn check_nonnegative(name: &str, m: &CMatrix) -> Result<(), MaterialError> {
    if !is_selfadjoint(m) {
        return Err(MaterialError::NotSelfadjoint(name.into()));
    }
    if min_eigenvalue(m) < -1e-12 * max_abs(m).max(1.0) {
        return Err(MaterialError::NotPositiveDefinite(format!("{name} (nonnegative)")));
    }
    Ok(())
}

fn check_strict(name: &str, m: &CMatrix) -> Result<f64, MaterialError> {
    let lmin = min_eigenvalue(m);
    if !(lmin > 0.0 && lmin >= 1e-8 * max_abs(m)) {
        return Err(MaterialError::NotPositiveDefinite(name.into()));
    }
    Ok(lmin)
}

/// Expands `diag(eta, (C + D d^alpha)^-1)`.
///
/// `D` is split into null space and range by eigenvalues above `1e-10 |D|`.
/// Series terms with exponent `(1+n) alpha < 1` become fractional blocks, an
/// exponent of exactly 1 goes into `M1`, and larger ones (up to
/// `n = ceil(1/alpha) - 1 + tail_terms`) form the tail with exponent `(1+n) alpha - 1`.
pub fn kelvin_voigt_material(
    eta: &CMatrix,
    c: &CMatrix,
    d: &CMatrix,
    alpha: f64,
    tail_terms: usize,
) -> Result<KelvinVoigt, MaterialError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MaterialError::OrderOutOfRange(alpha, "(0, 1)"));
    }
    let ds = c.nrows();
    if !c.is_square() || d.shape() != c.shape() {
        return Err(MaterialError::BlockShape { name: "D".into(), expected: ds, rows: d.nrows(), cols: d.ncols() });
    }
    if !eta.is_square() {
        return Err(MaterialError::BlockShape {
            name: "eta".into(),
            expected: eta.nrows(),
            rows: eta.nrows(),
            cols: eta.ncols(),
        });
    }
    check_nonnegative("C", c)?;
    check_nonnegative("D", d)?;
    let (c, d) = (hermitian_part(c), hermitian_part(d));
    let dv = eta.nrows();
    let embed = |stress: &CMatrix| block_diag(&CMatrix::zeros(dv, dv), stress);

    let d_norm = spectral_norm(&d);
    let (range, null) = split_by_eigenvalue(&d, 1e-10 * d_norm);
    let finish = |law: MaterialLaw, k0, k1, c0, c0_rho, tail_start| KelvinVoigt {
        law,
        alpha,
        k0,
        k1,
        c0,
        c0_rho,
        tail_start,
        eta: eta.clone(),
        c: c.clone(),
        d: d.clone(),
    };

    if range.ncols() == 0 {
        // no damping: purely elastic law
        let c0 = check_strict("C", &c)?;
        let cinv = inverse(&c).ok_or_else(|| MaterialError::NotPositiveDefinite("C".into()))?;
        let law = MaterialLaw::builder(dv + ds).m0(block_diag(eta, &hermitian_part(&cinv))).build()?;
        return Ok(finish(law, 0.0, 0.0, c0, 0.0, 0));
    }

    let c00 = null.adjoint() * &c * &null;
    let c01 = null.adjoint() * &c * &range;
    let c11 = range.adjoint() * &c * &range;
    let d11 = hermitian_part(&(range.adjoint() * &d * &range));
    let d_min = check_strict("D on its range", &d11)?;
    let c00_min = if null.ncols() > 0 { check_strict("C on the null space of D", &c00)? } else { f64::INFINITY };
    let c00_inv = inverse(&c00).ok_or_else(|| MaterialError::NotPositiveDefinite("C00".into()))?;
    let g = &c00_inv * &c01;
    let c_tilde = hermitian_part(&(&c11 - c01.adjoint() * &g));
    let sqrt_dinv = hermitian_function(&d11, |x| 1.0 / x.sqrt());
    let k = hermitian_part(&(&sqrt_dinv * &c_tilde * &sqrt_dinv));
    // columns of iota W restricted to the range component
    let e = &range - &null * &g;
    let es = &e * &sqrt_dinv;
    let k0 = spectral_norm(&es).powi(2);
    let k1 = spectral_norm(&k);

    let m0_stress = hermitian_part(&(&null * &c00_inv * null.adjoint()));
    let mut builder = MaterialLaw::builder(dv + ds).m0(block_diag(eta, &m0_stress));

    let n_ceil = (1.0 / alpha - 1e-9).ceil() as usize;
    let last = n_ceil - 1 + tail_terms;
    let minus_k = -k.clone();
    let mut power = CMatrix::identity(k.nrows(), k.nrows());
    let mut m1 = CMatrix::zeros(dv + ds, dv + ds);
    let mut tail_start = None;
    let mut has_tail = false;
    for n in 0..=last {
        if n > 0 {
            power = &power * &minus_k;
        }
        let exponent = (n + 1) as f64 * alpha;
        if exponent > 1.0 + UNIT_EXPONENT_TOL && tail_start.is_none() {
            tail_start = Some(n);
        }
        if n > 0 && k1 == 0.0 {
            continue;
        }
        let block = embed(&hermitian_part(&(&es * &power * es.adjoint())));
        if (exponent - 1.0).abs() <= UNIT_EXPONENT_TOL {
            m1 += block;
        } else if exponent < 1.0 {
            builder = builder.frac(exponent, block);
        } else {
            builder = builder.tail(exponent - 1.0, block);
            has_tail = true;
        }
    }
    let radius = if k1 > 0.0 { 0.5 * k1.powf(-1.0 / alpha) } else { f64::INFINITY };
    if has_tail {
        builder = builder.radius(radius);
    }
    let law = builder.m1(m1).build()?;

    let (c0, c0_rho) = if null.ncols() > 0 {
        let c01_norm = spectral_norm(&c01);
        let half = 0.5 * c00_min;
        (half, ((half + 2.0 * c01_norm * c01_norm / c00_min) / d_min).powf(1.0 / alpha))
    } else {
        (d_min, 1.0)
    };
    Ok(finish(law, k0, k1, c0, c0_rho, tail_start.unwrap_or(last + 1)))
}

/// `min eig (C + D rho^alpha)`; used to check the coercivity estimate.
pub fn stress_coercivity(kv: &KelvinVoigt, rho: f64) -> f64 {
    min_eigenvalue(&(&kv.c + &kv.d * Complex64::new(rho.powf(kv.alpha), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c as cx, CVector};
    use proptest::prelude::*;

    fn diag(v: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_iterator(v.len(), v.iter().map(|x| cx(*x, 0.0))))
    }

    fn scalar(x: f64) -> CMatrix {
        diag(&[x])
    }

    #[test]
    fn pure_damping_has_no_tail() {
        let d = diag(&[2.0, 4.0]);
        let kv = kelvin_voigt_material(&scalar(3.0), &CMatrix::zeros(2, 2), &d, 0.4, 8).unwrap();
        let law = &kv.law;
        assert_eq!(law.exponents(), vec![0.4]);
        assert!(!law.has_tail());
        assert!(max_abs(&(law.m0() - diag(&[3.0, 0.0, 0.0]))) < 1e-14);
        let (_, m) = law.frac().next().unwrap();
        assert!(max_abs(&(m - diag(&[0.0, 0.5, 0.25]))) < 1e-14);
        assert!(max_abs(law.m1()) < 1e-15);
        assert_eq!(kv.k1, 0.0);
    }

    #[test]
    fn scalar_half_order_layout() {
        let kv = kelvin_voigt_material(&scalar(1.0), &scalar(1.0), &scalar(1.0), 0.5, 8).unwrap();
        let law = &kv.law;
        assert_eq!(law.exponents(), vec![0.5]);
        // n = 1 term -K z folds into M1
        assert!((law.m1()[(1, 1)] - cx(-1.0, 0.0)).norm() < 1e-14);
        let tail = law.tail().unwrap();
        assert_eq!(tail.terms.len(), 8);
        assert!((tail.terms[0].0 - 0.5).abs() < 1e-15);
        assert!((tail.radius - 0.5).abs() < 1e-15);
        assert_eq!(kv.tail_start, 2);
        assert!((kv.k0 - 1.0).abs() < 1e-14 && (kv.k1 - 1.0).abs() < 1e-14);
        assert!((kv.remainder_bound(16.0).unwrap() - 0.25 / 0.75).abs() < 1e-14);
        assert!(matches!(kv.remainder_bound(1.0), Err(MaterialError::SeriesDivergent { .. })));
    }

    #[test]
    fn scalar_half_order_symbol() {
        let kv = kelvin_voigt_material(&scalar(1.0), &scalar(1.0), &scalar(1.0), 0.5, 8).unwrap();
        for rho in [4.0, 16.0, 64.0] {
            for lambda in [0.0, 1.0, -10.0, 1e3, -1e5] {
                let s = Complex64::new(rho, lambda);
                let exact = (cx(1.0, 0.0) + s.sqrt()).inv();
                let series = kv.law.symbol_at(lambda, rho).unwrap()[(1, 1)];
                // dropped terms n >= 10 of the geometric series
                let q = rho.powf(-0.5);
                let bound = q.powi(11) / (1.0 - q);
                assert!((series - exact).norm() <= bound * (1.0 + 1e-9), "rho={rho} lambda={lambda}");
            }
        }
    }

    #[test]
    fn elastic_limit() {
        let kv = kelvin_voigt_material(&scalar(1.0), &diag(&[1.0, 2.0]), &CMatrix::zeros(2, 2), 0.5, 8).unwrap();
        assert!(kv.law.exponents().is_empty());
        assert!(!kv.law.has_tail());
        assert!(max_abs(&(kv.law.m0() - diag(&[1.0, 1.0, 0.5]))) < 1e-14);
        assert_eq!((kv.c0, kv.c0_rho), (1.0, 0.0));
    }

    #[test]
    fn singular_damping_splits_null_space() {
        // D vanishes on the first stress component
        let c = CMatrix::from_row_slice(2, 2, &[cx(2.0, 0.0), cx(0.5, 0.0), cx(0.5, 0.0), cx(1.0, 0.0)]);
        let d = diag(&[0.0, 3.0]);
        let kv = kelvin_voigt_material(&scalar(1.0), &c, &d, 0.3, 8).unwrap();
        assert!((kv.law.m0()[(1, 1)] - cx(0.5, 0.0)).norm() < 1e-14);
        let exps = kv.law.exponents();
        assert_eq!(exps.len(), 3);
        assert!((exps[2] - 0.9).abs() < 1e-15);
        for rho in [50.0, 400.0] {
            for lambda in [0.0, 7.0, -300.0] {
                let a = kv.law.symbol_at(lambda, rho).unwrap();
                let b = kv.direct_symbol(lambda, rho).unwrap();
                assert!(spectral_norm(&(a - b)) < 1e-6, "rho={rho} lambda={lambda}");
            }
        }
        assert!(kv.c0 > 0.0);
        for rho in [kv.c0_rho, 2.0 * kv.c0_rho, 100.0 * kv.c0_rho] {
            assert!(stress_coercivity(&kv, rho) >= kv.c0 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn rejects_invalid_inputs() {
        let one = scalar(1.0);
        assert!(kelvin_voigt_material(&one, &one, &one, 0.0, 8).is_err());
        assert!(kelvin_voigt_material(&one, &scalar(-1.0), &one, 0.5, 8).is_err());
        // C vanishes on the null space of D
        assert!(matches!(
            kelvin_voigt_material(&one, &diag(&[0.0, 1.0]), &diag(&[0.0, 1.0]), 0.5, 8),
            Err(MaterialError::NotPositiveDefinite(_))
        ));
        assert!(kelvin_voigt_material(&one, &diag(&[1.0, 1.0]), &one, 0.5, 8).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn truncated_symbol_within_geometric_bound(
            cvals in proptest::collection::vec(0.0f64..2.0, 2),
            dvals in proptest::collection::vec(0.5f64..3.0, 2),
            off in -0.3f64..0.3,
            alpha in 0.2f64..0.9,
            lambda in -1e4f64..1e4,
        ) {
            let c = CMatrix::from_row_slice(2, 2, &[cx(cvals[0] + 0.5, 0.0), cx(off, 0.0), cx(off, 0.0), cx(cvals[1] + 0.5, 0.0)]);
            let d = diag(&dvals);
            let kv = kelvin_voigt_material(&scalar(1.0), &c, &d, alpha, DEFAULT_TAIL_TERMS).unwrap();
            // the regime rho^-alpha K1 <= 1/2
            let rho = (2.0 * kv.k1).powf(1.0 / alpha).max(1.0) * 1.5;
            let a = kv.law.symbol_at(lambda, rho).unwrap();
            let b = kv.direct_symbol(lambda, rho).unwrap();
            let n_ceil = (1.0 / alpha - 1e-9).ceil() as i32;
            let q = kv.series_ratio(rho);
            let closed_bound = kv.k0 * rho.powf(-alpha) * kv.k1.powi(n_ceil) / (1.0 - q);
            prop_assert!(spectral_norm(&(a - b)) <= closed_bound + 1e-12);
            prop_assert!(stress_coercivity(&kv, rho.max(kv.c0_rho)) >= kv.c0 * (1.0 - 1e-12));
        }
    }
}
