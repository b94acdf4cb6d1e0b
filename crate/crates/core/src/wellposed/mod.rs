//! Certificates for the projector condition on a material law: commutation,
//! block positivity, an explicit accretivity lower bound in `rho`, and the
//! size of the power-series remainder.

mod projectors;

pub use self::projectors::{parse_projectors, projectors_to_text, read_projectors, ProjectorTriple};

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{hermitian_part, min_eigenvalue, spectral_norm, CMatrix};
use crate::material::{MaterialError, MaterialLaw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WellposedError {
    #[error("{0}")]
    Projector(String),
    #[error("projector dimension {proj} does not match law dimension {law}")]
    DimensionMismatch { law: usize, proj: usize },
    #[error("condition not satisfied: {0}")]
    ConditionFails(String),
    #[error("no rho in [{rho_min}, {rho_max}] makes the lower bound positive")]
    NoPositiveThreshold { rho_min: f64, rho_max: f64 },
    #[error("invalid rho range [{0}, {1}]")]
    BadRhoRange(f64, f64),
    #[error("rho list must be nonempty and strictly increasing")]
    BadRhoList,
    #[error("tail norms do not decrease along the rho list ({prev:.3e} -> {next:.3e} at rho = {rho})")]
    TailNotDecreasing { rho: f64, prev: f64, next: f64 },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Strict positivity floor relative to the block norm.
const STRICT_TOL: f64 = 1e-8;
/// Commutator tolerance relative to `max(1, |M|)`.
const COMMUTE_TOL: f64 = 1e-10;

pub const DEFAULT_RHO_MIN: f64 = 1e-3;
pub const DEFAULT_RHO_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ClauseResult {
    pub name: String,
    pub passed: bool,
    pub witness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellposednessReport {
    pub passed: bool,
    pub clause_results: Vec<ClauseResult>,
    /// Lower bound for the accretivity constant at the top of the scan range.
    pub c0_estimate: f64,
    /// Smallest scanned `rho` at which the lower bound is positive.
    pub rho_threshold: f64,
    pub m2_margin: Option<f64>,
}

impl WellposednessReport {
    pub fn failed_clauses(&self) -> impl Iterator<Item = &ClauseResult> {
        self.clause_results.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for WellposednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.clause_results.iter().map(|c| c.name.len()).max().unwrap_or(0).max(6);
        writeln!(f, "{:<width$}  {:<6}  witness", "clause", "result")?;
        for c in &self.clause_results {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            writeln!(f, "{:<width$}  {:<6}  {:.6e}", c.name, verdict, c.witness)?;
        }
        writeln!(f, "c0_estimate    = {:.6e}", self.c0_estimate)?;
        writeln!(f, "rho_threshold  = {:.6e}", self.rho_threshold)?;
        if let Some(m) = self.m2_margin {
            writeln!(f, "m2_margin      = {m:.6e}")?;
        }
        write!(f, "verdict        = {}", if self.passed { "well-posed" } else { "NOT certified" })
    }
}

fn compress(basis: &CMatrix, m: &CMatrix) -> CMatrix {
    hermitian_part(&(basis.adjoint() * m * basis))
}

fn commutator_norm(m: &CMatrix, p: &CMatrix) -> f64 {
    spectral_norm(&(m * p - p * m))
}

/// Strictly positive compression: `(passed, min eigenvalue)`; an empty
/// compression is vacuously positive.
fn strict_compression(basis: &CMatrix, m: &CMatrix) -> (bool, f64) {
    if basis.ncols() == 0 {
        return (true, f64::INFINITY);
    }
    let block = compress(basis, m);
    let lmin = min_eigenvalue(&block);
    (lmin > 0.0 && lmin >= STRICT_TOL * spectral_norm(&block), lmin)
}

/// Norm of the cross block `iota_x^* R iota_y`.
fn cross(bx: &CMatrix, r: &CMatrix, by: &CMatrix) -> f64 {
    if bx.ncols() == 0 || by.ncols() == 0 {
        return 0.0;
    }
    spectral_norm(&(bx.adjoint() * r * by))
}

fn negative_part(x: f64) -> f64 {
    if x.is_finite() { (-x).max(0.0) } else { 0.0 }
}

#[derive(Debug, Clone)]
struct FPart {
    alpha0: f64,
    c3: f64,
    c1: f64,
    /// `(alpha_k, m_k^-)` for the higher exponents.
    higher: Vec<(f64, f64)>,
}

/// Constants of the explicit lower bound
/// `min { rho c0 - c_p, m(rho) rho^(1-alpha0) - c1, c2 }` over the nonzero projector parts.
#[derive(Debug, Clone)]
struct BoundConstants {
    p: Option<(f64, f64)>,
    f: Option<FPart>,
    c2: Option<f64>,
}

impl BoundConstants {
    fn new(law: &MaterialLaw, proj: &ProjectorTriple) -> Result<Self, WellposedError> {
        check_dims(law, proj)?;
        let (bp, bf, bq) = (proj.basis_p(), proj.basis_f(), proj.basis_q());
        let r = hermitian_part(law.m1());
        let (ok_q, c_q) = strict_compression(bq, &r);
        if !ok_q {
            return Err(WellposedError::ConditionFails("Re M1 not strictly positive on Q0".into()));
        }
        let r_pf = cross(bp, &r, bf);
        let r_pq = cross(bp, &r, bq);
        let r_fq = cross(bf, &r, bq);
        // 2ab <= eps a^2 + b^2/eps with eps = cQ/4 on every q cross term
        let absorb = |x: f64| if bq.ncols() == 0 { 0.0 } else { 4.0 * x * x / c_q };
        let p = if bp.ncols() > 0 {
            let (ok, c0) = strict_compression(bp, law.m0());
            if !ok {
                return Err(WellposedError::ConditionFails("M0 not strictly positive on P0".into()));
            }
            let r_pp = min_eigenvalue(&compress(bp, &r));
            Some((c0, negative_part(r_pp) + r_pf + absorb(r_pq)))
        } else {
            None
        };
        let f = if bf.ncols() > 0 {
            let mut frac = law.frac();
            let (alpha0, m_alpha0) = frac
                .next()
                .ok_or_else(|| WellposedError::ConditionFails("F0 nonzero but no fractional terms".into()))?;
            let (ok, c3) = strict_compression(bf, m_alpha0);
            if !ok {
                return Err(WellposedError::ConditionFails("M_alpha0 not strictly positive on F0".into()));
            }
            let higher = frac.map(|(a, m)| (a, negative_part(min_eigenvalue(&compress(bf, m))))).collect();
            let r_ff = min_eigenvalue(&compress(bf, &r));
            Some(FPart { alpha0, c3, c1: negative_part(r_ff) + r_pf + absorb(r_fq), higher })
        } else {
            None
        };
        let c2 = (bq.ncols() > 0).then_some(0.5 * c_q);
        Ok(Self { p, f, c2 })
    }

    fn bound(&self, rho: f64) -> f64 {
        let mut out = f64::INFINITY;
        if let Some((c0, cp)) = self.p {
            out = out.min(rho * c0 - cp);
        }
        if let Some(f) = &self.f {
            // sup_lambda Re(s^(1-a_k)) / Re(s^(1-a_0)) <= rho^(a_0-a_k) sin(a_k pi/2) / sin(a_0 pi/2)
            let s0 = (f.alpha0 * FRAC_PI_2).sin();
            let leak: f64 = f
                .higher
                .iter()
                .map(|(a, m)| m * rho.powf(f.alpha0 - a) * (a * FRAC_PI_2).sin() / s0)
                .sum();
            let b = f.c3 - leak;
            let coeff = if b >= 0.5 * f.c3 {
                0.5 * f.c3
            } else if b >= 0.0 {
                b
            } else {
                return f64::NEG_INFINITY;
            };
            out = out.min(coeff * rho.powf(1.0 - f.alpha0) - f.c1);
        }
        if let Some(c2) = self.c2 {
            out = out.min(c2);
        }
        out
    }
}

fn check_dims(law: &MaterialLaw, proj: &ProjectorTriple) -> Result<(), WellposedError> {
    if law.dim() != proj.dim() {
        return Err(WellposedError::DimensionMismatch { law: law.dim(), proj: proj.dim() });
    }
    Ok(())
}

/// Explicit lower bound for `Re (i lambda + rho) M(1/(i lambda + rho))`
/// (tail excluded), uniform in `lambda`.
pub fn positivity_lower_bound(law: &MaterialLaw, proj: &ProjectorTriple, rho: f64) -> Result<f64, WellposedError> {
    Ok(BoundConstants::new(law, proj)?.bound(rho))
}

/// Log-spaced `rho` values in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Smallest `rho` on a fine log grid of `[rho_min, rho_max]` with a positive bound.
/// The bound is nondecreasing in `rho`, so the first hit is the threshold.
fn scan_threshold(constants: &BoundConstants, rho_min: f64, rho_max: f64) -> Option<f64> {
    let grid = log_space(rho_min, rho_max, 400);
    let k = grid.iter().position(|r| constants.bound(*r) > 0.0)?;
    if k == 0 {
        return Some(grid[0]);
    }
    // refine between the bracketing grid points
    let (mut lo, mut hi) = (grid[k - 1], grid[k]);
    for _ in 0..60 {
        let mid = (lo * hi).sqrt();
        if constants.bound(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub fn verify_condition(law: &MaterialLaw, proj: &ProjectorTriple) -> Result<WellposednessReport, WellposedError> {
    verify_condition_in(law, proj, DEFAULT_RHO_MIN, DEFAULT_RHO_MAX)
}

/// Clause-by-clause check, then a positivity threshold scan over `[rho_min, rho_max]`.
pub fn verify_condition_in(
    law: &MaterialLaw,
    proj: &ProjectorTriple,
    rho_min: f64,
    rho_max: f64,
) -> Result<WellposednessReport, WellposedError> {
    check_dims(law, proj)?;
    if !(rho_min > 0.0 && rho_max > rho_min && rho_max.is_finite()) {
        return Err(WellposedError::BadRhoRange(rho_min, rho_max));
    }
    let mut clauses = Vec::new();
    let mut push = |name: String, passed: bool, witness: f64| clauses.push(ClauseResult { name, passed, witness });

    // (a) commutation with P0 and Q0
    let mut blocks: Vec<(String, &CMatrix)> = vec![("M0".into(), law.m0())];
    blocks.extend(law.frac().map(|(a, m)| (format!("M_{a}"), m)));
    for (name, m) in &blocks {
        let w = commutator_norm(m, proj.p0()).max(commutator_norm(m, proj.q0()));
        let tol = COMMUTE_TOL * spectral_norm(m).max(1.0);
        push(format!("(a) {name} commutes with P0, Q0"), w <= tol, w);
    }
    // (b) nonnegativity of M_alpha on P0 and Q0
    for (a, m) in law.frac() {
        for (pname, basis) in [("P0", proj.basis_p()), ("Q0", proj.basis_q())] {
            let w = if basis.ncols() == 0 { f64::INFINITY } else { min_eigenvalue(&compress(basis, m)) };
            let tol = 1e-12 * spectral_norm(m).max(1.0);
            push(format!("(b) {pname} M_{a} {pname} >= 0"), w >= -tol, w);
        }
    }
    // (c)
    let w = min_eigenvalue(law.m0());
    push("(c) M0 >= 0".into(), w >= -1e-12 * spectral_norm(law.m0()).max(1.0), w);
    // (d) strict positivity of the three compressions
    let (ok, w) = strict_compression(proj.basis_p(), law.m0());
    push("(d) P0 compression of M0 > 0".into(), ok, w);
    let (ok, w) = strict_compression(proj.basis_q(), &hermitian_part(law.m1()));
    push("(d) Q0 compression of Re M1 > 0".into(), ok, w);
    let f_nonzero = proj.basis_f().ncols() > 0;
    match law.frac().next() {
        Some((a0, m)) => {
            let (ok, w) = strict_compression(proj.basis_f(), m);
            push(format!("(d) F0 compression of M_{a0} > 0"), ok, w);
        }
        None => push("(d) F0 compression of M_alpha0 > 0".into(), !f_nonzero, if f_nonzero { f64::NAN } else { f64::INFINITY }),
    }

    let structural = clauses.iter().all(|c| c.passed);
    let mut report = WellposednessReport {
        passed: false,
        clause_results: clauses,
        c0_estimate: f64::NAN,
        rho_threshold: f64::NAN,
        m2_margin: None,
    };
    if !structural {
        return Ok(report);
    }

    let constants = BoundConstants::new(law, proj)?;
    let Some(mut threshold) = scan_threshold(&constants, rho_min, rho_max) else {
        report.clause_results.push(ClauseResult {
            name: "lower bound positive in rho range".into(),
            passed: false,
            witness: constants.bound(rho_max),
        });
        return Ok(report);
    };
    if let Some(t) = law.tail() {
        let tail_min = 1.0 / (2.0 * t.radius);
        if threshold <= tail_min {
            threshold = tail_min * (1.0 + 1e-9);
        }
    }
    report.rho_threshold = threshold;
    report.c0_estimate = constants.bound(rho_max);
    let positive = threshold < rho_max && report.c0_estimate > 0.0;
    report.clause_results.push(ClauseResult {
        name: "lower bound positive in rho range".into(),
        passed: positive,
        witness: report.c0_estimate,
    });

    if law.has_tail() && positive {
        let rhos = log_space(threshold.max(rho_min), rho_max, 6);
        let (ok, w) = match m2_perturbation_margin(law, &rhos) {
            Ok(m) => {
                report.m2_margin = Some(m);
                (m < report.c0_estimate, m)
            }
            Err(_) => (false, f64::NAN),
        };
        report.clause_results.push(ClauseResult { name: "m2 margin < c0_estimate".into(), passed: ok, witness: w });
    }
    report.passed = report.clause_results.iter().all(|c| c.passed);
    Ok(report)
}

/// `{0} U logspace(1e-3 rho, 1e6 rho)`; signs are added by the consumers.
pub fn default_lambda_samples(rho: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(log_space(1e-3 * rho, 1e6 * rho, 180));
    out
}

/// `min_lambda lambda_min(Herm((i lambda + rho) M(1/(i lambda + rho))))` over
/// `+-lambda` for every sample, always probing `|lambda| = 1e6 rho`. The full
/// symbol including any tail is used; `-inf` if `rho` is outside the tail's disc.
pub fn sampled_symbol_positivity(law: &MaterialLaw, rho: f64, lambda_samples: &[f64]) -> f64 {
    if law.check_rho(rho).is_err() {
        return f64::NEG_INFINITY;
    }
    let mut lambdas: Vec<f64> = lambda_samples.iter().flat_map(|l| [*l, -*l]).collect();
    lambdas.extend([1e6 * rho, -1e6 * rho]);
    lambdas
        .par_iter()
        .map(|l| min_eigenvalue(&law.evolution_symbol(*l, rho)))
        .reduce(|| f64::INFINITY, f64::min)
}

/// `sup_lambda |M2(1/(i lambda + rho))|` at each `rho`; returns the value at
/// the largest `rho` after checking that the sequence strictly decreases.
pub fn m2_perturbation_margin(law: &MaterialLaw, rho_list: &[f64]) -> Result<f64, WellposedError> {
    if rho_list.is_empty() || rho_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(WellposedError::BadRhoList);
    }
    if !law.has_tail() {
        return Ok(0.0);
    }
    let mut prev: Option<f64> = None;
    for &rho in rho_list {
        law.check_rho(rho)?;
        let samples = default_lambda_samples(rho);
        let norm = samples
            .par_iter()
            .flat_map(|l| [*l, -*l])
            .map(|l| spectral_norm(&law.tail_symbol(l, rho)))
            .reduce(|| 0.0, f64::max);
        if let Some(p) = prev {
            if norm >= p {
                return Err(WellposedError::TailNotDecreasing { rho, prev: p, next: norm });
            }
        }
        prev = Some(norm);
    }
    Ok(prev.expect("nonempty list"))
}
