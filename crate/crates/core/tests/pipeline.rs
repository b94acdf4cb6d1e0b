use evofrac::linalg::{c, CMatrix};
use evofrac::material::{kelvin_voigt_material, law_to_text, parse_law};
use evofrac::solver::{causality_check, default_rho, solve_detailed, time_stepping_oracle, EvolutionaryProblem, SolverError};
use evofrac::spatial::{build_elasticity_1d, skewness_defect, SkewOperator};
use evofrac::timegrid::profiles::bump;
use evofrac::timegrid::{weighted_norm, Signal, TimeGrid, DEFAULT_DAMPING};
use evofrac::wellposed::{parse_projectors, verify_condition};

const LAW: &str = "dim = 3\nm0 = diag(1, 1, 0)\nfrac 0.3 = diag(0, 1, 0)\nfrac 0.6 = diag(0, -1, 0)\nm1 = diag(0, 0, 1)\n";

#[test]
fn text_law_certificate_solve_and_oracle() {
    let law = parse_law(LAW).unwrap();
    assert_eq!(parse_law(&law_to_text(&law)).unwrap(), law);
    let proj = parse_projectors("dim = 3\np0 = diag(1,0,0)\nf0 = diag(0,1,0)\nq0 = diag(0,0,1)\n").unwrap();
    let report = verify_condition(&law, &proj).unwrap();
    assert!(report.passed, "{report}");

    let span = 16.0;
    let rho = default_rho(Some(report.rho_threshold), span, DEFAULT_DAMPING);
    let grid = TimeGrid::with_span(-2.0, span, 4096, rho).unwrap();
    let p = EvolutionaryProblem::certified(law.clone(), SkewOperator::zero(3), grid, &report).unwrap();
    let f = Signal::separable(grid, |t| bump(t, 0.0, 3.0), &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    let sol = solve_detailed(&p, &f).unwrap();
    assert!(sol.max_relative_residual < 1e-10);
    let oracle = time_stepping_oracle(&p, &f, 0.0).unwrap();
    let rel = weighted_norm(&sol.u.sub(&oracle).unwrap()) / weighted_norm(&sol.u);
    assert!(rel < 1e-2, "{rel}");

    // a grid weighted below the certified threshold is refused
    let low = grid.with_rho(report.rho_threshold / 2.0).unwrap();
    assert!(matches!(
        EvolutionaryProblem::certified(law, SkewOperator::zero(3), low, &report),
        Err(SolverError::RhoBelowThreshold { .. })
    ));
}

#[test]
fn fractional_kelvin_voigt_elasticity_is_causal() {
    let n = 16;
    let eye = |k: usize| CMatrix::identity(k, k);
    let kv = kelvin_voigt_material(&eye(n - 1), &eye(n), &eye(n), 0.5, 8).unwrap();
    let a = build_elasticity_1d(n, 1.0 / n as f64).unwrap();
    assert_eq!(skewness_defect(&a), 0.0);

    let span = 8.0;
    let rho = default_rho(Some(kv.c0_rho.max(4.0 * kv.k1 * kv.k1)), span, DEFAULT_DAMPING);
    let grid = TimeGrid::centered_for_ivp(span, 2048, rho).unwrap();
    let p = EvolutionaryProblem::new(kv.law, a, grid).unwrap();
    let f = Signal::from_fn(grid, 2 * n - 1, |t, i| c(if i < n - 1 { bump(t, 0.5, 2.0) } else { 0.0 }, 0.0)).unwrap();
    let ratio = causality_check(&p, &f, 0.5).unwrap();
    assert!(ratio <= 1e-6, "{ratio}");
}
