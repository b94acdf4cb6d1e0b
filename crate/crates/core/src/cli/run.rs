use std::path::Path;

use num_complex::Complex64;

use super::config::{
    ExperimentConfig, ExperimentKind, IvpAt, IvpForm, LawSource, RhsSpec, Shape, SpatialSpec, Waveform,
};
use crate::fraccalc::{apply_frac_power, rl_integral_oracle};
use crate::linalg::CMatrix;
use crate::material::{fokker_planck_material, kelvin_voigt_material, read_law, FokkerPlanckBlocks, MaterialLaw};
use crate::solver::{
    default_rho, ivp_solve_delta, ivp_solve_history, relative_mass_before, solve_detailed, time_stepping_oracle,
    DeltaSource, EvolutionaryProblem,
};
use crate::spatial::{build_elasticity_1d, build_grad_div_1d, SkewOperator};
use crate::timegrid::profiles::{bump, heaviside};
use crate::timegrid::{
    discrete_delta, read_signal_csv, signal_to_csv, weighted_norm, write_signal_csv, Signal, TimeGrid, DEFAULT_DAMPING,
};
use crate::wellposed::{read_projectors, verify_condition_in};
use crate::Error;

/// Exit status plus the human-readable summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
    /// CSV meant for standard output when no output path was configured.
    pub csv: Option<String>,
}

impl RunOutcome {
    fn ok(summary: Vec<String>) -> Self {
        Self { exit_code: 0, summary, csv: None }
    }
}

fn write_csv(path: &Path, u: &Signal) -> Result<(), Error> {
    write_signal_csv(path, u).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn build_spatial(spec: SpatialSpec) -> Result<Option<SkewOperator>, Error> {
    Ok(match spec {
        SpatialSpec::None => None,
        SpatialSpec::GradDiv { n_cells, h } => Some(build_grad_div_1d(n_cells, h)?),
        SpatialSpec::Elasticity { n_cells, h } => Some(build_elasticity_1d(n_cells, h)?),
    })
}

fn build_law(src: &LawSource, spatial: SpatialSpec) -> Result<MaterialLaw, Error> {
    match *src {
        LawSource::File(ref p) => Ok(read_law(p)?),
        LawSource::FokkerPlanck { alpha, kappa, mu00, mu11 } => {
            let SpatialSpec::GradDiv { n_cells, .. } = spatial else {
                return Err(Error::Io("fokker_planck needs a grad1d operator".into()));
            };
            let blocks = FokkerPlanckBlocks::scalar(n_cells - 1, n_cells, kappa, mu00, mu11);
            Ok(fokker_planck_material(&blocks, alpha)?)
        }
        LawSource::KelvinVoigt { alpha, eta, c, d, tail_terms } => {
            let (nv, ns) = match spatial {
                SpatialSpec::Elasticity { n_cells, .. } | SpatialSpec::GradDiv { n_cells, .. } => (n_cells - 1, n_cells),
                SpatialSpec::None => (1, 1),
            };
            let eye = |n: usize, s: f64| CMatrix::identity(n, n).scale(s);
            Ok(kelvin_voigt_material(&eye(nv, eta), &eye(ns, c), &eye(ns, d), alpha, tail_terms)?.law)
        }
    }
}

/// Smallest admissible `rho` for a law: just above its tail disc.
fn law_rho_floor(law: &MaterialLaw) -> Option<f64> {
    law.tail().filter(|t| t.radius.is_finite()).map(|t| (1.0 + 1e-6) / (2.0 * t.radius))
}

/// State dimension when no law fixes it.
fn state_dim(cfg: &ExperimentConfig) -> usize {
    match cfg.spatial {
        SpatialSpec::GradDiv { n_cells, .. } | SpatialSpec::Elasticity { n_cells, .. } => 2 * n_cells - 1,
        SpatialSpec::None => match &cfg.rhs {
            Some(RhsSpec::Named { shape: Some(Shape::Vector(v)), .. }) => v.len(),
            _ => 1,
        },
    }
}

fn resolve_shape(shape: Option<&Shape>, d: usize, spatial: SpatialSpec) -> Result<Vec<Complex64>, Error> {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let default = if spatial == SpatialSpec::None { Shape::Ones } else { Shape::Sine };
    match shape.unwrap_or(&default) {
        Shape::Ones => Ok(vec![one; d]),
        Shape::First => {
            let mut v = vec![zero; d];
            v[0] = one;
            Ok(v)
        }
        Shape::Sine => {
            let n = match spatial {
                SpatialSpec::GradDiv { n_cells, .. } | SpatialSpec::Elasticity { n_cells, .. } => n_cells,
                SpatialSpec::None => return Err(Error::Io("shape `sine` needs a spatial operator".into())),
            };
            let mut v = vec![zero; d];
            for (i, x) in v.iter_mut().take(n - 1).enumerate() {
                *x = Complex64::new((std::f64::consts::PI * (i + 1) as f64 / n as f64).sin(), 0.0);
            }
            Ok(v)
        }
        Shape::Vector(v) if v.len() == d => Ok(v.clone()),
        Shape::Vector(v) => Err(Error::Io(format!("vector has {} entries, state dimension is {d}", v.len()))),
    }
}

/// Grid and right-hand side; returns the time at which the data starts.
/// `d = None` accepts whatever dimension a data file has.
fn build_rhs(
    cfg: &ExperimentConfig,
    d: Option<usize>,
    rho_floor: Option<f64>,
) -> Result<(Signal, f64), Error> {
    let span_rho = |span: f64| cfg.grid.rho.unwrap_or_else(|| default_rho(rho_floor, span, DEFAULT_DAMPING));
    if let Some(RhsSpec::File(p)) = &cfg.rhs {
        // the file fixes the nodes; rho comes from the config or the damping budget
        let probe = read_signal_csv(p, 1.0)?;
        let g = probe.grid();
        let f = probe.with_grid(g.with_rho(span_rho(g.span()))?)?;
        if let Some(d) = d.filter(|&d| d != f.dim()) {
            return Err(Error::Io(format!("{}: {} components, state dimension is {d}", p.display(), f.dim())));
        }
        let start = (0..f.len())
            .find(|&j| f.at(j).iter().any(|z| z.norm() > 0.0))
            .map_or(f.grid().t_end(), |j| f.grid().time(j));
        return Ok((f, start));
    }
    let span = cfg.grid.span.expect("validated");
    let n = cfg.grid.n_steps.expect("validated");
    let grid = TimeGrid::with_span(cfg.grid.t_start.unwrap_or(-0.25 * span), span, n, span_rho(span))?;
    let d = d.unwrap_or_else(|| state_dim(cfg));
    let Some(RhsSpec::Named { waveform, amplitude, start, end, shape }) = &cfg.rhs else {
        return Ok((Signal::zeros(grid, d)?, grid.t_end()));
    };
    let v = resolve_shape(shape.as_ref(), d, cfg.spatial)?;
    let (amp, start) = (*amplitude, *start);
    let f = match waveform {
        Waveform::Zero => Signal::zeros(grid, d)?,
        Waveform::Step => Signal::separable(
            grid,
            |t| amp * heaviside(t - start) * end.map_or(1.0, |e| heaviside(e - t)),
            &v,
        )?,
        Waveform::Bump => Signal::separable(grid, |t| amp * bump(t, start, end.expect("validated")), &v)?,
        Waveform::Impulse => {
            let scaled: Vec<Complex64> = v.iter().map(|z| z * amp).collect();
            discrete_delta(grid, grid.nearest_node(start), &scaled)?
        }
    };
    Ok((f, start))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, Error> {
    match cfg.kind {
        ExperimentKind::Check => run_check(cfg),
        ExperimentKind::Solve | ExperimentKind::Ivp => run_solve(cfg),
        ExperimentKind::FracApply => run_fracapply(cfg),
        ExperimentKind::CompareKernels => run_compare(cfg),
    }
}

fn run_check(cfg: &ExperimentConfig) -> Result<RunOutcome, Error> {
    let law = build_law(cfg.law.as_ref().expect("validated"), cfg.spatial)?;
    let check = cfg.check.as_ref().expect("validated");
    let proj = read_projectors(&check.projectors)?;
    let report = verify_condition_in(&law, &proj, check.rho_min, check.rho_max)?;
    Ok(RunOutcome {
        exit_code: if report.passed { 0 } else { 1 },
        summary: report.to_string().lines().map(str::to_string).collect(),
        csv: None,
    })
}

fn grid_line(g: &TimeGrid) -> String {
    format!(
        "grid: n_steps = {}, dt = {:.6e}, t in [{}, {}], rho = {:.6e}, rho*T = {:.3}",
        g.n_steps(),
        g.dt(),
        g.t_start(),
        g.t_end(),
        g.rho(),
        g.damping()
    )
}

fn run_solve(cfg: &ExperimentConfig) -> Result<RunOutcome, Error> {
    let law = build_law(cfg.law.as_ref().expect("validated"), cfg.spatial)?;
    let d = law.dim();
    let a = build_spatial(cfg.spatial)?.unwrap_or_else(|| SkewOperator::zero(d));

    let mut summary = Vec::new();
    let mut rho_floor = law_rho_floor(&law);
    let mut certified = true;
    if let Some(check) = &cfg.check {
        let report = verify_condition_in(&law, &read_projectors(&check.projectors)?, check.rho_min, check.rho_max)?;
        certified = report.passed;
        summary.push(format!(
            "certificate: {} (rho_threshold = {:.6e}, c0_estimate = {:.6e})",
            if report.passed { "well-posed" } else { "NOT certified" },
            report.rho_threshold,
            report.c0_estimate
        ));
        if report.passed {
            rho_floor = Some(rho_floor.map_or(report.rho_threshold, |r| r.max(report.rho_threshold)));
        }
    }

    let (f, start) = build_rhs(cfg, Some(d), rho_floor)?;
    let grid = *f.grid();
    summary.insert(0, grid_line(&grid));
    let p = EvolutionaryProblem::new(law, a, grid)?;

    let (u, extra) = match &cfg.ivp {
        None => {
            let sol = solve_detailed(&p, &f)?;
            let res = format!("max relative residual = {:.3e}", sol.max_relative_residual);
            (sol.u, vec![res])
        }
        Some(ivp) => {
            let node = match ivp.at {
                IvpAt::Node(n) => n,
                IvpAt::Time(t) => grid.nearest_node(t),
            };
            let w = resolve_shape(Some(&ivp.weight), d, cfg.spatial)?;
            match ivp.form {
                IvpForm::Delta => {
                    let out = ivp_solve_delta(&p, &f, &DeltaSource::new(node, w))?;
                    (out.u, vec![format!("jump defect (H_-1) = {:.6e}", out.jump_defect)])
                }
                IvpForm::History => (ivp_solve_history(&p, &f, node, &w)?, vec![]),
            }
        }
    };
    let causal_from = match &cfg.ivp {
        Some(i) => match i.at {
            IvpAt::Node(n) => grid.time(n),
            IvpAt::Time(t) => grid.time(grid.nearest_node(t)),
        }
        .min(start),
        None => start,
    };
    summary.push(format!("|f|_rho = {:.6e}", weighted_norm(&f)));
    summary.push(format!("|U|_rho = {:.6e}", weighted_norm(&u)));
    summary.extend(extra);
    summary.push(format!("causality ratio (before t = {causal_from}) = {:.3e}", relative_mass_before(&u, causal_from)));
    write_csv(cfg.output.solution.as_ref().expect("validated"), &u)?;

    if let Some(path) = &cfg.output.oracle {
        if cfg.ivp.is_some() {
            return Err(Error::Io("the oracle comparison applies to plain solves only".into()));
        }
        let o = time_stepping_oracle(&p, &f, start)?;
        write_csv(path, &o)?;
        let diff = u.sub(&o)?;
        // pointwise errors of the transform grow like exp(rho t); weight them back
        let rho = grid.rho();
        let weighted_max = (0..grid.n_steps())
            .map(|j| (-rho * (grid.time(j) - start).max(0.0)).exp() * diff.at(j).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        summary.push(format!("oracle max difference (weight exp(-rho (t - {start}))) = {weighted_max:.6e}"));
        summary.push(format!("oracle relative difference (rho norm) = {:.6e}", weighted_norm(&diff) / weighted_norm(&u).max(f64::MIN_POSITIVE)));
    }
    Ok(RunOutcome { exit_code: if certified { 0 } else { 1 }, summary, csv: None })
}

fn run_fracapply(cfg: &ExperimentConfig) -> Result<RunOutcome, Error> {
    let (f, _) = build_rhs(cfg, None, None)?;
    let gamma = cfg.gamma.expect("validated");
    let u = apply_frac_power(gamma, &f)?;
    write_csv(cfg.output.solution.as_ref().expect("validated"), &u)?;
    Ok(RunOutcome::ok(vec![
        grid_line(f.grid()),
        format!("gamma = {gamma}"),
        format!("|u|_rho = {:.6e}", weighted_norm(&f)),
        format!("|d^gamma u|_rho = {:.6e}", weighted_norm(&u)),
    ]))
}

fn run_compare(cfg: &ExperimentConfig) -> Result<RunOutcome, Error> {
    let (f, _) = build_rhs(cfg, None, None)?;
    let grid = *f.grid();
    let mut summary = vec![grid_line(&grid)];
    let mut columns: Vec<Signal> = Vec::new();
    for &alpha in &cfg.alphas {
        let spectral = apply_frac_power(-alpha, &f)?;
        let oracle = rl_integral_oracle(alpha, &f)?;
        let diff = spectral.sub(&oracle)?;
        let rel = weighted_norm(&diff) / weighted_norm(&oracle).max(f64::MIN_POSITIVE);
        summary.push(format!("alpha = {alpha}: relative L2 difference spectral vs convolution = {rel:.6e}"));
        let err = Signal::from_values(grid, f.dim(), diff.values().iter().map(|z| Complex64::new(z.norm(), 0.0)).collect())?;
        columns.extend([spectral, oracle, err]);
    }
    // components: spectral, convolution and |difference| for each alpha in turn
    let width = f.dim() * columns.len();
    let mut values = Vec::with_capacity(width * grid.n_steps());
    for j in 0..grid.n_steps() {
        for c in &columns {
            values.extend_from_slice(c.at(j));
        }
    }
    let table = Signal::from_values(grid, width, values)?;
    let mut out = RunOutcome::ok(summary);
    match &cfg.output.solution {
        Some(path) => write_csv(path, &table)?,
        None => out.csv = Some(signal_to_csv(&table)),
    }
    Ok(out)
}
