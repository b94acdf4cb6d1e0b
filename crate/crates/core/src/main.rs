use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use evofrac::cli::{run, ExperimentConfig, RawConfig};
use evofrac::Error;

/// Fractional evolutionary equations on exponentially weighted time grids.
///
/// Experiments are described by a plain-text config; flags override single keys.
#[derive(Parser)]
#[command(name = "evofrac", version)]
struct Cli {
    /// Experiment config (`key = value` lines, `[section]` headers).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Echo the resolved config and timings on standard error.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (d M(d^-1) + A) U = f in the frequency domain.
    Solve(SolveArgs),
    /// Certify a material law against a projector triple.
    Check(CheckArgs),
    /// Apply (d + rho)^gamma to a sampled signal.
    Fracapply(FracArgs),
    /// Compare spectral fractional integrals with the convolution oracle.
    CompareKernels(CompareArgs),
    /// Solve with an impulse (initial-value) source.
    Ivp(SolveArgs),
}

#[derive(Args, Default)]
struct Overrides {
    /// Override any config key.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// Material law file.
    #[arg(long)]
    law: Option<PathBuf>,
    /// Spatial operator: `grad1d:<n>:<h>`, `elastic1d:<n>:<h>` or `none`.
    #[arg(long)]
    spatial: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    /// Right-hand side CSV (`t, re, im, ...`).
    #[arg(long)]
    rhs: Option<PathBuf>,
    /// Solution CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Impulse source `node,w1,w2,...` (or `node,sine|ones|first`).
    #[arg(long, conflicts_with = "ivp_history")]
    ivp_delta: Option<String>,
    /// History data `node,v1,v2,...` for the integrated formulation.
    #[arg(long)]
    ivp_history: Option<String>,
    /// Also march the time-stepping oracle into `<out>.oracle.csv`.
    #[arg(long)]
    oracle: bool,
    /// Projector file; certifies the law first and raises rho to its threshold.
    #[arg(long)]
    projectors: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    law: Option<PathBuf>,
    #[arg(long)]
    projectors: Option<PathBuf>,
    #[arg(long)]
    rho_min: Option<f64>,
    #[arg(long)]
    rho_max: Option<f64>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct FracArgs {
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    /// Orders to compare, comma separated.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    rho: Option<f64>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Accumulates flag overrides on top of the config file.
struct Builder {
    raw: RawConfig,
    cwd: PathBuf,
}

impl Builder {
    fn set(&mut self, section: &str, key: &str, value: impl ToString) -> Result<(), Error> {
        Ok(self.raw.set(section, key, value.to_string())?)
    }

    fn set_opt(&mut self, section: &str, key: &str, value: Option<impl ToString>) -> Result<(), Error> {
        match value {
            Some(v) => self.set(section, key, v),
            None => Ok(()),
        }
    }

    /// Paths from flags are relative to the working directory, not the config.
    fn set_path(&mut self, section: &str, key: &str, value: Option<&Path>) -> Result<(), Error> {
        match value {
            Some(p) => {
                let abs = self.cwd.join(p);
                self.set(section, key, abs.display())
            }
            None => Ok(()),
        }
    }

    fn apply(&mut self, o: &Overrides) -> Result<(), Error> {
        for item in &o.set {
            let bad = || Error::Io(format!("--set expects SECTION.KEY=VALUE, got `{item}`"));
            let (lhs, value) = item.split_once('=').ok_or_else(bad)?;
            let (section, key) = lhs.trim().split_once('.').unwrap_or(("", lhs.trim()));
            self.set(section, key, value.trim())?;
        }
        Ok(())
    }

    fn spatial(&mut self, spec: &str) -> Result<(), Error> {
        let parts: Vec<&str> = spec.split(':').collect();
        match parts.as_slice() {
            ["none"] => self.set("spatial", "operator", "none"),
            [op, n, h] => {
                self.set("spatial", "operator", op)?;
                self.set("spatial", "n_cells", n)?;
                self.set("spatial", "h", h)
            }
            _ => Err(Error::Io(format!("--spatial expects op:<n>:<h> or none, got `{spec}`"))),
        }
    }

    fn ivp(&mut self, form: &str, spec: &str) -> Result<(), Error> {
        let (node, weight) = spec
            .split_once(',')
            .ok_or_else(|| Error::Io(format!("--ivp-{form} expects node,vector, got `{spec}`")))?;
        self.set("ivp", "form", form)?;
        self.set("ivp", "node", node.trim())?;
        self.set("ivp", "weight", weight.trim())
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let cwd = std::env::current_dir().map_err(|e| Error::Io(format!("working directory: {e}")))?;
    let (raw, base) = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let base = path.parent().map(|p| cwd.join(p)).unwrap_or_else(|| cwd.clone());
            (RawConfig::parse(&text)?, base)
        }
        None => (RawConfig::default(), cwd.clone()),
    };
    let mut b = Builder { raw, cwd };
    match &cli.command {
        Command::Solve(a) | Command::Ivp(a) => {
            let is_ivp = matches!(cli.command, Command::Ivp(_)) || a.ivp_delta.is_some() || a.ivp_history.is_some();
            b.set("", "kind", if is_ivp { "ivp" } else { "solve" })?;
            b.set_path("law", "file", a.law.as_deref())?;
            if let Some(s) = &a.spatial {
                b.spatial(s)?;
            }
            b.set_opt("grid", "rho", a.rho)?;
            b.set_path("rhs", "file", a.rhs.as_deref())?;
            b.set_path("output", "solution", a.out.as_deref())?;
            b.set_path("check", "projectors", a.projectors.as_deref())?;
            if let Some(s) = &a.ivp_delta {
                b.ivp("delta", s)?;
            }
            if let Some(s) = &a.ivp_history {
                b.ivp("history", s)?;
            }
            b.apply(&a.overrides)?;
            if a.oracle {
                let out = b
                    .raw
                    .get("output", "solution")
                    .ok_or_else(|| Error::Io("--oracle needs a solution path (--out)".into()))?;
                let derived = base.join(out).with_extension("oracle.csv");
                b.set("output", "oracle", derived.display())?;
            }
        }
        Command::Check(a) => {
            b.set("", "kind", "check")?;
            b.set_path("law", "file", a.law.as_deref())?;
            b.set_path("check", "projectors", a.projectors.as_deref())?;
            b.set_opt("check", "rho_min", a.rho_min)?;
            b.set_opt("check", "rho_max", a.rho_max)?;
            b.apply(&a.overrides)?;
        }
        Command::Fracapply(a) => {
            b.set("", "kind", "fracapply")?;
            b.set_opt("frac", "gamma", a.gamma)?;
            b.set_path("rhs", "file", a.input.as_deref())?;
            b.set_opt("grid", "rho", a.rho)?;
            b.set_path("output", "solution", a.output.as_deref())?;
            b.apply(&a.overrides)?;
        }
        Command::CompareKernels(a) => {
            b.set("", "kind", "compare-kernels")?;
            b.set_opt("frac", "alphas", a.alpha.as_deref())?;
            b.set_path("rhs", "file", a.input.as_deref())?;
            b.set_opt("grid", "rho", a.rho)?;
            b.set_path("output", "solution", a.output.as_deref())?;
            b.apply(&a.overrides)?;
        }
    }
    Ok(ExperimentConfig::from_raw(&b.raw, &base)?)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("EVOFRAC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Io(format!("EVOFRAC_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Io(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = configure_threads().and_then(|()| {
        let cfg = build_config(&cli)?;
        if cli.verbose {
            eprint!("{}", cfg.to_text());
        }
        run(&cfg)
    });
    match result {
        Ok(outcome) => {
            // a closed pipe downstream is not an error of the experiment
            let mut stdout = std::io::stdout().lock();
            match &outcome.csv {
                Some(csv) => {
                    let _ = stdout.write_all(csv.as_bytes());
                    outcome.summary.iter().for_each(|l| eprintln!("{l}"));
                }
                None => {
                    for l in &outcome.summary {
                        if writeln!(stdout, "{l}").is_err() {
                            break;
                        }
                    }
                }
            }
            if cli.verbose {
                eprintln!("elapsed: {:.3} s", started.elapsed().as_secs_f64());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
