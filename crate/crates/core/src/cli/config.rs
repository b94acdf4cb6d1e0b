//! Experiment configuration files.
//!
//! ```text
//! kind = solve
//!
//! [grid]
//! t_start = -2
//! span = 8
//! n_steps = 4096
//! rho = 4            # optional: defaults to 30 / span (and above any tail radius)
//!
//! [law]
//! builder = fokker_planck
//! alpha = 0.5
//! kappa = 1
//! mu00 = 0
//! mu11 = 1
//!
//! [spatial]
//! operator = grad1d
//! n_cells = 32
//! h = 0.03125
//!
//! [rhs]
//! waveform = bump
//! start = 0
//! end = 2
//!
//! [output]
//! solution = sol.csv
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::material::text::{fmt_complex, parse_complex_list};
use crate::material::DEFAULT_TAIL_TERMS;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based source line, 0 for command-line overrides and missing keys.
    pub line: usize,
    pub msg: String,
}

/// Every violation found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    fn single(line: usize, msg: impl Into<String>) -> Self {
        Self { issues: vec![ConfigIssue { line, msg: msg.into() }] }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.issues.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            if i.line > 0 {
                write!(f, "line {}: ", i.line)?;
            }
            f.write_str(&i.msg)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Solve,
    Check,
    FracApply,
    CompareKernels,
    Ivp,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Check => "check",
            Self::FracApply => "fracapply",
            Self::CompareKernels => "compare-kernels",
            Self::Ivp => "ivp",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Solve, Self::Check, Self::FracApply, Self::CompareKernels, Self::Ivp]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridSpec {
    pub t_start: Option<f64>,
    pub span: Option<f64>,
    pub n_steps: Option<usize>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawSource {
    File(PathBuf),
    FokkerPlanck { alpha: f64, kappa: f64, mu00: f64, mu11: f64 },
    KelvinVoigt { alpha: f64, eta: f64, c: f64, d: f64, tail_terms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialSpec {
    None,
    GradDiv { n_cells: usize, h: f64 },
    Elasticity { n_cells: usize, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Zero,
    Step,
    Bump,
    Impulse,
}

impl Waveform {
    fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Step => "step",
            Self::Bump => "bump",
            Self::Impulse => "impulse",
        }
    }
}

/// Spatial vector of a load or impulse weight.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// All components equal to one.
    Ones,
    /// First unit vector.
    First,
    /// `sin(pi x / L)` on the node block of the spatial operator, zero elsewhere.
    Sine,
    Vector(Vec<Complex64>),
}

impl Shape {
    fn parse(value: &str, line: usize) -> Result<Self, ConfigIssue> {
        match value {
            "ones" => Ok(Self::Ones),
            "first" => Ok(Self::First),
            "sine" => Ok(Self::Sine),
            _ => parse_complex_list(value, line)
                .map(Self::Vector)
                .map_err(|e| ConfigIssue { line, msg: e.to_string() }),
        }
    }

    fn to_text(&self) -> String {
        match self {
            Self::Ones => "ones".into(),
            Self::First => "first".into(),
            Self::Sine => "sine".into(),
            Self::Vector(v) => v.iter().map(|z| fmt_complex(*z)).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhsSpec {
    File(PathBuf),
    Named { waveform: Waveform, amplitude: f64, start: f64, end: Option<f64>, shape: Option<Shape> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub projectors: PathBuf,
    pub rho_min: f64,
    pub rho_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IvpForm {
    Delta,
    History,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IvpAt {
    Node(usize),
    Time(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvpSpec {
    pub form: IvpForm,
    pub at: IvpAt,
    pub weight: Shape,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSpec {
    pub solution: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub grid: GridSpec,
    pub law: Option<LawSource>,
    pub spatial: SpatialSpec,
    pub rhs: Option<RhsSpec>,
    pub check: Option<CheckSpec>,
    pub gamma: Option<f64>,
    pub alphas: Vec<f64>,
    pub ivp: Option<IvpSpec>,
    pub output: OutputSpec,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["kind"]),
    ("grid", &["t_start", "span", "n_steps", "rho"]),
    ("law", &["file", "builder", "alpha", "kappa", "mu00", "mu11", "eta", "c", "d", "tail_terms"]),
    ("spatial", &["operator", "n_cells", "h"]),
    ("rhs", &["file", "waveform", "amplitude", "start", "end", "shape"]),
    ("check", &["projectors", "rho_min", "rho_max"]),
    ("frac", &["gamma", "alphas"]),
    ("ivp", &["form", "node", "time", "weight"]),
    ("output", &["solution", "oracle"]),
];

#[derive(Debug, Clone, PartialEq)]
struct RawValue {
    line: usize,
    value: String,
}

/// Syntactically valid `section.key = value` entries, before interpretation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<(String, String), RawValue>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut issues = Vec::new();
        let mut section = String::new();
        for (i, line_text) in text.lines().enumerate() {
            let line = i + 1;
            let content = line_text.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if SECTIONS.iter().any(|(s, _)| !s.is_empty() && *s == name) {
                    section = name.to_string();
                } else {
                    issues.push(ConfigIssue { line, msg: format!("unknown section [{name}]") });
                    section = format!("?{name}");
                }
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                issues.push(ConfigIssue { line, msg: "expected `key = value`".into() });
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if section.starts_with('?') {
                continue;
            }
            let known = SECTIONS.iter().find(|(s, _)| *s == section).is_some_and(|(_, keys)| keys.contains(&key));
            if !known {
                let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                issues.push(ConfigIssue { line, msg: format!("unknown key `{key}` in {place}") });
                continue;
            }
            if value.is_empty() {
                issues.push(ConfigIssue { line, msg: format!("missing value for `{key}`") });
                continue;
            }
            let slot = (section.clone(), key.to_string());
            if let Some(prev) = raw.entries.get(&slot) {
                issues.push(ConfigIssue { line, msg: format!("duplicate key `{key}` (first set on line {})", prev.line) });
                continue;
            }
            raw.entries.insert(slot, RawValue { line, value: value.to_string() });
        }
        if issues.is_empty() { Ok(raw) } else { Err(ConfigError { issues }) }
    }

    /// Sets or replaces a value, as command-line flags do.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) -> Result<(), ConfigError> {
        let known = SECTIONS.iter().find(|(s, _)| *s == section).is_some_and(|(_, keys)| keys.contains(&key));
        if !known {
            return Err(ConfigError::single(0, format!("unknown key `{section}.{key}`")));
        }
        self.entries.insert((section.into(), key.into()), RawValue { line: 0, value: value.into() });
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|v| v.value.as_str())
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|(s, _)| s == section)
    }
}

/// Typed reader over a [`RawConfig`] that records every problem instead of
/// stopping at the first.
struct Reader<'a> {
    raw: &'a RawConfig,
    base: &'a Path,
    issues: Vec<ConfigIssue>,
}

impl Reader<'_> {
    fn entry(&self, section: &str, key: &str) -> Option<&RawValue> {
        self.raw.entries.get(&(section.to_string(), key.to_string()))
    }

    fn issue(&mut self, line: usize, msg: impl Into<String>) {
        self.issues.push(ConfigIssue { line, msg: msg.into() });
    }

    fn missing(&mut self, section: &str, key: &str, why: &str) {
        let name = if section.is_empty() { key.to_string() } else { format!("[{section}] {key}") };
        self.issue(0, format!("missing {name} ({why})"));
    }

    fn parsed<T: std::str::FromStr>(&mut self, section: &str, key: &str, what: &str) -> Option<T> {
        let e = self.entry(section, key)?.clone();
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.issue(e.line, format!("`{key}` must be {what}, got `{}`", e.value));
                None
            }
        }
    }

    fn real(&mut self, section: &str, key: &str) -> Option<f64> {
        let v: f64 = self.parsed(section, key, "a real number")?;
        if !v.is_finite() {
            let line = self.entry(section, key).map_or(0, |e| e.line);
            self.issue(line, format!("`{key}` must be finite"));
            return None;
        }
        Some(v)
    }

    fn positive(&mut self, section: &str, key: &str) -> Option<f64> {
        let v = self.real(section, key)?;
        if v <= 0.0 {
            let line = self.entry(section, key).map_or(0, |e| e.line);
            self.issue(line, format!("`{key}` must be positive, got {v}"));
            return None;
        }
        Some(v)
    }

    fn required_real(&mut self, section: &str, key: &str, why: &str) -> Option<f64> {
        if self.entry(section, key).is_none() {
            self.missing(section, key, why);
            return None;
        }
        self.real(section, key)
    }

    fn existing_file(&mut self, section: &str, key: &str) -> Option<PathBuf> {
        let e = self.entry(section, key)?.clone();
        let path = self.base.join(&e.value);
        if !path.is_file() {
            self.issue(e.line, format!("file `{}` does not exist", path.display()));
        }
        Some(path)
    }

    fn path(&self, section: &str, key: &str) -> Option<PathBuf> {
        self.entry(section, key).map(|e| self.base.join(&e.value))
    }

    /// Flags keys present in `section` outside `allowed`.
    fn reject_others(&mut self, section: &str, allowed: &[&str], context: &str) {
        let extra: Vec<(usize, String)> = self
            .raw
            .entries
            .iter()
            .filter(|((s, k), _)| s == section && !allowed.contains(&k.as_str()))
            .map(|((_, k), v)| (v.line, k.clone()))
            .collect();
        for (line, k) in extra {
            self.issue(line, format!("key `{k}` does not apply to {context}"));
        }
    }
}

impl ExperimentConfig {
    /// Interprets raw entries, resolving relative paths against `base`.
    pub fn from_raw(raw: &RawConfig, base: &Path) -> Result<Self, ConfigError> {
        let mut r = Reader { raw, base, issues: Vec::new() };
        let kind = match r.entry("", "kind").cloned() {
            None => return Err(ConfigError::single(0, "missing experiment kind")),
            Some(e) => match ExperimentKind::parse(&e.value) {
                Some(k) => k,
                None => return Err(ConfigError::single(e.line, format!("unknown experiment kind `{}`", e.value))),
            },
        };

        let grid = GridSpec {
            t_start: r.real("grid", "t_start"),
            span: r.positive("grid", "span"),
            n_steps: r.parsed("grid", "n_steps", "a positive integer"),
            rho: r.positive("grid", "rho"),
        };
        if let Some(n) = grid.n_steps {
            if n < 2 || !n.is_power_of_two() {
                let line = r.entry("grid", "n_steps").map_or(0, |e| e.line);
                r.issue(line, format!("`n_steps` must be a power of two >= 2, got {n}"));
            }
        }

        let spatial = read_spatial(&mut r);
        let law = read_law(&mut r, spatial);
        let rhs = read_rhs(&mut r);
        let check = read_check(&mut r);
        let gamma = r.real("frac", "gamma");
        let alphas = read_alphas(&mut r);
        let ivp = read_ivp(&mut r);
        let output = OutputSpec { solution: r.path("output", "solution"), oracle: r.path("output", "oracle") };

        let rhs_is_file = matches!(rhs, Some(RhsSpec::File(_)));
        let needs_grid = |r: &mut Reader| {
            if !rhs_is_file {
                if grid.span.is_none() && r.entry("grid", "span").is_none() {
                    r.missing("grid", "span", "needed unless the right-hand side is a file");
                }
                if grid.n_steps.is_none() && r.entry("grid", "n_steps").is_none() {
                    r.missing("grid", "n_steps", "needed unless the right-hand side is a file");
                }
            }
        };
        match kind {
            ExperimentKind::Solve | ExperimentKind::Ivp => {
                if law.is_none() && !r.raw.has_section("law") {
                    r.missing("law", "file", "or a builder");
                }
                if kind == ExperimentKind::Solve && rhs.is_none() && !r.raw.has_section("rhs") {
                    r.missing("rhs", "waveform", "or file");
                }
                if kind == ExperimentKind::Ivp && ivp.is_none() && !r.raw.has_section("ivp") {
                    r.missing("ivp", "form", "ivp experiments need an impulse");
                }
                if output.solution.is_none() {
                    r.missing("output", "solution", "solution CSV path");
                }
                needs_grid(&mut r);
            }
            ExperimentKind::Check => {
                if law.is_none() && !r.raw.has_section("law") {
                    r.missing("law", "file", "or a builder");
                }
                if check.is_none() && r.entry("check", "projectors").is_none() {
                    r.missing("check", "projectors", "projector file");
                }
            }
            ExperimentKind::FracApply => {
                if rhs.is_none() && !r.raw.has_section("rhs") {
                    r.missing("rhs", "file", "or waveform");
                }
                if gamma.is_none() && r.entry("frac", "gamma").is_none() {
                    r.missing("frac", "gamma", "exponent to apply");
                }
                if output.solution.is_none() {
                    r.missing("output", "solution", "output CSV path");
                }
                needs_grid(&mut r);
            }
            ExperimentKind::CompareKernels => {
                if rhs.is_none() && !r.raw.has_section("rhs") {
                    r.missing("rhs", "file", "or waveform");
                }
                if alphas.is_empty() && r.entry("frac", "alphas").is_none() {
                    r.missing("frac", "alphas", "orders to compare");
                }
                needs_grid(&mut r);
            }
        }

        if r.issues.is_empty() {
            Ok(Self { kind, grid, law, spatial, rhs, check, gamma, alphas, ivp, output })
        } else {
            Err(ConfigError { issues: r.issues })
        }
    }

    /// Canonical text form; parses back to an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = format!("kind = {}\n", self.kind.name());
        let mut section = |name: &str, lines: Vec<(&str, String)>| {
            if !lines.is_empty() {
                out.push_str(&format!("\n[{name}]\n"));
                for (k, v) in lines {
                    out.push_str(&format!("{k} = {v}\n"));
                }
            }
        };
        let g = &self.grid;
        let mut grid = Vec::new();
        if let Some(v) = g.t_start {
            grid.push(("t_start", v.to_string()));
        }
        if let Some(v) = g.span {
            grid.push(("span", v.to_string()));
        }
        if let Some(v) = g.n_steps {
            grid.push(("n_steps", v.to_string()));
        }
        if let Some(v) = g.rho {
            grid.push(("rho", v.to_string()));
        }
        section("grid", grid);

        section(
            "law",
            match &self.law {
                None => vec![],
                Some(LawSource::File(p)) => vec![("file", p.display().to_string())],
                Some(LawSource::FokkerPlanck { alpha, kappa, mu00, mu11 }) => vec![
                    ("builder", "fokker_planck".into()),
                    ("alpha", alpha.to_string()),
                    ("kappa", kappa.to_string()),
                    ("mu00", mu00.to_string()),
                    ("mu11", mu11.to_string()),
                ],
                Some(LawSource::KelvinVoigt { alpha, eta, c, d, tail_terms }) => vec![
                    ("builder", "kelvin_voigt".into()),
                    ("alpha", alpha.to_string()),
                    ("eta", eta.to_string()),
                    ("c", c.to_string()),
                    ("d", d.to_string()),
                    ("tail_terms", tail_terms.to_string()),
                ],
            },
        );

        section(
            "spatial",
            match self.spatial {
                SpatialSpec::None => vec![],
                SpatialSpec::GradDiv { n_cells, h } => {
                    vec![("operator", "grad1d".into()), ("n_cells", n_cells.to_string()), ("h", h.to_string())]
                }
                SpatialSpec::Elasticity { n_cells, h } => {
                    vec![("operator", "elastic1d".into()), ("n_cells", n_cells.to_string()), ("h", h.to_string())]
                }
            },
        );

        section(
            "rhs",
            match &self.rhs {
                None => vec![],
                Some(RhsSpec::File(p)) => vec![("file", p.display().to_string())],
                Some(RhsSpec::Named { waveform, amplitude, start, end, shape }) => {
                    let mut v = vec![
                        ("waveform", waveform.name().to_string()),
                        ("amplitude", amplitude.to_string()),
                        ("start", start.to_string()),
                    ];
                    if let Some(e) = end {
                        v.push(("end", e.to_string()));
                    }
                    if let Some(s) = shape {
                        v.push(("shape", s.to_text()));
                    }
                    v
                }
            },
        );

        section(
            "check",
            match &self.check {
                None => vec![],
                Some(c) => vec![
                    ("projectors", c.projectors.display().to_string()),
                    ("rho_min", c.rho_min.to_string()),
                    ("rho_max", c.rho_max.to_string()),
                ],
            },
        );

        let mut frac = Vec::new();
        if let Some(g) = self.gamma {
            frac.push(("gamma", g.to_string()));
        }
        if !self.alphas.is_empty() {
            frac.push(("alphas", self.alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")));
        }
        section("frac", frac);

        section(
            "ivp",
            match &self.ivp {
                None => vec![],
                Some(i) => vec![
                    ("form", match i.form { IvpForm::Delta => "delta", IvpForm::History => "history" }.into()),
                    match i.at {
                        IvpAt::Node(n) => ("node", n.to_string()),
                        IvpAt::Time(t) => ("time", t.to_string()),
                    },
                    ("weight", i.weight.to_text()),
                ],
            },
        );

        let mut output = Vec::new();
        if let Some(p) = &self.output.solution {
            output.push(("solution", p.display().to_string()));
        }
        if let Some(p) = &self.output.oracle {
            output.push(("oracle", p.display().to_string()));
        }
        section("output", output);
        out
    }
}

fn read_spatial(r: &mut Reader) -> SpatialSpec {
    let Some(op) = r.entry("spatial", "operator").cloned() else {
        r.reject_others("spatial", &[], "an absent spatial operator");
        return SpatialSpec::None;
    };
    if op.value == "none" {
        r.reject_others("spatial", &["operator"], "operator none");
        return SpatialSpec::None;
    }
    let n_cells: Option<usize> = r.parsed("spatial", "n_cells", "an integer");
    let h = r.positive("spatial", "h");
    if r.entry("spatial", "n_cells").is_none() {
        r.missing("spatial", "n_cells", "cell count");
    }
    if r.entry("spatial", "h").is_none() {
        r.missing("spatial", "h", "mesh width");
    }
    if let Some(n) = n_cells.filter(|n| *n < 2) {
        let line = r.entry("spatial", "n_cells").map_or(0, |e| e.line);
        r.issue(line, format!("`n_cells` must be at least 2, got {n}"));
    }
    let (n_cells, h) = (n_cells.unwrap_or(2), h.unwrap_or(1.0));
    match op.value.as_str() {
        "grad1d" => SpatialSpec::GradDiv { n_cells, h },
        "elastic1d" => SpatialSpec::Elasticity { n_cells, h },
        other => {
            r.issue(op.line, format!("unknown spatial operator `{other}` (expected grad1d, elastic1d or none)"));
            SpatialSpec::None
        }
    }
}

fn read_law(r: &mut Reader, spatial: SpatialSpec) -> Option<LawSource> {
    let file = r.entry("law", "file").cloned();
    let builder = r.entry("law", "builder").cloned();
    match (file, builder) {
        (None, None) => {
            if r.raw.has_section("law") {
                r.missing("law", "file", "or builder");
            }
            None
        }
        (Some(_), Some(b)) => {
            r.issue(b.line, "give either `file` or `builder`, not both");
            None
        }
        (Some(_), None) => {
            r.reject_others("law", &["file"], "a law file");
            r.existing_file("law", "file").map(LawSource::File)
        }
        (None, Some(b)) => match b.value.as_str() {
            "fokker_planck" => {
                r.reject_others("law", &["builder", "alpha", "kappa", "mu00", "mu11"], "builder fokker_planck");
                let why = "required by fokker_planck";
                let alpha = r.required_real("law", "alpha", why);
                let kappa = r.required_real("law", "kappa", why);
                let mu00 = r.required_real("law", "mu00", why);
                let mu11 = r.required_real("law", "mu11", why);
                if !matches!(spatial, SpatialSpec::GradDiv { .. }) {
                    r.issue(b.line, "builder fokker_planck needs [spatial] operator = grad1d");
                }
                Some(LawSource::FokkerPlanck { alpha: alpha?, kappa: kappa?, mu00: mu00?, mu11: mu11? })
            }
            "kelvin_voigt" => {
                r.reject_others("law", &["builder", "alpha", "eta", "c", "d", "tail_terms"], "builder kelvin_voigt");
                let why = "required by kelvin_voigt";
                let alpha = r.required_real("law", "alpha", why);
                let eta = r.required_real("law", "eta", why);
                let c = r.required_real("law", "c", why);
                let d = r.required_real("law", "d", why);
                let tail_terms = r.parsed("law", "tail_terms", "an integer").unwrap_or(DEFAULT_TAIL_TERMS);
                if matches!(spatial, SpatialSpec::GradDiv { .. }) {
                    r.issue(b.line, "builder kelvin_voigt pairs with operator elastic1d or none");
                }
                Some(LawSource::KelvinVoigt { alpha: alpha?, eta: eta?, c: c?, d: d?, tail_terms })
            }
            other => {
                r.issue(b.line, format!("unknown builder `{other}` (expected fokker_planck or kelvin_voigt)"));
                None
            }
        },
    }
}

fn read_rhs(r: &mut Reader) -> Option<RhsSpec> {
    if r.entry("rhs", "file").is_some() {
        r.reject_others("rhs", &["file"], "a right-hand side file");
        return r.existing_file("rhs", "file").map(RhsSpec::File);
    }
    let w = r.entry("rhs", "waveform").cloned()?;
    let waveform = match w.value.as_str() {
        "zero" => Waveform::Zero,
        "step" => Waveform::Step,
        "bump" => Waveform::Bump,
        "impulse" => Waveform::Impulse,
        other => {
            r.issue(w.line, format!("unknown waveform `{other}` (expected step, bump, impulse or zero)"));
            return None;
        }
    };
    let amplitude = r.real("rhs", "amplitude").unwrap_or(1.0);
    let start = r.real("rhs", "start").unwrap_or(0.0);
    let end = r.real("rhs", "end");
    if waveform == Waveform::Bump && end.is_none() && r.entry("rhs", "end").is_none() {
        r.missing("rhs", "end", "a bump needs its support");
    }
    if let Some(e) = end.filter(|e| *e <= start) {
        let line = r.entry("rhs", "end").map_or(0, |x| x.line);
        r.issue(line, format!("`end` = {e} must exceed `start` = {start}"));
    }
    let shape = match r.entry("rhs", "shape").cloned() {
        None => None,
        Some(e) => Shape::parse(&e.value, e.line).map_err(|i| r.issues.push(i)).ok(),
    };
    Some(RhsSpec::Named { waveform, amplitude, start, end, shape })
}

fn read_check(r: &mut Reader) -> Option<CheckSpec> {
    let projectors = r.existing_file("check", "projectors");
    let rho_min = r.positive("check", "rho_min").unwrap_or(crate::wellposed::DEFAULT_RHO_MIN);
    let rho_max = r.positive("check", "rho_max").unwrap_or(crate::wellposed::DEFAULT_RHO_MAX);
    if rho_max <= rho_min {
        let line = r.entry("check", "rho_max").map_or(0, |e| e.line);
        r.issue(line, format!("`rho_max` = {rho_max} must exceed `rho_min` = {rho_min}"));
    }
    Some(CheckSpec { projectors: projectors?, rho_min, rho_max })
}

fn read_alphas(r: &mut Reader) -> Vec<f64> {
    let Some(e) = r.entry("frac", "alphas").cloned() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for tok in e.value.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
        match tok.parse::<f64>() {
            Ok(a) if a > 0.0 && a < 1.0 => out.push(a),
            _ => r.issue(e.line, format!("`alphas` entries must lie in (0, 1), got `{tok}`")),
        }
    }
    out
}

fn read_ivp(r: &mut Reader) -> Option<IvpSpec> {
    let f = r.entry("ivp", "form").cloned()?;
    let form = match f.value.as_str() {
        "delta" => IvpForm::Delta,
        "history" => IvpForm::History,
        other => {
            r.issue(f.line, format!("unknown ivp form `{other}` (expected delta or history)"));
            return None;
        }
    };
    let at = match (r.entry("ivp", "node").is_some(), r.entry("ivp", "time").is_some()) {
        (true, true) => {
            let line = r.entry("ivp", "time").map_or(0, |e| e.line);
            r.issue(line, "give either `node` or `time`, not both");
            return None;
        }
        (true, false) => IvpAt::Node(r.parsed("ivp", "node", "a node index")?),
        (false, true) => IvpAt::Time(r.real("ivp", "time")?),
        (false, false) => IvpAt::Time(0.0),
    };
    let weight = match r.entry("ivp", "weight").cloned() {
        None => {
            r.missing("ivp", "weight", "impulse vector");
            return None;
        }
        Some(e) => Shape::parse(&e.value, e.line).map_err(|i| r.issues.push(i)).ok()?,
    };
    Some(IvpSpec { form, at, weight })
}

/// Parses configuration text, resolving relative paths against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_in(text, Path::new(""))
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::from_raw(&RawConfig::parse(text)?, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn law_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("law.txt"), "dim = 1\nm0 = 1\n").unwrap();
        fs::write(dir.path().join("proj.txt"), "dim = 1\np0 = 1\n").unwrap();
        dir
    }

    #[test]
    fn empty_text_needs_kind() {
        let err = parse_config("").unwrap_err();
        assert_eq!(err.to_string(), "missing experiment kind");
        assert_eq!(parse_config("# only a comment\n\n").unwrap_err().to_string(), "missing experiment kind");
    }

    #[test]
    fn minimal_solve_round_trips() {
        let dir = law_dir();
        let text = "kind = solve\n[grid]\nt_start = -1\nspan = 16\nn_steps = 1024\nrho = 2\n[law]\nfile = law.txt\n\
                    [spatial]\noperator = grad1d\nn_cells = 4\nh = 0.25\n[rhs]\nwaveform = step\n[output]\nsolution = sol.csv\n";
        let cfg = parse_config_in(text, dir.path()).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Solve);
        assert_eq!(cfg.grid.rho, Some(2.0));
        assert_eq!(cfg.spatial, SpatialSpec::GradDiv { n_cells: 4, h: 0.25 });
        assert_eq!(cfg.law, Some(LawSource::File(dir.path().join("law.txt"))));
        let again = parse_config_in(&cfg.to_text(), dir.path()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn duplicate_key_names_its_line() {
        let err = parse_config("kind = check\nkind = solve\n").unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].line, 2);
        assert!(err.to_string().starts_with("line 2: duplicate key `kind`"));
    }

    #[test]
    fn collects_every_violation() {
        let text = "kind = solve\n[grid]\nspan = -1\nn_steps = 1000\nbogus = 1\n[law]\nbuilder = fokker_planck\nalpha = 0.5\n[output]\nsolution = x.csv\n";
        let err = parse_config(text).unwrap_err();
        // unknown key is a syntax-level error reported alone
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].line, 5);

        let err = parse_config(&text.replace("bogus = 1\n", "")).unwrap_err();
        let msgs: Vec<String> = err.issues.iter().map(|i| i.msg.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("`span` must be positive")), "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("power of two")));
        assert!(msgs.iter().any(|m| m.contains("[law] kappa")));
        assert!(msgs.iter().any(|m| m.contains("[law] mu11")));
        assert!(msgs.iter().any(|m| m.contains("needs [spatial] operator = grad1d")));
        assert!(msgs.iter().any(|m| m.contains("[rhs] waveform")));
        assert!(err.issues.len() >= 6);
    }

    #[test]
    fn missing_files_and_bad_values() {
        let err = parse_config("kind = check\n[law]\nfile = /nonexistent/law.txt\n[check]\nprojectors = /nonexistent/p.txt\n").unwrap_err();
        assert_eq!(err.issues.iter().filter(|i| i.msg.contains("does not exist")).count(), 2);
        assert_eq!(parse_config("kind = dance\n").unwrap_err().issues[0].msg, "unknown experiment kind `dance`");
        assert!(parse_config("kind = solve\n[nowhere]\nx = 1\n").unwrap_err().issues[0].msg.contains("unknown section"));
        assert!(parse_config("kind = solve\njust text\n").unwrap_err().issues[0].line == 2);
    }

    #[test]
    fn overrides_mirror_keys() {
        let dir = law_dir();
        let mut raw = RawConfig::parse("kind = check\n[law]\nfile = law.txt\n").unwrap();
        raw.set("check", "projectors", "proj.txt").unwrap();
        raw.set("check", "rho_max", "100").unwrap();
        assert!(raw.set("check", "nope", "1").is_err());
        let cfg = ExperimentConfig::from_raw(&raw, dir.path()).unwrap();
        let check = cfg.check.unwrap();
        assert_eq!(check.rho_max, 100.0);
        assert_eq!(check.rho_min, crate::wellposed::DEFAULT_RHO_MIN);
    }

    #[test]
    fn builders_and_ivp_round_trip() {
        let text = "kind = ivp\n[grid]\nspan = 4\nn_steps = 512\n[law]\nbuilder = kelvin_voigt\nalpha = 0.5\neta = 1\nc = 1\nd = 1\n\
                    [spatial]\noperator = elastic1d\nn_cells = 8\nh = 0.5\n[ivp]\nform = history\ntime = 0\nweight = sine\n\
                    [output]\nsolution = out.csv\noracle = o.csv\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.law, Some(LawSource::KelvinVoigt { alpha: 0.5, eta: 1.0, c: 1.0, d: 1.0, tail_terms: DEFAULT_TAIL_TERMS }));
        assert_eq!(cfg.ivp.as_ref().unwrap().weight, Shape::Sine);
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);

        let v = parse_config(&text.replace("weight = sine", "weight = 1, 0.5-2i")).unwrap();
        assert_eq!(v.ivp.unwrap().weight, Shape::Vector(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -2.0)]));
        assert!(parse_config(&text.replace("eta = 1\n", "eta = 1\nkappa = 2\n")).is_err());
    }
}
