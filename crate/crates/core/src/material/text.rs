//! Plain-text law files.
//!
//! ```text
//! # comment
//! dim = 2
//! m0 = diag(1, 0)
//! frac 0.5 = 0 0 0 1
//! m1 = 1+0.5i, 0, 0, 2
//! tail 0.25 = zero
//! radius = 0.5
//! ```
//!
//! Matrices are row-major lists of complex numbers (`1`, `-2.5e-3`, `1+2i`)
//! separated by commas or whitespace, or one of `diag(...)`, `zero`, `identity`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{MaterialError, MaterialLaw};
use crate::linalg::{CMatrix, CVector};
use crate::timegrid::csv::fmt_f64;

/// One `key [arg] = value` line.
#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub line: usize,
    pub key: String,
    pub arg: Option<String>,
    pub value: String,
}

fn perr(line: usize, msg: impl Into<String>) -> MaterialError {
    MaterialError::Parse { line, msg: msg.into() }
}

pub(crate) fn parse_entries(text: &str) -> Result<Vec<Entry>, MaterialError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (lhs, rhs) = content.split_once('=').ok_or_else(|| perr(line, "expected `key = value`"))?;
        let mut words = lhs.split_whitespace();
        let key = words.next().ok_or_else(|| perr(line, "missing key"))?.to_string();
        let arg = words.next().map(str::to_string);
        if words.next().is_some() {
            return Err(perr(line, format!("unexpected tokens in `{}`", lhs.trim())));
        }
        let value = rhs.trim().to_string();
        if value.is_empty() {
            return Err(perr(line, format!("missing value for `{key}`")));
        }
        out.push(Entry { line, key, arg, value });
    }
    Ok(out)
}

fn parse_complex(tok: &str, line: usize) -> Result<Complex64, MaterialError> {
    tok.parse::<Complex64>()
        .map_err(|_| perr(line, format!("cannot parse complex number `{tok}`")))
}

fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty())
}

/// Complex numbers separated by commas or whitespace.
pub(crate) fn parse_complex_list(value: &str, line: usize) -> Result<Vec<Complex64>, MaterialError> {
    tokens(value).map(|t| parse_complex(t, line)).collect()
}

pub(crate) fn parse_matrix(value: &str, d: usize, line: usize) -> Result<CMatrix, MaterialError> {
    let v = value.trim();
    match v {
        "zero" => return Ok(CMatrix::zeros(d, d)),
        "identity" => return Ok(CMatrix::identity(d, d)),
        _ => {}
    }
    if let Some(inner) = v.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let vals = parse_complex_list(inner, line)?;
        if vals.len() != d {
            return Err(perr(line, format!("diag needs {d} entries, found {}", vals.len())));
        }
        return Ok(CMatrix::from_diagonal(&CVector::from_vec(vals)));
    }
    let vals = parse_complex_list(v, line)?;
    if vals.len() != d * d {
        return Err(perr(line, format!("matrix needs {} entries, found {}", d * d, vals.len())));
    }
    Ok(CMatrix::from_row_slice(d, d, &vals))
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", fmt_f64(z.re), fmt_f64(z.im.abs()))
}

pub(crate) fn format_matrix(m: &CMatrix) -> String {
    if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return "zero".into();
    }
    let mut rows = Vec::with_capacity(m.nrows());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_complex(m[(r, c)])).collect();
        rows.push(row.join(", "));
    }
    rows.join(",  ")
}

pub(crate) fn parse_dim(entries: &[Entry]) -> Result<usize, MaterialError> {
    let e = entries.iter().find(|e| e.key == "dim").ok_or_else(|| perr(0, "missing `dim`"))?;
    e.value
        .parse::<usize>()
        .ok()
        .filter(|d| *d > 0)
        .ok_or_else(|| perr(e.line, format!("`dim` must be a positive integer, got `{}`", e.value)))
}

pub(crate) fn parse_real(e: &Entry, what: &str) -> Result<f64, MaterialError> {
    e.value.parse::<f64>().map_err(|_| perr(e.line, format!("{what}: cannot parse `{}`", e.value)))
}

pub fn parse_law(text: &str) -> Result<MaterialLaw, MaterialError> {
    let entries = parse_entries(text)?;
    let d = parse_dim(&entries)?;
    let mut builder = MaterialLaw::builder(d);
    let mut seen = HashSet::new();
    let mut frac = Vec::new();
    for e in &entries {
        let id = format!("{} {}", e.key, e.arg.as_deref().unwrap_or(""));
        if !seen.insert(id) {
            return Err(perr(e.line, format!("duplicate key `{}`", e.key)));
        }
        let needs_arg = matches!(e.key.as_str(), "frac" | "tail");
        if needs_arg != e.arg.is_some() {
            return Err(perr(e.line, format!("`{}` {} an exponent", e.key, if needs_arg { "needs" } else { "takes no" })));
        }
        let exponent = || {
            let a = e.arg.as_deref().unwrap_or_default();
            a.parse::<f64>().map_err(|_| perr(e.line, format!("bad exponent `{a}`")))
        };
        builder = match e.key.as_str() {
            "dim" => builder,
            "m0" => builder.m0(parse_matrix(&e.value, d, e.line)?),
            "m1" => builder.m1(parse_matrix(&e.value, d, e.line)?),
            "frac" => {
                frac.push((exponent()?, parse_matrix(&e.value, d, e.line)?));
                builder
            }
            "tail" => builder.tail(exponent()?, parse_matrix(&e.value, d, e.line)?),
            "radius" => builder.radius(parse_real(e, "radius")?),
            other => return Err(perr(e.line, format!("unknown key `{other}`"))),
        };
    }
    frac.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (a, m) in frac {
        builder = builder.frac(a, m);
    }
    builder.build()
}

pub fn law_to_text(law: &MaterialLaw) -> String {
    let mut out = format!("dim = {}\nm0 = {}\n", law.dim(), format_matrix(law.m0()));
    for (a, m) in law.frac() {
        out.push_str(&format!("frac {} = {}\n", fmt_f64(a), format_matrix(m)));
    }
    out.push_str(&format!("m1 = {}\n", format_matrix(law.m1())));
    if let Some(t) = law.tail() {
        for (g, m) in &t.terms {
            out.push_str(&format!("tail {} = {}\n", fmt_f64(*g), format_matrix(m.matrix())));
        }
        out.push_str(&format!("radius = {}\n", if t.radius.is_finite() { fmt_f64(t.radius) } else { "inf".into() }));
    }
    out
}

pub fn read_law(path: impl AsRef<Path>) -> Result<MaterialLaw, MaterialError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| MaterialError::Io(format!("{}: {e}", path.display())))?;
    parse_law(&text)
}
