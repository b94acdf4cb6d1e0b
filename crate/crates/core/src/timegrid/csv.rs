//! Signal CSV: header `t,re_0,im_0,...`, one row per node, 17 significant digits.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{GridError, Signal, TimeGrid};

/// Writes a float with 17 significant digits so it round-trips exactly.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn signal_to_csv(u: &Signal) -> String {
    let mut out = String::from("t");
    for i in 0..u.dim() {
        out.push_str(&format!(",re_{i},im_{i}"));
    }
    out.push('\n');
    for j in 0..u.len() {
        out.push_str(&fmt_f64(u.grid().time(j)));
        for v in u.at(j) {
            out.push(',');
            out.push_str(&fmt_f64(v.re));
            out.push(',');
            out.push_str(&fmt_f64(v.im));
        }
        out.push('\n');
    }
    out
}

/// Parses a signal CSV. Node times must be uniformly spaced; `rho` is not
/// stored in the file and has to be supplied.
pub fn signal_from_csv(text: &str, rho: f64) -> Result<Signal, GridError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| GridError::Csv("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") || cols.len() < 3 || cols.len().is_multiple_of(2) {
        return Err(GridError::Csv(format!("bad header `{header}`")));
    }
    let dim = (cols.len() - 1) / 2;
    for i in 0..dim {
        if cols[1 + 2 * i] != format!("re_{i}") || cols[2 + 2 * i] != format!("im_{i}") {
            return Err(GridError::Csv(format!("bad header column near `{}`", cols[1 + 2 * i])));
        }
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(GridError::Csv(format!(
                "line {}: expected {} fields, found {}",
                lineno + 1,
                cols.len(),
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| GridError::Csv(format!("line {}: `{s}`: {e}", lineno + 1)))
        };
        times.push(parse(fields[0])?);
        for i in 0..dim {
            values.push(Complex64::new(parse(fields[1 + 2 * i])?, parse(fields[2 + 2 * i])?));
        }
    }
    if times.len() < 2 {
        return Err(GridError::Csv("need at least two rows".into()));
    }
    let dt = times[1] - times[0];
    for (j, t) in times.iter().enumerate() {
        let expected = times[0] + j as f64 * dt;
        if (t - expected).abs() > 1e-9 * dt.abs().max(expected.abs()) {
            return Err(GridError::Csv(format!("non-uniform time column at row {}", j + 1)));
        }
    }
    let grid = TimeGrid::new(times[0], dt, times.len(), rho)?;
    Signal::from_values(grid, dim, values)
}

pub fn write_signal_csv(path: impl AsRef<Path>, u: &Signal) -> std::io::Result<()> {
    fs::write(path, signal_to_csv(u))
}

pub fn read_signal_csv(path: impl AsRef<Path>, rho: f64) -> Result<Signal, GridError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| GridError::Csv(format!("{}: {e}", path.display())))?;
    signal_from_csv(&text, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let g = TimeGrid::new(0.0, 0.5, 2, 1.0).unwrap();
        let u = Signal::zeros(g, 2).unwrap();
        let text = signal_to_csv(&u);
        assert!(text.starts_with("t,re_0,im_0,re_1,im_1\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(signal_from_csv("", 1.0).is_err());
        assert!(signal_from_csv("x,re_0,im_0\n0,1,0\n1,1,0\n", 1.0).is_err());
        assert!(signal_from_csv("t,re_0,im_0\n0,1,0\n1,1\n", 1.0).is_err());
        // three rows is not a power of two
        assert!(signal_from_csv("t,re_0,im_0\n0,1,0\n1,1,0\n2,0,0\n", 1.0).is_err());
        assert!(signal_from_csv("t,re_0,im_0\n0,1,0\n1,1,0\n2.5,0,0\n3,0,0\n", 1.0).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            t0 in -5.0f64..5.0,
            dt in 1e-3f64..1.0,
            vals in proptest::collection::vec(-1e6f64..1e6, 16),
        ) {
            let g = TimeGrid::new(t0, dt, 8, 0.5).unwrap();
            let values: Vec<Complex64> = vals.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            let u = Signal::from_values(g, 1, values).unwrap();
            let back = signal_from_csv(&signal_to_csv(&u), 0.5).unwrap();
            prop_assert_eq!(back.values(), u.values());
            prop_assert!((back.grid().dt() - dt).abs() <= 1e-12 * dt);
        }
    }
}
