//! Scalar time profiles used for loads and test signals.

/// Heaviside step with the midpoint value `H(0) = 1/2`, which is what the
/// discrete transform converges to at a jump.
pub fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t == 0.0 {
        0.5
    } else {
        0.0
    }
}

/// `C^inf` bump supported on `[lo, hi]` with peak value 1 at the midpoint.
pub fn bump(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo || t >= hi {
        return 0.0;
    }
    let s = (t - lo) / (hi - lo);
    (4.0 - 1.0 / (s * (1.0 - s))).exp()
}
