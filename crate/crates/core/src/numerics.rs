//! Log-space arithmetic and closed-form integrals of `exp` over linear pieces.

use crate::error::{invalid, Result};

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let lo = a.min(b);
    hi + (lo - hi).exp().ln_1p()
}

/// `log(sum(exp(v)))`; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || hi.is_nan() {
        return hi;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.iter().map(|v| (v - hi).exp()).sum();
    hi + s.ln()
}

const SERIES_CUTOFF: f64 = 1.0;

/// `E_k(t) = int_0^1 v^k exp(t v) dv` for `t <= 0` and `k` in `0..=2`.
fn exp_moment(k: u32, t: f64) -> f64 {
    debug_assert!(t <= 0.0);
    if t > -SERIES_CUTOFF {
        // sum_n t^n / (n! (n + k + 1))
        let mut term = 1.0;
        let mut sum = 1.0 / (k as f64 + 1.0);
        for n in 1..40 {
            term *= t / n as f64;
            let inc = term / (n as f64 + k as f64 + 1.0);
            sum += inc;
            if inc.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    let et = t.exp();
    match k {
        0 => (et - 1.0) / t,
        1 => (et * (t - 1.0) + 1.0) / (t * t),
        _ => (et * (t * t - 2.0 * t + 2.0) - 2.0) / (t * t * t),
    }
}

/// Integrals of `exp(phi)` against low-order polynomials on one linear piece.
///
/// `phi` runs linearly from `a` at the left end to `b` at the right end of an
/// interval of length `len`; `v` is the relative position in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentIntegrals {
    /// `int exp(phi)`
    pub mass: f64,
    /// `int v exp(phi)`
    pub right: f64,
    /// `int (1 - v) exp(phi)`
    pub left: f64,
    /// `int v^2 exp(phi)`
    pub right_sq: f64,
    /// `int (1 - v)^2 exp(phi)`
    pub left_sq: f64,
    /// `int v (1 - v) exp(phi)`
    pub cross: f64,
}

impl SegmentIntegrals {
    pub fn new(a: f64, b: f64, len: f64) -> Self {
        // Factor out the larger endpoint so every exponent is <= 0.
        let (top, t, flipped) = if b >= a {
            (b, a - b, true)
        } else {
            (a, b - a, false)
        };
        let scale = len * top.exp();
        let e0 = exp_moment(0, t);
        let e1 = exp_moment(1, t);
        let e2 = exp_moment(2, t);
        // Moments measured from the top endpoint, then mapped back.
        let near0 = e0;
        let near1 = e1;
        let near2 = e2;
        let far1 = e0 - e1;
        let far2 = e0 - 2.0 * e1 + e2;
        let mid = e1 - e2;
        let (right, left, right_sq, left_sq) = if flipped {
            (far1, near1, far2, near2)
        } else {
            (near1, far1, near2, far2)
        };
        Self {
            mass: scale * near0,
            right: scale * right,
            left: scale * left,
            right_sq: scale * right_sq,
            left_sq: scale * left_sq,
            cross: scale * mid,
        }
    }

    /// `int phi exp(phi)` over the piece.
    pub fn phi_weighted(&self, a: f64, b: f64) -> f64 {
        a * self.left + b * self.right
    }
}

/// Log of `int_0^len exp(a + (b - a) u / len) du`.
pub fn log_integral_exp_segment(a: f64, b: f64, len: f64) -> Result<f64> {
    if !(len >= 0.0) || !len.is_finite() {
        return Err(invalid(format!(
            "segment length must be finite and >= 0, got {len}"
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(invalid("segment endpoint values must be finite"));
    }
    if len == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let t = -(b - a).abs();
    Ok(len.ln() + a.max(b) + exp_moment(0, t).ln())
}
