//! Gaussian tail probability and its inverse.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Upper tail of the standard normal, `P[N(0,1) > x]`.
///
/// Evaluated through `erfc`, which keeps full relative precision deep into
/// the tail (Q(7) ~ 1e-12 is where the interesting BLER targets live).
pub fn q_func(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("q_func", format!("non-finite argument {x}")));
    }
    Ok(q(x))
}

/// Unchecked variant of [`q_func`] for hot loops with known-finite input.
/// Infinite arguments map to the limits 0 and 1.
#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

#[inline]
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`q_func`]: the `x` with `Q(x) = p`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("q_inv", format!("probability {p} outside (0, 1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        // 1 - p is exact for p in [0.5, 1).
        return Ok(-upper_tail_inv(1.0 - p));
    }
    Ok(upper_tail_inv(p))
}

/// Solves `Q(x) = p` for `p < 0.5` (so `x > 0`).
fn upper_tail_inv(p: f64) -> f64 {
    // Abramowitz & Stegun 26.2.23, |error| < 4.5e-4.
    let t = (-2.0 * p.ln()).sqrt();
    let mut x = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t) / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
    x = x.max(0.0);

    // Newton on log Q(x) - log p. log Q is concave, so the iteration is
    // monotone once close and does not overshoot into the far tail.
    let log_p = p.ln();
    for _ in 0..50 {
        let qx = q(x);
        let step = (qx.ln() - log_p) * qx / normal_pdf(x);
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}
