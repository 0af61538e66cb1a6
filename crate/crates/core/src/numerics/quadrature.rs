//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 40;
const MAX_EVALUATIONS: usize = 20_000_000;
/// Uniform panels adapted independently. Keeps a narrow transition from
/// slipping between the first few sample points.
const INITIAL_PANELS: usize = 32;
const ABS_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

struct Simpson<F> {
    f: F,
    evaluations: usize,
    exhausted: bool,
    error: f64,
}

impl<F: Fn(f64) -> f64> Simpson<F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn adapt(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        let diff = refined - whole;
        // Rounding noise puts a floor under what any tolerance can demand.
        let tol = tol.max(8.0 * f64::EPSILON * refined.abs());
        if diff.abs() <= 15.0 * tol {
            self.error += diff.abs() / 15.0;
            return refined + diff / 15.0;
        }
        if depth >= MAX_DEPTH || self.evaluations >= MAX_EVALUATIONS {
            self.exhausted = true;
            self.error += diff.abs() / 15.0;
            return refined + diff / 15.0;
        }
        self.adapt(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.adapt(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Integrates `f` over `[a, b]` to within `rel_tol * |I| + 1e-14`.
///
/// Fails with [`Error::Quadrature`] (carrying the best estimate) if a
/// subinterval hits the depth limit without meeting its tolerance.
pub fn integrate<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain("integrate", format!("invalid interval [{a}, {b}]")));
    }
    if rel_tol.is_nan() || rel_tol < 1e-12 {
        return Err(Error::domain("integrate", format!("rel_tol {rel_tol} below 1e-12")));
    }

    let mut s = Simpson {
        f,
        evaluations: 0,
        exhausted: false,
        error: 0.0,
    };

    let h = (b - a) / INITIAL_PANELS as f64;
    let xs: Vec<f64> = (0..=2 * INITIAL_PANELS)
        .map(|i| {
            if i == 2 * INITIAL_PANELS {
                b
            } else {
                a + 0.5 * h * i as f64
            }
        })
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| s.eval(x)).collect();
    if let Some(bad) = fs.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain(
            "integrate",
            format!("integrand not finite at x = {}", xs[bad]),
        ));
    }

    let panel = |i: usize| {
        let (x0, x2) = (xs[2 * i], xs[2 * i + 2]);
        (x2 - x0) / 6.0 * (fs[2 * i] + 4.0 * fs[2 * i + 1] + fs[2 * i + 2])
    };
    let coarse: f64 = (0..INITIAL_PANELS).map(panel).sum();
    let tol = (rel_tol * coarse.abs()).max(ABS_FLOOR) / INITIAL_PANELS as f64;

    let mut value = 0.0;
    for i in 0..INITIAL_PANELS {
        value += s.adapt(
            xs[2 * i],
            xs[2 * i + 2],
            fs[2 * i],
            fs[2 * i + 1],
            fs[2 * i + 2],
            panel(i),
            tol,
            0,
        );
    }

    if s.exhausted || !value.is_finite() {
        return Err(Error::Quadrature {
            estimate: value,
            error_bound: s.error,
        });
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate: s.error,
        evaluations: s.evaluations,
    })
}
