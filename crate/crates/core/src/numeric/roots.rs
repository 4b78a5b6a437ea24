//! Bracketed root finding for monotone functions.

use crate::error::{Error, Result};

/// Finds the root of a nondecreasing function on `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)`, where `f` returns `(value, derivative)`.
///
/// Newton steps are taken from `start` and replaced by bisection whenever they
/// leave the current bracket. Stops once the bracket or the step is below
/// `rel_tol * |x|`.
pub fn newton_bracketed<F>(mut f: F, mut lo: f64, mut hi: f64, start: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let mut x = if start > lo && start < hi {
        start
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let scale = rel_tol * x.abs().max(f64::MIN_POSITIVE);
        if hi - lo <= scale {
            return Ok(0.5 * (lo + hi));
        }
        let newton = if dfx > 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical {
        routine: "newton_bracketed",
        achieved: hi - lo,
        requested: rel_tol,
    })
}

/// Doubles `step` from `lo` until `f(lo + step) >= 0`; returns the upper end.
pub fn expand_upper<F>(mut f: F, lo: f64, mut step: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..2000 {
        let hi = lo + step;
        if f(hi) >= 0.0 {
            return Ok(hi);
        }
        step *= 2.0;
        if !step.is_finite() {
            break;
        }
    }
    Err(Error::Numerical {
        routine: "expand_upper",
        achieved: f64::INFINITY,
        requested: 0.0,
    })
}
