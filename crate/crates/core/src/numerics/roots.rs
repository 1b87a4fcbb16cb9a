//! Root finding for increasing functions on [0, ∞).

use crate::error::{Error, Result};

/// Root of an increasing `f` with `f(0) < 0`.
///
/// Brackets by doubling from 1 until the sign changes, runs 80 bisection
/// steps and then polishes with Newton steps when `df` is supplied. The
/// Newton iterate is only kept when it stays in the bracket and reduces |f|.
pub fn increasing_root<F, D>(f: F, df: Option<D>, upper_limit: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut f_hi = f(hi);
    while f_hi < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > upper_limit || !f_hi.is_finite() {
            return Err(Error::numerical(format!(
                "no sign change below {upper_limit:e}; parameters look pathological"
            )));
        }
        f_hi = f(hi);
    }
    if f_hi.is_nan() {
        return Err(Error::numerical("objective is NaN at the bracket end"));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    if let Some(df) = df {
        let mut fx = f(x);
        for _ in 0..4 {
            let d = df(x);
            if !(d > 0.0) {
                break;
            }
            let cand = x - fx / d;
            if !(cand >= lo && cand <= hi) {
                break;
            }
            let fc = f(cand);
            if fc.abs() < fx.abs() {
                x = cand;
                fx = fc;
            } else {
                break;
            }
        }
    }
    Ok(x)
}
