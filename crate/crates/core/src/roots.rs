//! Bracketing root finder for increasing scalar functions.

use crate::error::{Error, Result};

const MAX_DOUBLINGS: usize = 2000;
const MAX_BISECTIONS: usize = 4000;

/// Finds the root of `f` on `(0, inf)` assuming `f(0+) < 0` and `f`
/// eventually positive. The upper end starts at `upper` and is doubled until
/// `f` turns nonnegative; bisection then runs until the bracket stops
/// shrinking in floating point.
pub fn bisect_increasing<F>(f: F, upper: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(Error::invalid("upper", "initial bracket must be positive"));
    }
    let mut lo = 0.0_f64;
    let mut hi = upper;
    let mut grown = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::DegenerateInput("no sign change found"));
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick whichever end has the smaller residual
    Ok(if f(lo).abs() < f(hi).abs() { lo } else { hi })
}
