//! Scalar search helpers: golden-section maximization and bisection.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Location and value of a maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol`. The endpoints are also
/// evaluated so monotone functions return the better boundary.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Maximum {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut best = Maximum {
        x: lo,
        value: f(lo),
    };
    let consider = |x: f64, v: f64, best: &mut Maximum| {
        if v > best.value || best.value.is_nan() {
            *best = Maximum { x, value: v };
        }
    };
    let fb = f(hi);
    consider(hi, fb, &mut best);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);
    let tol = tol.max(f64::EPSILON * (lo.abs() + hi.abs()));
    while hi - lo > tol {
        if f1 >= f2 || f2.is_nan() {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            consider(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            consider(x2, f2, &mut best);
        }
    }
    best
}

/// Grid scan with `grid` evenly spaced points, followed by golden-section
/// refinement in the cell around the best grid point. Never returns a value
/// below the best grid sample.
pub fn grid_golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    grid: usize,
    tol: f64,
) -> Maximum {
    let grid = grid.max(2);
    let step = (b - a) / (grid - 1) as f64;
    let mut best = Maximum {
        x: a,
        value: f64::NEG_INFINITY,
    };
    let mut best_i = 0;
    for i in 0..grid {
        let x = if i + 1 == grid {
            b
        } else {
            a + step * i as f64
        };
        let v = f(x);
        if v > best.value {
            best = Maximum { x, value: v };
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    let refined = golden_max(&mut f, lo, hi, tol);
    if refined.value > best.value {
        refined
    } else {
        best
    }
}

/// Root of a sign-changing function on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
}

/// Bisection until the bracket is narrower than `xtol` or `|f| < ftol`.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    ftol: f64,
) -> Result<Root> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(Root {
            x: lo,
            residual: 0.0,
        });
    }
    if fhi == 0.0 {
        return Ok(Root {
            x: hi,
            residual: 0.0,
        });
    }
    if !(flo.signum() != fhi.signum()) || flo.is_nan() || fhi.is_nan() {
        return Err(Error::Numeric(format!(
            "no sign change on [{a}, {b}] (f = {flo}, {fhi})"
        )));
    }
    let mut best = if flo.abs() < fhi.abs() {
        Root {
            x: lo,
            residual: flo,
        }
    } else {
        Root {
            x: hi,
            residual: fhi,
        }
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() < best.residual.abs() {
            best = Root {
                x: mid,
                residual: fm,
            };
        }
        if fm == 0.0 || fm.abs() < ftol && (hi - lo) < xtol {
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < xtol && best.residual.abs() < ftol {
            break;
        }
    }
    Ok(best)
}
