//! Scalar root finding and adaptive quadrature.
//!
//! Everything the solvers need reduces to two primitives: bisection against
//! monotone functions (brackets are always known analytically in this model)
//! and adaptive Simpson quadrature for the metric integrals.

use crate::error::{Error, Result};

/// Smallest `x` in `[lo, hi]` with `f(x) >= target`, for nondecreasing `f`.
///
/// Returns `lo` if the target is already met there and `hi` if it is never
/// met; callers that need a true equation solution must ensure
/// `f(lo) <= target <= f(hi)`. The result is accurate to `tol_x` in the
/// argument.
pub fn invert_nondecreasing<F>(f: F, lo: f64, hi: f64, target: f64, tol_x: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    debug_assert!(lo <= hi);
    if f(lo) >= target {
        return lo;
    }
    if f(hi) < target {
        return hi;
    }
    // Invariant: f(a) < target <= f(b).
    let (mut a, mut b) = (lo, hi);
    let mut iter = 0;
    while b - a > tol_x && iter < 200 {
        let mid = 0.5 * (a + b);
        if f(mid) >= target {
            b = mid;
        } else {
            a = mid;
        }
        iter += 1;
    }
    b
}

/// Bisection root of a continuous function with a sign change on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol_x` or after `max_iter`
/// halvings, whichever comes first.
pub fn bisect_root<F>(f: F, lo: f64, hi: f64, tol_x: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::Precondition(format!(
            "no sign change on bracket [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}"
        )));
    }
    let (mut a, mut b, mut fa) = (lo, hi, flo);
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        if b - a <= tol_x || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance
/// `tol_abs`, with a hard cap on the number of interval subdivisions.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol_abs: f64, max_subdiv: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut used = 0usize;
    refine(
        &f, a, fa, m, fm, b, fb, whole, tol_abs, 0, &mut used, max_subdiv,
    )
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    used: &mut usize,
    max_subdiv: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    *used += 1;
    if *used > max_subdiv {
        return Err(Error::NoConvergence(format!(
            "quadrature exceeded {max_subdiv} subdivisions"
        )));
    }
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // A few forced splits guard against symmetric integrands that fool the
    // first error estimate.
    if depth >= 3 && delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let half = 0.5 * tol;
    let l = refine(
        f,
        a,
        fa,
        lm,
        flm,
        m,
        fm,
        left,
        half,
        depth + 1,
        used,
        max_subdiv,
    )?;
    let r = refine(
        f,
        m,
        fm,
        rm,
        frm,
        b,
        fb,
        right,
        half,
        depth + 1,
        used,
        max_subdiv,
    )?;
    Ok(l + r)
}
