//! Adaptive quadrature used by the analytic entropy oracles.
//!
//! Adaptive Simpson with interval bisection: each interval is accepted when
//! the embedded coarse/fine pair agrees to the allotted share of the error
//! budget, otherwise it is split. Integrands with kinks must be split at the
//! kinks by the caller (the law types expose their knots).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge to tolerance {tol:e} (best error estimate {best:e})")]
    Nonconvergent { tol: f64, best: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

const MAX_DEPTH: u32 = 60;

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, f64> {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(delta.abs() / 15.0);
    }
    let l = adapt(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth + 1);
    let r = adapt(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth + 1);
    match (l, r) {
        (Ok(x), Ok(y)) => Ok(x + y),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is pre-split into 16 panels before adaptive bisection so
/// narrow interior features cannot hide between the first probe points.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    const PANELS: usize = 16;
    let per = tol / PANELS as f64;
    let width = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + i as f64 * width;
        let hi = if i == PANELS - 1 { b } else { lo + width };
        let flo = f(lo);
        let fhi = f(hi);
        let (whole, m, fm) = simpson(&f, lo, flo, hi, fhi);
        total += adapt(&f, lo, flo, hi, fhi, whole, m, fm, per, 0)
            .map_err(|best| QuadError::Nonconvergent { tol, best })?;
    }
    Ok(total)
}

/// Integrate over a union of subintervals split at `knots` (interior break
/// points where the integrand may lose smoothness).
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    knots: &[f64],
    tol: f64,
) -> Result<f64, QuadError> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(knots.iter().copied().filter(|&k| k > a && k < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let per = tol / (pts.len() - 1) as f64;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], per)?;
    }
    Ok(total)
}
