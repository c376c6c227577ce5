//! Scalar root finding and adaptive 1D integration.

use crate::error::{Error, Result};

/// Safeguarded Newton iteration on a sign-changing bracket.
///
/// `f` returns the value and, when available, the derivative. A Newton step
/// that leaves the bracket or fails to halve it is replaced by bisection.
pub fn newton_bisect(
    mut f: impl FnMut(f64) -> (f64, Option<f64>),
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    let mut widths = [hi - lo; 2];
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let width = hi - lo;
        if width <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        // Newton unless it leaves the bracket or two steps failed to halve it.
        let stalled = width > 0.5 * widths[0];
        widths = [widths[1], width];
        x = match dfx.filter(|d| *d != 0.0).map(|d| x - fx / d) {
            Some(xn) if !stalled && xn > lo && xn < hi => xn,
            _ => 0.5 * (lo + hi),
        };
    }
    // Accept a bracket that has collapsed to rounding even if |f| is above
    // the requested tolerance (steep functions).
    if hi - lo <= 1e-13 * x.abs().max(1.0) {
        return Ok(x);
    }
    Err(Error::Numerical(format!(
        "root iteration did not converge on [{lo}, {hi}]"
    )))
}

/// The root of `g` nearest to `t = 0`, searched in both directions.
///
/// Brackets grow geometrically from `horizon / 2^20` up to `horizon`, then
/// the horizon doubles up to `expansions` times. Returns `None` when no sign
/// change is found.
pub fn nearest_root(
    mut g: impl FnMut(f64) -> (f64, Option<f64>),
    horizon: f64,
    expansions: usize,
    f_tol: f64,
) -> Result<Option<f64>> {
    let (g0, _) = g(0.0);
    if g0.abs() <= f_tol {
        return Ok(Some(0.0));
    }
    let mut step = horizon / (1 << 20) as f64;
    let mut prev = 0.0;
    let (mut gp_prev, mut gm_prev) = (g0, g0);
    let limit = horizon * (1u64 << expansions) as f64;
    while prev < limit {
        let t = (2.0 * step).min(limit).max(prev + step);
        let (gp, _) = g(t);
        let (gm, _) = g(-t);
        let plus = gp.signum() != gp_prev.signum() || gp.abs() <= f_tol;
        let minus = gm.signum() != gm_prev.signum() || gm.abs() <= f_tol;
        let root_plus = if plus {
            Some(newton_bisect(&mut g, prev, t, f_tol, 200)?)
        } else {
            None
        };
        let root_minus = if minus {
            Some(newton_bisect(&mut g, -t, -prev, f_tol, 200)?)
        } else {
            None
        };
        match (root_plus, root_minus) {
            (Some(p), Some(m)) => return Ok(Some(if p <= -m { p } else { m })),
            (Some(p), None) => return Ok(Some(p)),
            (None, Some(m)) => return Ok(Some(m)),
            (None, None) => {}
        }
        prev = t;
        step = t;
        gp_prev = gp;
        gm_prev = gm;
    }
    Ok(None)
}

/// The smallest root of `g` on `t ≥ 0`, by geometric bracket growth.
pub fn first_positive_root(
    mut g: impl FnMut(f64) -> (f64, Option<f64>),
    horizon: f64,
    expansions: usize,
    f_tol: f64,
) -> Result<Option<f64>> {
    let (g0, _) = g(0.0);
    if g0.abs() <= f_tol {
        return Ok(Some(0.0));
    }
    let mut prev = 0.0;
    let mut g_prev = g0;
    let mut step = horizon / (1 << 20) as f64;
    let limit = horizon * (1u64 << expansions) as f64;
    while prev < limit {
        let t = (2.0 * step).min(limit).max(prev + step);
        let (gt, _) = g(t);
        if gt.signum() != g_prev.signum() || gt.abs() <= f_tol {
            return newton_bisect(&mut g, prev, t, f_tol, 200).map(Some);
        }
        prev = t;
        step = t;
        g_prev = gt;
    }
    Ok(None)
}

/// Bracketing root solve without derivatives.
pub fn bisect_root(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    newton_bisect(|x| (f(x), None), lo, hi, 0.0, 400)
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
/// Returns the integral and the final error estimate.
pub fn integrate_adaptive(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    const MAX_INTERVALS: usize = 2000;
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "adaptive quadrature stalled: estimate {total}, error {err:e}"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Interval at rounding resolution; its error cannot improve.
            let total: f64 = pieces.iter().map(|p| p.2).sum();
            return Err(Error::Numerical(format!(
                "adaptive quadrature hit rounding resolution near {mid}: estimate {total}"
            )));
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}
