//! Reference values of the test integrals over solids of revolution.
//!
//! In cylindrical coordinates about the x-axis,
//! `∫_Ω f dV = ∫_{-L}^{L} ∫_0^{ρ(x)} ∫_0^{2π} f ρ dθ dρ dx`. The `x` and `ρ`
//! integrals are adaptive Gauss–Kronrod; the `θ` integral of a smooth
//! periodic function is done with the trapezoid rule, which converges
//! geometrically. Because the solids are symmetric under rotation about the
//! x-axis, one reference value serves every rotated copy of an integrand.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::levelset::{ImplicitSurface, RevolutionProfile};
use crate::roots::integrate_adaptive;

use super::integrands::{IntegrandKind, Polynomial, TestIntegrand};

/// Trapezoid points for the angular integral.
pub const THETA_POINTS: usize = 96;

/// `∫_Ω f dV` to relative accuracy about `rel_tol`.
pub fn reference_value(f: &TestIntegrand, surface: &dyn ImplicitSurface, rel_tol: f64) -> Result<f64> {
    let profile = surface
        .revolution()
        .ok_or_else(|| Error::Config("reference values need a solid of revolution about the x-axis".into()))?;
    match f.kind {
        // Odd in z over a domain symmetric in z.
        IntegrandKind::F3 => Ok(0.0),
        IntegrandKind::F1 => {
            let poly = f
                .polynomial_terms()
                .ok_or_else(|| Error::Config("f1 without coefficients".into()))?;
            polynomial_integral(poly, profile, rel_tol)
        }
        _ => revolution_integral(|p| f.eval_base(p), profile, rel_tol),
    }
}

/// Nested cylindrical-coordinate integral of `f` over the solid.
pub fn revolution_integral(f: impl Fn(Vec3) -> f64, profile: &dyn RevolutionProfile, rel_tol: f64) -> Result<f64> {
    let l = profile.half_length();
    let dtheta = std::f64::consts::TAU / THETA_POINTS as f64;
    let trig: Vec<(f64, f64)> = (0..THETA_POINTS).map(|k| (k as f64 * dtheta).sin_cos()).collect();
    let mut inner_err: Option<Error> = None;
    let outer = |x: f64| {
        let rmax = profile.section_radius_sq(x).sqrt();
        if rmax == 0.0 {
            return 0.0;
        }
        let ring = |rho: f64| {
            let s: f64 = trig.iter().map(|&(sn, cs)| f(Vec3::new(x, rho * cs, rho * sn))).sum();
            rho * s * dtheta
        };
        match integrate_adaptive(ring, 0.0, rmax, 0.0, 0.1 * rel_tol) {
            Ok((v, _)) => v,
            Err(e) => {
                inner_err.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let (value, _) = integrate_adaptive(outer, -l, l, 0.0, rel_tol)?;
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(value)
}

/// `∫_0^{2π} cos^b θ sin^c θ dθ`: zero unless both are even, then
/// `2π (b-1)!! (c-1)!! / (b+c)!!`.
pub fn angular_moment(b: u32, c: u32) -> f64 {
    if b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    let double_fact = |n: i64| -> f64 {
        let mut acc = 1.0;
        let mut k = n;
        while k > 1 {
            acc *= k as f64;
            k -= 2;
        }
        acc
    };
    std::f64::consts::TAU * double_fact(b as i64 - 1) * double_fact(c as i64 - 1) / double_fact((b + c) as i64)
}

/// Exact reduction of monomial integrals to 1D:
/// `∫ x^a y^b z^c dV = Θ(b,c)/(b+c+2) ∫ x^a ρ(x)^(b+c+2) dx`.
pub fn polynomial_integral(poly: &Polynomial, profile: &dyn RevolutionProfile, rel_tol: f64) -> Result<f64> {
    let l = profile.half_length();
    let deg = poly.degree();
    // axial[a][j] = ∫ x^a (ρ²)^(j+1) dx.
    let mut axial = vec![vec![None; deg / 2 + 2]; deg + 1];
    let mut total = 0.0;
    for (e, coef) in poly.exponents.iter().zip(&poly.coefficients) {
        let (a, b, c) = (e[0] as usize, e[1] as u32, e[2] as u32);
        let theta = angular_moment(b, c);
        if theta == 0.0 {
            continue;
        }
        let j = ((b + c) / 2) as usize;
        let moment = match axial[a][j] {
            Some(v) => v,
            None => {
                let (v, _) = integrate_adaptive(
                    |x| x.powi(a as i32) * profile.section_radius_sq(x).powi(j as i32 + 1),
                    -l,
                    l,
                    1e-300,
                    rel_tol,
                )?;
                axial[a][j] = Some(v);
                v
            }
        };
        total += coef * theta * moment / (b + c + 2) as f64;
    }
    Ok(total)
}
