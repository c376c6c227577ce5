//! Polyharmonic splines, monomial bases and their exact integrals over
//! tetrahedra and plane triangles.
//!
//! Monomials are ordered graded-lexicographically: `1; x, y, z; x², xy, xz,
//! y², yz, z²; …` in 3D and `1; x, y; x², xy, y²; …` in 2D. Every routine
//! that returns one value per basis term uses that order.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::{Point2, Point3, Tetrahedron, Vec2, DEGENERACY_TOL};

/// Odd polyharmonic spline `φ(r) = r^(2p+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhsRbf {
    pub exponent_p: u32,
}

impl PhsRbf {
    /// `φ(r) = r³`, used for the volume interpolant.
    pub const CUBIC: PhsRbf = PhsRbf { exponent_p: 1 };
    /// `φ(r) = r⁷`, used for the plane interpolant of the sliver heights.
    pub const SEPTIC: PhsRbf = PhsRbf { exponent_p: 3 };

    pub const fn new(exponent_p: u32) -> Self {
        PhsRbf { exponent_p }
    }

    /// The odd power `2p + 1`.
    #[inline]
    pub fn power(self) -> i32 {
        2 * self.exponent_p as i32 + 1
    }

    #[inline]
    pub fn eval(self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "negative radius {r}");
        r.powi(self.power())
    }
}

fn factorial_table(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Trivariate monomials of total degree `≤ m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyBasis3 {
    degree: u32,
    exponents: Vec<[u32; 3]>,
}

impl PolyBasis3 {
    pub fn new(degree: u32) -> Self {
        let mut exponents = Vec::with_capacity(Self::term_count(degree));
        for d in 0..=degree {
            for i in (0..=d).rev() {
                for j in (0..=(d - i)).rev() {
                    exponents.push([i, j, d - i - j]);
                }
            }
        }
        PolyBasis3 { degree, exponents }
    }

    /// `(m+1)(m+2)(m+3)/6`.
    pub const fn term_count(degree: u32) -> usize {
        let m = degree as usize;
        (m + 1) * (m + 2) * (m + 3) / 6
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; 3]] {
        &self.exponents
    }

    pub fn eval(&self, x: Point3) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// Writes every monomial at `x` into `out` (length `len()`).
    pub fn eval_into(&self, x: Point3, out: &mut [f64]) {
        let m = self.degree as usize;
        let mut px = [1.0; 32];
        let mut py = [1.0; 32];
        let mut pz = [1.0; 32];
        for k in 1..=m {
            px[k] = px[k - 1] * x.x;
            py[k] = py[k - 1] * x.y;
            pz[k] = pz[k - 1] * x.z;
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = px[e[0] as usize] * py[e[1] as usize] * pz[e[2] as usize];
        }
    }
}

/// Bivariate monomials of total degree `≤ γ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyBasis2 {
    degree: u32,
    exponents: Vec<[u32; 2]>,
}

impl PolyBasis2 {
    pub fn new(degree: u32) -> Self {
        let mut exponents = Vec::with_capacity(Self::term_count(degree));
        for d in 0..=degree {
            for i in (0..=d).rev() {
                exponents.push([i, d - i]);
            }
        }
        PolyBasis2 { degree, exponents }
    }

    /// `(γ+1)(γ+2)/2`.
    pub const fn term_count(degree: u32) -> usize {
        let g = degree as usize;
        (g + 1) * (g + 2) / 2
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[u32; 2]] {
        &self.exponents
    }

    pub fn eval_into(&self, u: Point2, out: &mut [f64]) {
        let g = self.degree as usize;
        let mut px = vec![1.0; g + 1];
        let mut py = vec![1.0; g + 1];
        for k in 1..=g {
            px[k] = px[k - 1] * u.x;
            py[k] = py[k - 1] * u.y;
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = px[e[0] as usize] * py[e[1] as usize];
        }
    }

    pub fn eval(&self, u: Point2) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(u, &mut out);
        out
    }
}

/// Exact `∫_S x^α` over a `D`-simplex given by `D + 1` vertices with
/// `D`-volume `measure`.
///
/// Writes `x = Σ_v λ_v x_v` in barycentric coordinates, expands each power
/// multinomially and integrates the products with
/// `∫ Π λ_v^{k_v} = D! |S| Π k_v! / (Σk_v + D)!`.
fn simplex_monomial_moment<const D: usize>(vertices: &[[f64; D]], alpha: &[u32; D], measure: f64, fact: &[f64]) -> f64 {
    let nv = D + 1;
    debug_assert_eq!(vertices.len(), nv);
    let total: usize = alpha.iter().map(|&a| a as usize).sum();

    // Recursive enumeration of β^v_c with Σ_v β^v_c = α_c for each c.
    #[allow(clippy::too_many_arguments)]
    fn recurse<const D: usize>(
        c: usize,
        v: usize,
        remaining: u32,
        split: &mut [[u32; D]],
        vertices: &[[f64; D]],
        alpha: &[u32; D],
        fact: &[f64],
        acc: &mut f64,
    ) {
        let nv = D + 1;
        if c == D {
            let mut term = 1.0;
            for (beta, x) in split.iter().zip(vertices) {
                let k: u32 = beta.iter().sum();
                term *= fact[k as usize];
                for cc in 0..D {
                    let e = beta[cc];
                    if e > 0 {
                        term *= x[cc].powi(e as i32) / fact[e as usize];
                    }
                }
            }
            *acc += term;
            return;
        }
        if v == nv - 1 {
            split[v][c] = remaining;
            let next = if c + 1 < D { alpha[c + 1] } else { 0 };
            recurse::<D>(c + 1, 0, next, split, vertices, alpha, fact, acc);
            return;
        }
        for e in 0..=remaining {
            split[v][c] = e;
            recurse::<D>(c, v + 1, remaining - e, split, vertices, alpha, fact, acc);
        }
    }

    let mut split = vec![[0u32; D]; nv];
    let mut acc = 0.0;
    recurse::<D>(0, 0, alpha[0], &mut split, vertices, alpha, fact, &mut acc);
    let alpha_fact: f64 = alpha.iter().map(|&a| fact[a as usize]).product();
    fact[D] * measure * alpha_fact / fact[total + D] * acc
}

/// Exact integrals of every basis monomial over the tetrahedron.
pub fn tet_poly_moments(t: &Tetrahedron, basis: &PolyBasis3) -> Result<Vec<f64>, GeometryError> {
    if t.is_degenerate() {
        return Err(GeometryError::DegenerateTet);
    }
    let volume = t.volume();
    let verts: Vec<[f64; 3]> = t.vertices().iter().map(|p| p.to_array()).collect();
    let fact = factorial_table(basis.degree() as usize + 3);
    Ok(basis
        .exponents()
        .iter()
        .map(|alpha| simplex_monomial_moment::<3>(&verts, alpha, volume, &fact))
        .collect())
}

fn signed_area_2d(v: &[Point2; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(v[2] - v[0])
}

fn triangle_is_degenerate(v: &[Point2; 3]) -> bool {
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in v {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    !(signed_area_2d(v).abs() > DEGENERACY_TOL * extent * extent)
}

/// Exact integrals of the bivariate monomials over a plane triangle.
pub fn triangle_poly_moments_2d(vertices: &[Point2; 3], basis: &PolyBasis2) -> Result<Vec<f64>, GeometryError> {
    if triangle_is_degenerate(vertices) {
        return Err(GeometryError::DegenerateFace);
    }
    let area = signed_area_2d(vertices).abs();
    let verts: Vec<[f64; 2]> = vertices.iter().map(|p| [p.x, p.y]).collect();
    let fact = factorial_table(basis.degree() as usize + 2);
    Ok(basis
        .exponents()
        .iter()
        .map(|alpha| simplex_monomial_moment::<2>(&verts, alpha, area, &fact))
        .collect())
}

/// `h^k ∫ sec^k ψ dψ` written in terms of the signed foot-point offset
/// `s = h tan ψ`, for odd `k`.
fn scaled_secant_antiderivative(k: i32, s: f64, h: f64) -> f64 {
    let h2 = h * h;
    let rho2 = s * s + h2;
    let mut l = h * (s / h).asinh();
    let mut kk = 3;
    while kk <= k {
        let kf = kk as f64;
        l = (h * s * rho2.powf(0.5 * (kf - 2.0)) + h2 * (kf - 2.0) * l) / (kf - 1.0);
        kk += 2;
    }
    l
}

/// `∫∫_T ‖u - center‖^(2p+1) du` over a plane triangle.
///
/// The triangle is split into three signed triangles that share `center`.
/// Each one is integrated in polar coordinates about `center`: the radial
/// integral is elementary and the angular one reduces to a secant power with
/// a closed-form antiderivative.
pub fn triangle_phs_integral_2d(vertices: &[Point2; 3], center: Point2, rbf: PhsRbf) -> Result<f64, GeometryError> {
    if triangle_is_degenerate(vertices) {
        return Err(GeometryError::DegenerateFace);
    }
    let orientation = signed_area_2d(vertices).signum();
    let k = rbf.power() + 2;
    let scale = vertices
        .iter()
        .map(|v| (*v - center).norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut total = 0.0;
    for i in 0..3 {
        let p0 = vertices[i] - center;
        let p1 = vertices[(i + 1) % 3] - center;
        let edge = p1 - p0;
        let len = edge.norm();
        let dir = edge / len;
        // Signed distance from the center to the edge line.
        let h = p0.cross(dir);
        if h.abs() <= 1e-14 * scale {
            continue;
        }
        let s0 = p0.dot(dir);
        let s1 = p1.dot(dir);
        let ha = h.abs();
        let piece = (scaled_secant_antiderivative(k, s1, ha) - scaled_secant_antiderivative(k, s0, ha)) / k as f64;
        total += h.signum() * piece;
    }
    Ok(orientation * total)
}
