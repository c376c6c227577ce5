//! Brute-force oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the closed forms or LGL code it checks.

#![allow(dead_code)]

use volquad::geometry::{Point2, Tetrahedron, Vec2, Vec3};

/// Gauss-Legendre nodes and weights on `[0, 1]` by Newton on `P_g`.
pub fn gauss_legendre_unit(g: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(g);
    for i in 0..g {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (g as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=g {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = g as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out
}

/// Conical-product rule on a tetrahedron from `g³` collapsed Gauss points.
fn tet_rule_estimate(f: &dyn Fn(Vec3) -> f64, t: &Tetrahedron, gl: &[(f64, f64)]) -> f64 {
    let vol6 = t.signed_six_volume().abs();
    let (e1, e2, e3) = (t.b - t.a, t.c - t.a, t.d - t.a);
    let mut sum = 0.0;
    for &(u, wu) in gl {
        for &(v, wv) in gl {
            for &(w, ww) in gl {
                let x1 = u;
                let x2 = v * (1.0 - u);
                let x3 = w * (1.0 - u) * (1.0 - v);
                let jac = (1.0 - u) * (1.0 - u) * (1.0 - v);
                let p = t.a + e1 * x1 + e2 * x2 + e3 * x3;
                sum += wu * wv * ww * jac * f(p);
            }
        }
    }
    sum * vol6
}

fn bisect_tet(t: &Tetrahedron) -> (Tetrahedron, Tetrahedron) {
    let v = t.vertices();
    let mut best = (0, 1, 0.0);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let l = (v[i] - v[j]).norm_squared();
            if l > best.2 {
                best = (i, j, l);
            }
        }
    }
    let (i, j, _) = best;
    let mid = (v[i] + v[j]) * 0.5;
    let mut t1 = v;
    let mut t2 = v;
    t1[i] = mid;
    t2[j] = mid;
    (
        Tetrahedron::new(t1[0], t1[1], t1[2], t1[3]),
        Tetrahedron::new(t2[0], t2[1], t2[2], t2[3]),
    )
}

fn adapt_tet(f: &dyn Fn(Vec3) -> f64, t: &Tetrahedron, whole: f64, tol: f64, depth: usize, gl: &[(f64, f64)]) -> f64 {
    let (t1, t2) = bisect_tet(t);
    let i1 = tet_rule_estimate(f, &t1, gl);
    let i2 = tet_rule_estimate(f, &t2, gl);
    let refined = i1 + i2;
    if (refined - whole).abs() <= tol || depth >= 40 {
        return refined;
    }
    adapt_tet(f, &t1, i1, 0.5 * tol, depth + 1, gl) + adapt_tet(f, &t2, i2, 0.5 * tol, depth + 1, gl)
}

/// Adaptive recursive-bisection integral of `f` over a tetrahedron, to an
/// absolute tolerance `tol`.
pub fn tet_integral(f: &dyn Fn(Vec3) -> f64, t: &Tetrahedron, tol: f64) -> f64 {
    let gl = gauss_legendre_unit(7);
    let whole = tet_rule_estimate(f, t, &gl);
    adapt_tet(f, t, whole, tol, 0, &gl)
}

/// Collapsed `g³`-point Gauss product rule over a tetrahedron; exact for
/// polynomials of total degree up to `2g - 3`.
pub fn tet_gauss(f: &dyn Fn(Vec3) -> f64, t: &Tetrahedron, g: usize) -> f64 {
    tet_rule_estimate(f, t, &gauss_legendre_unit(g))
}

/// `∫_t ‖x - c‖^(2p+1)` by brute force, to relative tolerance `rel`.
pub fn tet_phs_oracle(t: &Tetrahedron, c: Vec3, p: u32, rel: f64) -> f64 {
    let n = 2 * p as i32 + 1;
    let f = move |x: Vec3| (x - c).norm().powi(n);
    let gl = gauss_legendre_unit(7);
    let rough = tet_rule_estimate(&f, t, &gl).abs();
    tet_integral(&f, t, rel * rough)
}

fn tri_rule_estimate(f: &dyn Fn(Point2) -> f64, v: &[Point2; 3], gl: &[(f64, f64)]) -> f64 {
    let area2 = (v[1] - v[0]).cross(v[2] - v[0]).abs();
    let mut sum = 0.0;
    for &(u, wu) in gl {
        for &(w, ww) in gl {
            let x1 = u;
            let x2 = w * (1.0 - u);
            let p = v[0] + (v[1] - v[0]) * x1 + (v[2] - v[0]) * x2;
            sum += wu * ww * (1.0 - u) * f(p);
        }
    }
    sum * area2
}

fn adapt_tri(f: &dyn Fn(Point2) -> f64, v: &[Point2; 3], whole: f64, tol: f64, depth: usize, gl: &[(f64, f64)]) -> f64 {
    // Split into four by edge midpoints.
    let m01 = (v[0] + v[1]) * 0.5;
    let m12 = (v[1] + v[2]) * 0.5;
    let m20 = (v[2] + v[0]) * 0.5;
    let kids = [[v[0], m01, m20], [m01, v[1], m12], [m20, m12, v[2]], [m01, m12, m20]];
    let parts: Vec<f64> = kids.iter().map(|k| tri_rule_estimate(f, k, gl)).collect();
    let refined: f64 = parts.iter().sum();
    if (refined - whole).abs() <= tol || depth >= 25 {
        return refined;
    }
    kids.iter()
        .zip(parts)
        .map(|(k, p)| adapt_tri(f, k, p, 0.25 * tol, depth + 1, gl))
        .sum()
}

/// Adaptive integral of `f` over a plane triangle to absolute tolerance.
pub fn triangle_integral(f: &dyn Fn(Point2) -> f64, v: &[Point2; 3], tol: f64) -> f64 {
    let gl = gauss_legendre_unit(8);
    let whole = tri_rule_estimate(f, v, &gl);
    adapt_tri(f, v, whole, tol, 0, &gl)
}

pub fn triangle_phs_oracle(v: &[Point2; 3], c: Vec2, p: u32, rel: f64) -> f64 {
    let n = 2 * p as i32 + 1;
    let f = move |x: Point2| (x - c).norm().powi(n);
    let gl = gauss_legendre_unit(8);
    let rough = tri_rule_estimate(&f, v, &gl).abs();
    triangle_integral(&f, v, rel * rough)
}

/// Deterministic pseudo-random numbers for test geometry.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn point(&mut self, lo: f64, hi: f64) -> Vec3 {
        Vec3::new(self.uniform(lo, hi), self.uniform(lo, hi), self.uniform(lo, hi))
    }
}

/// A random tetrahedron that is not too flat.
pub fn random_tet(rng: &mut Lcg) -> Tetrahedron {
    loop {
        let t = Tetrahedron::new(
            rng.point(-1.0, 1.0),
            rng.point(-1.0, 1.0),
            rng.point(-1.0, 1.0),
            rng.point(-1.0, 1.0),
        );
        let edges = t.vertices();
        let mut max_edge: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                max_edge = max_edge.max((edges[i] - edges[j]).norm());
            }
        }
        if t.volume() > 0.02 * max_edge.powi(3) {
            return t;
        }
    }
}
