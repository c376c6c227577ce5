//! Integrals of polyharmonic splines over tetrahedra.
//!
//! A tetrahedron is written as a signed combination of the four tetrahedra
//! that join the RBF center to its faces. On each of those the change of
//! variables `x = x_c + σ(λ₁a + λ₂b + (1-λ₁-λ₂)c - x_c)` turns the radial
//! integrand into `σ^(2p+3) ‖d(λ₁,λ₂)‖^(2p+1)`. The `σ` integral is
//! `1/(2p+4)`, the `λ₂` integral has a closed-form antiderivative and the
//! remaining `λ₁` integral is done with an LGL rule.

use crate::basis::PhsRbf;
use crate::error::GeometryError;
use crate::geometry::{six_volume, unit_normal, Point3, Tetrahedron, Vec3};
use crate::rules1d::Rule1D;

/// One of the four cone integrals: apex at the RBF center, base `(a, b, c)`.
#[derive(Debug, Clone, Copy)]
pub struct SubTetIntegralPlan<'r> {
    pub apex: Point3,
    pub base: [Point3; 3],
    /// Rule on `[-1, 1]`, used for `λ₁`.
    pub rule: &'r Rule1D,
}

impl SubTetIntegralPlan<'_> {
    pub fn integrate(&self, rbf: PhsRbf) -> f64 {
        let [a, b, c] = self.base;
        let v = six_volume(self.apex, a, b, c);
        let scale = (a - self.apex)
            .norm()
            .max((b - self.apex).norm())
            .max((c - self.apex).norm());
        if !(v > 1e-14 * scale * scale * scale) {
            return 0.0;
        }
        let n = rbf.power();
        let w = b - c;
        let a_coef = w.norm_squared();
        let c0 = c - self.apex;
        let ac = a - c;
        let segment = |l1: f64| {
            let len = 1.0 - l1;
            if len <= 0.0 {
                return 0.0;
            }
            segment_power_integral(c0 + ac * l1, w, a_coef, len, n)
        };
        // The integrand in λ₁ is analytic but nearly singular at the λ₁
        // coordinate of the apex's foot point on the base plane, where the
        // λ₂-segment passes closest to the apex. Splitting there puts the
        // singularity at an endpoint, where the LGL nodes cluster.
        let split = foot_lambda1(self.apex, a, b, c);
        let mut lambda1_integral = 0.0;
        for (lo, hi) in lambda1_pieces(split) {
            let half = 0.5 * (hi - lo);
            for (t, wt) in self.rule.iter() {
                lambda1_integral += half * wt * segment(lo + half * (t + 1.0));
            }
        }
        v * lambda1_integral / (n as f64 + 3.0)
    }
}

/// Barycentric weight of `a` at the orthogonal projection of `x` onto the
/// plane of `(a, b, c)`.
fn foot_lambda1(x: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    let n = (b - c).cross(a - c);
    let n2 = n.norm_squared();
    (b - c).cross(x - c).dot(n) / n2
}

fn lambda1_pieces(split: f64) -> impl Iterator<Item = (f64, f64)> {
    let inside = split > 1e-3 && split < 1.0 - 1e-3;
    let pieces = if inside {
        [(0.0, split), (split, 1.0)]
    } else {
        [(0.0, 1.0), (1.0, 1.0)]
    };
    pieces.into_iter().filter(|(lo, hi)| hi > lo)
}

/// `∫_0^len ‖u + t w‖^n dt` for odd `n`, in closed form.
///
/// With `s = t + u·w/‖w‖²` and `k² = ‖u×w‖²/‖w‖⁴` the integrand is
/// `‖w‖^n (s² + k²)^(n/2)`. The antiderivative follows from
/// `I_n = s(s²+k²)^(n/2)/(n+1) + n k²/(n+1) I_(n-2)` with
/// `I_(-1) = asinh(s/k)`. The `k → 0` limit (center on the line) drops the
/// `k² asinh` term, which vanishes there.
fn segment_power_integral(u: Vec3, w: Vec3, w2: f64, len: f64, n: i32) -> f64 {
    let shift = u.dot(w) / w2;
    let k2 = u.cross(w).norm_squared() / (w2 * w2);
    let s0 = shift;
    let s1 = shift + len;
    let antideriv = |s: f64| -> f64 {
        let q = s * s + k2;
        let base = if k2 > 1e-300 && k2 > 1e-28 * s * s {
            (s / k2.sqrt()).asinh()
        } else {
            0.0
        };
        // I_(-1) multiplied through: I_1 = s√q/2 + k²/2 I_(-1), etc.
        let root = q.sqrt();
        let mut qpow = root;
        let mut i = base;
        let mut m = 1;
        while m <= n {
            let mf = m as f64;
            i = (s * qpow + mf * k2 * i) / (mf + 1.0);
            qpow *= q;
            m += 2;
        }
        i
    };
    w2.sqrt().powi(n) * (antideriv(s1) - antideriv(s0))
}

/// `∫∫∫ ‖x - x_c‖^(2p+1) dV` over the tetrahedron `{x_c, a, b, c}`.
pub fn subtet_phs_integral(x_c: Point3, a: Point3, b: Point3, c: Point3, rbf: PhsRbf, rule: &Rule1D) -> f64 {
    SubTetIntegralPlan {
        apex: x_c,
        base: [a, b, c],
        rule,
    }
    .integrate(rbf)
}

/// Sign of the offset of `x` from the plane through `p` with normal `n`;
/// zero when `x` lies in the plane.
fn side(x: Point3, p: Point3, n: Vec3, scale: f64) -> f64 {
    let d = (x - p).dot(n);
    if d.abs() <= 1e-14 * scale {
        0.0
    } else {
        d.signum()
    }
}

/// `∫∫∫_t ‖x - x_c‖^(2p+1) dV` for any center `x_c`.
///
/// The faces are taken as `(abc), (adb), (acd), (bdc)` on the positively
/// oriented tetrahedron so all four normals point inward. A sub-tetrahedron
/// enters with the sign of `x_c`'s offset from the corresponding face plane.
pub fn tet_phs_integral(t: &Tetrahedron, x_c: Point3, rbf: PhsRbf, rule: &Rule1D) -> Result<f64, GeometryError> {
    if t.is_degenerate() {
        return Err(GeometryError::DegenerateTet);
    }
    let t = t.positively_oriented();
    let (a, b, c, d) = (t.a, t.b, t.c, t.d);
    let scale = [a, b, c, d].iter().map(|v| (*v - x_c).norm()).fold(0.0f64, f64::max);
    let mut total = 0.0;
    for face in [[a, b, c], [a, d, b], [a, c, d], [b, d, c]] {
        let n = unit_normal(face[0], face[1], face[2])?;
        let sign = side(x_c, face[0], n, scale);
        if sign == 0.0 {
            continue;
        }
        total += sign * subtet_phs_integral(x_c, face[0], face[1], face[2], rbf, rule);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules1d::lgl_rule;

    fn unit_tet() -> Tetrahedron {
        Tetrahedron::new(
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        )
    }

    #[test]
    fn coplanar_apex_gives_zero() {
        let rule = lgl_rule(21).unwrap();
        let v = subtet_phs_integral(
            Vec3::new(0.3, 0.3, 0.0),
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            PhsRbf::CUBIC,
            &rule,
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn homogeneity_about_apex() {
        let rule = lgl_rule(21).unwrap();
        let x = Vec3::new(0.1, -0.3, 0.2);
        let (a, b, c) = (
            Vec3::new(1.0, 0.2, 0.1),
            Vec3::new(0.1, 1.1, -0.2),
            Vec3::new(0.3, 0.4, 1.2),
        );
        for p in 0..4 {
            let rbf = PhsRbf::new(p);
            let base = subtet_phs_integral(x, a, b, c, rbf, &rule);
            let s = 1.7;
            let sc = |q: Vec3| x + (q - x) * s;
            let scaled = subtet_phs_integral(x, sc(a), sc(b), sc(c), rbf, &rule);
            let expect = base * s.powi(rbf.power() + 3);
            assert!((scaled - expect).abs() < 1e-12 * expect, "p = {p}");
        }
    }

    #[test]
    fn centroid_center_uses_all_four_positive() {
        let rule = lgl_rule(21).unwrap();
        let t = unit_tet();
        let m = t.midpoint();
        let total = tet_phs_integral(&t, m, PhsRbf::CUBIC, &rule).unwrap();
        let parts: f64 = [[t.a, t.b, t.c], [t.a, t.d, t.b], [t.a, t.c, t.d], [t.b, t.d, t.c]]
            .iter()
            .map(|f| subtet_phs_integral(m, f[0], f[1], f[2], PhsRbf::CUBIC, &rule))
            .sum();
        assert!((total - parts).abs() < 1e-15 * parts);
    }

    #[test]
    fn orientation_does_not_matter() {
        let rule = lgl_rule(21).unwrap();
        let t = unit_tet();
        let flipped = Tetrahedron::new(t.a, t.c, t.b, t.d);
        let x = Vec3::new(0.9, 0.8, -0.4);
        let a = tet_phs_integral(&t, x, PhsRbf::CUBIC, &rule).unwrap();
        let b = tet_phs_integral(&flipped, x, PhsRbf::CUBIC, &rule).unwrap();
        assert!((a - b).abs() < 1e-14 * a);
        assert!(a > 0.0);
    }
}
