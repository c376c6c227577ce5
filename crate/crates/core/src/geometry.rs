//! Vector, triangle and tetrahedron primitives.
//!
//! Everything here is plain double precision. Degeneracy is decided with a
//! scale-relative tolerance so the same thresholds work for coarse and fine
//! meshes alike.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Relative tolerance used for cross products and six-volumes.
pub const DEGENERACY_TOL: f64 = 1e-14;

/// A point or a vector in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub type Point3 = Vec3;

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let len = self.norm();
        (len > 0.0 && len.is_finite()).then(|| self / len)
    }

    #[inline]
    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// A point in a plane coordinate system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

pub type Point2 = Vec2;

impl Vec2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

/// Largest coordinate extent of a set of points.
pub fn bbox_scale(points: &[Vec3]) -> f64 {
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (hi - lo).max_abs()
}

/// Unit normal `(b-a)×(c-a)/‖…‖`. Vertex order determines the sign.
pub fn unit_normal(a: Point3, b: Point3, c: Point3) -> Result<Vec3, GeometryError> {
    let n = (b - a).cross(c - a);
    let scale = bbox_scale(&[a, b, c]);
    let len = n.norm();
    if !(len > DEGENERACY_TOL * scale * scale) {
        return Err(GeometryError::DegenerateFace);
    }
    Ok(n / len)
}

/// Orthogonal projection of `x` onto the plane through `face_point` with unit
/// normal `n`.
#[inline]
pub fn project_point_to_face(x: Point3, face_point: Point3, n: Vec3) -> Point3 {
    x + n * (face_point - x).dot(n)
}

/// Signed `(a-x)·[(b-x)×(c-x)]`.
#[inline]
pub fn signed_six_volume(x: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    (a - x).dot((b - x).cross(c - x))
}

/// Six times the volume of the tetrahedron `{x, a, b, c}`.
#[inline]
pub fn six_volume(x: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    signed_six_volume(x, a, b, c).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle3 {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
}

impl Triangle3 {
    pub fn new(a: Point3, b: Point3, c: Point3) -> Self {
        Triangle3 { a, b, c }
    }

    pub fn midpoint(&self) -> Point3 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn normal(&self) -> Result<Vec3, GeometryError> {
        unit_normal(self.a, self.b, self.c)
    }

    pub fn area(&self) -> f64 {
        0.5 * (self.b - self.a).cross(self.c - self.a).norm()
    }

    pub fn circumradius(&self) -> f64 {
        let la = (self.b - self.c).norm();
        let lb = (self.c - self.a).norm();
        let lc = (self.a - self.b).norm();
        let area = self.area();
        if area == 0.0 {
            return la.max(lb).max(lc);
        }
        la * lb * lc / (4.0 * area)
    }

    pub fn max_edge(&self) -> f64 {
        let la = (self.b - self.c).norm();
        let lb = (self.c - self.a).norm();
        let lc = (self.a - self.b).norm();
        la.max(lb).max(lc)
    }

    pub fn vertices(&self) -> [Point3; 3] {
        [self.a, self.b, self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tetrahedron {
    pub a: Point3,
    pub b: Point3,
    pub c: Point3,
    pub d: Point3,
}

impl Tetrahedron {
    pub fn new(a: Point3, b: Point3, c: Point3, d: Point3) -> Self {
        Tetrahedron { a, b, c, d }
    }

    /// Average of the four vertices.
    pub fn midpoint(&self) -> Point3 {
        (self.a + self.b + self.c + self.d) * 0.25
    }

    /// `det[b-a, c-a, d-a]`, positive when `d` lies on the side of face
    /// `(a, b, c)` its normal points to.
    pub fn signed_six_volume(&self) -> f64 {
        (self.b - self.a).cross(self.c - self.a).dot(self.d - self.a)
    }

    pub fn volume(&self) -> f64 {
        self.signed_six_volume().abs() / 6.0
    }

    pub fn vertices(&self) -> [Point3; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_degenerate(&self) -> bool {
        let s = bbox_scale(&self.vertices());
        !(self.signed_six_volume().abs() > DEGENERACY_TOL * s * s * s)
    }

    /// Copy with `b` and `c` swapped when needed so the signed six-volume is
    /// positive.
    pub fn positively_oriented(&self) -> Tetrahedron {
        if self.signed_six_volume() < 0.0 {
            Tetrahedron::new(self.a, self.c, self.b, self.d)
        } else {
            *self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_tet() -> Tetrahedron {
        Tetrahedron::new(
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        )
    }

    #[test]
    fn normal_follows_vertex_order() {
        let o = Vec3::ZERO;
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let ey = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(unit_normal(o, ex, ey).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(unit_normal(o, ey, ex).unwrap(), Vec3::new(0.0, 0.0, -1.0));
    }

    #[test]
    fn collinear_face_is_degenerate() {
        let r = unit_normal(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), Vec3::new(2.0, 2.0, 2.0));
        assert_eq!(r, Err(GeometryError::DegenerateFace));
    }

    #[test]
    fn projection_examples() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let p = project_point_to_face(Vec3::new(0.0, 0.0, 5.0), Vec3::new(3.0, -1.0, 0.0), n);
        assert_eq!(p, Vec3::ZERO);
        let q = Vec3::new(0.3, 0.7, 0.0);
        assert_eq!(project_point_to_face(q, Vec3::ZERO, n), q);

        let n = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let x = Vec3::new(1.0, 2.0, 3.0);
        let p = project_point_to_face(x, Vec3::ZERO, n);
        assert!(p.dot(n).abs() < 1e-14);
        assert!((x - p).cross(n).norm() < 1e-14);
        assert!((p - Vec3::new(-1.0, 0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn six_volume_examples() {
        let t = unit_tet();
        assert_eq!(six_volume(t.a, t.b, t.c, t.d), 1.0);
        let coplanar = six_volume(
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.4, 0.2, 0.0),
        );
        assert_eq!(coplanar, 0.0);
        let s = 2.5;
        let scaled = six_volume(t.a, t.b * s, t.c * s, t.d * s);
        assert!((scaled - s * s * s).abs() < 1e-13);
    }

    #[test]
    fn midpoints() {
        assert_eq!(unit_tet().midpoint(), Vec3::new(0.25, 0.25, 0.25));
        let tri = Triangle3::new(Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.0, 3.0, 0.0));
        assert_eq!(tri.midpoint(), Vec3::new(1.0, 1.0, 0.0));
        let v = Vec3::new(0.5, -2.0, 7.0);
        let t = unit_tet();
        let moved = Tetrahedron::new(t.a + v, t.b + v, t.c + v, t.d + v);
        assert!((moved.midpoint() - (t.midpoint() + v)).norm() < 1e-15);
    }

    fn vec3() -> impl Strategy<Value = Vec3> {
        (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn normal_is_unit(a in vec3(), b in vec3(), c in vec3()) {
            if let Ok(n) = unit_normal(a, b, c) {
                prop_assert!((n.norm() - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn projection_lands_in_plane(x in vec3(), f in vec3(), d in vec3()) {
            prop_assume!(d.norm() > 1e-3);
            let n = d.normalized().unwrap();
            let p = project_point_to_face(x, f, n);
            let scale = x.norm().max(f.norm()).max(1.0);
            prop_assert!((p - f).dot(n).abs() <= 1e-13 * scale);
            prop_assert!((x - p).cross(n).norm() <= 1e-13 * scale);
        }

        #[test]
        fn six_volume_symmetries(x in vec3(), a in vec3(), b in vec3(), c in vec3(),
                                 angle in 0.0..std::f64::consts::TAU, shift in vec3()) {
            let v = six_volume(x, a, b, c);
            let scale = [a - x, b - x, c - x].iter().map(|e| e.norm()).product::<f64>().max(1e-300);
            prop_assert!((six_volume(x, b, a, c) - v).abs() <= 1e-13 * scale);
            prop_assert!((six_volume(x, c, b, a) - v).abs() <= 1e-13 * scale);
            let (s, co) = angle.sin_cos();
            let rot = |p: Vec3| Vec3::new(co * p.x - s * p.y, s * p.x + co * p.y, p.z) + shift;
            prop_assert!((six_volume(rot(x), rot(a), rot(b), rot(c)) - v).abs() <= 1e-12 * scale);
        }
    }
}
