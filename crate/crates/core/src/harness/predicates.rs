//! Orientation and in-sphere tests with exact fallback.
//!
//! Both predicates first evaluate in `f64` with a forward error bound; only
//! when the result is too close to zero to trust its sign is the determinant
//! recomputed exactly over big integers. Every `f64` is a dyadic rational,
//! so scaling all inputs to a common binary exponent makes the exact
//! computation integer-only.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::{Float, Signed, Zero};

use crate::geometry::Point3;

const EPS: f64 = f64::EPSILON * 0.5;
const O3D_BOUND: f64 = (7.0 + 56.0 * EPS) * EPS;
const ISP_BOUND: f64 = (16.0 + 224.0 * EPS) * EPS;

/// Sign of `det[b-a, c-a, d-a]`: positive when `abcd` is positively
/// oriented.
pub fn orient3d(a: Point3, b: Point3, c: Point3, d: Point3) -> Ordering {
    let (u, v, w) = (b - a, c - a, d - a);
    let det = u.x * (v.y * w.z - v.z * w.y) - u.y * (v.x * w.z - v.z * w.x) + u.z * (v.x * w.y - v.y * w.x);
    let perm = u.x.abs() * ((v.y * w.z).abs() + (v.z * w.y).abs())
        + u.y.abs() * ((v.x * w.z).abs() + (v.z * w.x).abs())
        + u.z.abs() * ((v.x * w.y).abs() + (v.y * w.x).abs());
    if det.abs() > O3D_BOUND * perm {
        return det.partial_cmp(&0.0).unwrap();
    }
    exact_sign(&[a, b, c, d], |q| {
        let r = |i: usize| [&q[i][0] - &q[0][0], &q[i][1] - &q[0][1], &q[i][2] - &q[0][2]];
        det3(&r(1), &r(2), &r(3))
    })
}

/// Raw in-sphere determinant sign, without perturbation: positive when `e`
/// is strictly inside the circumsphere of the positively oriented `abcd`.
pub fn insphere(a: Point3, b: Point3, c: Point3, d: Point3, e: Point3) -> Ordering {
    let rows = [a - e, b - e, c - e, d - e];
    let lift: [f64; 4] = rows.map(|r| r.norm_squared());
    // Negate: the determinant of rows (x - e, |x - e|²) is negative for
    // interior points of a positively oriented tet.
    let det = -det4_f64(&rows, &lift);
    let perm = permanent4(&rows, &lift);
    if det.abs() > ISP_BOUND * perm {
        return det.partial_cmp(&0.0).unwrap();
    }
    exact_insphere(&[a, b, c, d, e], None)
}

/// In-sphere test under symbolic perturbation of the lifted coordinates.
///
/// Point `i`'s lift `|xᵢ|²` is raised by `ε^(rank_i)` for an infinitesimal
/// `ε`, with `rank` any fixed total order over all points (lower rank →
/// larger perturbation). The perturbed test never returns `Equal`, and
/// because the perturbed lifted points are in general position, the
/// resulting Delaunay tessellation is unique.
pub fn insphere_perturbed(pts: [Point3; 5], ranks: [usize; 5]) -> Ordering {
    let s = insphere(pts[0], pts[1], pts[2], pts[3], pts[4]);
    if s != Ordering::Equal {
        return s;
    }
    let mut order = [0usize, 1, 2, 3, 4];
    order.sort_unstable_by_key(|&i| ranks[i]);
    for &i in &order {
        let s = exact_insphere(&pts, Some(i));
        if s != Ordering::Equal {
            return s;
        }
    }
    unreachable!("perturbation of the query point's lift always decides");
}

/// Exact in-sphere sign. With `Some(i)`, returns instead the sign of the
/// derivative of the (negated) determinant with respect to point `i`'s lift.
fn exact_insphere(pts: &[Point3; 5], lift_of: Option<usize>) -> Ordering {
    exact_sign(pts, |q| {
        let rel = |i: usize| [&q[i][0] - &q[4][0], &q[i][1] - &q[4][1], &q[i][2] - &q[4][2]];
        let rows = [rel(0), rel(1), rel(2), rel(3)];
        let lift: [BigInt; 4] = match lift_of {
            None => rows.clone().map(|r| &r[0] * &r[0] + &r[1] * &r[1] + &r[2] * &r[2]),
            // Raising e's lift lowers every relative lift.
            Some(4) => std::array::from_fn(|_| BigInt::from(-1)),
            Some(i) => std::array::from_fn(|j| BigInt::from((j == i) as i32)),
        };
        -det4_big(&rows, &lift)
    })
}

fn det4_f64(rows: &[Point3; 4], lift: &[f64; 4]) -> f64 {
    let m = |i: usize| [rows[i].x, rows[i].y, rows[i].z, lift[i]];
    let r = [m(0), m(1), m(2), m(3)];
    let minor = |c0: usize, c1: usize, c2: usize, skip: usize| {
        let rr: Vec<&[f64; 4]> = (0..4).filter(|&i| i != skip).map(|i| &r[i]).collect();
        rr[0][c0] * (rr[1][c1] * rr[2][c2] - rr[1][c2] * rr[2][c1])
            - rr[0][c1] * (rr[1][c0] * rr[2][c2] - rr[1][c2] * rr[2][c0])
            + rr[0][c2] * (rr[1][c0] * rr[2][c1] - rr[1][c1] * rr[2][c0])
    };
    // Expand along the lift column.
    let mut det = 0.0;
    for (i, sign) in [(0, -1.0), (1, 1.0), (2, -1.0), (3, 1.0)] {
        det += sign * r[i][3] * minor(0, 1, 2, i);
    }
    det
}

fn permanent4(rows: &[Point3; 4], lift: &[f64; 4]) -> f64 {
    let mut total = 0.0;
    for (i, li) in lift.iter().enumerate() {
        let others: Vec<Point3> = (0..4).filter(|&j| j != i).map(|j| rows[j]).collect();
        let (u, v, w) = (others[0], others[1], others[2]);
        let p = u.x.abs() * ((v.y * w.z).abs() + (v.z * w.y).abs())
            + u.y.abs() * ((v.x * w.z).abs() + (v.z * w.x).abs())
            + u.z.abs() * ((v.x * w.y).abs() + (v.y * w.x).abs());
        total += li.abs() * p;
    }
    total
}

fn det3(u: &[BigInt; 3], v: &[BigInt; 3], w: &[BigInt; 3]) -> BigInt {
    &u[0] * (&v[1] * &w[2] - &v[2] * &w[1]) - &u[1] * (&v[0] * &w[2] - &v[2] * &w[0])
        + &u[2] * (&v[0] * &w[1] - &v[1] * &w[0])
}

fn det4_big(rows: &[[BigInt; 3]; 4], lift: &[BigInt; 4]) -> BigInt {
    let mut det = BigInt::zero();
    for (i, li) in lift.iter().enumerate() {
        if li.is_zero() {
            continue;
        }
        let o: Vec<&[BigInt; 3]> = (0..4).filter(|&j| j != i).map(|j| &rows[j]).collect();
        let m = det3(o[0], o[1], o[2]);
        if i % 2 == 0 {
            det -= li * m;
        } else {
            det += li * m;
        }
    }
    det
}

/// Converts all coordinates to integers sharing one binary exponent, then
/// returns the sign of `f` evaluated on them.
fn exact_sign<const K: usize>(pts: &[Point3; K], f: impl Fn(&[[BigInt; 3]; K]) -> BigInt) -> Ordering {
    let decoded: Vec<(u64, i16, i8)> = pts
        .iter()
        .flat_map(|p| p.to_array())
        .map(|v| v.integer_decode())
        .collect();
    let e_min = decoded.iter().filter(|d| d.0 != 0).map(|d| d.1).min().unwrap_or(0);
    let to_int = |(mant, exp, sign): (u64, i16, i8)| {
        let v = BigInt::from(mant) << ((exp - e_min) as usize);
        if sign < 0 {
            -v
        } else {
            v
        }
    };
    let ints: [[BigInt; 3]; K] = std::array::from_fn(|i| std::array::from_fn(|c| to_int(decoded[3 * i + c])));
    let v = f(&ints);
    if v.is_zero() {
        Ordering::Equal
    } else if v.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn unit() -> [Point3; 4] {
        [
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn orientation_signs() {
        let [a, b, c, d] = unit();
        assert_eq!(orient3d(a, b, c, d), Ordering::Greater);
        assert_eq!(orient3d(a, c, b, d), Ordering::Less);
        assert_eq!(orient3d(a, b, c, Vec3::new(0.3, 0.7, 0.0)), Ordering::Equal);
    }

    #[test]
    fn exact_fallback_near_coplanar() {
        // Points on a plane not representable exactly; tiny offsets must be
        // resolved without sign errors.
        let a = Vec3::new(0.1, 0.2, 0.3);
        let b = Vec3::new(1.1, 0.2, 0.3);
        let c = Vec3::new(0.1, 1.2, 0.3);
        let on = Vec3::new(0.6, 0.7, 0.3);
        assert_eq!(orient3d(a, b, c, on), Ordering::Equal);
        let above = Vec3::new(0.6, 0.7, 0.3 + 1e-17_f64.max(f64::EPSILON * 0.3));
        assert_eq!(orient3d(a, b, c, above), Ordering::Greater);
    }

    #[test]
    fn insphere_signs() {
        let [a, b, c, d] = unit();
        assert_eq!(insphere(a, b, c, d, Vec3::new(0.25, 0.25, 0.25)), Ordering::Greater);
        assert_eq!(insphere(a, b, c, d, Vec3::new(2.0, 2.0, 2.0)), Ordering::Less);
        // The unit cube corner (1,1,1) lies on the circumsphere.
        assert_eq!(insphere(a, b, c, d, Vec3::new(1.0, 1.0, 1.0)), Ordering::Equal);
    }

    #[test]
    fn perturbed_never_ties_and_is_antisymmetric() {
        let [a, b, c, d] = unit();
        let e = Vec3::new(1.0, 1.0, 1.0);
        let s = insphere_perturbed([a, b, c, d, e], [0, 1, 2, 3, 4]);
        assert_ne!(s, Ordering::Equal);
        // Swapping two vertices of the tet flips orientation, and the raw
        // determinant with it; the perturbation must follow.
        let t = insphere_perturbed([a, c, b, d, e], [0, 2, 1, 3, 4]);
        assert_eq!(t, s.reverse());
    }
}
