//! Quadrature over the slivers between boundary faces and the true surface.
//!
//! A sliver is swept by the rays `x(λ, μ, σ) = y(λ, μ) + σ v(λ, μ)` from the
//! projection point `p` through the face plane, with `σ` running from the
//! plane to the surface. Both modes reduce it to a point set with weights in
//! physical space, so any basis function can be integrated afterwards by a
//! weighted sum.
//!
//! `σ_max` is signed: it is the root of `h` along the ray nearest to the
//! face plane, in either direction. Where the surface bulges past the face
//! it is positive; where it curves back behind the face (saddle or concave
//! regions) it is negative and the sliver contributes with the opposite
//! sign.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{triangle_phs_integral_2d, triangle_poly_moments_2d, PhsRbf, PolyBasis2, PolyBasis3};
use crate::boundary::BoundaryFaceFrame;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Vec2, Vec3};
use crate::kdtree::KdTree;
use crate::levelset::ImplicitSurface;
use crate::mesh::NodeSet;
use crate::roots::nearest_root;
use crate::rules1d::Rule1D;
use crate::saddle::{saddle_matrix, solve_saddle};

/// Initial root bracket horizon, in face circumradii.
pub const HORIZON_CIRCUMRADII: f64 = 4.0;
/// Times the horizon may double before a ray is declared to miss.
pub const HORIZON_EXPANSIONS: usize = 3;

/// How `σ_max` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliverMode {
    /// Root-find on the level function at every `(λ, μ)` node.
    Known,
    /// Use only on-surface nodes and a plane RBF interpolant.
    Unknown,
}

impl std::str::FromStr for SliverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(SliverMode::Known),
            "unknown" => Ok(SliverMode::Unknown),
            _ => Err(Error::Config(format!(
                "unknown sliver mode '{s}' (expected known or unknown)"
            ))),
        }
    }
}

impl std::fmt::Display for SliverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SliverMode::Known => "known",
            SliverMode::Unknown => "unknown",
        })
    }
}

/// Points and weights with `∫_sliver f dV ≈ Σ wᵢ f(xᵢ)`. The weights carry the
/// sign of `σ_max` but not `ν`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliverRule {
    pub points: Vec<Point3>,
    pub weights: Vec<f64>,
}

impl SliverRule {
    pub fn integrate(&self, f: impl Fn(Point3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Signed sliver volume.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrals of `φ(‖x - cⱼ‖)` for each center and of each monomial.
    pub fn basis_integrals(&self, centers: &[Point3], rbf: PhsRbf, poly: &PolyBasis3) -> (Vec<f64>, Vec<f64>) {
        let rbf_part = centers
            .iter()
            .map(|&c| self.integrate(|x| rbf.eval((x - c).norm())))
            .collect();
        let mut poly_part = vec![0.0; poly.len()];
        let mut buf = vec![0.0; poly.len()];
        for (x, w) in self.points.iter().zip(&self.weights) {
            poly.eval_into(*x, &mut buf);
            for (acc, b) in poly_part.iter_mut().zip(&buf) {
                *acc += w * b;
            }
        }
        (rbf_part, poly_part)
    }
}

/// Signed distance along `v` from `y` to the surface: the root of
/// `σ ↦ h(y + σv)` nearest to zero.
///
/// Brackets start at `horizon` and may double [`HORIZON_EXPANSIONS`] times.
pub fn sigma_max_known(surface: &dyn ImplicitSurface, y: Point3, v: Vec3, horizon: f64) -> Result<f64> {
    let grad_scale = surface
        .gradient(y)
        .map(|g| g.norm())
        .unwrap_or(0.0)
        .max(surface.eval(y).abs() / horizon);
    let f_tol = 1e-15 * grad_scale * surface.bounding_radius();
    let g = |s: f64| {
        let x = y + v * s;
        (surface.eval(x), surface.gradient(x).map(|gr| gr.dot(v)))
    };
    nearest_root(g, horizon, HORIZON_EXPANSIONS, f_tol)?
        .ok_or_else(|| Error::Numerical(format!("ray from {y:?} along {v:?} does not meet the surface")))
}

/// Known-mode sliver rule on the unit square
/// `y(λ, μ) = (1-λ)a + λ((1-μ)b + μc)`, a `q³` tensor LGL rule in `λ, μ, σ`.
pub fn known_sliver_rule(
    frame: &BoundaryFaceFrame,
    surface: &dyn ImplicitSurface,
    rule: &Rule1D,
) -> Result<SliverRule> {
    let unit = rule.unit_interval();
    let [a, b, c] = frame.triangle.vertices();
    let p = frame.projection;
    let cross = (b - a).cross(c - b);
    let horizon = HORIZON_CIRCUMRADII * frame.triangle.circumradius();
    let mut out = SliverRule::default();
    for (lam, wl) in unit.iter() {
        if lam == 0.0 {
            // The whole μ-edge collapses onto vertex a; J vanishes.
            continue;
        }
        for (mu, wm) in unit.iter() {
            let y = a * (1.0 - lam) + (b * (1.0 - mu) + c * mu) * lam;
            let dist = (y - p).norm();
            let v = (y - p) / dist;
            let smax = sigma_max_known(surface, y, v, horizon).map_err(|e| Error::Sliver {
                face: frame.face_id,
                message: e.to_string(),
            })?;
            if smax == 0.0 {
                continue;
            }
            let base = wl * wm * lam * v.dot(cross).abs();
            push_ray(&mut out, y, v, dist, smax, base, &unit);
        }
    }
    Ok(out)
}

/// Appends the `σ` rule on `[0, σ_max]` along one ray, weighted by
/// `base · (1 + σ/‖y-p‖)²`.
fn push_ray(out: &mut SliverRule, y: Point3, v: Vec3, dist: f64, smax: f64, base: f64, unit: &Rule1D) {
    for (t, wt) in unit.iter() {
        let s = smax * t;
        let stretch = 1.0 + s / dist;
        out.points.push(y + v * s);
        out.weights.push(base * wt * smax * stretch * stretch);
    }
}

/// An on-surface node seen from the projection point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedNode {
    /// Plane coordinates of the ray's crossing with the face plane.
    pub lambda: f64,
    pub mu: f64,
    /// Crossing point.
    pub y: Point3,
    /// Signed distance from `y` to the node along the unit ray direction.
    pub sigma_max: f64,
}

/// Intersects the ray from `p` through the surface node `x_s` with the face
/// plane. Returns `None` when the ray is parallel to the plane.
pub fn project_surface_node(x_s: Point3, frame: &BoundaryFaceFrame) -> Option<ProjectedNode> {
    let n = frame.normal;
    let p = frame.projection;
    let m = frame.triangle.midpoint();
    let along = (x_s - p).dot(n);
    if along.abs() <= 1e-12 * (x_s - p).norm() {
        return None;
    }
    // Nodes in the face plane to rounding get exactly zero height, so a
    // locally planar surface contributes nothing.
    let offset = (x_s - m).dot(n);
    if offset.abs() <= 8.0 * f64::EPSILON * (x_s - m).norm() {
        let (lambda, mu) = frame.frame.coords(p, x_s);
        return Some(ProjectedNode {
            lambda,
            mu,
            y: x_s,
            sigma_max: 0.0,
        });
    }
    let y = x_s - (x_s - p) * (offset / along);
    let v = (y - p) / (y - p).norm();
    let sigma_max = (x_s - y).dot(n) / v.dot(n);
    let (lambda, mu) = frame.frame.coords(p, y);
    Some(ProjectedNode {
        lambda,
        mu,
        y,
        sigma_max,
    })
}

/// Settings for the plane interpolant of the unknown mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneSettings {
    /// Bivariate polynomial degree `γ`.
    pub degree: u32,
    /// Number of surface nodes `η`.
    pub stencil: usize,
    pub rbf: PhsRbf,
}

impl PlaneSettings {
    /// `γ = 2m`, `η = ⌈1.05 (γ+1)(γ+2)/2⌉`, `φ = r⁷`.
    pub fn for_degree(m: u32) -> Self {
        let degree = 2 * m;
        PlaneSettings {
            degree,
            stencil: default_eta(degree),
            rbf: PhsRbf::SEPTIC,
        }
    }
}

pub fn default_eta(gamma: u32) -> usize {
    let terms = PolyBasis2::term_count(gamma) as f64;
    (1.05 * terms - 1e-9).ceil() as usize
}

/// Weights for `∫_T g(λ, μ) dλ dμ ≈ Σ wⱼ g(uⱼ)` from a plane PHS interpolant
/// with polynomial augmentation.
///
/// Points are shifted to the triangle centroid and scaled by the stencil
/// radius before the solve.
pub fn plane_quadrature_weights(
    points: &[Point2],
    triangle: &[Point2; 3],
    settings: &PlaneSettings,
) -> Result<Vec<f64>> {
    let poly = PolyBasis2::new(settings.degree);
    let (n, m) = (points.len(), poly.len());
    if n < m {
        return Err(Error::Numerical(format!(
            "plane stencil has {n} points, fewer than the {m} polynomial terms"
        )));
    }
    let center = (triangle[0] + triangle[1] + triangle[2]) / 3.0;
    let scale = points
        .iter()
        .chain(triangle.iter())
        .map(|u| (*u - center).norm())
        .fold(0.0f64, f64::max);
    let local = |u: Point2| (u - center) / scale;
    let pts: Vec<Point2> = points.iter().map(|&u| local(u)).collect();
    let tri = triangle.map(local);

    let phi = DMatrix::from_fn(n, n, |i, j| settings.rbf.eval((pts[i] - pts[j]).norm()));
    let mut pmat = DMatrix::zeros(n, m);
    let mut buf = vec![0.0; m];
    for (i, u) in pts.iter().enumerate() {
        poly.eval_into(*u, &mut buf);
        for l in 0..m {
            pmat[(i, l)] = buf[l];
        }
    }
    let mut rhs = DVector::zeros(n + m);
    for (j, u) in pts.iter().enumerate() {
        rhs[j] = triangle_phs_integral_2d(&tri, *u, settings.rbf)?;
    }
    for (l, v) in triangle_poly_moments_2d(&tri, &poly)?.into_iter().enumerate() {
        rhs[n + l] = v;
    }
    let a = saddle_matrix(&phi, &pmat);
    let sol = solve_saddle(&a, &rhs).map_err(|e| Error::Numerical(format!("plane interpolant: {e}")))?;
    Ok(sol.weights(n).iter().map(|w| w * scale * scale).collect())
}

/// Unknown-mode sliver rule: plane weights over the face from the `η`
/// nearest usable on-surface nodes, times a `σ` rule along each node's ray.
pub fn unknown_sliver_rule(
    frame: &BoundaryFaceFrame,
    nodes: &NodeSet,
    surface_tree: &KdTree,
    surface_ids: &[usize],
    settings: &PlaneSettings,
    rule: &Rule1D,
) -> Result<SliverRule> {
    let fail = |message: String| Error::Sliver {
        face: frame.face_id,
        message,
    };
    let projected = plane_stencil(frame, nodes, surface_tree, surface_ids, settings.stencil);
    let p = frame.projection;
    let plane_pts: Vec<Point2> = projected.iter().map(|pn| Point2::new(pn.lambda, pn.mu)).collect();
    let tri = frame.triangle.vertices().map(|v| {
        let (l, m) = frame.frame.coords(p, v);
        Point2::new(l, m)
    });
    let w2 = plane_quadrature_weights(&plane_pts, &tri, settings).map_err(|e| fail(e.to_string()))?;
    Ok(rays_from_plane_rule(frame, &projected, &w2, rule))
}

/// A projected node is kept only if it lands within this many times its
/// distance from the face midpoint (plus one circumradius) of the midpoint's
/// own projection.
pub const PROJECTION_REACH: f64 = 2.0;

/// The `η` nearest surface nodes whose projections are usable.
///
/// A node whose ray from the projection point runs nearly parallel to the
/// face plane projects far away, with a huge `σ`. Such a point carries no
/// information about the surface over the face, and after scaling it
/// squeezes the rest of the stencil together, wrecking the conditioning.
/// Those nodes are skipped and the next nearest ones take their place.
fn plane_stencil(
    frame: &BoundaryFaceFrame,
    nodes: &NodeSet,
    surface_tree: &KdTree,
    surface_ids: &[usize],
    eta: usize,
) -> Vec<ProjectedNode> {
    let m_star = frame.triangle.midpoint();
    let (l0, m0) = frame.frame.coords(frame.projection, m_star);
    let slack = frame.triangle.circumradius();
    let mut want = eta.min(surface_ids.len());
    loop {
        let mut out = Vec::with_capacity(eta);
        for local in surface_tree.nearest(m_star, want) {
            let id = surface_ids[local];
            let x = nodes.points[id];
            match project_surface_node(x, frame) {
                Some(pn)
                    if Vec2::new(pn.lambda - l0, pn.mu - m0).norm()
                        <= PROJECTION_REACH * (x - m_star).norm() + slack =>
                {
                    out.push(pn);
                    if out.len() == eta {
                        return out;
                    }
                }
                _ => debug!("face {}: surface node {id} projects edge-on; skipped", frame.face_id),
            }
        }
        if want == surface_ids.len() {
            return out;
        }
        want = (2 * want).min(surface_ids.len());
    }
}

fn rays_from_plane_rule(
    frame: &BoundaryFaceFrame,
    projected: &[ProjectedNode],
    w2: &[f64],
    rule: &Rule1D,
) -> SliverRule {
    let p = frame.projection;
    let unit = rule.unit_interval();
    let n = frame.normal;
    let mut out = SliverRule::default();
    for (pn, &w) in projected.iter().zip(w2) {
        if pn.sigma_max == 0.0 || w == 0.0 {
            continue;
        }
        let dist = (pn.y - p).norm();
        let v = (pn.y - p) / dist;
        push_ray(&mut out, pn.y, v, dist, pn.sigma_max, w * v.dot(n).abs(), &unit);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::face_frame;
    use crate::geometry::Triangle3;
    use crate::levelset::{CassiniSolid, Sphere};
    use crate::rules1d::lgl_rule;

    #[test]
    fn ray_sphere_roots() {
        let s = Sphere::new(1.0);
        let r = sigma_max_known(&s, Vec3::new(0.5, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        let on = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(sigma_max_known(&s, on, Vec3::new(0.0, 1.0, 0.0), 1.0).unwrap(), 0.0);
        // Outside, pointing outward: the surface is behind the start point.
        let r = sigma_max_known(&s, Vec3::new(0.0, 0.0, 1.1), Vec3::new(0.0, 0.0, 1.0), 1.0).unwrap();
        assert!((r + 0.1).abs() < 1e-14);
    }

    #[test]
    fn ray_misses_far_surface() {
        let s = Sphere::new(1.0);
        assert!(sigma_max_known(&s, Vec3::new(0.0, 0.0, 50.0), Vec3::new(0.0, 0.0, 1.0), 0.01).is_err());
    }

    #[test]
    fn cassini_root_matches_dense_sampling() {
        let s = CassiniSolid::calibrated(0.8).unwrap();
        let y = Vec3::new(0.3, 0.25, 0.1);
        let v = Vec3::new(0.2, 0.9, 0.3).normalized().unwrap();
        let r = sigma_max_known(&s, y, v, 0.1).unwrap();
        // Dense sampling then plain bisection.
        let g = |t: f64| s.eval(y + v * t);
        let mut lo = 0.0;
        let mut t = 0.0;
        while g(t) < 0.0 {
            lo = t;
            t += 1e-4;
        }
        let mut hi = t;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((r - lo).abs() < 1e-10, "{r} vs {lo}");
    }

    fn test_frame(tri: Triangle3, p: Point3) -> BoundaryFaceFrame {
        let normal = tri.normal().unwrap();
        BoundaryFaceFrame {
            face_id: 0,
            owner: 0,
            nodes: [0, 1, 2],
            triangle: tri,
            normal,
            edge_normals: [normal; 3],
            projection: p,
            projection_fallback: false,
            nu: 1.0,
            frame: face_frame(&tri, normal, p),
        }
    }

    #[test]
    fn flat_surface_gives_empty_sliver() {
        // The half-space z ≤ 0 coincides with the face plane.
        #[derive(Debug)]
        struct HalfSpace;
        impl ImplicitSurface for HalfSpace {
            fn eval(&self, x: Point3) -> f64 {
                x.z
            }
            fn gradient(&self, _x: Point3) -> Option<Vec3> {
                Some(Vec3::new(0.0, 0.0, 1.0))
            }
            fn bounding_radius(&self) -> f64 {
                1.0
            }
            fn volume(&self) -> Result<f64> {
                Ok(f64::INFINITY)
            }
            fn radius_along(&self, _d: Vec3) -> f64 {
                f64::INFINITY
            }
        }
        let tri = Triangle3::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        let frame = test_frame(tri, Vec3::new(0.3, 0.3, -10.0));
        let rule = lgl_rule(21).unwrap();
        let s = known_sliver_rule(&frame, &HalfSpace, &rule).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.volume(), 0.0);
    }

    #[test]
    fn projection_round_trip() {
        let sphere_pt = |th: f64, ph: f64| Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
        let tri = Triangle3::new(sphere_pt(0.1, 0.0), sphere_pt(0.1, 2.1), sphere_pt(0.1, 4.2));
        let frame = test_frame(tri, Vec3::new(0.01, -0.02, 0.05));
        for (th, ph) in [(0.05, 1.0), (0.12, 3.0), (0.2, 5.5)] {
            let x = sphere_pt(th, ph);
            let pn = project_surface_node(x, &frame).unwrap();
            let y = frame.frame.point(frame.projection, pn.lambda, pn.mu);
            assert!((y - pn.y).norm() < 1e-14);
            let v = (y - frame.projection).normalized().unwrap();
            let back = y + v * pn.sigma_max;
            assert!((back - x).norm() < 1e-11 * x.norm());
        }
        // A face vertex projects onto itself with zero height.
        let pn = project_surface_node(tri.a, &frame).unwrap();
        assert!(pn.sigma_max.abs() < 1e-15);
    }

    #[test]
    fn plane_weights_reproduce_polynomials() {
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.1), Point2::new(0.2, 0.9)];
        let settings = PlaneSettings::for_degree(1); // γ = 2, η = 7
        assert_eq!(settings.stencil, 7);
        let pts: Vec<Point2> = (0..7)
            .map(|i| {
                // A spiral: points on one circle would not be unisolvent.
                let t = i as f64 * 0.9;
                let r = 0.15 + 0.08 * i as f64;
                Point2::new(0.4 + r * t.cos(), 0.35 + r * t.sin())
            })
            .collect();
        let w = plane_quadrature_weights(&pts, &tri, &settings).unwrap();
        let poly = PolyBasis2::new(2);
        let exact = triangle_poly_moments_2d(&tri, &poly).unwrap();
        for (l, e) in exact.iter().enumerate() {
            let got: f64 = pts.iter().zip(&w).map(|(u, wj)| wj * poly.eval(*u)[l]).sum();
            assert!((got - e).abs() < 1e-11 * exact[0], "term {l}: {got} vs {e}");
        }
    }

    #[test]
    fn eta_defaults() {
        assert_eq!(default_eta(2), 7);
        assert_eq!(default_eta(4), 16);
        assert_eq!(default_eta(6), 30);
    }
}
