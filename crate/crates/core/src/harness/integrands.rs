//! The four test integrands and their rotations about the x-axis.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};
use crate::levelset::ImplicitSurface;

/// Center of the Gaussian `f2`.
pub const F2_SHIFT: [f64; 3] = [0.047056440432708, 0.071766893999009, 0.118950756342700];
/// Total degree of the polynomial `f1`.
pub const F1_DEGREE: usize = 30;
/// Points used to estimate `max |f1|` for its normalization.
const F1_NORM_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntegrandKind {
    /// Degree-30 trivariate polynomial with seeded coefficients.
    F1,
    /// Shifted Gaussian `exp(-10‖x - s‖²)`.
    F2,
    /// `sign(z)`.
    F3,
    /// `atan(5000‖x‖²)`.
    F4,
}

impl IntegrandKind {
    pub const ALL: [IntegrandKind; 4] = [
        IntegrandKind::F1,
        IntegrandKind::F2,
        IntegrandKind::F3,
        IntegrandKind::F4,
    ];
}

impl FromStr for IntegrandKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "f1" => Ok(IntegrandKind::F1),
            "f2" => Ok(IntegrandKind::F2),
            "f3" => Ok(IntegrandKind::F3),
            "f4" => Ok(IntegrandKind::F4),
            _ => Err(Error::Config(format!(
                "unknown integrand '{s}' (expected f1, f2, f3 or f4)"
            ))),
        }
    }
}

impl fmt::Display for IntegrandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegrandKind::F1 => "f1",
            IntegrandKind::F2 => "f2",
            IntegrandKind::F3 => "f3",
            IntegrandKind::F4 => "f4",
        })
    }
}

/// `Σ a_e x^e₀ y^e₁ z^e₂` over all exponents of total degree ≤ 30.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub exponents: Vec<[u8; 3]>,
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    /// Uniform(-1, 1) coefficients in the order `α = 0..=30`,
    /// `β = 0..=α`, `γ = 0..=α-β` for the term `x^(α-β-γ) y^β z^γ`.
    pub fn random(degree: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut exponents = Vec::new();
        let mut coefficients = Vec::new();
        for a in 0..=degree {
            for b in 0..=a {
                for c in 0..=a - b {
                    exponents.push([(a - b - c) as u8, b as u8, c as u8]);
                    coefficients.push(rng.random_range(-1.0..1.0));
                }
            }
        }
        Polynomial {
            exponents,
            coefficients,
        }
    }

    pub fn degree(&self) -> usize {
        self.exponents
            .iter()
            .map(|e| e.iter().map(|&v| v as usize).sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, p: Point3) -> f64 {
        let d = self.degree();
        let powers = |v: f64| {
            let mut out = vec![1.0; d + 1];
            for k in 1..=d {
                out[k] = out[k - 1] * v;
            }
            out
        };
        let (px, py, pz) = (powers(p.x), powers(p.y), powers(p.z));
        self.exponents
            .iter()
            .zip(&self.coefficients)
            .map(|(e, a)| a * px[e[0] as usize] * py[e[1] as usize] * pz[e[2] as usize])
            .sum()
    }

    fn scaled(mut self, factor: f64) -> Self {
        self.coefficients.iter_mut().for_each(|a| *a *= factor);
        self
    }
}

/// A test integrand, possibly rotated about the x-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TestIntegrand {
    pub kind: IntegrandKind,
    /// Rotation angle about the x-axis.
    pub angle: f64,
    poly: Option<Arc<Polynomial>>,
}

impl TestIntegrand {
    /// `f2`, `f3` or `f4`. `f1` needs a seed and a domain; see
    /// [`TestIntegrand::polynomial`].
    pub fn closed_form(kind: IntegrandKind) -> Result<Self> {
        if kind == IntegrandKind::F1 {
            return Err(Error::Config("f1 needs a seed and a domain".into()));
        }
        Ok(TestIntegrand {
            kind,
            angle: 0.0,
            poly: None,
        })
    }

    /// `f1` with seeded coefficients, scaled so that `max |f1| ≈ 1` over a
    /// seeded sample of points in and on the domain.
    pub fn polynomial(seed: u64, surface: &dyn ImplicitSurface) -> Self {
        let raw = Polynomial::random(F1_DEGREE, seed);
        let max = domain_sample(surface, seed ^ 0x5eed_f1f1, F1_NORM_SAMPLES)
            .iter()
            .map(|&p| raw.eval(p).abs())
            .fold(0.0f64, f64::max);
        let poly = if max > 0.0 { raw.scaled(1.0 / max) } else { raw };
        TestIntegrand {
            kind: IntegrandKind::F1,
            angle: 0.0,
            poly: Some(Arc::new(poly)),
        }
    }

    pub fn new(kind: IntegrandKind, seed: u64, surface: &dyn ImplicitSurface) -> Self {
        match kind {
            IntegrandKind::F1 => Self::polynomial(seed, surface),
            _ => TestIntegrand {
                kind,
                angle: 0.0,
                poly: None,
            },
        }
    }

    pub fn polynomial_terms(&self) -> Option<&Polynomial> {
        self.poly.as_deref()
    }

    /// The integrand rotated by a further `theta` about the x-axis.
    pub fn rotated(&self, theta: f64) -> Self {
        TestIntegrand {
            angle: self.angle + theta,
            ..self.clone()
        }
    }

    /// The unrotated integrand.
    pub fn eval_base(&self, p: Point3) -> f64 {
        match self.kind {
            IntegrandKind::F1 => self.poly.as_ref().map_or(0.0, |poly| poly.eval(p)),
            IntegrandKind::F2 => {
                let d = p - Vec3::from_array(F2_SHIFT);
                (-10.0 * d.norm_squared()).exp()
            }
            IntegrandKind::F3 => {
                if p.z > 0.0 {
                    1.0
                } else if p.z < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            IntegrandKind::F4 => (5000.0 * p.norm_squared()).atan(),
        }
    }

    /// `f(R⁻¹x)`, where `R` rotates by `angle` about the x-axis.
    pub fn eval(&self, p: Point3) -> f64 {
        if self.angle == 0.0 {
            return self.eval_base(p);
        }
        let (s, c) = self.angle.sin_cos();
        self.eval_base(Vec3::new(p.x, c * p.y + s * p.z, -s * p.y + c * p.z))
    }

    pub fn sample(&self, points: &[Point3]) -> Vec<f64> {
        points.iter().map(|&p| self.eval(p)).collect()
    }
}

/// Seeded points: half uniformly inside the solid, half on its surface.
pub fn domain_sample(surface: &dyn ImplicitSurface, seed: u64, count: usize) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = surface.bounding_radius();
    let mut out = Vec::with_capacity(count);
    while out.len() < count / 2 {
        let p = Vec3::new(
            rng.random_range(-r..r),
            rng.random_range(-r..r),
            rng.random_range(-r..r),
        );
        if surface.eval(p) <= 0.0 {
            out.push(p);
        }
    }
    while out.len() < count {
        let d = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if let Some(u) = d.normalized() {
            out.push(u * surface.radius_along(u));
        }
    }
    out
}

/// Seeded uniform angles in `[0, 2π)` for the rotation protocol.
pub fn rotation_angles(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::Sphere;

    #[test]
    fn closed_form_values() {
        let f2 = TestIntegrand::closed_form(IntegrandKind::F2).unwrap();
        assert_eq!(f2.eval(Vec3::from_array(F2_SHIFT)), 1.0);
        let f3 = TestIntegrand::closed_form(IntegrandKind::F3).unwrap();
        assert_eq!(f3.eval(Vec3::new(0.3, -0.2, 1.0)), 1.0);
        assert_eq!(f3.eval(Vec3::new(0.3, -0.2, -1.0)), -1.0);
        let f4 = TestIntegrand::closed_form(IntegrandKind::F4).unwrap();
        assert_eq!(f4.eval(Vec3::ZERO), 0.0);
        assert!(TestIntegrand::closed_form(IntegrandKind::F1).is_err());
    }

    #[test]
    fn rotation_moves_points_about_x() {
        let f3 = TestIntegrand::closed_form(IntegrandKind::F3).unwrap();
        // A quarter turn carries +z to -y, so the positive half of the
        // rotated f3 is y < 0.
        let r = f3.rotated(std::f64::consts::FRAC_PI_2);
        assert_eq!(r.eval(Vec3::new(0.0, -1.0, 1e-9)), 1.0);
        assert_eq!(r.eval(Vec3::new(0.0, 1.0, 1e-9)), -1.0);
        // f4 is radial, so rotation changes nothing.
        let f4 = TestIntegrand::closed_form(IntegrandKind::F4).unwrap();
        let p = Vec3::new(0.01, 0.02, -0.03);
        assert!((f4.rotated(1.234).eval(p) - f4.eval(p)).abs() < 1e-15);
    }

    #[test]
    fn f1_has_all_terms_and_is_normalized() {
        let s = Sphere::new(1.0);
        let f1 = TestIntegrand::polynomial(11, &s);
        let poly = f1.polynomial_terms().unwrap();
        assert_eq!(poly.exponents.len(), 31 * 32 * 33 / 6);
        assert_eq!(poly.degree(), 30);
        let max = domain_sample(&s, 99, 2000)
            .iter()
            .map(|&p| f1.eval(p).abs())
            .fold(0.0, f64::max);
        assert!(max > 0.3 && max < 3.0, "{max}");
        assert_eq!(f1, TestIntegrand::polynomial(11, &s));
        assert_ne!(f1, TestIntegrand::polynomial(12, &s));
    }

    #[test]
    fn names_round_trip() {
        for k in IntegrandKind::ALL {
            assert_eq!(k.to_string().parse::<IntegrandKind>().unwrap(), k);
        }
        assert!("f5".parse::<IntegrandKind>().is_err());
    }
}
