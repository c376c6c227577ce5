//! Implicit bounding surfaces `h(x) = 0` with `h < 0` inside.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};
use crate::roots::{bisect_root, integrate_adaptive};

/// A closed surface given as the zero set of a level function.
///
/// Implementations must be pure: the sliver root finder and the node
/// generator evaluate them concurrently.
pub trait ImplicitSurface: Send + Sync + fmt::Debug {
    fn eval(&self, x: Point3) -> f64;

    /// Analytic gradient, if known. Root finders fall back to bisection
    /// without it.
    fn gradient(&self, _x: Point3) -> Option<Vec3> {
        None
    }

    /// Radius of a ball about the origin that contains the solid.
    fn bounding_radius(&self) -> f64;

    /// Enclosed volume.
    fn volume(&self) -> Result<f64>;

    /// Distance from the origin to the surface along the unit direction `d`.
    /// Every built-in solid is star-shaped about the origin.
    fn radius_along(&self, d: Vec3) -> f64;

    /// The axial profile, for solids of revolution about the x-axis.
    fn revolution(&self) -> Option<&dyn RevolutionProfile> {
        None
    }
}

/// A solid of revolution about the x-axis, described by its cross-sections.
pub trait RevolutionProfile {
    /// The solid spans `-L ≤ x ≤ L`.
    fn half_length(&self) -> f64;

    /// Squared radius of the circular cross-section at `x`, zero outside
    /// `[-L, L]`.
    fn section_radius_sq(&self, x: f64) -> f64;
}

impl RevolutionProfile for Sphere {
    fn half_length(&self) -> f64 {
        self.radius
    }

    fn section_radius_sq(&self, x: f64) -> f64 {
        (self.radius * self.radius - x * x).max(0.0)
    }
}

impl RevolutionProfile for CassiniSolid {
    fn half_length(&self) -> f64 {
        CassiniSolid::half_length(self)
    }

    fn section_radius_sq(&self, x: f64) -> f64 {
        CassiniSolid::section_radius_sq(self, x)
    }
}

/// Ball of the given radius about the origin, `h = ‖x‖² - r²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub radius: f64,
}

impl Sphere {
    pub fn new(radius: f64) -> Self {
        Sphere { radius }
    }
}

impl ImplicitSurface for Sphere {
    fn eval(&self, x: Point3) -> f64 {
        x.norm_squared() - self.radius * self.radius
    }

    fn gradient(&self, x: Point3) -> Option<Vec3> {
        Some(x * 2.0)
    }

    fn bounding_radius(&self) -> f64 {
        self.radius
    }

    fn volume(&self) -> Result<f64> {
        Ok(4.0 / 3.0 * std::f64::consts::PI * self.radius.powi(3))
    }

    fn radius_along(&self, _d: Vec3) -> f64 {
        self.radius
    }

    fn revolution(&self) -> Option<&dyn RevolutionProfile> {
        Some(self)
    }
}

/// Solid bounded by a Cassini oval revolved about the x-axis:
/// `h = (x²+y²+z²)² - 2α²(x²-y²-z²) + α⁴ - β⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CassiniSolid {
    pub alpha: f64,
    pub beta: f64,
}

impl CassiniSolid {
    /// `α = ratio·β`; requires `0 ≤ ratio < 1` so the solid is connected.
    pub fn new(ratio: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&ratio) || !(beta > 0.0) {
            return Err(Error::Config(format!(
                "Cassini solid needs 0 <= ratio < 1 and beta > 0, got ratio={ratio}, beta={beta}"
            )));
        }
        Ok(CassiniSolid {
            alpha: ratio * beta,
            beta,
        })
    }

    /// The unit-volume solid for a given ratio.
    pub fn calibrated(ratio: f64) -> Result<Self> {
        CassiniSolid::new(ratio, calibrate_beta(ratio)?)
    }

    pub fn ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Half-length along the x-axis, `β√(1+ratio²)`.
    pub fn half_length(&self) -> f64 {
        (self.beta * self.beta + self.alpha * self.alpha).sqrt()
    }

    /// Squared radius of the circular cross-section at abscissa `x`; zero
    /// beyond the tips.
    pub fn section_radius_sq(&self, x: f64) -> f64 {
        let (a2, b2) = (self.alpha * self.alpha, self.beta * self.beta);
        ((b2 * b2 + 4.0 * a2 * x * x).sqrt() - x * x - a2).max(0.0)
    }
}

impl ImplicitSurface for CassiniSolid {
    fn eval(&self, x: Point3) -> f64 {
        let r2 = x.norm_squared();
        let a2 = self.alpha * self.alpha;
        let b2 = self.beta * self.beta;
        r2 * r2 - 2.0 * a2 * (x.x * x.x - x.y * x.y - x.z * x.z) + a2 * a2 - b2 * b2
    }

    fn gradient(&self, x: Point3) -> Option<Vec3> {
        let r2 = x.norm_squared();
        let a2 = self.alpha * self.alpha;
        Some(Vec3::new(
            4.0 * x.x * (r2 - a2),
            4.0 * x.y * (r2 + a2),
            4.0 * x.z * (r2 + a2),
        ))
    }

    fn bounding_radius(&self) -> f64 {
        self.half_length()
    }

    fn volume(&self) -> Result<f64> {
        cassini_volume(self.alpha, self.beta)
    }

    fn radius_along(&self, d: Vec3) -> f64 {
        // In the plane through the axis and d, with cos θ = d_x:
        // r⁴ - 2α² r² cos 2θ + α⁴ - β⁴ = 0.
        let cos2 = 2.0 * d.x * d.x / d.norm_squared() - 1.0;
        let a2 = self.alpha * self.alpha;
        let b4 = self.beta.powi(4);
        let disc = (b4 - a2 * a2 * (1.0 - cos2 * cos2)).max(0.0);
        (a2 * cos2 + disc.sqrt()).sqrt()
    }

    fn revolution(&self) -> Option<&dyn RevolutionProfile> {
        Some(self)
    }
}

/// Volume of the Cassini solid, `π ∫ r(x)² dx` by adaptive quadrature.
pub fn cassini_volume(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha < beta) {
        return Err(Error::Config(format!(
            "Cassini volume needs 0 <= alpha < beta, got alpha={alpha}, beta={beta}"
        )));
    }
    let solid = CassiniSolid { alpha, beta };
    let l = solid.half_length();
    let (half, _) = integrate_adaptive(|x| solid.section_radius_sq(x), 0.0, l, 0.0, 1e-14)?;
    Ok(2.0 * std::f64::consts::PI * half)
}

/// The `β` for which the Cassini solid with `α = ratio·β` has unit volume.
pub fn calibrate_beta(ratio: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Config(format!("Cassini ratio must lie in [0, 1), got {ratio}")));
    }
    let residual = |beta: f64| cassini_volume(ratio * beta, beta).map(|v| v - 1.0);
    // Volume grows like β³; widen the bracket until it straddles 1.
    let (mut lo, mut hi) = (0.25, 1.0);
    for _ in 0..60 {
        if residual(lo)? < 0.0 && residual(hi)? > 0.0 {
            break;
        }
        lo *= 0.5;
        hi *= 2.0;
    }
    let mut failure = None;
    let beta = bisect_root(
        |b| match residual(b) {
            Ok(r) => r,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(beta)
}

/// A named built-in surface, as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurfaceSpec {
    /// `ball` or `ball:<radius>`.
    Ball { radius: f64 },
    /// `cassini:<ratio>`, calibrated to unit volume.
    Cassini { ratio: f64 },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<Box<dyn ImplicitSurface>> {
        Ok(match *self {
            SurfaceSpec::Ball { radius } => Box::new(Sphere::new(radius)),
            SurfaceSpec::Cassini { ratio } => Box::new(CassiniSolid::calibrated(ratio)?),
        })
    }
}

impl FromStr for SurfaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::Config(format!(
                "unknown surface '{s}' (expected ball, ball:<r> or cassini:<ratio>)"
            ))
        };
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let number = |a: &str| a.trim().parse::<f64>().map_err(|_| bad());
        match (name.trim(), arg) {
            ("ball", None) => Ok(SurfaceSpec::Ball { radius: 1.0 }),
            ("ball", Some(a)) => {
                let radius = number(a)?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(bad());
                }
                Ok(SurfaceSpec::Ball { radius })
            }
            ("cassini", Some(a)) => {
                let ratio = number(a)?;
                if !(0.0..1.0).contains(&ratio) {
                    return Err(Error::Config(format!("Cassini ratio must lie in [0, 1), got {ratio}")));
                }
                Ok(SurfaceSpec::Cassini { ratio })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SurfaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceSpec::Ball { radius } if *radius == 1.0 => write!(f, "ball"),
            SurfaceSpec::Ball { radius } => write!(f, "ball:{radius}"),
            SurfaceSpec::Cassini { ratio } => write!(f, "cassini:{ratio}"),
        }
    }
}
