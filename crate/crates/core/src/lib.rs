//! Quadrature weights for volumes bounded by smooth surfaces.
//!
//! Given scattered nodes (some flagged as lying on the bounding surface) and
//! a tetrahedral tessellation of them, `volquad` computes weights `W_i` such
//! that `Σ W_i f(x_i)` approximates `∫_Ω f dV`. Each tetrahedron contributes
//! the integral of a local polyharmonic-spline interpolant built on its
//! nearest nodes. Tetrahedra on the boundary also pick up the thin sliver
//! between their outer face and the curved surface, parameterized by rays
//! from a projection point that makes adjacent slivers tile without gaps.

// `!(x > tol)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod basis;
pub mod boundary;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kdtree;
pub mod levelset;
pub mod mesh;
pub mod roots;
pub mod rules1d;
pub mod saddle;
pub mod sliver;
pub mod tet_rbf;

pub use error::{Error, GeometryError, Result};
pub use geometry::{Point2, Point3, Tetrahedron, Triangle3, Vec2, Vec3};
