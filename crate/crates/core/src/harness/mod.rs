//! File formats, node generation, tessellation, test integrands and the
//! convergence and timing studies.

pub mod config;
pub mod delaunay;
pub mod integrands;
pub mod io;
pub mod nodegen;
pub mod predicates;
pub mod reference;
pub mod studies;
