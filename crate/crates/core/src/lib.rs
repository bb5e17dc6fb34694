//! Hybrid boundary element / singular function boundary integral solver for
//! two-dimensional Laplace problems with boundary singularities.

pub mod assembly;
pub mod experiment;
pub mod error;
pub mod gfem;
pub mod geometry;
pub mod hybrid;
pub mod linalg;
pub mod postprocess;
pub mod quadrature;
pub mod sfbim;

pub use error::{Error, Result};
