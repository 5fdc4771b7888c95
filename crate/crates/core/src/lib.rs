//! Numerical laboratory for borderline Sobolev estimates of divergence-free
//! vector fields on Euclidean space and on the upper half-space model of
//! hyperbolic space.

pub mod decomposition;
pub mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod harness;
pub mod identities;
pub mod linalg;
pub mod quadrature;

pub use error::{Error, Result};
