//! Quadrature and one-dimensional solvers.

pub mod quadrature;
pub mod roots;

pub use quadrature::{integrate, integrate_with_breaks, QuadResult, Segment, DEFAULT_ABS_TOL, DEFAULT_MAX_DEPTH};
pub use roots::{brent, golden_section, Minimum, Root};
