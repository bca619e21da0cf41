//! Numerical building blocks: adaptive quadrature, the dilogarithm and
//! monotone cubic interpolation.

pub mod dilog;
pub mod interp;
pub mod quad;

pub use dilog::dilog;
pub use interp::MonotoneCubic;
pub use quad::{integrate, integrate_split};
