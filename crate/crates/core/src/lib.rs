//! Numerical laboratory for parabolic equations with time-dependent
//! absorption: fundamental solutions with growing mass, flat supersolutions,
//! very singular self-similar profiles and local energy functionals.

pub mod error;
pub mod kernels;
pub mod quadrature;
pub mod rdsolver;
pub mod selfsimilar;
pub mod energy;
pub mod dichotomy;
pub mod cli;

pub use error::{Error, Result};
