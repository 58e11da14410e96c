//! Semiclassical wave packets through an avoided crossing in a weakly
//! nonlinear two-level Schrödinger system.

pub mod classical;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod inner;
pub mod io;
pub mod params;
pub mod potential;
pub mod profile;
pub mod semiclassical;

pub use error::{Error, Result};
pub use num_complex::Complex64;
