//! Spherical Fourier analysis on the Heisenberg group and numerical
//! dispersive estimates for the wave flow of the full Laplacian.

pub mod besov;
pub mod error;
pub mod fit;
pub mod littlewood_paley;
pub mod oscillatory;
pub mod profile;
pub mod propagator;
pub mod quadrature;
pub mod scan;
pub mod special;
pub mod spectral;
pub mod verifier;

pub use error::{Error, Result};
