//! Numerical conformal bootstrap engine.
//!
//! Decides whether partially specified CFT spectra are inconsistent with
//! crossing symmetry by searching for exclusion functionals over derivative
//! tables of conformal blocks, and converts allowed-region geometry into 3d
//! Ising critical exponents.
//!
//! The numerical core is generic over the scalar type via [`scalar::Real`];
//! the concrete aliases below are what the pipelines actually run with.

pub mod blocks;
pub mod crossing;
pub mod error;
pub mod fixtures;
pub mod scalar;
pub mod series;

/// Default working scalar for the pipelines.
pub type F = f64;
/// Elevated-precision scalar (double-double) used for certificate checks.
pub type Wide = scalar::Dd;
