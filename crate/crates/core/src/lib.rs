//! Slow–fast analysis of a reduced two-component dryland vegetation model:
//! scaling, fast and slow reduced flows, front and pattern construction,
//! and a direct PDE simulator used to validate them.

pub mod equilibria;
pub mod error;
pub mod fast;
pub mod numerics;
pub mod orbits;
pub mod params;
pub mod pde;
pub mod slow;
pub mod spatial;

pub use error::{Error, Result};
pub use params::{derive_coeffs, freeze_family, scale_params, ScaledParams, SlowPlusCoeffs, UnscaledParams};
