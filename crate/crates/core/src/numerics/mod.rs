//! Generic numerical building blocks.

pub mod banded;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod tridiag;
