//! Exact spectral analysis of the power-set matrices
//! `M_r(S,T) = C(|S∩T|,2) + C(|S̄∩T̄|,2)` and the product Ramsey questions they
//! bound: a quadratic integer program giving 2-guaranteed triples, and an
//! exhaustive checker for the c-guaranteed property on small grids.

pub mod cli;
pub mod eigen;
pub mod error;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod qip;
pub mod ramsey;
pub mod subset;

pub use error::{Error, Result};
pub use subset::{SubsetIndex, SubsetVector};
