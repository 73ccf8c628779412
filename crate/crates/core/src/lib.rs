//! Numerical laboratory for harmonic moments of sharp-cutoff sums of Hecke
//! eigenvalues in the large-weight range x ≥ k²/(8π²).

pub mod bessel;
pub mod equidist;
pub mod error;
pub mod linalg;
pub mod modforms;
pub mod moments;
pub mod numeric;
pub mod offdiag;
pub mod petersson;
pub mod voronoi;

pub use error::{in_order, Error, Result};
pub use numeric::{Mpf, Precision, Real};
