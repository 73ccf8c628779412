//! Exact q-expansions, the echelon cusp-form basis, Hecke matrices and
//! normalized eigenvalue tables.

pub mod basis;
pub mod eigen;
pub mod integrity;
pub mod oracle;
pub mod qseries;

pub use basis::{cusp_dim, delta, eisenstein, hecke_matrix, miller_basis, BasisDescriptor, EisensteinId};
pub use eigen::{hecke_eigenforms, Eigenform};
pub use integrity::{check_integrity, IntegrityReport};
pub use qseries::QSeries;
