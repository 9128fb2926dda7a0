//! Base matrix construction, multi-matrix family derivation and alist I/O.

pub mod alist;
pub mod builder;
pub mod family;

pub use alist::{read_alist, read_family_dir, write_alist, write_family_dir};
pub use builder::{build_base_matrix, build_base_matrix_with, BuildOptions, BuildReport, DegreeSpec};
pub use family::{derive_family, CodeFamily, WaveLayout};
