//! Multi-matrix LDPC post-processing for quantum key distribution.
//!
//! The crate covers syndrome-based QBER estimation over several parity-check
//! matrices, belief-propagation reconciliation that fuses those matrices
//! under flooding, shuffled and layered schedules, construction of matrix
//! families sharing one set of independent columns, and the leakage and
//! efficiency bookkeeping around a reconciliation session.

pub mod bits;
pub mod codes;
pub mod decoder;
pub mod error;
pub mod estimation;
pub mod gf2;
pub mod protocol;

pub use bits::BitBlock;
pub use codes::{CodeFamily, DegreeSpec, WaveLayout};
pub use error::{Error, Result};
pub use gf2::{gf2_rank, mat_vec_mul, systematic_decompose, ParityCheckMatrix, SystematicForm};
pub use decoder::{decode, ConvergenceMode, DecodeConfig, DecodeResult, Schedule};
pub use estimation::{compute_syndromes, EstimateReport, SyndromeSet};
pub use protocol::{bob_reconcile, ReconcileOutcome, ReconcileStatus, SessionParams};
