//! Monte-Carlo experiments for multi-matrix reconciliation: seeded key and
//! channel simulation, the experiment presets, and CSV output.

pub mod error;
pub mod experiment;
pub mod report;
pub mod sim;

pub use error::BenchError;
pub use experiment::{
    run_experiment, run_variants, run_with_families, summarize, BuildParams, DecodeRate,
    Experiment, ExperimentSpec, FamilySet, FamilySource, MetricsRecord, Summary, Variant,
    VariantKind,
};
pub use sim::{apply_bsc, child_seed, gen_key, ErrorModel};
