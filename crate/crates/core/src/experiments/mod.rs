//! Experiment configuration, drivers and persisted run records.

pub mod config;
pub mod record;
pub mod runners;

pub use config::{
    default_noise, AnsatzConfig, AnsatzVariant, BackendConfig, Experiment, ExperimentConfig,
    MitigationConfig, ModelConfig, OutputConfig, OutputFormat, StudyConfig, SymmetryMode,
};
pub use record::{
    calibration_to_csv, correlations_to_csv, emit, from_json, recovered_pct, to_csv, to_json,
    CorrelationSet, RepeatRecord, RunRecord, Summary, CSV_HEADER, SCHEMA,
};
pub use runners::{
    correlation_matrices, derive_seed, largest_ops, make_backend, run, run_calibration,
    run_correlation_report, run_h2_curve, run_scaling_comparison, run_tfim_matrix,
    run_truncation_study, solve, tapered_correlator, RunBackend, TfimProblem,
};
