//! Shared fixtures for the criterion benches.

use pqe_core::experiments::{AnsatzConfig, SymmetryMode, TfimProblem};
use pqe_core::{NoiseSpec, TfimSpec};

/// Untapered TFIM chain with the parity-filtered ansatz.
pub fn tfim_problem(n: usize) -> TfimProblem {
    TfimProblem::new(
        TfimSpec::new(n, 1.0, 1.0),
        SymmetryMode::None,
        0,
        &AnsatzConfig::default(),
    )
    .expect("valid TFIM size")
}

/// Depolarizing plus readout noise used throughout the benches.
pub fn bench_noise() -> NoiseSpec {
    NoiseSpec {
        p1: 0.001,
        p2: 0.015,
        readout: vec![NoiseSpec::confusion(0.02, 0.04)],
        ..Default::default()
    }
}

/// Small nonzero angles, deterministic.
pub fn angles(k: usize) -> Vec<f64> {
    (0..k).map(|i| 0.1 + 0.05 * (i % 7) as f64).collect()
}
