//! Projective quantum eigensolver with a VQE baseline, noisy shot simulation and error mitigation.

pub mod ansatz;
pub mod backend;
pub mod bits;
pub mod circuit;
pub mod density;
pub mod error;
pub mod experiments;
pub mod mitigation;
pub mod models;
pub mod noise;
pub mod pauli;
pub mod sampling;
pub mod solver;
pub mod statevector;

pub use ansatz::{wrap_angle, Ansatz, AnsatzOp};
pub use backend::{Backend, BackendStats, ExactBackend, Mitigation, ShotBackend, SymmetryRule};
pub use bits::Bitstring;
pub use circuit::{Circuit, GateOp};
pub use error::{Error, Result};
pub use models::{H2Record, SpectrumReport, TfimSpec};
pub use noise::{NoiseMethod, NoiseSpec};
pub use pauli::{ObservableSum, Pauli, PauliString, Phase};
pub use sampling::ShotTable;
pub use solver::{Method, ResidualFormula, SolveReport, SolverConfig};
pub use statevector::StateVector;
