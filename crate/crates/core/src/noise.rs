//! Gate-level noise description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How noisy circuits are simulated. Both give the same channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMethod {
    /// Exact mixed-state evolution, then multinomial sampling.
    #[default]
    DensityMatrix,
    /// Random Pauli insertions per shot.
    Trajectories,
}

/// Readout confusion `A[observed][true]`.
pub type Confusion = [[f64; 2]; 2];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Depolarizing probability after each single-qubit gate.
    #[serde(default)]
    pub p1: f64,
    /// Two-qubit depolarizing probability after each CNOT.
    #[serde(default)]
    pub p2: f64,
    /// Per-qubit confusion matrices. A single entry applies to every qubit.
    #[serde(default)]
    pub readout: Vec<Confusion>,
    #[serde(default)]
    pub method: NoiseMethod,
}

impl NoiseSpec {
    pub fn readout_only(confusion: Confusion) -> NoiseSpec {
        NoiseSpec {
            readout: vec![confusion],
            ..Default::default()
        }
    }

    /// Confusion matrix from the flip probabilities `P(1|0)` and `P(0|1)`.
    pub fn confusion(p01: f64, p10: f64) -> Confusion {
        [[1.0 - p01, p10], [p01, 1.0 - p10]]
    }

    pub fn has_gate_noise(&self) -> bool {
        self.p1 > 0.0 || self.p2 > 0.0
    }

    pub fn readout_for(&self, q: usize) -> Option<&Confusion> {
        match self.readout.len() {
            0 => None,
            1 => Some(&self.readout[0]),
            _ => self.readout.get(q),
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if self.readout.len() > 1 && self.readout.len() != n_qubits {
            return Err(Error::Invalid(format!(
                "{} readout matrices for {n_qubits} qubits",
                self.readout.len()
            )));
        }
        for a in &self.readout {
            for col in 0..2 {
                let s = a[0][col] + a[1][col];
                if (s - 1.0).abs() > 1e-9 || a[0][col] < 0.0 || a[1][col] < 0.0 {
                    return Err(Error::Invalid(format!(
                        "readout column {col} is not a distribution"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies readout confusion to an exact outcome distribution.
    pub fn apply_readout(&self, probs: &mut [f64]) {
        let n = probs.len().trailing_zeros() as usize;
        for q in 0..n {
            let Some(a) = self.readout_for(q) else {
                continue;
            };
            let bit = 1usize << q;
            for i in 0..probs.len() {
                if i & bit == 0 {
                    let (p0, p1) = (probs[i], probs[i | bit]);
                    probs[i] = a[0][0] * p0 + a[0][1] * p1;
                    probs[i | bit] = a[1][0] * p0 + a[1][1] * p1;
                }
            }
        }
    }
}
