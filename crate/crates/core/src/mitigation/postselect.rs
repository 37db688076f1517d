//! Symmetry postselection and the CNOT staircase used to make it compatible with XX groups.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::sampling::ShotTable;

/// Keep outcomes whose Z-parity over `mask` equals `odd`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityRule {
    pub mask: u64,
    pub odd: bool,
}

impl ParityRule {
    pub fn even(mask: u64) -> ParityRule {
        ParityRule { mask, odd: false }
    }

    /// Rule for a diagonal string `P` with required eigenvalue `eigenvalue`.
    pub fn from_diagonal(p: &PauliString, eigenvalue: f64) -> Result<ParityRule> {
        if !p.is_diagonal() {
            return Err(Error::Invalid(format!(
                "{p} is not diagonal in the measured basis"
            )));
        }
        let sign = p
            .phase()
            .sign()
            .ok_or_else(|| Error::NonHermitian(p.to_string()))?;
        Ok(ParityRule {
            mask: p.z_mask(),
            odd: sign * eigenvalue < 0.0,
        })
    }

    pub fn accepts(&self, b: u64) -> bool {
        ((b & self.mask).count_ones() % 2 == 1) == self.odd
    }
}

/// Drops violating shots and reports the discarded fraction.
pub fn postselect(counts: &ShotTable, rule: &ParityRule) -> Result<(ShotTable, f64)> {
    let kept: Vec<u64> = counts
        .counts()
        .iter()
        .enumerate()
        .map(|(b, &c)| if rule.accepts(b as u64) { c } else { 0 })
        .collect();
    let out = ShotTable::from_counts(counts.n_qubits(), kept)?;
    if out.total_shots() == 0 {
        return Err(Error::AllShotsDiscarded);
    }
    let discarded = 1.0 - out.total_shots() as f64 / counts.total_shots() as f64;
    Ok((out, discarded))
}

/// Same as [`postselect`] on a probability vector; the result is renormalised.
pub fn postselect_probabilities(probs: &[f64], rule: &ParityRule) -> Result<(Vec<f64>, f64)> {
    let mut out: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(b, &p)| if rule.accepts(b as u64) { p } else { 0.0 })
        .collect();
    let kept: f64 = out.iter().sum();
    let total: f64 = probs.iter().sum();
    if kept <= 0.0 {
        return Err(Error::AllShotsDiscarded);
    }
    out.iter_mut().for_each(|p| *p /= kept);
    Ok((out, 1.0 - kept / total))
}

/// `CNOT(0,1) CNOT(1,2) ... CNOT(n-2,n-1)` in time order.
#[derive(Clone, Debug, PartialEq)]
pub struct Staircase {
    pub circuit: Circuit,
}

impl Staircase {
    /// Image of `p` when the staircase runs before measurement.
    /// `X_i X_{i+1}` becomes `X_i` and the full Z-parity becomes `Z_{n-1}`.
    pub fn map(&self, p: &PauliString) -> Result<PauliString> {
        if p.n_qubits() != self.circuit.n_qubits() {
            return Err(Error::SizeMismatch {
                left: self.circuit.n_qubits(),
                right: p.n_qubits(),
            });
        }
        Ok(self
            .circuit
            .conjugate_pauli(p)
            .expect("staircase is Clifford"))
    }
}

pub fn staircase_transform(n_qubits: usize) -> Result<Staircase> {
    if n_qubits < 2 {
        return Err(Error::Invalid("staircase needs at least two qubits".into()));
    }
    let mut c = Circuit::new(n_qubits);
    for i in 0..n_qubits - 1 {
        c.cnot(i, i + 1)?;
    }
    Ok(Staircase { circuit: c })
}
