//! Gate-level circuit description shared by every backend.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateOp {
    X {
        qubit: usize,
    },
    H {
        qubit: usize,
    },
    /// `exp(-i angle Y / 2)`
    Ry {
        qubit: usize,
        angle: f64,
    },
    /// `exp(-i angle Z / 2)`
    Rz {
        qubit: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// `exp(-i angle P)` for a Hermitian string `P` (phase +1 or -1).
    PauliRotation {
        generator: PauliString,
        angle: f64,
    },
}

impl GateOp {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::X { qubit }
            | GateOp::H { qubit }
            | GateOp::Ry { qubit, .. }
            | GateOp::Rz { qubit, .. } => {
                vec![*qubit]
            }
            GateOp::Cnot { control, target } => vec![*control, *target],
            GateOp::PauliRotation { generator, .. } => generator.support(),
        }
    }

    pub fn is_single_qubit(&self) -> bool {
        matches!(
            self,
            GateOp::X { .. } | GateOp::H { .. } | GateOp::Ry { .. } | GateOp::Rz { .. }
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Circuit {
        Circuit {
            n_qubits,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn check(&self, op: &GateOp) -> Result<()> {
        let n = self.n_qubits;
        for q in op.qubits() {
            if q >= n {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: n,
                });
            }
        }
        match op {
            GateOp::Cnot { control, target } if control == target => Err(Error::Invalid(format!(
                "CNOT control and target are both {control}"
            ))),
            GateOp::PauliRotation { generator, angle } => {
                if generator.n_qubits() != n {
                    return Err(Error::SizeMismatch {
                        left: n,
                        right: generator.n_qubits(),
                    });
                }
                if !generator.phase().is_real() {
                    return Err(Error::NonHermitian(format!(
                        "rotation generator {generator}"
                    )));
                }
                if !angle.is_finite() {
                    return Err(Error::Invalid("non-finite rotation angle".into()));
                }
                Ok(())
            }
            GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } if !angle.is_finite() => {
                Err(Error::Invalid("non-finite rotation angle".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        self.check(&op)?;
        self.ops.push(op);
        Ok(self)
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateOp::X { qubit: q })
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push(GateOp::H { qubit: q })
    }

    pub fn ry(&mut self, q: usize, angle: f64) -> Result<&mut Self> {
        self.push(GateOp::Ry { qubit: q, angle })
    }

    pub fn rz(&mut self, q: usize, angle: f64) -> Result<&mut Self> {
        self.push(GateOp::Rz { qubit: q, angle })
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(GateOp::Cnot { control, target })
    }

    pub fn pauli_rotation(&mut self, generator: PauliString, angle: f64) -> Result<&mut Self> {
        self.push(GateOp::PauliRotation { generator, angle })
    }

    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        self.ops.extend(other.ops.iter().cloned());
        Ok(self)
    }

    pub fn then(mut self, other: &Circuit) -> Result<Circuit> {
        self.append(other)?;
        Ok(self)
    }

    /// CNOTs after decomposition of any Pauli rotations.
    pub fn cnot_count(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op {
                GateOp::Cnot { .. } => 1,
                GateOp::PauliRotation { generator, .. } => 2 * generator.weight().saturating_sub(1),
                _ => 0,
            })
            .sum()
    }

    /// Replaces each CNOT with `2 * pairs + 1` copies.
    pub fn fold_cnots(&self, pairs: usize) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for op in self.decompose().ops {
            if matches!(op, GateOp::Cnot { .. }) {
                for _ in 0..2 * pairs + 1 {
                    out.ops.push(op.clone());
                }
            } else {
                out.ops.push(op);
            }
        }
        out
    }

    /// Expands Pauli rotations into basis changes, a CNOT ladder and one `Rz`.
    pub fn decompose(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits);
        for op in &self.ops {
            match op {
                GateOp::PauliRotation { generator, angle } => {
                    let sign = generator.phase().sign().unwrap_or(1.0);
                    expand_rotation(&mut out.ops, generator, sign * angle);
                }
                other => out.ops.push(other.clone()),
            }
        }
        out
    }

    /// Heisenberg picture map `P -> U P U^dagger` for Clifford circuits.
    /// Returns `None` if a non-Clifford gate is present.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Option<PauliString> {
        let mut out = p.clone();
        for op in &self.ops {
            match op {
                GateOp::X { qubit } => out.conjugate_x(*qubit),
                GateOp::H { qubit } => out.conjugate_h(*qubit),
                GateOp::Cnot { control, target } => out.conjugate_cnot(*control, *target),
                GateOp::Rz { qubit, angle } => match quarter_turns(*angle)? {
                    0 => {}
                    k => {
                        for _ in 0..k {
                            out.conjugate_s(*qubit);
                        }
                    }
                },
                GateOp::Ry { qubit, angle } => match quarter_turns(*angle)? {
                    0 => {}
                    k => {
                        // Quarter turn about Y: Z -> X, X -> -Z.
                        for _ in 0..k {
                            match out.letter(*qubit) {
                                Pauli::Z => out.set(*qubit, Pauli::X),
                                Pauli::X => {
                                    out.set(*qubit, Pauli::Z);
                                    out = out.clone().with_phase(out.phase().negate());
                                }
                                _ => {}
                            }
                        }
                    }
                },
                GateOp::PauliRotation { .. } => return None,
            }
        }
        Some(out)
    }
}

fn quarter_turns(angle: f64) -> Option<u32> {
    let k = angle / FRAC_PI_2;
    let r = k.round();
    if (k - r).abs() > 1e-12 {
        return None;
    }
    Some((r as i64).rem_euclid(4) as u32)
}

/// `exp(-i angle P)` for a phase-free `P`.
fn expand_rotation(ops: &mut Vec<GateOp>, p: &PauliString, angle: f64) {
    let support = p.support();
    if support.is_empty() {
        // Global phase only.
        return;
    }
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &q in &support {
        match p.letter(q) {
            Pauli::X => {
                pre.push(GateOp::H { qubit: q });
                post.push(GateOp::H { qubit: q });
            }
            Pauli::Y => {
                pre.push(GateOp::Rz {
                    qubit: q,
                    angle: -FRAC_PI_2,
                });
                pre.push(GateOp::H { qubit: q });
                post.push(GateOp::H { qubit: q });
                post.push(GateOp::Rz {
                    qubit: q,
                    angle: FRAC_PI_2,
                });
            }
            _ => {}
        }
    }
    ops.extend(pre);
    for w in support.windows(2) {
        ops.push(GateOp::Cnot {
            control: w[0],
            target: w[1],
        });
    }
    let last = *support.last().unwrap();
    ops.push(GateOp::Rz {
        qubit: last,
        angle: 2.0 * angle,
    });
    for w in support.windows(2).rev() {
        ops.push(GateOp::Cnot {
            control: w[0],
            target: w[1],
        });
    }
    ops.extend(post);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_indices() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.x(2), Err(Error::QubitOutOfRange { .. })));
        assert!(c.cnot(1, 1).is_err());
        assert!(c.pauli_rotation("+1 XYZ".parse().unwrap(), 0.1).is_err());
    }

    #[test]
    fn ladder_cnot_count() {
        let mut c = Circuit::new(4);
        c.pauli_rotation("+1 XXXY".parse().unwrap(), 0.3).unwrap();
        c.pauli_rotation("+1 IIIY".parse().unwrap(), 0.3).unwrap();
        assert_eq!(c.cnot_count(), 6);
        assert_eq!(
            c.decompose()
                .ops()
                .iter()
                .filter(|o| matches!(o, GateOp::Cnot { .. }))
                .count(),
            6
        );
    }

    #[test]
    fn folding_multiplies_cnots() {
        let mut c = Circuit::new(2);
        c.h(0).unwrap().cnot(0, 1).unwrap();
        assert_eq!(c.fold_cnots(1).cnot_count(), 3);
        assert_eq!(c.fold_cnots(0), c);
    }

    #[test]
    fn clifford_conjugation_through_cnot() {
        let mut c = Circuit::new(2);
        c.cnot(0, 1).unwrap();
        assert_eq!(
            c.conjugate_pauli(&"XX".parse().unwrap())
                .unwrap()
                .to_string(),
            "+1 XI"
        );
        assert_eq!(
            c.conjugate_pauli(&"ZZ".parse().unwrap())
                .unwrap()
                .to_string(),
            "+1 IZ"
        );
    }
}
