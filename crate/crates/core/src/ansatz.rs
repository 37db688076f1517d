//! Product-of-exponentials ansatz built from single Pauli-string rotations.
//!
//! Parameter `t_mu` is a rotation angle: the factor for op `mu` is
//! `exp(-i (t_mu / 2) P_mu)`, so acting alone on the reference it gives
//! `cos(t/2) |ref> + sign * sin(t/2) |target>`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzOp {
    pub generator: PauliString,
    /// Basis state reached from the reference.
    pub target: Bitstring,
    /// `-i P |ref> = sign |target>`
    pub sign: f64,
}

impl AnsatzOp {
    /// Requires an odd number of Y letters so the generator is real anti-Hermitian.
    pub fn new(generator: PauliString, reference: Bitstring) -> Result<AnsatzOp> {
        if generator.n_qubits() != reference.n_qubits {
            return Err(Error::SizeMismatch {
                left: reference.n_qubits,
                right: generator.n_qubits(),
            });
        }
        if generator.phase().sign() != Some(1.0) {
            return Err(Error::Invalid(format!(
                "generator {generator} must carry phase +1"
            )));
        }
        if generator.y_count().is_multiple_of(2) {
            return Err(Error::Invalid(format!(
                "generator {generator} needs an odd number of Y letters"
            )));
        }
        let (c, t) = generator.apply_to_basis(reference.bits);
        // -i * c is real because c = +-i here.
        let sign = c.im;
        Ok(AnsatzOp {
            generator,
            target: Bitstring::new(reference.n_qubits, t),
            sign,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub n_qubits: usize,
    pub reference: Bitstring,
    pub ops: Vec<AnsatzOp>,
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

impl Ansatz {
    pub fn new(reference: Bitstring, generators: Vec<PauliString>) -> Result<Ansatz> {
        let ops = generators
            .into_iter()
            .map(|g| AnsatzOp::new(g, reference))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ansatz {
            n_qubits: reference.n_qubits,
            reference,
            ops,
        })
    }

    /// Single `Y` rotation on `|0>`, the full two-determinant H2 ansatz.
    pub fn h2() -> Ansatz {
        Ansatz::new(Bitstring::zeros(1), vec!["+1 Y".parse().unwrap()]).expect("valid ansatz")
    }

    /// One rotation per non-empty subset of qubits: `Y` on the subset's highest qubit
    /// and `X` on the rest. Subsets are grouped by highest qubit, ascending, and
    /// sorted lexicographically inside a group. With `even_only`, odd subsets are
    /// dropped, which keeps the ansatz inside the even-parity sector of `|0...0>`.
    pub fn combinatorial(n_qubits: usize, even_only: bool) -> Result<Ansatz> {
        if n_qubits == 0 || n_qubits > 20 {
            return Err(Error::Invalid(format!(
                "combinatorial ansatz on {n_qubits} qubits"
            )));
        }
        let mut gens = Vec::new();
        for top in 0..n_qubits {
            let mut subsets: Vec<Vec<usize>> = (0u64..1 << top)
                .map(|m| {
                    let mut s: Vec<usize> = (0..top).filter(|&q| m >> q & 1 == 1).collect();
                    s.push(top);
                    s
                })
                .filter(|s| !even_only || s.len() % 2 == 0)
                .collect();
            subsets.sort();
            for s in subsets {
                let mut p = PauliString::identity(n_qubits);
                for &q in &s[..s.len() - 1] {
                    p.set(q, Pauli::X);
                }
                p.set(top, Pauli::Y);
                gens.push(p);
            }
        }
        Ansatz::new(Bitstring::zeros(n_qubits), gens)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Keeps the listed ops, in their original order.
    pub fn truncate(&self, keep: &[usize]) -> Result<Ansatz> {
        let mut idx = keep.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.ops.len()) {
            return Err(Error::Invalid(format!(
                "op index {bad} out of range for {} ops",
                self.ops.len()
            )));
        }
        Ok(Ansatz {
            n_qubits: self.n_qubits,
            reference: self.reference,
            ops: idx.iter().map(|&i| self.ops[i].clone()).collect(),
        })
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.ops.len() {
            return Err(Error::ParamMismatch {
                expected: self.ops.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Invalid("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn reference_circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits);
        for q in self.reference.ones() {
            c.x(q).expect("reference fits register");
        }
        c
    }

    /// Reference preparation, an optional extra rotation `exp(-i phi P_mu)`, then the ansatz.
    /// Gates stay in rotation form.
    pub fn rotation_circuit(&self, params: &[f64], shift: Option<(usize, f64)>) -> Result<Circuit> {
        self.check_params(params)?;
        let mut c = self.reference_circuit();
        if let Some((mu, phi)) = shift {
            let op = self
                .ops
                .get(mu)
                .ok_or_else(|| Error::Invalid(format!("op index {mu} out of range")))?;
            c.pauli_rotation(op.generator.clone(), phi)?;
        }
        for (op, &t) in self.ops.iter().zip(params) {
            c.pauli_rotation(op.generator.clone(), 0.5 * t)?;
        }
        Ok(c)
    }

    /// Elementary-gate circuit: each rotation becomes a CNOT ladder.
    pub fn compile(&self, params: &[f64]) -> Result<Circuit> {
        Ok(self.rotation_circuit(params, None)?.decompose())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Ansatz> {
        let a: Ansatz = serde_json::from_str(s)?;
        // Re-derive targets so a hand-edited file cannot disagree with its generators.
        let gens = a.ops.iter().map(|o| o.generator.clone()).collect();
        let fresh = Ansatz::new(a.reference, gens)?;
        if fresh != a {
            return Err(Error::Parse(
                "ansatz targets or signs disagree with generators".into(),
            ));
        }
        Ok(fresh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::simulate;

    #[test]
    fn sizes() {
        assert_eq!(Ansatz::combinatorial(4, true).unwrap().len(), 7);
        assert_eq!(Ansatz::combinatorial(4, false).unwrap().len(), 15);
        assert_eq!(Ansatz::combinatorial(3, false).unwrap().len(), 7);
    }

    #[test]
    fn block_and_lexicographic_order() {
        let a = Ansatz::combinatorial(4, true).unwrap();
        let s: Vec<String> = a.ops.iter().map(|o| o.generator.to_string()).collect();
        assert_eq!(
            s,
            ["+1 XYII", "+1 XIYI", "+1 IXYI", "+1 XXXY", "+1 XIIY", "+1 IXIY", "+1 IIXY"]
        );
    }

    #[test]
    fn single_op_mixes_reference_and_target() {
        let a = Ansatz::combinatorial(3, false).unwrap();
        for (mu, op) in a.ops.iter().enumerate() {
            let mut p = vec![0.0; a.len()];
            p[mu] = 0.8;
            let sv = simulate(&a.compile(&p).unwrap()).unwrap();
            let amps = sv.amplitudes();
            assert!((amps[0].re - 0.4f64.cos()).abs() < 1e-12);
            assert!((amps[op.target.bits as usize].re - op.sign * 0.4f64.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn h2_ansatz_is_ry() {
        let a = Ansatz::h2();
        let sv = simulate(&a.compile(&[1.1]).unwrap()).unwrap();
        assert!((sv.amplitudes()[0].re - 0.55f64.cos()).abs() < 1e-12);
        assert!((sv.amplitudes()[1].re - 0.55f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_generators_and_params() {
        assert!(AnsatzOp::new("XX".parse().unwrap(), Bitstring::zeros(2)).is_err());
        assert!(AnsatzOp::new("-1 XY".parse().unwrap(), Bitstring::zeros(2)).is_err());
        let a = Ansatz::h2();
        assert!(matches!(
            a.compile(&[0.1, 0.2]),
            Err(Error::ParamMismatch { .. })
        ));
        assert!(a.truncate(&[3]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = Ansatz::combinatorial(3, true).unwrap();
        let back = Ansatz::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn wrap_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.3) - 0.3).abs() < 1e-15);
    }
}
