//! Exact pure-state simulation.

use num_complex::Complex64;

use crate::circuit::{Circuit, GateOp};
use crate::error::{Error, Result};
use crate::pauli::{ObservableSum, PauliString};

/// Registers above this size are refused by the dense simulators.
pub const MAX_SIM_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

pub(crate) type Mat2 = [[Complex64; 2]; 2];

pub(crate) fn gate_matrix(op: &GateOp) -> Option<Mat2> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Some(match op {
        GateOp::X { .. } => [[ZERO, ONE], [ONE, ZERO]],
        GateOp::H { .. } => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]
        }
        GateOp::Ry { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateOp::Rz { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co, -s), ZERO], [ZERO, c(co, s)]]
        }
        _ => return None,
    })
}

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    m
}

pub(crate) fn check_sim_size(n: usize) -> Result<()> {
    if n > MAX_SIM_QUBITS {
        return Err(Error::TooLarge {
            n_qubits: n,
            limit: MAX_SIM_QUBITS,
        });
    }
    Ok(())
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Result<StateVector> {
        StateVector::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: u64) -> Result<StateVector> {
        check_sim_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index as usize >= dim {
            return Err(Error::Invalid(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index as usize] = ONE;
        Ok(StateVector { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::Invalid(
                "amplitude count is not a power of two".into(),
            ));
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn apply_mat(&mut self, q: usize, m: &Mat2) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = m[0][0] * a + m[0][1] * b;
                self.amps[i | bit] = m[1][0] * a + m[1][1] * b;
            }
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    pub(crate) fn apply_pauli(&mut self, p: &PauliString) {
        let mut out = vec![ZERO; self.amps.len()];
        for (b, &a) in self.amps.iter().enumerate() {
            let (f, t) = p.apply_to_basis(b as u64);
            out[t as usize] = f * a;
        }
        self.amps = out;
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        for q in op.qubits() {
            if q >= self.n_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        match op {
            GateOp::Cnot { control, target } => self.apply_cnot(*control, *target),
            GateOp::PauliRotation { generator, angle } => {
                if generator.n_qubits() != self.n_qubits {
                    return Err(Error::SizeMismatch {
                        left: self.n_qubits,
                        right: generator.n_qubits(),
                    });
                }
                // exp(-i a P) = cos a - i sin a P
                let (s, c) = angle.sin_cos();
                let mut pv = self.clone();
                pv.apply_pauli(generator);
                let mi_s = Complex64::new(0.0, -s);
                for (a, b) in self.amps.iter_mut().zip(pv.amps) {
                    *a = *a * c + mi_s * b;
                }
            }
            single => {
                let q = single.qubits()[0];
                self.apply_mat(q, &gate_matrix(single).expect("single-qubit gate"));
            }
        }
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: circuit.n_qubits(),
            });
        }
        for op in circuit.ops() {
            self.apply(op)?;
        }
        Ok(())
    }

    pub fn expectation(&self, obs: &ObservableSum) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: obs.n_qubits(),
            });
        }
        obs.expectation(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Runs `circuit` on `|0...0>`.
pub fn simulate(circuit: &Circuit) -> Result<StateVector> {
    let mut sv = StateVector::zero(circuit.n_qubits())?;
    sv.run(circuit)?;
    Ok(sv)
}

/// Exact `<0|U^dagger H U|0>`.
pub fn exact_expectation(circuit: &Circuit, obs: &ObservableSum) -> Result<f64> {
    simulate(circuit)?.expectation(obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn y_rotation_by_quarter_turn_flips_zero() {
        let mut c = Circuit::new(1);
        c.pauli_rotation("Y".parse().unwrap(), FRAC_PI_2).unwrap();
        let sv = simulate(&c).unwrap();
        assert!((sv.probabilities()[1] - 1.0).abs() < 1e-12);
        assert!((sv.amplitudes()[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn bell_pair() {
        let mut c = Circuit::new(2);
        c.h(0).unwrap().cnot(0, 1).unwrap();
        let p = simulate(&c).unwrap().probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn decomposed_rotation_matches_direct() {
        for s in ["+1 XY", "+1 YZX", "-1 ZIY", "+1 IYI", "+1 XXXY"] {
            let p: PauliString = s.parse().unwrap();
            let n = p.n_qubits();
            let mut c = Circuit::new(n);
            for q in 0..n {
                c.ry(q, 0.3 + 0.2 * q as f64).unwrap();
            }
            c.pauli_rotation(p, 0.77).unwrap();
            let a = simulate(&c).unwrap();
            let b = simulate(&c.decompose()).unwrap();
            // Equal up to a global phase.
            assert!((a.inner(&b).norm() - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn refuses_oversized_registers() {
        assert!(matches!(
            StateVector::zero(MAX_SIM_QUBITS + 1),
            Err(Error::TooLarge { .. })
        ));
    }
}
