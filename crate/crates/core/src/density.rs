//! Mixed-state simulation under depolarizing gate noise.
//!
//! Depolarizing channels commute with unitaries on the same qubits, so a run of
//! single-qubit gates on one qubit collapses into one unitary plus one channel,
//! and a run of identical CNOTs into at most one CNOT plus one channel.

use num_complex::Complex64;

use crate::circuit::{Circuit, GateOp};
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::statevector::{gate_matrix, mat_mul, Mat2, StateVector};

/// Density matrices above this width are refused.
pub const MAX_DENSITY_QUBITS: usize = 11;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A single-qubit unitary followed by depolarizing of strength `lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Channel1 {
    m: Mat2,
    lambda: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum NoisyOp {
    Single {
        qubit: usize,
        ch: Channel1,
    },
    /// Pending single-qubit channels on both wires, then the CNOT (if `apply`) and pair noise.
    Pair {
        control: usize,
        target: usize,
        pre: [Option<Channel1>; 2],
        apply: bool,
        lambda: f64,
    },
}

/// A circuit lowered to fused unitary-plus-channel steps.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyProgram {
    n_qubits: usize,
    ops: Vec<NoisyOp>,
}

fn composed(lambda: f64, count: u32) -> f64 {
    1.0 - (1.0 - lambda).powi(count as i32)
}

impl NoisyProgram {
    pub fn compile(circuit: &Circuit, noise: &NoiseSpec) -> NoisyProgram {
        let n = circuit.n_qubits();
        let l1 = 4.0 * noise.p1 / 3.0;
        let l2 = 16.0 * noise.p2 / 15.0;
        let mut pending: Vec<Option<(Mat2, u32)>> = vec![None; n];
        let mut ops: Vec<NoisyOp> = Vec::new();
        let take = |q: usize, pending: &mut Vec<Option<(Mat2, u32)>>| {
            pending[q].take().map(|(m, k)| Channel1 {
                m,
                lambda: composed(l1, k),
            })
        };

        for op in circuit.decompose().ops() {
            match op {
                GateOp::Cnot { control, target } => {
                    let pre = [take(*control, &mut pending), take(*target, &mut pending)];
                    let merged = pre == [None, None]
                        && matches!(ops.last(), Some(NoisyOp::Pair { control: c, target: t, .. }) if c == control && t == target);
                    if merged {
                        if let Some(NoisyOp::Pair { apply, lambda, .. }) = ops.last_mut() {
                            *apply = !*apply;
                            *lambda = 1.0 - (1.0 - *lambda) * (1.0 - l2);
                        }
                    } else {
                        ops.push(NoisyOp::Pair {
                            control: *control,
                            target: *target,
                            pre,
                            apply: true,
                            lambda: l2,
                        });
                    }
                }
                single => {
                    let q = single.qubits()[0];
                    let m = gate_matrix(single).expect("decomposed circuits hold elementary gates");
                    pending[q] = Some(match pending[q].take() {
                        Some((acc, k)) => (mat_mul(&m, &acc), k + 1),
                        None => (m, 1),
                    });
                }
            }
        }
        for q in 0..n {
            if let Some(ch) = take(q, &mut pending) {
                ops.push(NoisyOp::Single { qubit: q, ch });
            }
        }
        NoisyProgram { n_qubits: n, ops }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of fused steps, for diagnostics.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// `index` with a zero bit inserted at position `bit`.
#[inline]
fn insert_zero(index: usize, bit: usize) -> usize {
    let low = index & ((1usize << bit) - 1);
    ((index >> bit) << (bit + 1)) | low
}

/// `U B U^dagger` then depolarizing, on one 2x2 block given as `[b00, b01, b10, b11]`.
#[inline]
fn conjugate2(ch: &Channel1, b: [Complex64; 4]) -> [Complex64; 4] {
    let m = &ch.m;
    let t00 = m[0][0] * b[0] + m[0][1] * b[2];
    let t01 = m[0][0] * b[1] + m[0][1] * b[3];
    let t10 = m[1][0] * b[0] + m[1][1] * b[2];
    let t11 = m[1][0] * b[1] + m[1][1] * b[3];
    let n00 = t00 * m[0][0].conj() + t01 * m[0][1].conj();
    let n01 = t00 * m[1][0].conj() + t01 * m[1][1].conj();
    let n10 = t10 * m[0][0].conj() + t11 * m[0][1].conj();
    let n11 = t10 * m[1][0].conj() + t11 * m[1][1].conj();
    let keep = 1.0 - ch.lambda;
    let half_tr = (n00 + n11) * (0.5 * ch.lambda);
    [
        n00 * keep + half_tr,
        n01 * keep,
        n10 * keep,
        n11 * keep + half_tr,
    ]
}

type Block4 = [[Complex64; 4]; 4];

/// Applies a channel to the local bit `sel` (1 or 2) of a 4x4 block.
fn channel_in_block(b: &mut Block4, sel: usize, ch: &Channel1) {
    let pairs = if sel == 1 {
        [(0, 1), (2, 3)]
    } else {
        [(0, 2), (1, 3)]
    };
    for &(r0, r1) in &pairs {
        for &(c0, c1) in &pairs {
            let n = conjugate2(ch, [b[r0][c0], b[r0][c1], b[r1][c0], b[r1][c1]]);
            b[r0][c0] = n[0];
            b[r0][c1] = n[1];
            b[r1][c0] = n[2];
            b[r1][c1] = n[3];
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero(n_qubits: usize) -> Result<DensityMatrix> {
        if n_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::TooLarge {
                n_qubits,
                limit: MAX_DENSITY_QUBITS,
            });
        }
        let dim = 1usize << n_qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix {
            n_qubits,
            dim,
            data,
        })
    }

    pub fn from_pure(sv: &StateVector) -> Result<DensityMatrix> {
        let mut d = DensityMatrix::zero(sv.n_qubits())?;
        let a = sv.amplitudes();
        for r in 0..d.dim {
            for c in 0..d.dim {
                d.data[r * d.dim + c] = a[r] * a[c].conj();
            }
        }
        Ok(d)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    // Both kernels update only blocks on or above the diagonal and mirror them,
    // which is exact because every channel here maps Hermitian to Hermitian.

    fn apply_single(&mut self, q: usize, ch: &Channel1) {
        let dim = self.dim;
        let bit = 1usize << q;
        let d = &mut self.data;
        for i in 0..dim / 2 {
            let r = insert_zero(i, q);
            let (r0, r1) = (r * dim, (r | bit) * dim);
            for j in i..dim / 2 {
                let c = insert_zero(j, q);
                let c1 = c | bit;
                let n = conjugate2(ch, [d[r0 + c], d[r0 + c1], d[r1 + c], d[r1 + c1]]);
                d[r0 + c] = n[0];
                d[r0 + c1] = n[1];
                d[r1 + c] = n[2];
                d[r1 + c1] = n[3];
                if j != i {
                    let (s0, s1) = (c * dim, c1 * dim);
                    let r1c = r | bit;
                    d[s0 + r] = n[0].conj();
                    d[s0 + r1c] = n[2].conj();
                    d[s1 + r] = n[1].conj();
                    d[s1 + r1c] = n[3].conj();
                }
            }
        }
    }

    fn apply_pair(
        &mut self,
        control: usize,
        target: usize,
        pre: &[Option<Channel1>; 2],
        apply: bool,
        lambda: f64,
    ) {
        let dim = self.dim;
        let offs = [
            0,
            1usize << control,
            1usize << target,
            (1usize << control) | (1usize << target),
        ];
        let (lo, hi) = (control.min(target), control.max(target));
        let keep = 1.0 - lambda;
        let d = &mut self.data;
        for i in 0..dim / 4 {
            let r = insert_zero(insert_zero(i, lo), hi);
            for j in i..dim / 4 {
                let c = insert_zero(insert_zero(j, lo), hi);
                let mut b: Block4 = [[ZERO; 4]; 4];
                for (x, row) in b.iter_mut().enumerate() {
                    let base = (r | offs[x]) * dim + c;
                    for (y, v) in row.iter_mut().enumerate() {
                        *v = d[base | offs[y]];
                    }
                }
                if let Some(ch) = &pre[0] {
                    channel_in_block(&mut b, 1, ch);
                }
                if let Some(ch) = &pre[1] {
                    channel_in_block(&mut b, 2, ch);
                }
                if apply {
                    // control set: local states 1 and 3 swap
                    b.swap(1, 3);
                    for row in b.iter_mut() {
                        row.swap(1, 3);
                    }
                }
                if lambda != 0.0 {
                    let add = (b[0][0] + b[1][1] + b[2][2] + b[3][3]) * (0.25 * lambda);
                    for (x, row) in b.iter_mut().enumerate() {
                        for v in row.iter_mut() {
                            *v *= keep;
                        }
                        row[x] += add;
                    }
                }
                for (x, row) in b.iter().enumerate() {
                    let base = (r | offs[x]) * dim + c;
                    for (y, v) in row.iter().enumerate() {
                        d[base | offs[y]] = *v;
                    }
                }
                if j != i {
                    for (x, row) in b.iter().enumerate() {
                        for (y, v) in row.iter().enumerate() {
                            d[(c | offs[y]) * dim + (r | offs[x])] = v.conj();
                        }
                    }
                }
            }
        }
    }

    pub fn run(&mut self, program: &NoisyProgram) -> Result<()> {
        if program.n_qubits != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: program.n_qubits,
            });
        }
        for op in &program.ops {
            match op {
                NoisyOp::Single { qubit, ch } => self.apply_single(*qubit, ch),
                NoisyOp::Pair {
                    control,
                    target,
                    pre,
                    apply,
                    lambda,
                } => self.apply_pair(*control, *target, pre, *apply, *lambda),
            }
        }
        Ok(())
    }

    /// Diagonal of `rho`, clipped at zero.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim + i].re.max(0.0))
            .collect()
    }
}

/// Outcome distribution of `circuit` on `|0...0>` under gate noise only.
pub fn noisy_distribution(circuit: &Circuit, noise: &NoiseSpec) -> Result<Vec<f64>> {
    let mut rho = DensityMatrix::zero(circuit.n_qubits())?;
    rho.run(&NoisyProgram::compile(circuit, noise))?;
    Ok(rho.probabilities())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::simulate;

    fn sample_circuit() -> Circuit {
        let mut c = Circuit::new(3);
        c.ry(0, 0.4)
            .unwrap()
            .h(1)
            .unwrap()
            .cnot(0, 1)
            .unwrap()
            .rz(1, 0.7)
            .unwrap();
        c.cnot(1, 2)
            .unwrap()
            .ry(2, -0.3)
            .unwrap()
            .cnot(0, 2)
            .unwrap();
        c.pauli_rotation("+1 XYZ".parse().unwrap(), 0.35).unwrap();
        c
    }

    #[test]
    fn noiseless_matches_statevector() {
        let c = sample_circuit();
        let p = noisy_distribution(&c, &NoiseSpec::default()).unwrap();
        let q = simulate(&c).unwrap().probabilities();
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_depolarizing_gives_uniform() {
        let mut c = Circuit::new(2);
        c.x(0).unwrap().x(1).unwrap();
        let noise = NoiseSpec {
            p1: 0.75,
            ..Default::default()
        };
        let p = noisy_distribution(&c, &noise).unwrap();
        for v in p {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn folded_cnots_fuse() {
        let mut c = Circuit::new(2);
        c.h(0).unwrap().cnot(0, 1).unwrap();
        let noise = NoiseSpec {
            p1: 0.01,
            p2: 0.05,
            ..Default::default()
        };
        let folded = c.fold_cnots(1);
        assert_eq!(
            NoisyProgram::compile(&folded, &noise).len(),
            NoisyProgram::compile(&c, &noise).len()
        );
    }

    /// One gate at a time on the full matrix, with no fusion or symmetry shortcuts.
    fn reference(circuit: &Circuit, noise: &NoiseSpec) -> Vec<Complex64> {
        let n = circuit.n_qubits();
        let dim = 1usize << n;
        let sv = simulate(&Circuit::new(n)).unwrap();
        let mut rho = DensityMatrix::from_pure(&sv).unwrap().data;
        let (l1, l2) = (4.0 * noise.p1 / 3.0, 16.0 * noise.p2 / 15.0);
        for op in circuit.decompose().ops() {
            let mut next = vec![ZERO; dim * dim];
            match op {
                GateOp::Cnot { control, target } => {
                    let perm = |i: usize| {
                        if i >> control & 1 == 1 {
                            i ^ (1 << target)
                        } else {
                            i
                        }
                    };
                    for r in 0..dim {
                        for c in 0..dim {
                            next[perm(r) * dim + perm(c)] = rho[r * dim + c];
                        }
                    }
                    let mask = (1usize << control) | (1usize << target);
                    let mut out = vec![ZERO; dim * dim];
                    for r in 0..dim {
                        for c in 0..dim {
                            out[r * dim + c] = next[r * dim + c] * (1.0 - l2);
                            if r & mask == c & mask {
                                let tr: Complex64 = (0..4)
                                    .map(|k| {
                                        let o = (k & 1) << control | (k >> 1) << target;
                                        next[(r & !mask | o) * dim + (c & !mask | o)]
                                    })
                                    .sum();
                                out[r * dim + c] += tr * (0.25 * l2);
                            }
                        }
                    }
                    next = out;
                }
                single => {
                    let q = single.qubits()[0];
                    let m = gate_matrix(single).unwrap();
                    let bit = |i: usize| i >> q & 1;
                    let mut u = vec![ZERO; dim * dim];
                    for r in 0..dim {
                        for c in 0..dim {
                            if r & !(1 << q) == c & !(1 << q) {
                                u[r * dim + c] = m[bit(r)][bit(c)];
                            }
                        }
                    }
                    for r in 0..dim {
                        for c in 0..dim {
                            let mut acc = ZERO;
                            for a in 0..dim {
                                for b in 0..dim {
                                    acc +=
                                        u[r * dim + a] * rho[a * dim + b] * u[c * dim + b].conj();
                                }
                            }
                            next[r * dim + c] = acc;
                        }
                    }
                    let mut out = vec![ZERO; dim * dim];
                    for r in 0..dim {
                        for c in 0..dim {
                            out[r * dim + c] = next[r * dim + c] * (1.0 - l1);
                            if bit(r) == bit(c) {
                                let half = next[(r & !(1 << q)) * dim + (c & !(1 << q))]
                                    + next[(r | 1 << q) * dim + (c | 1 << q)];
                                out[r * dim + c] += half * (0.5 * l1);
                            }
                        }
                    }
                    next = out;
                }
            }
            rho = next;
        }
        rho
    }

    #[test]
    fn fused_program_matches_gate_by_gate_reference() {
        let noise = NoiseSpec {
            p1: 0.03,
            p2: 0.08,
            ..Default::default()
        };
        let mut c = sample_circuit();
        c.cnot(2, 0)
            .unwrap()
            .h(2)
            .unwrap()
            .cnot(2, 1)
            .unwrap()
            .ry(0, 1.1)
            .unwrap();
        for circuit in [c.clone(), c.fold_cnots(1)] {
            let want = reference(&circuit, &noise);
            let mut rho = DensityMatrix::zero(3).unwrap();
            rho.run(&NoisyProgram::compile(&circuit, &noise)).unwrap();
            for (a, b) in rho.data.iter().zip(&want) {
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn trace_is_preserved() {
        let noise = NoiseSpec {
            p1: 0.02,
            p2: 0.1,
            ..Default::default()
        };
        let mut rho = DensityMatrix::zero(3).unwrap();
        rho.run(&NoisyProgram::compile(&sample_circuit(), &noise))
            .unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }
}
