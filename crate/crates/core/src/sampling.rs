//! Finite-shot measurement in the computational basis.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::{format_bits, parse_bits};
use crate::circuit::{Circuit, GateOp};
use crate::density::noisy_distribution;
use crate::error::{Error, Result};
use crate::noise::{NoiseMethod, NoiseSpec};
use crate::pauli::{Pauli, PauliString};
use crate::statevector::{check_sim_size, simulate, StateVector};

/// Outcome histogram indexed by basis state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotTable {
    n_qubits: usize,
    counts: Vec<u64>,
    total: u64,
}

impl ShotTable {
    pub fn new(n_qubits: usize) -> Result<ShotTable> {
        check_sim_size(n_qubits)?;
        Ok(ShotTable {
            n_qubits,
            counts: vec![0; 1 << n_qubits],
            total: 0,
        })
    }

    pub fn from_counts(n_qubits: usize, counts: Vec<u64>) -> Result<ShotTable> {
        if counts.len() != 1usize << n_qubits {
            return Err(Error::Invalid(format!(
                "{} counts for {n_qubits} qubits",
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(ShotTable {
            n_qubits,
            counts,
            total,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn total_shots(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, index: u64) -> u64 {
        self.counts[index as usize]
    }

    pub fn add(&mut self, index: u64, n: u64) {
        self.counts[index as usize] += n;
        self.total += n;
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    /// Non-zero entries keyed by bitstring.
    pub fn to_map(&self) -> BTreeMap<String, u64> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (format_bits(i as u64, self.n_qubits), c))
            .collect()
    }

    pub fn from_map(map: &BTreeMap<String, u64>) -> Result<ShotTable> {
        let n = map.keys().next().map(|k| k.len()).unwrap_or(0);
        let mut t = ShotTable::new(n)?;
        for (k, &c) in map {
            if k.len() != n {
                return Err(Error::Parse(format!("bitstring '{k}' has the wrong width")));
            }
            t.add(parse_bits(k)?, c);
        }
        Ok(t)
    }
}

impl Serialize for ShotTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ShotTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = BTreeMap::<String, u64>::deserialize(d)?;
        ShotTable::from_map(&m).map_err(serde::de::Error::custom)
    }
}

/// Multinomial draw via sequential binomials.
pub fn sample_distribution<R: Rng>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= p {
            out[i] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q > 0.0 {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        } else {
            0
        };
        out[i] = k;
        left -= k;
        mass -= p;
    }
    out
}

/// Basis-change circuit that maps each letter's eigenbasis onto Z.
pub fn basis_rotation(n_qubits: usize, basis: &[Pauli]) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits);
    for (q, l) in basis.iter().enumerate() {
        match l {
            Pauli::X => {
                c.h(q)?;
            }
            Pauli::Y => {
                c.rz(q, -std::f64::consts::FRAC_PI_2)?.h(q)?;
            }
            _ => {}
        }
    }
    Ok(c)
}

/// Exact outcome distribution including readout confusion.
pub fn outcome_distribution(circuit: &Circuit, noise: Option<&NoiseSpec>) -> Result<Vec<f64>> {
    let mut probs = match noise {
        Some(n) if n.has_gate_noise() => noisy_distribution(circuit, n)?,
        _ => simulate(circuit)?.probabilities(),
    };
    if let Some(n) = noise {
        n.apply_readout(&mut probs);
    }
    Ok(probs)
}

/// Runs `circuit` then `basis` on `|0...0>` and records `shots` outcomes.
pub fn sample(
    circuit: &Circuit,
    basis: &Circuit,
    shots: u64,
    noise: Option<&NoiseSpec>,
    seed: u64,
) -> Result<ShotTable> {
    let full = circuit.clone().then(basis)?;
    if let Some(n) = noise {
        n.validate(full.n_qubits())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match noise {
        Some(n) if n.method == NoiseMethod::Trajectories && n.has_gate_noise() => {
            sample_trajectories(&full, shots, n, &mut rng)
        }
        _ => {
            let probs = outcome_distribution(&full, noise)?;
            ShotTable::from_counts(
                full.n_qubits(),
                sample_distribution(&probs, shots, &mut rng),
            )
        }
    }
}

/// Per-shot Pauli-insertion sampling. Shots sharing an error pattern share one simulation.
pub fn sample_trajectories<R: Rng>(
    circuit: &Circuit,
    shots: u64,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<ShotTable> {
    let n = circuit.n_qubits();
    let elementary = circuit.decompose();
    let ops = elementary.ops();
    let mut patterns: HashMap<Vec<(u32, u8)>, u64> = HashMap::new();
    for _ in 0..shots {
        let mut pat = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            let (p, k) = if matches!(op, GateOp::Cnot { .. }) {
                (noise.p2, 15)
            } else {
                (noise.p1, 3)
            };
            if p > 0.0 && rng.gen::<f64>() < p {
                pat.push((i as u32, rng.gen_range(1..=k) as u8));
            }
        }
        *patterns.entry(pat).or_default() += 1;
    }
    let ordered: BTreeMap<_, _> = patterns.into_iter().collect();
    let mut table = ShotTable::new(n)?;
    let letter = |code: u8| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][code as usize];
    for (pat, count) in ordered {
        let mut sv = StateVector::zero(n)?;
        let mut next = pat.iter().peekable();
        for (i, op) in ops.iter().enumerate() {
            sv.apply(op)?;
            while let Some(&&(j, code)) = next.peek() {
                if j as usize != i {
                    break;
                }
                let mut err = PauliString::identity(n);
                let qs = op.qubits();
                err.set(qs[0], letter(code % 4));
                if qs.len() == 2 {
                    err.set(qs[1], letter(code / 4));
                }
                sv.apply_pauli(&err);
                next.next();
            }
        }
        let mut probs = sv.probabilities();
        noise.apply_readout(&mut probs);
        for (i, c) in sample_distribution(&probs, count, rng)
            .into_iter()
            .enumerate()
        {
            if c > 0 {
                table.add(i as u64, c);
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_table() {
        let mut c = Circuit::new(2);
        c.h(0).unwrap().cnot(0, 1).unwrap();
        let b = Circuit::new(2);
        let a1 = sample(&c, &b, 1000, None, 42).unwrap();
        let a2 = sample(&c, &b, 1000, None, 42).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.total_shots(), 1000);
        assert_eq!(a1.count(1) + a1.count(2), 0);
    }

    #[test]
    fn json_form_is_a_bitstring_map() {
        let t = ShotTable::from_counts(2, vec![3, 0, 5, 0]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"00":3,"01":5}"#);
        let back: ShotTable = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn multinomial_conserves_shots() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = sample_distribution(&[0.1, 0.0, 0.6, 0.3], 777, &mut rng);
        assert_eq!(c.iter().sum::<u64>(), 777);
        assert_eq!(c[1], 0);
    }
}
