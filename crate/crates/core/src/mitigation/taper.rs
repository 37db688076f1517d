//! Z2 qubit tapering.
//!
//! Bitstring maps are affine over GF(2): `c = L b` and `b = M c + b0` on the
//! chosen sector. For a string `i^a X^x Z^z` this gives `X^{Lx} Z^{M^T z}` up to
//! a sign from `z . b0`, which is how the parity scheme transforms operators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{mask_to_indices, ObservableSum, Pauli, PauliString, Phase};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaperKind {
    StandardZ2,
    ParityCustom,
}

/// `c_i = parity(b & l_rows[i])`, `b_j = parity(c & m_rows[j]) ^ b0_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct AffineMap {
    l_rows: Vec<u64>,
    m_rows: Vec<u64>,
    b0: u64,
}

fn parity(v: u64) -> u64 {
    (v.count_ones() & 1) as u64
}

impl AffineMap {
    fn forward(&self, b: u64) -> u64 {
        self.l_rows
            .iter()
            .enumerate()
            .fold(0, |c, (i, &r)| c | parity(b & r) << i)
    }

    fn backward(&self, c: u64) -> u64 {
        self.m_rows
            .iter()
            .enumerate()
            .fold(0, |b, (j, &r)| b | parity(c & r) << j)
            ^ self.b0
    }

    fn transform(&self, p: &PauliString) -> Result<(f64, PauliString)> {
        let (x, z) = (p.x_mask(), p.z_mask());
        let x2 = self.forward(x);
        let z2 = mask_to_indices(z)
            .into_iter()
            .fold(0, |acc, j| acc ^ self.m_rows[j]);
        let e = p.phase().exponent() as i64
            + (x & z).count_ones() as i64
            + 2 * parity(z & self.b0) as i64
            - (x2 & z2).count_ones() as i64;
        let out = PauliString::from_masks(self.l_rows.len(), x2, z2, Phase::ONE)?;
        let sign = Phase::from_exponent(e)
            .sign()
            .ok_or_else(|| Error::NonHermitian(p.to_string()))?;
        Ok((sign, out))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaperMap {
    pub kind: TaperKind,
    /// Width before tapering.
    pub n_qubits: usize,
    pub symmetry: PauliString,
    /// Symmetry eigenvalue of the kept sector.
    pub sector: i8,
    pub removed_qubit: Option<usize>,
    clifford: Option<Circuit>,
    affine: Option<AffineMap>,
}

impl TaperMap {
    pub fn tapered_qubits(&self) -> usize {
        self.n_qubits - 1
    }

    pub fn has_bitstring_map(&self) -> bool {
        self.affine.is_some()
    }

    fn check_commutes(&self, p: &PauliString) -> Result<()> {
        if !self.symmetry.commutes(p)? {
            return Err(Error::NonCommuting {
                symmetry: self.symmetry.to_string(),
                term: p.to_string(),
            });
        }
        Ok(())
    }

    /// Image of a symmetry-commuting string: `sign * P'` on the tapered register.
    pub fn transform_string(&self, p: &PauliString) -> Result<(f64, PauliString)> {
        self.check_commutes(p)?;
        match (&self.clifford, &self.affine) {
            (Some(c), _) => {
                let q = self.removed_qubit.expect("standard taper removes a qubit");
                let img = c.conjugate_pauli(p).expect("Clifford");
                let sym = c.conjugate_pauli(&self.symmetry).expect("Clifford");
                let mut sign = img
                    .phase()
                    .sign()
                    .ok_or_else(|| Error::NonHermitian(p.to_string()))?;
                match img.letter(q) {
                    Pauli::I => {}
                    Pauli::Z => sign *= self.sector as f64 * sym.phase().sign().unwrap(),
                    _ => unreachable!("commuting image has I or Z on the tapered qubit"),
                }
                Ok((sign, img.remove_qubit(q).without_phase()))
            }
            (None, Some(a)) => a.transform(p),
            (None, None) => unreachable!("taper map without a transform"),
        }
    }

    pub fn transform_observable(&self, obs: &ObservableSum) -> Result<ObservableSum> {
        if obs.n_qubits() != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: obs.n_qubits(),
            });
        }
        let mut out = ObservableSum::new(self.tapered_qubits());
        for (p, c) in obs.terms() {
            let (s, q) = self.transform_string(p)?;
            out.add_term(s * c, q)?;
        }
        Ok(out)
    }

    /// Tapered index of `b`, or `None` if `b` lies outside the sector.
    pub fn map_bitstring(&self, b: u64) -> Result<Option<u64>> {
        let a = self
            .affine
            .as_ref()
            .ok_or_else(|| Error::Invalid("taper has no bitstring map".into()))?;
        let c = a.forward(b);
        Ok((a.backward(c) == b).then_some(c))
    }

    pub fn unmap_bitstring(&self, c: u64) -> Result<u64> {
        let a = self
            .affine
            .as_ref()
            .ok_or_else(|| Error::Invalid("taper has no bitstring map".into()))?;
        Ok(a.backward(c))
    }

    /// Embeds a tapered state back into the full register.
    pub fn lift_state(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != 1usize << self.tapered_qubits() {
            return Err(Error::Invalid("tapered state has the wrong length".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << self.n_qubits];
        for (c, &a) in psi.iter().enumerate() {
            out[self.unmap_bitstring(c as u64)? as usize] = a;
        }
        Ok(out)
    }
}

fn check_sector(sector: i8) -> Result<()> {
    if sector != 1 && sector != -1 {
        return Err(Error::Invalid(format!(
            "sector must be +1 or -1, got {sector}"
        )));
    }
    Ok(())
}

/// Conjugates `symmetry` onto a single Z on `qubit`, fixes that qubit to the sector
/// eigenvalue and drops it.
pub fn taper_standard(
    obs: &ObservableSum,
    symmetry: &PauliString,
    qubit: usize,
    sector: i8,
) -> Result<(ObservableSum, TaperMap)> {
    check_sector(sector)?;
    let n = obs.n_qubits();
    if symmetry.n_qubits() != n {
        return Err(Error::SizeMismatch {
            left: n,
            right: symmetry.n_qubits(),
        });
    }
    if n < 2 {
        return Err(Error::Invalid("tapering needs at least two qubits".into()));
    }
    if symmetry.phase().sign().is_none() {
        return Err(Error::NonHermitian(symmetry.to_string()));
    }
    if qubit >= n || symmetry.letter(qubit) == Pauli::I {
        return Err(Error::Invalid(format!(
            "qubit {qubit} is not in the support of {symmetry}"
        )));
    }
    let mut c = Circuit::new(n);
    for j in symmetry.support() {
        match symmetry.letter(j) {
            Pauli::X => {
                c.h(j)?;
            }
            Pauli::Y => {
                c.rz(j, -std::f64::consts::FRAC_PI_2)?.h(j)?;
            }
            _ => {}
        }
    }
    for j in symmetry.support() {
        if j != qubit {
            c.cnot(j, qubit)?;
        }
    }
    let affine = symmetry.is_diagonal().then(|| {
        let sign = symmetry.phase().sign().unwrap();
        let fixed = ((sign * sector as f64) < 0.0) as u64;
        let others = symmetry.z_mask() & !(1u64 << qubit);
        let l_rows = (0..n).filter(|&j| j != qubit).map(|j| 1u64 << j).collect();
        let m_rows = (0..n)
            .map(|j| {
                if j == qubit {
                    // b_q restores the sector parity from the other support bits.
                    crate::pauli::remove_bit(others, qubit)
                } else {
                    1u64 << if j < qubit { j } else { j - 1 }
                }
            })
            .collect();
        AffineMap {
            l_rows,
            m_rows,
            b0: fixed << qubit,
        }
    });
    let map = TaperMap {
        kind: TaperKind::StandardZ2,
        n_qubits: n,
        symmetry: symmetry.clone(),
        sector,
        removed_qubit: Some(qubit),
        clifford: Some(c),
        affine,
    };
    Ok((map.transform_observable(obs)?, map))
}

/// Prefix-parity tapering in the even sector of the full Z-parity:
/// `c_i = b_0 ^ ... ^ b_i` for `i < n - 1`.
pub fn taper_parity_custom(obs: &ObservableSum) -> Result<(ObservableSum, TaperMap)> {
    let n = obs.n_qubits();
    if n < 2 {
        return Err(Error::Invalid("tapering needs at least two qubits".into()));
    }
    let symmetry = PauliString::on_qubits(n, &(0..n).collect::<Vec<_>>(), Pauli::Z)?;
    let l_rows = (0..n - 1).map(|i| (1u64 << (i + 1)) - 1).collect();
    let mut m_rows = vec![1u64];
    for i in 1..n - 1 {
        m_rows.push(0b11 << (i - 1));
    }
    m_rows.push(1u64 << (n - 2));
    let map = TaperMap {
        kind: TaperKind::ParityCustom,
        n_qubits: n,
        symmetry,
        sector: 1,
        removed_qubit: None,
        clifford: None,
        affine: Some(AffineMap {
            l_rows,
            m_rows,
            b0: 0,
        }),
    };
    Ok((map.transform_observable(obs)?, map))
}

/// Index helper for callers that build sector bases.
pub fn sector_states(map: &TaperMap) -> Result<Vec<u64>> {
    (0..1u64 << map.tapered_qubits())
        .map(|c| map.unmap_bitstring(c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bits;
    use crate::models::{build_tfim, exact_diagonalize, TfimSpec};

    fn tfim(n: usize) -> ObservableSum {
        build_tfim(&TfimSpec::new(n, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn parity_map_examples() {
        let (_, m) = taper_parity_custom(&tfim(4)).unwrap();
        assert_eq!(
            m.map_bitstring(parse_bits("0101").unwrap()).unwrap(),
            Some(parse_bits("011").unwrap())
        );
        assert_eq!(m.map_bitstring(0).unwrap(), Some(0));
        assert_eq!(m.map_bitstring(parse_bits("1000").unwrap()).unwrap(), None);
    }

    #[test]
    fn parity_taper_of_tfim() {
        let (h, _) = taper_parity_custom(&tfim(4)).unwrap();
        let want: ObservableSum = ObservableSum::from_terms(
            3,
            [
                (-1.0, "ZII".parse().unwrap()),
                (-1.0, "ZZI".parse().unwrap()),
                (-1.0, "IZZ".parse().unwrap()),
                (-1.0, "IIZ".parse().unwrap()),
                (1.0, "XII".parse().unwrap()),
                (1.0, "IXI".parse().unwrap()),
                (1.0, "IIX".parse().unwrap()),
            ],
        )
        .unwrap();
        assert_eq!(h, want);
    }

    #[test]
    fn zz_with_its_own_symmetry_is_constant() {
        let o = ObservableSum::from_terms(2, [(1.0, "ZZ".parse().unwrap())]).unwrap();
        let (h, _) = taper_standard(&o, &"ZZ".parse().unwrap(), 0, 1).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.constant(), 1.0);
    }

    #[test]
    fn standard_taper_matches_affine_route() {
        let h = tfim(4);
        let sym: PauliString = "ZZZZ".parse().unwrap();
        for q in 0..4 {
            let (_, m) = taper_standard(&h, &sym, q, 1).unwrap();
            let a = m.affine.clone().unwrap();
            for (p, _) in h.terms() {
                assert_eq!(
                    m.transform_string(p).unwrap(),
                    a.transform(p).unwrap(),
                    "{p} q={q}"
                );
            }
        }
    }

    #[test]
    fn errors() {
        let h = tfim(3);
        assert!(matches!(
            taper_standard(&h, &"XII".parse().unwrap(), 0, 1),
            Err(Error::NonCommuting { .. })
        ));
        assert!(taper_standard(&h, &"ZZI".parse().unwrap(), 2, 1).is_err());
        let (_, m) = taper_parity_custom(&h).unwrap();
        assert!(m.transform_string(&"XII".parse().unwrap()).is_err());
    }

    #[test]
    fn both_tapers_keep_the_even_spectrum() {
        for n in 2..=5 {
            let h = tfim(n);
            let full = exact_diagonalize(&h).unwrap();
            let vecs = full.eigenvectors.as_ref().unwrap();
            let mut even: Vec<f64> = (0..full.eigenvalues.len())
                .filter(|&k| {
                    (0..vecs.nrows())
                        .map(|b| {
                            if (b as u64).count_ones().is_multiple_of(2) {
                                vecs[(b, k)].norm_sqr()
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
                        > 0.5
                })
                .map(|k| full.eigenvalues[k])
                .collect();
            even.sort_by(f64::total_cmp);
            let sym = PauliString::on_qubits(n, &(0..n).collect::<Vec<_>>(), Pauli::Z).unwrap();
            let (a, _) = taper_standard(&h, &sym, n / 2, 1).unwrap();
            let (b, _) = taper_parity_custom(&h).unwrap();
            for t in [a, b] {
                let ev = exact_diagonalize(&t).unwrap().eigenvalues;
                assert_eq!(ev.len(), even.len());
                for (x, y) in ev.iter().zip(&even) {
                    assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }
}
