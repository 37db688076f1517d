//! Pauli strings with explicit phase tracking, and real linear combinations of them.
//!
//! A string is stored as a pair of bit masks `(x, z)` with bit `q` describing qubit `q`.
//! `(1, 0)` is X, `(0, 1)` is Z and `(1, 1)` is Y, so the operator is
//! `phase * prod_q letter_q` with `Y` the usual Pauli matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound imposed by the 64-bit mask representation.
pub const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// Power of `i`, stored mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(e: i64) -> Phase {
        Phase(e.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1.0` or `-1.0` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn negate(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Phase> {
        match s {
            "+1" | "1" | "+" => Ok(Phase::ONE),
            "+i" | "i" => Ok(Phase::I),
            "-1" | "-" => Ok(Phase::MINUS_ONE),
            "-i" => Ok(Phase::MINUS_I),
            _ => Err(Error::Parse(format!("unknown phase token '{s}'"))),
        }
    }
}

#[inline]
fn parity(v: u64) -> u32 {
    v.count_ones() & 1
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> PauliString {
        assert!(n_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString {
            n: n_qubits,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<PauliString> {
        if letters.len() > MAX_QUBITS {
            return Err(Error::TooLarge {
                n_qubits: letters.len(),
                limit: MAX_QUBITS,
            });
        }
        let mut p = PauliString::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        Ok(p)
    }

    /// Builds a string from raw masks. Bits at or above `n_qubits` must be clear.
    pub fn from_masks(n_qubits: usize, x: u64, z: u64, phase: Phase) -> Result<PauliString> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::TooLarge {
                n_qubits,
                limit: MAX_QUBITS,
            });
        }
        let valid = full_mask(n_qubits);
        if (x | z) & !valid != 0 {
            return Err(Error::Invalid("mask has bits beyond the register".into()));
        }
        Ok(PauliString {
            n: n_qubits,
            x,
            z,
            phase,
        })
    }

    /// `letter` on each listed qubit, identity elsewhere.
    pub fn on_qubits(n_qubits: usize, qubits: &[usize], letter: Pauli) -> Result<PauliString> {
        let mut p = PauliString::identity(n_qubits);
        for &q in qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            p.set(q, letter);
        }
        Ok(p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> PauliString {
        self.phase = phase;
        self
    }

    pub fn without_phase(&self) -> PauliString {
        PauliString {
            phase: Phase::ONE,
            ..self.clone()
        }
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.n).map(|q| self.letter(q)).collect()
    }

    pub fn set(&mut self, q: usize, l: Pauli) {
        assert!(q < self.n, "qubit {q} out of range");
        let (bx, bz) = l.bits();
        let m = 1u64 << q;
        self.x = if bx { self.x | m } else { self.x & !m };
        self.z = if bz { self.z | m } else { self.z & !m };
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn support(&self) -> Vec<usize> {
        mask_to_indices(self.support_mask())
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// True when the string is diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    fn check_size(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// Operator product `self * other`, phase included.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_size(other)?;
        // Work in the X^x Z^z form where Y = i X Z.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let e = self.phase.0 as i64
            + other.phase.0 as i64
            + (self.x & self.z).count_ones() as i64
            + (other.x & other.z).count_ones() as i64
            + 2 * (self.z & other.x).count_ones() as i64
            - (x & z).count_ones() as i64;
        Ok(PauliString {
            n: self.n,
            x,
            z,
            phase: Phase::from_exponent(e),
        })
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_size(other)?;
        Ok(parity(self.x & other.z) == parity(self.z & other.x))
    }

    /// Position-by-position agreement up to identities.
    pub fn qubitwise_commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_size(other)?;
        let both = self.support_mask() & other.support_mask();
        Ok((self.x ^ other.x) & both == 0 && (self.z ^ other.z) & both == 0)
    }

    /// `P|b> = coeff |b'>` for a computational basis state `b`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let e = self.phase.0 as u32 + self.y_count() + 2 * parity(b & self.z);
        (Phase((e % 4) as u8).to_complex(), b ^ self.x)
    }

    /// Diagonal element `<b|P|b>`; zero unless the string is diagonal.
    pub fn diagonal_element(&self, b: u64) -> f64 {
        if self.x != 0 {
            return 0.0;
        }
        let s = self.phase.to_complex().re;
        if parity(b & self.z) == 1 {
            -s
        } else {
            s
        }
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n)?;
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (c, t) = self.apply_to_basis(b);
            m[(t as usize, b as usize)] = c;
        }
        Ok(m)
    }

    // Clifford conjugation P -> G P G^dagger, with the standard tableau sign rules.

    pub fn conjugate_h(&mut self, q: usize) {
        let (bx, bz) = (self.x >> q & 1, self.z >> q & 1);
        if bx & bz == 1 {
            self.phase = self.phase.negate();
        }
        let m = 1u64 << q;
        self.x = (self.x & !m) | (bz << q);
        self.z = (self.z & !m) | (bx << q);
    }

    /// Conjugation by the phase gate `S = diag(1, i)`.
    pub fn conjugate_s(&mut self, q: usize) {
        let (bx, bz) = (self.x >> q & 1, self.z >> q & 1);
        if bx & bz == 1 {
            self.phase = self.phase.negate();
        }
        self.z ^= bx << q;
    }

    pub fn conjugate_sdg(&mut self, q: usize) {
        for _ in 0..3 {
            self.conjugate_s(q);
        }
    }

    pub fn conjugate_x(&mut self, q: usize) {
        if self.z >> q & 1 == 1 {
            self.phase = self.phase.negate();
        }
    }

    pub fn conjugate_cnot(&mut self, c: usize, t: usize) {
        let xc = self.x >> c & 1;
        let zc = self.z >> c & 1;
        let xt = self.x >> t & 1;
        let zt = self.z >> t & 1;
        if xc & zt & (xt ^ zc ^ 1) == 1 {
            self.phase = self.phase.negate();
        }
        self.x ^= xc << t;
        self.z ^= zt << c;
    }

    /// Removes qubit `q`, shifting higher qubits down. The letter on `q` is dropped.
    pub fn remove_qubit(&self, q: usize) -> PauliString {
        PauliString {
            n: self.n - 1,
            x: remove_bit(self.x, q),
            z: remove_bit(self.z, q),
            phase: self.phase,
        }
    }

    fn sort_key(&self) -> (usize, Vec<Pauli>, Phase) {
        (self.n, self.letters(), self.phase)
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.phase)?;
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).to_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `"+1 XZIY"`, `"-i XY"` or a bare `"XZIY"`.
    fn from_str(s: &str) -> Result<PauliString> {
        let s = s.trim();
        let (phase, body) = match s.split_once(char::is_whitespace) {
            Some((p, rest)) => (p.parse::<Phase>()?, rest.trim()),
            None => (Phase::ONE, s),
        };
        let letters = body
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::Parse(format!("bad Pauli letter '{c}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_letters(&letters)?.with_phase(phase))
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub(crate) fn mask_to_indices(mut m: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m.count_ones() as usize);
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

pub(crate) fn remove_bit(v: u64, q: usize) -> u64 {
    let low = v & ((1u64 << q) - 1);
    let high = (v >> (q + 1)) << q;
    low | high
}

/// Largest register we are willing to materialise as a dense matrix.
pub const DENSE_LIMIT: usize = 12;

pub(crate) fn check_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            n_qubits: n,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Real linear combination of phase-free Pauli strings, kept in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: f64,
    string: PauliString,
}

#[derive(Serialize, Deserialize)]
struct ObservableRepr {
    n_qubits: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for ObservableSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ObservableRepr {
            n_qubits: self.n_qubits,
            terms: self
                .terms()
                .map(|(p, c)| TermRepr {
                    coeff: c,
                    string: p.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ObservableSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ObservableRepr::deserialize(d)?;
        ObservableSum::from_terms(r.n_qubits, r.terms.into_iter().map(|t| (t.coeff, t.string)))
            .map_err(serde::de::Error::custom)
    }
}

impl ObservableSum {
    pub fn new(n_qubits: usize) -> ObservableSum {
        ObservableSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<ObservableSum>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut o = ObservableSum::new(n_qubits);
        for (c, p) in terms {
            o.add_term(c, p)?;
        }
        Ok(o)
    }

    /// Adds `coeff * string`. Imaginary phases are rejected since the sum must stay Hermitian.
    pub fn add_term(&mut self, coeff: f64, string: PauliString) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return Err(Error::SizeMismatch {
                left: self.n_qubits,
                right: string.n_qubits(),
            });
        }
        if !coeff.is_finite() {
            return Err(Error::Invalid(format!(
                "non-finite coefficient for {string}"
            )));
        }
        let sign = string
            .phase()
            .sign()
            .ok_or_else(|| Error::NonHermitian(format!("imaginary phase on {string}")))?;
        let key = string.without_phase();
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += sign * coeff;
        if *entry == 0.0 {
            let key = string.without_phase();
            self.terms.remove(&key);
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(&p.without_phase()).copied().unwrap_or(0.0)
    }

    pub fn constant(&self) -> f64 {
        self.coefficient(&PauliString::identity(self.n_qubits))
    }

    pub fn scaled(&self, s: f64) -> ObservableSum {
        let mut o = ObservableSum::new(self.n_qubits);
        for (p, c) in self.terms() {
            if c * s != 0.0 {
                o.terms.insert(p.clone(), c * s);
            }
        }
        o
    }

    /// Drops terms with `|coeff| <= tol`.
    pub fn pruned(&self, tol: f64) -> ObservableSum {
        ObservableSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(p, c)| (p.clone(), *c))
                .collect(),
        }
    }

    /// `<b|H|b>` for a computational basis state.
    pub fn diagonal_element(&self, b: u64) -> f64 {
        self.terms().map(|(p, c)| c * p.diagonal_element(b)).sum()
    }

    /// Matrix-free product `H psi`.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != 1usize << self.n_qubits {
            return Err(Error::Invalid(format!(
                "state length {} does not match {} qubits",
                psi.len(),
                self.n_qubits
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (p, c) in self.terms() {
            for (b, &a) in psi.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let (f, t) = p.apply_to_basis(b as u64);
                out[t as usize] += f * a * c;
            }
        }
        Ok(out)
    }

    /// `<psi|H|psi>` for a normalised state.
    pub fn expectation(&self, psi: &[Complex64]) -> Result<f64> {
        let hpsi = self.apply(psi)?;
        let v: Complex64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
        if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
            return Err(Error::NonHermitian(format!(
                "expectation has imaginary part {}",
                v.im
            )));
        }
        Ok(v.re)
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        check_dense(self.n_qubits)?;
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in self.terms() {
            for b in 0..dim as u64 {
                let (f, t) = p.apply_to_basis(b);
                m[(t as usize, b as usize)] += f * c;
            }
        }
        Ok(m)
    }

    /// Greedy first-fit partition into qubitwise-commuting sets, in canonical term order.
    pub fn qubitwise_groups(&self) -> Vec<MeasurementGroup> {
        let mut groups: Vec<MeasurementGroup> = Vec::new();
        for (p, c) in self.terms() {
            let slot = groups.iter_mut().find(|g| {
                g.terms
                    .iter()
                    .all(|(_, q)| q.qubitwise_commutes(p).unwrap_or(false))
            });
            match slot {
                Some(g) => g.push(c, p.clone()),
                None => {
                    let mut g = MeasurementGroup::new(self.n_qubits);
                    g.push(c, p.clone());
                    groups.push(g);
                }
            }
        }
        groups
    }
}

/// Terms that can be read from a single tensor-product measurement basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementGroup {
    pub terms: Vec<(f64, PauliString)>,
    /// Letter measured on each qubit, `I` where no term acts.
    pub basis: Vec<Pauli>,
}

impl MeasurementGroup {
    pub fn new(n_qubits: usize) -> MeasurementGroup {
        MeasurementGroup {
            terms: Vec::new(),
            basis: vec![Pauli::I; n_qubits],
        }
    }

    fn push(&mut self, c: f64, p: PauliString) {
        for q in p.support() {
            self.basis[q] = p.letter(q);
        }
        self.terms.push((c, p));
    }
}
