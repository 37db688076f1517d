//! Model Hamiltonians: the two-level H2 problem and the transverse-field Ising chain.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{check_dense, ObservableSum, Pauli, PauliString};

const BUNDLED_H2: &str = include_str!("../../../data/h2_sto6g.csv");

/// Two-determinant H2 matrix elements at one geometry (Hartree, bond length in Angstrom).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct H2Record {
    #[serde(rename = "R")]
    pub bond_length: f64,
    pub h00: f64,
    pub h11: f64,
    pub h01: f64,
    pub enuc: f64,
}

/// Coefficient ranges accepted when loading a dataset.
pub const H2_COUPLING_RANGE: (f64, f64) = (0.15, 0.36);
pub const H2_SPLITTING_RANGE: (f64, f64) = (-1.5, 0.01);

impl H2Record {
    /// `(h00 - h11) / 2`
    pub fn half_splitting(&self) -> f64 {
        0.5 * (self.h00 - self.h11)
    }

    pub fn check_envelope(&self) -> Result<()> {
        let ok = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        if !ok(self.h01, H2_COUPLING_RANGE) {
            return Err(Error::Dataset(format!(
                "h01 = {} at R = {} outside envelope",
                self.h01, self.bond_length
            )));
        }
        if !ok(self.half_splitting(), H2_SPLITTING_RANGE) {
            return Err(Error::Dataset(format!(
                "(h00-h11)/2 = {} at R = {} outside envelope",
                self.half_splitting(),
                self.bond_length
            )));
        }
        if !self.enuc.is_finite() || !self.h00.is_finite() || !self.h11.is_finite() {
            return Err(Error::Dataset(format!(
                "non-finite entry at R = {}",
                self.bond_length
            )));
        }
        Ok(())
    }

    /// Ground and excited energies of the 2x2 problem.
    pub fn exact_energies(&self) -> (f64, f64) {
        let mid = 0.5 * (self.h00 + self.h11) + self.enuc;
        let r = self.h01.hypot(self.half_splitting());
        (mid - r, mid + r)
    }
}

pub fn parse_h2_csv<R: Read>(reader: R) -> Result<Vec<H2Record>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let rec: H2Record = rec?;
        rec.check_envelope()?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Dataset("no rows".into()));
    }
    Ok(out)
}

pub fn load_h2_dataset(path: &Path) -> Result<Vec<H2Record>> {
    parse_h2_csv(std::fs::File::open(path)?)
}

/// STO-6G H2 curve shipped with the crate, 0.40 to 6.00 Angstrom.
pub fn bundled_h2_dataset() -> Vec<H2Record> {
    parse_h2_csv(BUNDLED_H2.as_bytes()).expect("bundled dataset is valid")
}

/// One-qubit observable; the constant sits on the identity term.
pub fn build_h2_observable(rec: &H2Record) -> ObservableSum {
    let mut o = ObservableSum::new(1);
    let id = PauliString::identity(1);
    o.add_term(0.5 * (rec.h00 + rec.h11) + rec.enuc, id)
        .expect("valid term");
    o.add_term(rec.h01, PauliString::on_qubits(1, &[0], Pauli::X).unwrap())
        .expect("valid term");
    o.add_term(
        rec.half_splitting(),
        PauliString::on_qubits(1, &[0], Pauli::Z).unwrap(),
    )
    .expect("valid term");
    o
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TfimSpec {
    pub n_sites: usize,
    pub h: f64,
    pub j: f64,
}

impl TfimSpec {
    pub fn new(n_sites: usize, h: f64, j: f64) -> TfimSpec {
        TfimSpec { n_sites, h, j }
    }

    /// Energy with the coupling switched off.
    pub fn uncoupled_energy(&self) -> f64 {
        -(self.n_sites as f64) * self.h.abs()
    }
}

/// `-h sum Z_i + J sum X_i X_{i+1}` on an open chain.
pub fn build_tfim(spec: &TfimSpec) -> Result<ObservableSum> {
    let n = spec.n_sites;
    if n == 0 {
        return Err(Error::Invalid("chain needs at least one site".into()));
    }
    let mut o = ObservableSum::new(n);
    for i in 0..n {
        o.add_term(-spec.h, PauliString::on_qubits(n, &[i], Pauli::Z)?)?;
    }
    for i in 0..n.saturating_sub(1) {
        o.add_term(spec.j, PauliString::on_qubits(n, &[i, i + 1], Pauli::X)?)?;
    }
    Ok(o)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub ground_energy: f64,
    /// Lowest eigenvalue above the ground level, if any.
    pub first_excited_energy: Option<f64>,
    /// `E_exact - E(J = 0)` for chain models.
    pub correlation_energy: Option<f64>,
    /// Columns ordered like `eigenvalues`.
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<Complex64>>,
}

/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

impl SpectrumReport {
    pub fn eigenvector(&self, k: usize) -> Option<Vec<Complex64>> {
        self.eigenvectors
            .as_ref()
            .map(|v| v.column(k).iter().copied().collect())
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.eigenvalues
            .iter()
            .take_while(|&&e| e - self.ground_energy < DEGENERACY_TOL)
            .count()
    }

    /// Index of the eigenvalue nearest to `energy`.
    pub fn nearest_level(&self, energy: f64) -> usize {
        let mut best = 0;
        for (i, e) in self.eigenvalues.iter().enumerate() {
            if (e - energy).abs() < (self.eigenvalues[best] - energy).abs() {
                best = i;
            }
        }
        best
    }
}

/// Full dense diagonalization.
pub fn exact_diagonalize(obs: &ObservableSum) -> Result<SpectrumReport> {
    check_dense(obs.n_qubits())?;
    let m = obs.to_dense()?;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    let ground = eigenvalues[0];
    let first_excited = eigenvalues
        .iter()
        .copied()
        .find(|&e| e - ground >= DEGENERACY_TOL);
    Ok(SpectrumReport {
        eigenvalues,
        ground_energy: ground,
        first_excited_energy: first_excited,
        correlation_energy: None,
        eigenvectors: Some(vecs),
    })
}

pub fn tfim_spectrum(spec: &TfimSpec) -> Result<SpectrumReport> {
    let mut rep = exact_diagonalize(&build_tfim(spec)?)?;
    rep.correlation_energy = Some(rep.ground_energy - spec.uncoupled_energy());
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationObservable {
    pub axis: Pauli,
    pub i: usize,
    pub j: usize,
    pub observable: ObservableSum,
}

/// `sigma_i sigma_j` for each axis and each pair `i < j`.
pub fn correlation_observables(n: usize) -> Result<Vec<CorrelationObservable>> {
    if n < 2 {
        return Err(Error::Invalid(
            "correlations need at least two sites".into(),
        ));
    }
    let mut out = Vec::with_capacity(3 * n * (n - 1) / 2);
    for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
        for i in 0..n {
            for j in i + 1..n {
                let observable = ObservableSum::from_terms(
                    n,
                    [(1.0, PauliString::on_qubits(n, &[i, j], axis)?)],
                )?;
                out.push(CorrelationObservable {
                    axis,
                    i,
                    j,
                    observable,
                });
            }
        }
    }
    Ok(out)
}

/// Largest weight any computational basis state carries in the ground space.
pub fn max_reference_overlap(obs: &ObservableSum) -> Result<f64> {
    let rep = exact_diagonalize(obs)?;
    Ok(max_basis_overlap(&rep))
}

pub fn max_basis_overlap(rep: &SpectrumReport) -> f64 {
    let vecs = rep.eigenvectors.as_ref().expect("eigenvectors present");
    let g = rep.ground_degeneracy();
    (0..vecs.nrows())
        .map(|b| (0..g).map(|k| vecs[(b, k)].norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max)
}
