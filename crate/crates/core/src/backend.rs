//! Energy estimators: exact expectation values, or shots with the mitigation pipeline.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::density::{DensityMatrix, NoisyProgram};
use crate::error::{Error, Result};
use crate::mitigation::{
    calibrate_readout, extrapolate, postselect_probabilities, staircase_transform,
    unfold_frequencies, CalibrationMatrix, ExtrapolationPolicy, GuardReport, ParityRule,
};
use crate::noise::{NoiseMethod, NoiseSpec};
use crate::pauli::{MeasurementGroup, ObservableSum, Pauli, PauliString};
use crate::sampling::{basis_rotation, sample_distribution, sample_trajectories, ShotTable};
use crate::statevector::{exact_expectation, simulate};

pub trait Backend {
    /// Energy of the state `circuit |0...0>`.
    fn energy(&mut self, circuit: &Circuit, obs: &ObservableSum) -> Result<f64>;
}

/// Noiseless expectation values.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactBackend;

impl Backend for ExactBackend {
    fn energy(&mut self, circuit: &Circuit, obs: &ObservableSum) -> Result<f64> {
        exact_expectation(circuit, obs)
    }
}

/// Symmetry used for postselection, with its required eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryRule {
    pub symmetry: PauliString,
    pub eigenvalue: f64,
}

impl SymmetryRule {
    /// Even Z-parity over the whole register.
    pub fn even_parity(n_qubits: usize) -> Result<SymmetryRule> {
        Ok(SymmetryRule {
            symmetry: PauliString::on_qubits(
                n_qubits,
                &(0..n_qubits).collect::<Vec<_>>(),
                Pauli::Z,
            )?,
            eigenvalue: 1.0,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mitigation {
    pub calibration: Option<CalibrationMatrix>,
    pub postselection: Option<SymmetryRule>,
    pub extrapolation: ExtrapolationPolicy,
}

/// Running totals kept by a [`ShotBackend`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendStats {
    pub energy_evaluations: u64,
    pub circuits: u64,
    pub shots: u64,
    /// Sum over postselected circuits of the raw discarded fraction.
    pub discarded_fraction_sum: f64,
    pub postselected_circuits: u64,
    /// Groups where the symmetry could not be measured alongside the terms.
    pub postselection_skipped: u64,
    pub postselection_empty: u64,
    pub unfold_fallbacks: u64,
    pub guards: GuardReport,
}

impl BackendStats {
    pub fn mean_discarded_fraction(&self) -> f64 {
        if self.postselected_circuits == 0 {
            0.0
        } else {
            self.discarded_fraction_sum / self.postselected_circuits as f64
        }
    }
}

/// One measurement setting: a Clifford tail, the diagonal images of its terms,
/// and an optional parity rule.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSetting {
    pub tail: Circuit,
    /// `(coefficient, diagonal image)`
    pub terms: Vec<(f64, PauliString)>,
    pub rule: Option<ParityRule>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlan {
    pub constant: f64,
    pub settings: Vec<MeasurementSetting>,
    pub skipped_postselection: usize,
}

fn merged_basis(n: usize, strings: &[&PauliString]) -> Option<Vec<Pauli>> {
    let mut basis = vec![Pauli::I; n];
    for p in strings {
        for q in p.support() {
            let l = p.letter(q);
            if basis[q] != Pauli::I && basis[q] != l {
                return None;
            }
            basis[q] = l;
        }
    }
    Some(basis)
}

fn setting(
    prefix: Option<&Circuit>,
    n: usize,
    terms: &[(f64, PauliString)],
    sym: Option<(&PauliString, f64)>,
) -> Result<Option<MeasurementSetting>> {
    let mapped = |p: &PauliString| match prefix {
        Some(c) => c.conjugate_pauli(p).expect("Clifford prefix"),
        None => p.clone(),
    };
    let images: Vec<PauliString> = terms.iter().map(|(_, p)| mapped(p)).collect();
    let sym_img = sym.map(|(s, _)| mapped(s));
    let mut all: Vec<&PauliString> = images.iter().collect();
    if let Some(s) = &sym_img {
        all.push(s);
    }
    let Some(basis) = merged_basis(n, &all) else {
        return Ok(None);
    };
    let mut tail = prefix.cloned().unwrap_or_else(|| Circuit::new(n));
    tail.append(&basis_rotation(n, &basis)?)?;
    let diag = |p: &PauliString| tail.conjugate_pauli(p).expect("Clifford tail");
    let out_terms = terms.iter().map(|(c, p)| (*c, diag(p))).collect::<Vec<_>>();
    debug_assert!(out_terms.iter().all(|(_, p)| p.is_diagonal()));
    let rule = match sym {
        Some((s, ev)) => Some(ParityRule::from_diagonal(&diag(s), ev)?),
        None => None,
    };
    Ok(Some(MeasurementSetting {
        tail,
        terms: out_terms,
        rule,
    }))
}

/// Groups the non-identity terms and chooses a measurement tail for each group.
/// With a symmetry, each group is measured so the symmetry can be read alongside
/// it, going through the CNOT staircase if needed; when neither works the group
/// is measured without postselection and counted in `skipped_postselection`.
pub fn plan_measurements(
    obs: &ObservableSum,
    symmetry: Option<&SymmetryRule>,
) -> Result<MeasurementPlan> {
    let n = obs.n_qubits();
    let constant = obs.constant();
    let rest = ObservableSum::from_terms(
        n,
        obs.terms()
            .filter(|(p, _)| !p.is_identity())
            .map(|(p, c)| (c, p.clone())),
    )?;
    let groups: Vec<MeasurementGroup> = rest.qubitwise_groups();
    let staircase = if n >= 2 {
        Some(staircase_transform(n)?.circuit)
    } else {
        None
    };
    let mut settings = Vec::new();
    let mut skipped = 0;
    for g in groups {
        let sym = symmetry.map(|s| (&s.symmetry, s.eigenvalue));
        let s = match sym {
            None => setting(None, n, &g.terms, None)?,
            Some(sy) => {
                let direct = setting(None, n, &g.terms, Some(sy))?;
                let via = match (&direct, &staircase) {
                    (None, Some(st)) => setting(Some(st), n, &g.terms, Some(sy))?,
                    _ => None,
                };
                match direct.or(via) {
                    Some(s) => Some(s),
                    None => {
                        skipped += 1;
                        setting(None, n, &g.terms, None)?
                    }
                }
            }
        };
        settings.push(s.expect("a qubitwise group always has a plain basis"));
    }
    Ok(MeasurementPlan {
        constant,
        settings,
        skipped_postselection: skipped,
    })
}

/// Finite-shot energy estimates on a simulated noisy device.
#[derive(Clone, Debug)]
pub struct ShotBackend {
    pub shots: u64,
    pub noise: Option<NoiseSpec>,
    pub mitigation: Mitigation,
    pub stats: BackendStats,
    rng: ChaCha8Rng,
    plan_cache: Option<(ObservableSum, MeasurementPlan)>,
}

impl ShotBackend {
    pub fn new(
        shots: u64,
        noise: Option<NoiseSpec>,
        mitigation: Mitigation,
        seed: u64,
    ) -> Result<ShotBackend> {
        if shots == 0 {
            return Err(Error::Invalid("shot count must be positive".into()));
        }
        mitigation.extrapolation.validate()?;
        Ok(ShotBackend {
            shots,
            noise,
            mitigation,
            stats: BackendStats::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            plan_cache: None,
        })
    }

    /// Measures a calibration matrix with this backend's noise and installs it.
    pub fn calibrate(
        &mut self,
        n_qubits: usize,
        shots: u64,
        magnification: u32,
    ) -> Result<&CalibrationMatrix> {
        let seed = self.rng.next_u64();
        let cal = calibrate_readout(self.noise.as_ref(), n_qubits, shots, magnification, seed)?;
        Ok(self.mitigation.calibration.insert(cal))
    }

    fn plan(&mut self, obs: &ObservableSum) -> Result<MeasurementPlan> {
        if let Some((o, p)) = &self.plan_cache {
            if o == obs {
                return Ok(p.clone());
            }
        }
        let p = plan_measurements(obs, self.mitigation.postselection.as_ref())?;
        self.plan_cache = Some((obs.clone(), p.clone()));
        Ok(p)
    }

    /// Exact outcome distributions (before readout) for each setting.
    fn distributions(
        &self,
        prefix: &Circuit,
        settings: &[MeasurementSetting],
        fold: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let noise = self.noise.as_ref();
        match noise {
            Some(n) if n.has_gate_noise() => {
                let mut base = DensityMatrix::zero(prefix.n_qubits())?;
                base.run(&NoisyProgram::compile(&prefix.fold_cnots(fold), n))?;
                settings
                    .iter()
                    .map(|s| {
                        let mut rho = base.clone();
                        rho.run(&NoisyProgram::compile(&s.tail.fold_cnots(fold), n))?;
                        Ok(rho.probabilities())
                    })
                    .collect()
            }
            _ => {
                let sv = simulate(prefix)?;
                settings
                    .iter()
                    .map(|s| {
                        let mut v = sv.clone();
                        v.run(&s.tail)?;
                        Ok(v.probabilities())
                    })
                    .collect()
            }
        }
    }

    fn estimate(&mut self, table: &ShotTable, s: &MeasurementSetting) -> Result<Vec<f64>> {
        let mut probs = match &self.mitigation.calibration {
            Some(cal) => match unfold_frequencies(&table.frequencies(), cal) {
                Ok(p) => p,
                Err(Error::SingularCalibration) => {
                    self.stats.unfold_fallbacks += 1;
                    table.frequencies()
                }
                Err(e) => return Err(e),
            },
            None => table.frequencies(),
        };
        if let Some(rule) = &s.rule {
            let raw_kept: u64 = table
                .counts()
                .iter()
                .enumerate()
                .filter(|(b, _)| rule.accepts(*b as u64))
                .map(|(_, c)| c)
                .sum();
            self.stats.discarded_fraction_sum += 1.0 - raw_kept as f64 / table.total_shots() as f64;
            self.stats.postselected_circuits += 1;
            match postselect_probabilities(&probs, rule) {
                Ok((p, _)) => probs = p,
                Err(Error::AllShotsDiscarded) => self.stats.postselection_empty += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(s.terms
            .iter()
            .map(|(_, p)| {
                probs
                    .iter()
                    .enumerate()
                    .map(|(b, &w)| w * p.diagonal_element(b as u64))
                    .sum()
            })
            .collect())
    }
}

impl Backend for ShotBackend {
    fn energy(&mut self, circuit: &Circuit, obs: &ObservableSum) -> Result<f64> {
        if circuit.n_qubits() != obs.n_qubits() {
            return Err(Error::SizeMismatch {
                left: circuit.n_qubits(),
                right: obs.n_qubits(),
            });
        }
        if let Some(n) = &self.noise {
            n.validate(circuit.n_qubits())?;
        }
        let plan = self.plan(obs)?;
        let policy = self.mitigation.extrapolation.clone();
        let scales = policy.active_scales().to_vec();
        // per_scale[k][setting][term]
        let mut per_scale: Vec<Vec<Vec<f64>>> = Vec::with_capacity(scales.len());
        for &s in &scales {
            let fold = (s as usize - 1) / 2;
            let trajectories = matches!(&self.noise, Some(n) if n.method == NoiseMethod::Trajectories && n.has_gate_noise());
            let dists = if trajectories {
                None
            } else {
                Some(self.distributions(circuit, &plan.settings, fold)?)
            };
            let mut values = Vec::with_capacity(plan.settings.len());
            for (i, setting) in plan.settings.iter().enumerate() {
                let seed = self.rng.next_u64();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let table = match &dists {
                    Some(d) => {
                        let mut p = d[i].clone();
                        if let Some(n) = &self.noise {
                            n.apply_readout(&mut p);
                        }
                        ShotTable::from_counts(
                            circuit.n_qubits(),
                            sample_distribution(&p, self.shots, &mut rng),
                        )?
                    }
                    None => {
                        let full = circuit.clone().then(&setting.tail)?.fold_cnots(fold);
                        sample_trajectories(
                            &full,
                            self.shots,
                            self.noise.as_ref().unwrap(),
                            &mut rng,
                        )?
                    }
                };
                self.stats.circuits += 1;
                self.stats.shots += self.shots;
                values.push(self.estimate(&table, setting)?);
            }
            per_scale.push(values);
        }
        self.stats.postselection_skipped += plan.skipped_postselection as u64 * scales.len() as u64;
        let mut energy = plan.constant;
        for (i, setting) in plan.settings.iter().enumerate() {
            for (t, (c, _)) in setting.terms.iter().enumerate() {
                let series: Vec<f64> = per_scale.iter().map(|v| v[i][t]).collect();
                let (v, status) = extrapolate(&series, &policy)?;
                self.stats.guards.record(status);
                energy += c * v;
            }
        }
        self.stats.energy_evaluations += 1;
        Ok(energy)
    }
}
