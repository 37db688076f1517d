//! End-to-end experiment drivers. Every job gets its own seed derived from the base seed,
//! so results do not depend on the order jobs run in.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::Ansatz;
use crate::backend::{Backend, BackendStats, ExactBackend, Mitigation, ShotBackend, SymmetryRule};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::mitigation::{
    calibrate_readout, taper_parity_custom, taper_standard, ExtrapolationKind, ExtrapolationPolicy,
    TaperMap,
};
use crate::models::{
    build_h2_observable, build_tfim, bundled_h2_dataset, correlation_observables,
    exact_diagonalize, load_h2_dataset, tfim_spectrum, H2Record, SpectrumReport, TfimSpec,
};
use crate::pauli::{ObservableSum, Pauli, PauliString};
use crate::solver::{pqe_solve, vqe_solve, Method, SolveReport, SolverConfig};
use crate::statevector::simulate;

use super::config::{
    AnsatzConfig, AnsatzVariant, BackendConfig, Experiment, ExperimentConfig, ModelConfig,
    SymmetryMode,
};
use super::record::{CorrelationSet, RepeatRecord, RunRecord};

/// Seed for the job addressed by `path`, independent of every other path.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    for &p in path {
        rng.set_stream(p);
        rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    }
    rng.next_u64()
}

/// Exact or shot-based estimator chosen by the config.
pub enum RunBackend {
    Exact(ExactBackend),
    Shots(Box<ShotBackend>),
}

impl RunBackend {
    pub fn stats(&self) -> Option<BackendStats> {
        match self {
            RunBackend::Exact(_) => None,
            RunBackend::Shots(b) => Some(b.stats.clone()),
        }
    }
}

impl Backend for RunBackend {
    fn energy(&mut self, circuit: &Circuit, obs: &ObservableSum) -> Result<f64> {
        match self {
            RunBackend::Exact(b) => b.energy(circuit, obs),
            RunBackend::Shots(b) => b.energy(circuit, obs),
        }
    }
}

/// Builds the backend for one job, calibrating readout when enabled.
pub fn make_backend(
    cfg: &ExperimentConfig,
    n_qubits: usize,
    postselection: Option<SymmetryRule>,
    extrapolation: ExtrapolationPolicy,
    shot_factor: u64,
    seed: u64,
) -> Result<RunBackend> {
    match &cfg.backend {
        BackendConfig::Exact => Ok(RunBackend::Exact(ExactBackend)),
        BackendConfig::Shots { shots, noise } => {
            extrapolation.validate()?;
            let mitigation = Mitigation {
                calibration: None,
                postselection,
                extrapolation,
            };
            let mut b = ShotBackend::new(shots * shot_factor, noise.clone(), mitigation, seed)?;
            if cfg.mitigation.readout {
                b.calibrate(
                    n_qubits,
                    cfg.mitigation.calibration_shots,
                    cfg.mitigation.calibration_magnification,
                )?;
            }
            Ok(RunBackend::Shots(Box::new(b)))
        }
    }
}

pub fn solve<B: crate::backend::Backend + ?Sized>(
    method: Method,
    a: &Ansatz,
    theta0: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    match method {
        Method::Pqe => pqe_solve(a, theta0, obs, backend, cfg),
        Method::Vqe => vqe_solve(a, theta0, obs, backend, cfg),
    }
}

fn repeat(seed: u64, report: SolveReport, backend: &RunBackend) -> RepeatRecord {
    RepeatRecord {
        seed,
        energy: report.final_energy(),
        report,
        stats: backend.stats(),
    }
}

fn tfim_spec(cfg: &ExperimentConfig) -> Result<TfimSpec> {
    match cfg.model {
        ModelConfig::Tfim { n_sites, h, j } => Ok(TfimSpec::new(n_sites, h, j)),
        _ => Err(Error::Config("this experiment needs a TFIM model".into())),
    }
}

/// A TFIM instance prepared for one symmetry treatment.
#[derive(Clone, Debug)]
pub struct TfimProblem {
    pub spec: TfimSpec,
    pub spectrum: SpectrumReport,
    /// Hamiltonian the solver sees: tapered when a taper is in use.
    pub observable: ObservableSum,
    pub ansatz: Ansatz,
    pub postselection: Option<SymmetryRule>,
    pub taper: Option<TaperMap>,
}

impl TfimProblem {
    pub fn new(
        spec: TfimSpec,
        symmetry: SymmetryMode,
        taper_qubit: usize,
        ansatz: &AnsatzConfig,
    ) -> Result<TfimProblem> {
        let full = build_tfim(&spec)?;
        let spectrum = tfim_spectrum(&spec)?;
        let n = spec.n_sites;
        let parity = SymmetryRule::even_parity(n)?;
        let (observable, taper) = match symmetry {
            SymmetryMode::TaperCustom => {
                let (o, m) = taper_parity_custom(&full)?;
                (o, Some(m))
            }
            SymmetryMode::TaperStandard => {
                let (o, m) = taper_standard(&full, &parity.symmetry, taper_qubit, 1)?;
                (o, Some(m))
            }
            _ => (full, None),
        };
        let base = match (&taper, ansatz.variant) {
            (Some(_), _) => Ansatz::combinatorial(n - 1, false)?,
            (None, AnsatzVariant::Full) => Ansatz::combinatorial(n, false)?,
            (None, _) => Ansatz::combinatorial(n, true)?,
        };
        let postselection = (symmetry == SymmetryMode::Postselect).then_some(parity);
        let mut p = TfimProblem {
            spec,
            spectrum,
            observable,
            ansatz: base,
            postselection,
            taper,
        };
        p.ansatz = match ansatz.variant {
            AnsatzVariant::Full | AnsatzVariant::ParityFiltered => p.ansatz,
            AnsatzVariant::Largest => {
                let keep = largest_ops(&p.ansatz, &p.observable, ansatz.keep)?;
                p.ansatz.truncate(&keep)?
            }
            AnsatzVariant::WithoutWidest => {
                let widest = p
                    .ansatz
                    .ops
                    .iter()
                    .map(|o| o.generator.weight())
                    .max()
                    .unwrap_or(0);
                let keep: Vec<usize> = (0..p.ansatz.len())
                    .filter(|&i| p.ansatz.ops[i].generator.weight() < widest)
                    .collect();
                p.ansatz.truncate(&keep)?
            }
        };
        Ok(p)
    }

    pub fn exact_energy(&self) -> f64 {
        self.spectrum.ground_energy
    }

    pub fn uncoupled_energy(&self) -> f64 {
        self.spec.uncoupled_energy()
    }

    /// CNOTs in the compiled state-preparation circuit.
    pub fn cnot_count(&self) -> Result<usize> {
        Ok(self
            .ansatz
            .compile(&vec![0.0; self.ansatz.len()])?
            .cnot_count())
    }

    /// Statevector of the solved state on the full register.
    pub fn full_state(&self, params: &[f64]) -> Result<Vec<num_complex::Complex64>> {
        let psi = simulate(&self.ansatz.compile(params)?)?;
        match &self.taper {
            Some(m) => m.lift_state(psi.amplitudes()),
            None => Ok(psi.amplitudes().to_vec()),
        }
    }
}

/// Indices of the `keep` ops with the largest exact fixed-point amplitudes, in ansatz order.
pub fn largest_ops(a: &Ansatz, obs: &ObservableSum, keep: usize) -> Result<Vec<usize>> {
    let rep = pqe_solve(
        a,
        &vec![0.0; a.len()],
        obs,
        &mut ExactBackend,
        &SolverConfig::default(),
    )?;
    let theta = rep.final_parameters();
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&x, &y| theta[y].abs().total_cmp(&theta[x].abs()).then(x.cmp(&y)));
    idx.truncate(keep.min(a.len()));
    idx.sort_unstable();
    Ok(idx)
}

/// Runs `cfg.repeats` solves of `problem` and collects them in a record.
#[allow(clippy::too_many_arguments)]
fn tfim_record(
    cfg: &ExperimentConfig,
    experiment: Experiment,
    label: String,
    problem: &TfimProblem,
    method: Method,
    extrapolation: ExtrapolationPolicy,
    shot_factor: u64,
    seeds: &dyn Fn(usize) -> u64,
) -> Result<RunRecord> {
    let mut rec = RunRecord::new(experiment, label, cfg, seeds(0));
    rec.exact_energy = Some(problem.exact_energy());
    rec.uncoupled_energy = Some(problem.uncoupled_energy());
    for r in 0..cfg.repeats {
        let seed = seeds(r);
        let mut b = make_backend(
            cfg,
            problem.ansatz.n_qubits,
            problem.postselection.clone(),
            extrapolation.clone(),
            shot_factor,
            seed,
        )?;
        let a = &problem.ansatz;
        let mut report = solve(
            method,
            a,
            &vec![0.0; a.len()],
            &problem.observable,
            &mut b,
            &cfg.solver,
        )?;
        if cfg.backend.is_exact() {
            report.classify(&problem.spectrum);
        }
        rec.repeats.push(repeat(seed, report, &b));
    }
    rec.metrics
        .insert("n_sites".into(), problem.spec.n_sites as f64);
    rec.metrics
        .insert("n_qubits".into(), problem.ansatz.n_qubits as f64);
    rec.metrics
        .insert("n_parameters".into(), problem.ansatz.len() as f64);
    rec.metrics
        .insert("cnot_count".into(), problem.cnot_count()? as f64);
    Ok(rec.finish())
}

fn policy(cfg: &ExperimentConfig, kind: ExtrapolationKind) -> ExtrapolationPolicy {
    ExtrapolationPolicy {
        kind,
        ..cfg.mitigation.extrapolation.clone()
    }
}

fn h2_data(cfg: &ExperimentConfig) -> Result<Vec<H2Record>> {
    let ModelConfig::H2 {
        dataset,
        bond_lengths,
    } = &cfg.model
    else {
        return Err(Error::Config("h2-curve needs an H2 model".into()));
    };
    let data = match dataset {
        Some(p) => load_h2_dataset(p)?,
        None => bundled_h2_dataset(),
    };
    match bond_lengths {
        None => Ok(data),
        Some(rs) => rs
            .iter()
            .map(|r| {
                data.iter()
                    .find(|d| (d.bond_length - r).abs() < 1e-9)
                    .copied()
                    .ok_or_else(|| Error::Dataset(format!("no geometry at R = {r}")))
            })
            .collect(),
    }
}

/// One record per bond length, each with `repeats` PQE (or VQE) solves from theta = 0.
pub fn run_h2_curve(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    if cfg.mitigation.symmetry != SymmetryMode::None {
        return Err(Error::Config(
            "symmetry treatments apply to TFIM only".into(),
        ));
    }
    let tag = Experiment::H2Curve.tag();
    let mut out = Vec::new();
    for (g, rec) in h2_data(cfg)?.iter().enumerate() {
        let obs = build_h2_observable(rec);
        let spectrum = exact_diagonalize(&obs)?;
        let a = Ansatz::h2();
        let seeds = |r: usize| derive_seed(cfg.seed, &[tag, g as u64, r as u64]);
        let mut run = RunRecord::new(
            Experiment::H2Curve,
            format!("R={}", rec.bond_length),
            cfg,
            seeds(0),
        );
        run.exact_energy = Some(spectrum.ground_energy);
        for r in 0..cfg.repeats {
            let seed = seeds(r);
            let mut b = make_backend(cfg, 1, None, cfg.mitigation.extrapolation.clone(), 1, seed)?;
            let mut report = solve(cfg.method, &a, &[0.0], &obs, &mut b, &cfg.solver)?;
            report.classify(&spectrum);
            run.repeats.push(repeat(seed, report, &b));
        }
        let m = &mut run.metrics;
        m.insert("bond_length".into(), rec.bond_length);
        m.insert("h00".into(), rec.h00);
        m.insert("h11".into(), rec.h11);
        m.insert("h01".into(), rec.h01);
        m.insert("enuc".into(), rec.enuc);
        m.insert("excited_energy".into(), spectrum.eigenvalues[1]);
        // Coefficient of Z in the one-qubit Hamiltonian, next to the observed spread.
        m.insert("z_prefactor".into(), rec.half_splitting());
        m.insert("reference_overlap".into(), reference_overlap(&spectrum));
        out.push(run.finish());
    }
    Ok(out)
}

/// Weight of `|0>` in the ground state.
fn reference_overlap(s: &SpectrumReport) -> f64 {
    s.eigenvector(0).map_or(0.0, |v| v[0].norm_sqr())
}

/// Symmetry treatment x extrapolation grid with paired seeds: repeat `r` uses the same seed in every cell.
pub fn run_tfim_matrix(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let spec = tfim_spec(cfg)?;
    let tag = Experiment::TfimMatrix.tag();
    let seeds = |r: usize| derive_seed(cfg.seed, &[tag, r as u64]);
    let mut out = Vec::new();
    for &sym in &cfg.study.symmetries {
        let problem = TfimProblem::new(spec, sym, cfg.mitigation.taper_qubit, &cfg.ansatz)?;
        for &kind in &cfg.study.extrapolations {
            let label = format!("{}/{}", sym.name(), kind_name(kind));
            let rec = tfim_record(
                cfg,
                Experiment::TfimMatrix,
                label,
                &problem,
                cfg.method,
                policy(cfg, kind),
                1,
                &seeds,
            )?;
            out.push(rec);
        }
    }
    Ok(out)
}

fn kind_name(k: ExtrapolationKind) -> &'static str {
    match k {
        ExtrapolationKind::None => "none",
        ExtrapolationKind::Linear => "linear",
        ExtrapolationKind::Exponential => "exponential",
    }
}

fn variant_name(v: AnsatzVariant) -> &'static str {
    match v {
        AnsatzVariant::Full => "full",
        AnsatzVariant::ParityFiltered => "parity_filtered",
        AnsatzVariant::Largest => "largest",
        AnsatzVariant::WithoutWidest => "without_widest",
    }
}

/// Full, largest-`keep` and without-widest ansatz variants on the untapered register,
/// under custom tapering, and under standard tapering of each qubit in `study.taper_qubits`.
pub fn run_truncation_study(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let spec = tfim_spec(cfg)?;
    let tag = Experiment::TfimTruncation.tag();
    let seeds = |r: usize| derive_seed(cfg.seed, &[tag, r as u64]);
    let mut schemes = vec![(SymmetryMode::None, 0usize), (SymmetryMode::TaperCustom, 0)];
    schemes.extend(
        cfg.study
            .taper_qubits
            .iter()
            .filter(|&&q| q < spec.n_sites)
            .map(|&q| (SymmetryMode::TaperStandard, q)),
    );
    let mut out = Vec::new();
    for (sym, q) in schemes {
        let scheme = match sym {
            SymmetryMode::None => "untapered".to_string(),
            SymmetryMode::TaperStandard => format!("taper_standard_q{q}"),
            s => s.name().to_string(),
        };
        for variant in [
            AnsatzVariant::ParityFiltered,
            AnsatzVariant::Largest,
            AnsatzVariant::WithoutWidest,
        ] {
            let acfg = AnsatzConfig {
                variant,
                keep: cfg.ansatz.keep,
            };
            let problem = TfimProblem::new(spec, sym, q, &acfg)?;
            let label = format!("{scheme}/{}", variant_name(variant));
            let extrap = cfg.mitigation.extrapolation.clone();
            let mut rec = tfim_record(
                cfg,
                Experiment::TfimTruncation,
                label,
                &problem,
                cfg.method,
                extrap,
                1,
                &seeds,
            )?;
            if let Some(m) = &problem.taper {
                rec.metrics
                    .insert("tapered_qubits".into(), m.tapered_qubits() as f64);
            }
            out.push(rec);
        }
    }
    Ok(out)
}

/// Pair correlation matrices of an `n`-site state.
pub fn correlation_matrices(
    psi: &[num_complex::Complex64],
    n: usize,
) -> Result<[Vec<Vec<f64>>; 3]> {
    let mut m = [
        vec![vec![1.0; n]; n],
        vec![vec![1.0; n]; n],
        vec![vec![1.0; n]; n],
    ];
    for c in correlation_observables(n)? {
        let k = match c.axis {
            Pauli::X => 0,
            Pauli::Y => 1,
            _ => 2,
        };
        let v = c.observable.expectation(psi)?;
        m[k][c.i][c.j] = v;
        m[k][c.j][c.i] = v;
    }
    Ok(m)
}

/// Correlators of the exact ground state and of the truncated standard and custom-tapered states.
pub fn run_correlation_report(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let spec = tfim_spec(cfg)?;
    let n = spec.n_sites;
    let mut rec = RunRecord::new(Experiment::TfimCorrelations, "correlations", cfg, cfg.seed);
    let exact = TfimProblem::new(spec, SymmetryMode::None, 0, &AnsatzConfig::default())?;
    rec.exact_energy = Some(exact.exact_energy());
    rec.uncoupled_energy = Some(exact.uncoupled_energy());
    let psi = exact
        .spectrum
        .eigenvector(0)
        .ok_or_else(|| Error::Invalid("spectrum has no eigenvectors".into()))?;
    let [x, y, z] = correlation_matrices(&psi, n)?;
    rec.correlations.push(CorrelationSet {
        state: "exact".into(),
        energy: exact.exact_energy(),
        x,
        y,
        z,
    });
    let trunc = AnsatzConfig {
        variant: AnsatzVariant::Largest,
        keep: cfg.ansatz.keep,
    };
    for (name, sym) in [
        ("truncated_standard", SymmetryMode::None),
        ("truncated_tapered", SymmetryMode::TaperCustom),
    ] {
        let p = TfimProblem::new(spec, sym, 0, &trunc)?;
        let report = pqe_solve(
            &p.ansatz,
            &vec![0.0; p.ansatz.len()],
            &p.observable,
            &mut ExactBackend,
            &cfg.solver,
        )?;
        let psi = p.full_state(report.final_parameters())?;
        let [x, y, z] = correlation_matrices(&psi, n)?;
        rec.metrics
            .insert(format!("{name}_energy"), report.final_energy());
        rec.correlations.push(CorrelationSet {
            state: name.into(),
            energy: report.final_energy(),
            x,
            y,
            z,
        });
    }
    Ok(vec![rec.finish()])
}

/// PQE against VQE for every size, symmetry treatment and extrapolation in the study,
/// with both methods sharing seeds.
pub fn run_scaling_comparison(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let base = tfim_spec(cfg)?;
    let tag = Experiment::Scaling.tag();
    let mut out = Vec::new();
    for &n in &cfg.study.sizes {
        let spec = TfimSpec::new(n, base.h, base.j);
        for (si, &sym) in cfg.study.symmetries.iter().enumerate() {
            let problem = TfimProblem::new(spec, sym, cfg.mitigation.taper_qubit, &cfg.ansatz)?;
            for (ki, &kind) in cfg.study.extrapolations.iter().enumerate() {
                let seeds = |r: usize| {
                    derive_seed(cfg.seed, &[tag, n as u64, si as u64, ki as u64, r as u64])
                };
                for &method in &cfg.study.methods {
                    let m = match method {
                        Method::Pqe => "pqe",
                        Method::Vqe => "vqe",
                    };
                    let label = format!("N={n}/{m}/{}/{}", sym.name(), kind_name(kind));
                    let factor = cfg.study.shot_magnification as u64;
                    let rec = tfim_record(
                        cfg,
                        Experiment::Scaling,
                        label,
                        &problem,
                        method,
                        policy(cfg, kind),
                        factor,
                        &seeds,
                    )?;
                    out.push(rec);
                }
            }
        }
    }
    Ok(out)
}

/// Measures the readout confusion matrix of the configured noise model.
pub fn run_calibration(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let n = match cfg.model {
        ModelConfig::Tfim { n_sites, .. } => n_sites,
        ModelConfig::H2 { .. } => 1,
    };
    let noise = match &cfg.backend {
        BackendConfig::Shots { noise, .. } => noise.clone(),
        BackendConfig::Exact => None,
    };
    let seed = derive_seed(cfg.seed, &[Experiment::Calibrate.tag()]);
    let cal = calibrate_readout(
        noise.as_ref(),
        n,
        cfg.mitigation.calibration_shots,
        cfg.mitigation.calibration_magnification,
        seed,
    )?;
    let mut rec = RunRecord::new(Experiment::Calibrate, format!("n_qubits={n}"), cfg, seed);
    let dim = cal.dim();
    let fidelity = (0..dim).map(|b| cal.get(b, b)).sum::<f64>() / dim as f64;
    rec.metrics.insert("n_qubits".into(), n as f64);
    rec.metrics
        .insert("mean_assignment_fidelity".into(), fidelity);
    rec.metrics
        .insert("shots_per_column".into(), cal.shots_per_column as f64);
    rec.calibration = Some(cal);
    Ok(vec![rec.finish()])
}

/// Dispatches to the runner for `e`.
pub fn run(e: Experiment, cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    match e {
        Experiment::H2Curve => run_h2_curve(cfg),
        Experiment::TfimMatrix => run_tfim_matrix(cfg),
        Experiment::TfimTruncation => run_truncation_study(cfg),
        Experiment::TfimCorrelations => run_correlation_report(cfg),
        Experiment::Scaling => run_scaling_comparison(cfg),
        Experiment::Calibrate => run_calibration(cfg),
    }
}

/// `sigma_i sigma_j` in the tapered frame, for checking transformed correlators.
pub fn tapered_correlator(
    map: &TaperMap,
    axis: Pauli,
    i: usize,
    j: usize,
) -> Result<ObservableSum> {
    let n = map.n_qubits;
    let o = ObservableSum::from_terms(n, [(1.0, PauliString::on_qubits(n, &[i, j], axis)?)])?;
    map.transform_observable(&o)
}
