//! Experiment configuration: presets per experiment, overridden by a TOML document.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mitigation::{ExtrapolationKind, ExtrapolationPolicy};
use crate::noise::NoiseSpec;
use crate::solver::{Method, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    H2Curve,
    TfimMatrix,
    TfimTruncation,
    TfimCorrelations,
    Scaling,
    Calibrate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::H2Curve,
        Experiment::TfimMatrix,
        Experiment::TfimTruncation,
        Experiment::TfimCorrelations,
        Experiment::Scaling,
        Experiment::Calibrate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::H2Curve => "h2-curve",
            Experiment::TfimMatrix => "tfim-matrix",
            Experiment::TfimTruncation => "tfim-truncation",
            Experiment::TfimCorrelations => "tfim-correlations",
            Experiment::Scaling => "scaling",
            Experiment::Calibrate => "calibrate",
        }
    }

    /// Stream tag used when deriving per-job seeds.
    pub fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Experiment> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Tfim {
        n_sites: usize,
        #[serde(default = "one")]
        h: f64,
        #[serde(default = "one")]
        j: f64,
    },
    H2 {
        /// CSV with columns R, h00, h11, h01, enuc. The bundled table is used when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset: Option<PathBuf>,
        /// Restrict the curve to these bond lengths (Angstrom).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bond_lengths: Option<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzVariant {
    /// Every odd-Y generator.
    Full,
    /// Generators that conserve Z-parity. On a tapered register this is the full set.
    #[default]
    ParityFiltered,
    /// The `keep` generators with the largest amplitudes at the exact fixed point.
    Largest,
    /// Everything except the generators of maximal weight.
    WithoutWidest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    #[serde(default)]
    pub variant: AnsatzVariant,
    #[serde(default = "default_keep")]
    pub keep: usize,
}

fn default_keep() -> usize {
    3
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig {
            variant: AnsatzVariant::ParityFiltered,
            keep: default_keep(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    #[default]
    Exact,
    Shots {
        #[serde(default = "default_shots")]
        shots: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseSpec>,
    },
}

fn default_shots() -> u64 {
    8192
}

impl BackendConfig {
    pub fn is_exact(&self) -> bool {
        matches!(self, BackendConfig::Exact)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryMode {
    /// Symmetry is only used to filter the ansatz.
    #[default]
    None,
    TaperStandard,
    TaperCustom,
    Postselect,
}

impl SymmetryMode {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryMode::None => "none",
            SymmetryMode::TaperStandard => "taper_standard",
            SymmetryMode::TaperCustom => "taper_custom",
            SymmetryMode::Postselect => "postselect",
        }
    }

    pub fn is_taper(self) -> bool {
        matches!(
            self,
            SymmetryMode::TaperStandard | SymmetryMode::TaperCustom
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    /// Calibrate and unfold readout errors.
    #[serde(default = "yes")]
    pub readout: bool,
    #[serde(default = "default_shots")]
    pub calibration_shots: u64,
    #[serde(default = "one_u32")]
    pub calibration_magnification: u32,
    #[serde(default)]
    pub symmetry: SymmetryMode,
    /// Qubit removed by standard tapering.
    #[serde(default)]
    pub taper_qubit: usize,
    #[serde(default)]
    pub extrapolation: ExtrapolationPolicy,
}

fn yes() -> bool {
    true
}

fn one_u32() -> u32 {
    1
}

impl Default for MitigationConfig {
    fn default() -> Self {
        MitigationConfig {
            readout: true,
            calibration_shots: default_shots(),
            calibration_magnification: 1,
            symmetry: SymmetryMode::None,
            taper_qubit: 0,
            extrapolation: ExtrapolationPolicy::default(),
        }
    }
}

/// Axes swept by the grid experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_symmetries")]
    pub symmetries: Vec<SymmetryMode>,
    #[serde(default = "default_extrapolations")]
    pub extrapolations: Vec<ExtrapolationKind>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Shots per circuit are multiplied by this factor in the scaling study.
    #[serde(default = "default_magnification")]
    pub shot_magnification: u32,
    /// Qubits removed in the standard-tapering truncation study.
    #[serde(default = "default_taper_qubits")]
    pub taper_qubits: Vec<usize>,
}

fn default_sizes() -> Vec<usize> {
    vec![4, 5, 6, 7]
}

fn default_symmetries() -> Vec<SymmetryMode> {
    vec![
        SymmetryMode::None,
        SymmetryMode::TaperCustom,
        SymmetryMode::Postselect,
    ]
}

fn default_extrapolations() -> Vec<ExtrapolationKind> {
    vec![
        ExtrapolationKind::None,
        ExtrapolationKind::Linear,
        ExtrapolationKind::Exponential,
    ]
}

fn default_methods() -> Vec<Method> {
    vec![Method::Pqe, Method::Vqe]
}

fn default_magnification() -> u32 {
    40
}

fn default_taper_qubits() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            sizes: default_sizes(),
            symmetries: default_symmetries(),
            extrapolations: default_extrapolations(),
            methods: default_methods(),
            shot_magnification: default_magnification(),
            taper_qubits: default_taper_qubits(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<OutputFormat> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: OutputFormat,
    /// Stamp records with the wall-clock time. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timestamps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub repeats: usize,
    pub model: ModelConfig,
    #[serde(default)]
    pub ansatz: AnsatzConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one_usize() -> usize {
    1
}

/// Gate and readout noise used by the noisy presets.
pub fn default_noise() -> NoiseSpec {
    NoiseSpec {
        p1: 0.001,
        p2: 0.015,
        readout: vec![NoiseSpec::confusion(0.02, 0.04)],
        ..Default::default()
    }
}

fn noisy(shots: u64) -> BackendConfig {
    BackendConfig::Shots {
        shots,
        noise: Some(default_noise()),
    }
}

impl ExperimentConfig {
    pub fn tfim(n_sites: usize) -> ExperimentConfig {
        ExperimentConfig {
            seed: 0,
            repeats: 1,
            model: ModelConfig::Tfim {
                n_sites,
                h: 1.0,
                j: 1.0,
            },
            ansatz: AnsatzConfig::default(),
            backend: BackendConfig::Exact,
            mitigation: MitigationConfig::default(),
            method: Method::Pqe,
            solver: SolverConfig::default(),
            study: StudyConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Built-in defaults for each experiment.
    pub fn preset(e: Experiment) -> ExperimentConfig {
        let mut c = ExperimentConfig::tfim(4);
        match e {
            Experiment::H2Curve => {
                c.model = ModelConfig::H2 {
                    dataset: None,
                    bond_lengths: None,
                };
                c.backend = BackendConfig::Exact;
            }
            Experiment::TfimMatrix => {
                c.repeats = 50;
                c.backend = noisy(8192);
                c.solver = SolverConfig::sampled();
            }
            Experiment::TfimTruncation | Experiment::TfimCorrelations => {}
            Experiment::Scaling => {
                c.backend = noisy(8192);
                c.solver = SolverConfig::sampled();
                c.study.symmetries = vec![SymmetryMode::TaperCustom, SymmetryMode::Postselect];
                c.study.extrapolations =
                    vec![ExtrapolationKind::Linear, ExtrapolationKind::Exponential];
            }
            Experiment::Calibrate => {
                c.backend = noisy(8192);
            }
        }
        c
    }

    /// Preset for `e` with `toml_text` merged over it key by key.
    pub fn from_toml_over_preset(e: Experiment, toml_text: &str) -> Result<ExperimentConfig> {
        let overrides: toml::Value =
            toml::from_str(toml_text).map_err(|err| Error::Config(err.to_string()))?;
        let mut base = toml::Value::try_from(ExperimentConfig::preset(e))
            .map_err(|err| Error::Config(err.to_string()))?;
        if !overrides.is_table() {
            return Err(Error::Config("config must be a table".into()));
        }
        merge(&mut base, overrides);
        let cfg: ExperimentConfig = base
            .try_into()
            .map_err(|err: toml::de::Error| Error::Config(err.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|err| Error::Config(err.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        match &self.model {
            ModelConfig::Tfim { n_sites, h, j } => {
                if *n_sites < 2 {
                    return Err(Error::Config("TFIM needs at least two sites".into()));
                }
                if !h.is_finite() || !j.is_finite() {
                    return Err(Error::Config("TFIM couplings must be finite".into()));
                }
            }
            ModelConfig::H2 { dataset, .. } => {
                if let Some(p) = dataset {
                    if !p.is_file() {
                        return Err(Error::Config(format!(
                            "dataset {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
        }
        if let BackendConfig::Shots { shots, noise } = &self.backend {
            if *shots == 0 {
                return Err(Error::Config("shots must be positive".into()));
            }
            if let Some(n) = noise {
                n.validate(self.n_qubits_hint())?;
            }
        }
        if self.mitigation.calibration_magnification == 0 || self.study.shot_magnification == 0 {
            return Err(Error::Config("magnification must be at least 1".into()));
        }
        if self.ansatz.keep == 0 {
            return Err(Error::Config("ansatz.keep must be at least 1".into()));
        }
        if self.solver.tolerance <= 0.0 || self.solver.max_step <= 0.0 {
            return Err(Error::Config(
                "solver tolerance and max_step must be positive".into(),
            ));
        }
        self.mitigation.extrapolation.validate()?;
        Ok(())
    }

    fn n_qubits_hint(&self) -> usize {
        match &self.model {
            ModelConfig::Tfim { n_sites, .. } => *n_sites,
            ModelConfig::H2 { .. } => 1,
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                // A new tagged variant replaces the whole table rather than mixing fields.
                let retag = v.get("kind").is_some()
                    && b.get(&k).and_then(|x| x.get("kind")) != v.get("kind");
                match b.get_mut(&k) {
                    Some(slot) if !retag => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
