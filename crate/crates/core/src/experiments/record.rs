//! Run records and their JSON / CSV serialisations.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::BackendStats;
use crate::bits::format_bits;
use crate::error::{Error, Result};
use crate::mitigation::{CalibrationMatrix, GuardReport};
use crate::solver::{SolveReport, TargetKind};

use super::config::{Experiment, ExperimentConfig, OutputFormat};

pub const SCHEMA: &str = "pqe-run/1";
pub const CSV_HEADER: &str = "# pqe-run-csv v1";

/// One solve inside a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub seed: u64,
    pub energy: f64,
    pub report: SolveReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<BackendStats>,
}

/// Statistics derived from the repeats of a record; see [`Summary::from_repeats`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub repeats: usize,
    /// Repeats that ended nearest the ground state. Energy statistics use only these.
    pub ground_runs: usize,
    pub excited_fraction: f64,
    pub converged_fraction: f64,
    pub mean_iterations: f64,
    pub mean_energy: Option<f64>,
    pub std_energy: Option<f64>,
    /// Mean of `E - E_exact`.
    pub mean_error: Option<f64>,
    pub max_abs_error: Option<f64>,
    pub mean_recovered_pct: Option<f64>,
    pub std_recovered_pct: Option<f64>,
    pub guards: GuardReport,
    pub mean_discarded_fraction: Option<f64>,
    pub postselection_skipped: u64,
    pub postselection_empty: u64,
    pub unfold_fallbacks: u64,
}

fn mean_std(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(m), Some(s))
}

/// Share of the exact correlation energy `exact - uncoupled` recovered by `energy`, in percent.
pub fn recovered_pct(energy: f64, uncoupled: f64, exact: f64) -> f64 {
    (energy - uncoupled) / (exact - uncoupled) * 100.0
}

impl Summary {
    /// `exact` and `uncoupled` are the reference energies stored on the record.
    pub fn from_repeats(
        repeats: &[RepeatRecord],
        exact: Option<f64>,
        uncoupled: Option<f64>,
    ) -> Summary {
        let n = repeats.len();
        let ground: Vec<&RepeatRecord> = repeats
            .iter()
            .filter(|r| r.report.target.is_none_or(|t| t.kind == TargetKind::Ground))
            .collect();
        let energies: Vec<f64> = ground.iter().map(|r| r.energy).collect();
        let (mean_energy, std_energy) = mean_std(&energies);
        let errors: Vec<f64> = exact
            .map(|x| energies.iter().map(|e| e - x).collect())
            .unwrap_or_default();
        let pcts: Vec<f64> = match (exact, uncoupled) {
            (Some(x), Some(u)) => energies.iter().map(|&e| recovered_pct(e, u, x)).collect(),
            _ => Vec::new(),
        };
        let (mean_recovered_pct, std_recovered_pct) = mean_std(&pcts);
        let mut guards = GuardReport::default();
        let (mut discarded, mut postselected) = (0.0, 0u64);
        let (mut skipped, mut empty, mut fallbacks) = (0, 0, 0);
        for s in repeats.iter().filter_map(|r| r.stats.as_ref()) {
            guards.merge(&s.guards);
            discarded += s.discarded_fraction_sum;
            postselected += s.postselected_circuits;
            skipped += s.postselection_skipped;
            empty += s.postselection_empty;
            fallbacks += s.unfold_fallbacks;
        }
        let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        Summary {
            repeats: n,
            ground_runs: ground.len(),
            excited_fraction: frac(n - ground.len()),
            converged_fraction: frac(repeats.iter().filter(|r| r.report.converged).count()),
            mean_iterations: if n == 0 {
                0.0
            } else {
                repeats
                    .iter()
                    .map(|r| r.report.iterations as f64)
                    .sum::<f64>()
                    / n as f64
            },
            mean_energy,
            std_energy,
            mean_error: mean_std(&errors).0,
            max_abs_error: errors.iter().map(|e| e.abs()).reduce(f64::max),
            mean_recovered_pct,
            std_recovered_pct,
            guards,
            mean_discarded_fraction: (postselected > 0).then(|| discarded / postselected as f64),
            postselection_skipped: skipped,
            postselection_empty: empty,
            unfold_fallbacks: fallbacks,
        }
    }
}

/// Pair correlators `<s_i s_j>` of one state, one matrix per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub state: String,
    pub energy: f64,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: String,
    pub experiment: Experiment,
    /// Identifies the record within its experiment, e.g. `R=0.75` or `taper_custom/linear`.
    pub label: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncoupled_energy: Option<f64>,
    pub repeats: Vec<RepeatRecord>,
    pub summary: Summary,
    /// Scalar facts about the record (parameter and CNOT counts, bond length, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub correlations: Vec<CorrelationSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunRecord {
    pub fn new(
        experiment: Experiment,
        label: impl Into<String>,
        config: &ExperimentConfig,
        seed: u64,
    ) -> RunRecord {
        RunRecord {
            schema: SCHEMA.to_string(),
            experiment,
            label: label.into(),
            config: config.clone(),
            seed,
            exact_energy: None,
            uncoupled_energy: None,
            repeats: Vec::new(),
            summary: Summary::default(),
            metrics: BTreeMap::new(),
            correlations: Vec::new(),
            calibration: None,
            timestamp: None,
        }
    }

    pub fn recompute_summary(&self) -> Summary {
        Summary::from_repeats(&self.repeats, self.exact_energy, self.uncoupled_energy)
    }

    pub fn finish(mut self) -> RunRecord {
        self.summary = self.recompute_summary();
        if self.config.output.timestamps {
            self.timestamp =
                Some(humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string());
        }
        self
    }
}

pub fn to_json(records: &[RunRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn from_json(text: &str) -> Result<Vec<RunRecord>> {
    let records: Vec<RunRecord> = serde_json::from_str(text)?;
    if let Some(r) = records.iter().find(|r| r.schema != SCHEMA) {
        return Err(Error::Invalid(format!("unsupported schema '{}'", r.schema)));
    }
    Ok(records)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    label: &'a str,
    repeat: usize,
    seed: u64,
    energy: f64,
    exact_energy: Option<f64>,
    error: Option<f64>,
    recovered_pct: Option<f64>,
    iterations: usize,
    converged: bool,
    target: &'a str,
    discarded_fraction: Option<f64>,
}

/// One row per repeat, preceded by a schema line.
pub fn to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        for (i, rep) in r.repeats.iter().enumerate() {
            let target = match rep.report.target.map(|t| t.kind) {
                Some(TargetKind::Ground) => "ground",
                Some(TargetKind::Excited) => "excited",
                None => "",
            };
            w.serialize(CsvRow {
                experiment: r.experiment.name(),
                label: &r.label,
                repeat: i,
                seed: rep.seed,
                energy: rep.energy,
                exact_energy: r.exact_energy,
                error: r.exact_energy.map(|x| rep.energy - x),
                recovered_pct: match (r.exact_energy, r.uncoupled_energy) {
                    (Some(x), Some(u)) => Some(recovered_pct(rep.energy, u, x)),
                    _ => None,
                },
                iterations: rep.report.iterations,
                converged: rep.report.converged,
                target,
                discarded_fraction: rep.stats.as_ref().and_then(|s| {
                    (s.postselected_circuits > 0).then(|| s.mean_discarded_fraction())
                }),
            })?;
        }
    }
    finish_csv(w)
}

/// Correlation matrices flattened to `label,state,axis,i,j,value` rows.
pub fn correlations_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "state", "axis", "i", "j", "value"])?;
    for r in records {
        for c in &r.correlations {
            for (axis, m) in [("X", &c.x), ("Y", &c.y), ("Z", &c.z)] {
                for (i, row) in m.iter().enumerate() {
                    for (j, v) in row.iter().enumerate().skip(i + 1) {
                        w.write_record([
                            &r.label,
                            &c.state,
                            axis,
                            &i.to_string(),
                            &j.to_string(),
                            &v.to_string(),
                        ])?;
                    }
                }
            }
        }
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(format!("{CSV_HEADER}\n{body}"))
}

/// Calibration matrices as `label,observed,actual,probability` rows.
pub fn calibration_to_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "observed", "actual", "probability"])?;
    for r in records {
        if let Some(c) = &r.calibration {
            let n = c.n_qubits;
            for o in 0..c.dim() {
                for a in 0..c.dim() {
                    let (os, as_) = (format_bits(o as u64, n), format_bits(a as u64, n));
                    w.write_record([r.label.as_str(), &os, &as_, &c.get(o, a).to_string()])?;
                }
            }
        }
    }
    finish_csv(w)
}

/// Writes `<experiment>.json` or `<experiment>.csv` into `dir` and returns the path.
/// The CSV holds one row per repeat, or the correlation / calibration table for
/// experiments that produce those instead of solves.
pub fn emit(records: &[RunRecord], dir: &Path, format: OutputFormat) -> Result<PathBuf> {
    let name = records.first().map_or("run", |r| r.experiment.name());
    fs::create_dir_all(dir)?;
    let (file, text) = match format {
        OutputFormat::Json => (format!("{name}.json"), to_json(records)?),
        OutputFormat::Csv => {
            let text = if records.iter().any(|r| !r.correlations.is_empty()) {
                correlations_to_csv(records)?
            } else if records.iter().any(|r| r.calibration.is_some()) {
                calibration_to_csv(records)?
            } else {
                to_csv(records)?
            };
            (format!("{name}.csv"), text)
        }
    };
    let p = dir.join(file);
    fs::File::create(&p)?.write_all(text.as_bytes())?;
    Ok(p)
}
