//! PQE residuals, VQE gradients and the shared DIIS-accelerated Jacobi loop.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ansatz::{wrap_angle, Ansatz};
use crate::backend::Backend;
use crate::error::{Error, Result};
use crate::models::SpectrumReport;
use crate::pauli::ObservableSum;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualFormula {
    /// `r = [E(pi/4) - E(-pi/4)] / 2`
    #[default]
    ReferenceShift,
    /// `r = E(pi/4) - [E(pi/2) + E(0)] / 2`
    ThreePoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Pqe,
    Vqe,
}

fn default_tolerance() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    200
}
fn default_depth() -> usize {
    6
}
fn default_true() -> bool {
    true
}
fn default_floor() -> f64 {
    0.1
}
fn default_max_step() -> f64 {
    FRAC_PI_4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_depth")]
    pub diis_depth: usize,
    #[serde(default = "default_true")]
    pub wrap_period: bool,
    #[serde(default)]
    pub residual_formula: ResidualFormula,
    /// Smallest allowed `|Delta_mu|`.
    #[serde(default = "default_floor")]
    pub denominator_floor: f64,
    /// Largest change of any parameter in one iteration.
    #[serde(default = "default_max_step")]
    pub max_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: default_tolerance(),
            max_iter: default_max_iter(),
            diis_depth: default_depth(),
            wrap_period: true,
            residual_formula: ResidualFormula::ReferenceShift,
            denominator_floor: default_floor(),
            max_step: default_max_step(),
        }
    }
}

impl SolverConfig {
    /// Defaults for shot-based runs.
    pub fn sampled() -> SolverConfig {
        SolverConfig {
            tolerance: 0.03,
            max_iter: 40,
            ..Default::default()
        }
    }
}

/// Residual or gradient components plus the energy measured at the same point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector {
    pub r: Vec<f64>,
    pub energy: f64,
}

impl ResidualVector {
    pub fn max_norm(&self) -> f64 {
        self.r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_index(a: &Ansatz, mu: usize) -> Result<()> {
    if mu >= a.len() {
        return Err(Error::Invalid(format!(
            "parameter index {mu} out of range for {} parameters",
            a.len()
        )));
    }
    Ok(())
}

/// Energy with `exp(phi kappa_mu)` acting on the reference before the ansatz.
pub fn shifted_energy<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    mu: usize,
    phi: f64,
    obs: &ObservableSum,
    backend: &mut B,
) -> Result<f64> {
    check_index(a, mu)?;
    let c = a.rotation_circuit(params, Some((mu, phi)))?;
    backend.energy(&c, obs)
}

pub fn energy<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
) -> Result<f64> {
    backend.energy(&a.rotation_circuit(params, None)?, obs)
}

pub fn residual_reference_shift<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    mu: usize,
    obs: &ObservableSum,
    backend: &mut B,
) -> Result<f64> {
    let plus = shifted_energy(a, params, mu, FRAC_PI_4, obs, backend)?;
    let minus = shifted_energy(a, params, mu, -FRAC_PI_4, obs, backend)?;
    Ok(0.5 * (plus - minus))
}

/// `e0` is the unshifted energy; it is measured if not supplied.
pub fn residual_three_point<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    mu: usize,
    obs: &ObservableSum,
    backend: &mut B,
    e0: Option<f64>,
) -> Result<f64> {
    check_index(a, mu)?;
    let e0 = match e0 {
        Some(e) => e,
        None => energy(a, params, obs, backend)?,
    };
    let quarter = shifted_energy(a, params, mu, FRAC_PI_4, obs, backend)?;
    let half = shifted_energy(a, params, mu, FRAC_PI_2, obs, backend)?;
    Ok(quarter - 0.5 * (half + e0))
}

pub fn residuals<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
    formula: ResidualFormula,
) -> Result<ResidualVector> {
    let e = energy(a, params, obs, backend)?;
    let r = (0..a.len())
        .map(|mu| match formula {
            ResidualFormula::ReferenceShift => {
                residual_reference_shift(a, params, mu, obs, backend)
            }
            ResidualFormula::ThreePoint => {
                residual_three_point(a, params, mu, obs, backend, Some(e))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualVector { r, energy: e })
}

/// Parameter-shift derivative `dE/dt_mu`.
pub fn vqe_gradient<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    mu: usize,
    obs: &ObservableSum,
    backend: &mut B,
) -> Result<f64> {
    check_index(a, mu)?;
    let mut p = params.to_vec();
    p[mu] = params[mu] + FRAC_PI_2;
    let plus = energy(a, &p, obs, backend)?;
    p[mu] = params[mu] - FRAC_PI_2;
    let minus = energy(a, &p, obs, backend)?;
    Ok(0.5 * (plus - minus))
}

pub fn gradients<B: Backend + ?Sized>(
    a: &Ansatz,
    params: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
) -> Result<ResidualVector> {
    let e = energy(a, params, obs, backend)?;
    let r = (0..a.len())
        .map(|mu| vqe_gradient(a, params, mu, obs, backend))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualVector { r, energy: e })
}

/// `<target|H|target> - <ref|H|ref>`; values with magnitude below `floor` become `+floor`.
pub fn quasi_newton_denominators(a: &Ansatz, obs: &ObservableSum, floor: f64) -> Vec<f64> {
    let e_ref = obs.diagonal_element(a.reference.bits);
    a.ops
        .iter()
        .map(|op| {
            let d = obs.diagonal_element(op.target.bits) - e_ref;
            if d.abs() >= floor {
                d
            } else {
                floor
            }
        })
        .collect()
}

/// Pulay extrapolation over stored (parameters, error) pairs, oldest dropped first.
#[derive(Clone, Debug, PartialEq)]
pub struct DiisHistory {
    max_depth: usize,
    params: VecDeque<Vec<f64>>,
    errors: VecDeque<Vec<f64>>,
}

/// Ridge added to the normalised B matrix.
pub const DIIS_RIDGE: f64 = 1e-12;
/// Reciprocal condition number below which the oldest entry is dropped.
pub const DIIS_PRUNE_RCOND: f64 = 1e-10;

impl DiisHistory {
    pub fn new(max_depth: usize) -> DiisHistory {
        DiisHistory {
            max_depth: max_depth.max(1),
            params: VecDeque::new(),
            errors: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn push(&mut self, params: Vec<f64>, error: Vec<f64>) {
        if self.params.len() == self.max_depth {
            self.params.pop_front();
            self.errors.pop_front();
        }
        self.params.push_back(params);
        self.errors.push_back(error);
    }

    /// Augmented Pulay matrix with the B block scaled to unit max diagonal.
    fn system(&self) -> Option<DMatrix<f64>> {
        let m = self.errors.len();
        let mut b = DMatrix::<f64>::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..=i {
                let v: f64 = self.errors[i]
                    .iter()
                    .zip(&self.errors[j])
                    .map(|(x, y)| x * y)
                    .sum();
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        let scale = (0..m).map(|i| b[(i, i)]).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        for i in 0..m {
            for j in 0..m {
                b[(i, j)] /= scale;
            }
            b[(i, m)] = -1.0;
            b[(m, i)] = -1.0;
        }
        Some(b)
    }

    /// Drops the oldest entries while the stored errors are affinely dependent.
    /// With fewer parameters than entries the Pulay system is singular and the
    /// ridge would otherwise spread weight onto stale iterates.
    pub fn prune(&mut self) {
        while self.errors.len() > 2 {
            let Some(sys) = self.system() else { return };
            let sv = sys.singular_values();
            let (lo, hi) = (sv.min(), sv.max());
            if lo > DIIS_PRUNE_RCOND * hi {
                return;
            }
            self.params.pop_front();
            self.errors.pop_front();
        }
    }

    /// Coefficients summing to one that minimise the combined error norm.
    pub fn coefficients(&self) -> Vec<f64> {
        let m = self.errors.len();
        if m <= 1 {
            return vec![1.0; m];
        }
        let mut last = vec![0.0; m];
        last[m - 1] = 1.0;
        let Some(mut b) = self.system() else {
            return last;
        };
        for i in 0..m {
            b[(i, i)] += DIIS_RIDGE;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        match b.lu().solve(&rhs) {
            Some(x) if x.iter().all(|v| v.is_finite()) => x.iter().take(m).copied().collect(),
            _ => last,
        }
    }

    pub fn extrapolate(&self) -> Vec<f64> {
        let c = self.coefficients();
        let n = self.params.back().map(|p| p.len()).unwrap_or(0);
        let mut out = vec![0.0; n];
        for (ci, p) in c.iter().zip(&self.params) {
            for (o, v) in out.iter_mut().zip(p) {
                *o += ci * v;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Ground,
    Excited,
}

/// Which eigenvalue a solve ended nearest to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub kind: TargetKind,
    pub level: usize,
    pub eigenvalue: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    /// One entry per evaluated point, starting with the initial guess.
    pub energies: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub parameters: Vec<Vec<f64>>,
    pub converged: bool,
    pub target: Option<TargetState>,
}

impl SolveReport {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("at least one evaluation")
    }

    pub fn final_parameters(&self) -> &[f64] {
        self.parameters.last().expect("at least one evaluation")
    }

    /// Labels the run by the nearest eigenvalue of `spectrum`.
    pub fn classify(&mut self, spectrum: &SpectrumReport) {
        let e = self.final_energy();
        let k = spectrum.nearest_level(e);
        let eigenvalue = spectrum.eigenvalues[k];
        let kind = if eigenvalue - spectrum.ground_energy < crate::models::DEGENERACY_TOL {
            TargetKind::Ground
        } else {
            TargetKind::Excited
        };
        self.target = Some(TargetState {
            kind,
            level: k,
            eigenvalue,
        });
    }
}

fn iterate<F>(
    method: Method,
    a: &Ansatz,
    theta0: &[f64],
    obs: &ObservableSum,
    cfg: &SolverConfig,
    mut eval: F,
) -> Result<SolveReport>
where
    F: FnMut(&[f64]) -> Result<ResidualVector>,
{
    if theta0.len() != a.len() {
        return Err(Error::ParamMismatch {
            expected: a.len(),
            got: theta0.len(),
        });
    }
    if obs.n_qubits() != a.n_qubits {
        return Err(Error::SizeMismatch {
            left: a.n_qubits,
            right: obs.n_qubits(),
        });
    }
    let delta = quasi_newton_denominators(a, obs, cfg.denominator_floor);
    let mut diis = DiisHistory::new(cfg.diis_depth);
    // DIIS works on unwrapped angles; wrapping only affects evaluation and reporting.
    let mut raw = theta0.to_vec();
    let mut rep = SolveReport {
        method,
        iterations: 0,
        energies: Vec::new(),
        residual_norms: Vec::new(),
        parameters: Vec::new(),
        converged: false,
        target: None,
    };
    for it in 0..=cfg.max_iter {
        let theta: Vec<f64> = if cfg.wrap_period {
            raw.iter().map(|t| wrap_angle(*t)).collect()
        } else {
            raw.clone()
        };
        let rv = eval(&theta)?;
        let norm = rv.max_norm();
        rep.energies.push(rv.energy);
        rep.residual_norms.push(norm);
        rep.parameters.push(theta);
        if norm <= cfg.tolerance {
            rep.converged = true;
            break;
        }
        if it == cfg.max_iter {
            break;
        }
        // Newton step on E(t) = a + b sin t + c cos t near the reference: dt = -2 r / Delta.
        let jacobi: Vec<f64> = raw
            .iter()
            .zip(&rv.r)
            .zip(&delta)
            .map(|((t, r), d)| t - 2.0 * r / d)
            .collect();
        diis.push(jacobi, rv.r);
        diis.prune();
        let next = diis.extrapolate();
        raw = raw
            .iter()
            .zip(&next)
            .map(|(t, n)| t + (n - t).clamp(-cfg.max_step, cfg.max_step))
            .collect();
    }
    rep.iterations = rep.energies.len() - 1;
    Ok(rep)
}

pub fn pqe_solve<B: Backend + ?Sized>(
    a: &Ansatz,
    theta0: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    iterate(Method::Pqe, a, theta0, obs, cfg, |t| {
        residuals(a, t, obs, backend, cfg.residual_formula)
    })
}

pub fn vqe_solve<B: Backend + ?Sized>(
    a: &Ansatz,
    theta0: &[f64],
    obs: &ObservableSum,
    backend: &mut B,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    iterate(Method::Vqe, a, theta0, obs, cfg, |t| {
        gradients(a, t, obs, backend)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ExactBackend;
    use crate::models::{build_h2_observable, build_tfim, bundled_h2_dataset, TfimSpec};

    #[test]
    fn h2_shifted_energy_closed_form() {
        let rec = bundled_h2_dataset()[7];
        let h = build_h2_observable(&rec);
        let a = Ansatz::h2();
        let c = 0.5 * (rec.h00 + rec.h11) + rec.enuc;
        for phi in [0.0, 0.3, -0.9, FRAC_PI_2] {
            let e = shifted_energy(&a, &[0.0], 0, phi, &h, &mut ExactBackend).unwrap();
            let want = c + rec.h01 * (2.0 * phi).sin() + rec.half_splitting() * (2.0 * phi).cos();
            assert!((e - want).abs() < 1e-12);
        }
        let swapped = shifted_energy(&a, &[0.0], 0, FRAC_PI_2, &h, &mut ExactBackend).unwrap();
        assert!((swapped - (rec.h11 + rec.enuc)).abs() < 1e-12);
        let r = residual_reference_shift(&a, &[0.0], 0, &h, &mut ExactBackend).unwrap();
        assert!((r - rec.h01).abs() < 1e-12);
        let r3 = residual_three_point(&a, &[0.0], 0, &h, &mut ExactBackend, None).unwrap();
        assert!((r3 - rec.h01).abs() < 1e-12);
    }

    #[test]
    fn depth_one_diis_is_plain_jacobi() {
        let h = build_tfim(&TfimSpec::new(3, 1.0, 1.0)).unwrap();
        let a = Ansatz::combinatorial(3, true).unwrap();
        let cfg = SolverConfig {
            diis_depth: 1,
            max_iter: 6,
            wrap_period: false,
            ..Default::default()
        };
        let rep = pqe_solve(&a, &vec![0.0; a.len()], &h, &mut ExactBackend, &cfg).unwrap();
        let delta = quasi_newton_denominators(&a, &h, 0.1);
        let mut t = vec![0.0; a.len()];
        for k in 0..rep.iterations {
            let rv = residuals(
                &a,
                &t,
                &h,
                &mut ExactBackend,
                ResidualFormula::ReferenceShift,
            )
            .unwrap();
            t = t
                .iter()
                .zip(&rv.r)
                .zip(&delta)
                .map(|((t, r), d)| t - 2.0 * r / d)
                .collect();
            assert_eq!(t, rep.parameters[k + 1]);
        }
    }

    #[test]
    fn already_optimal_takes_no_steps() {
        let h = ObservableSum::from_terms(1, [(1.0, "Z".parse().unwrap())]).unwrap();
        let rep = vqe_solve(
            &Ansatz::h2(),
            &[std::f64::consts::PI],
            &h,
            &mut ExactBackend,
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.converged);
        assert_eq!(rep.energies.len(), 1);
    }

    #[test]
    fn diis_history_discards_oldest() {
        let mut d = DiisHistory::new(2);
        d.push(vec![1.0], vec![1.0]);
        d.push(vec![2.0], vec![0.5]);
        d.push(vec![3.0], vec![0.25]);
        assert_eq!(d.len(), 2);
        let c = d.coefficients();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_parameter_length() {
        let h = ObservableSum::from_terms(1, [(1.0, "Z".parse().unwrap())]).unwrap();
        assert!(matches!(
            pqe_solve(
                &Ansatz::h2(),
                &[0.0, 1.0],
                &h,
                &mut ExactBackend,
                &SolverConfig::default()
            ),
            Err(Error::ParamMismatch { .. })
        ));
        assert!(shifted_energy(&Ansatz::h2(), &[0.0], 1, 0.0, &h, &mut ExactBackend).is_err());
    }
}
