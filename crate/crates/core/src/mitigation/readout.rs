//! Readout calibration and constrained unfolding.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::sampling::{outcome_distribution, sample_distribution, ShotTable};
use crate::statevector::check_sim_size;

/// Column-stochastic map from true to observed outcome probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMatrix {
    pub n_qubits: usize,
    pub shots_per_column: u64,
    /// Row-major `A[observed][true]`.
    pub matrix: Vec<f64>,
}

impl CalibrationMatrix {
    pub fn identity(n_qubits: usize) -> CalibrationMatrix {
        let dim = 1usize << n_qubits;
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        CalibrationMatrix {
            n_qubits,
            shots_per_column: 0,
            matrix,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn get(&self, observed: usize, actual: usize) -> f64 {
        self.matrix[observed * self.dim() + actual]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.matrix)
    }
}

/// Prepares every basis state with X gates and records the observed distribution.
/// Each column uses `shots * magnification` shots.
pub fn calibrate_readout(
    noise: Option<&NoiseSpec>,
    n_qubits: usize,
    shots: u64,
    magnification: u32,
    seed: u64,
) -> Result<CalibrationMatrix> {
    check_sim_size(n_qubits)?;
    if magnification == 0 {
        return Err(Error::Invalid("magnification must be at least 1".into()));
    }
    let dim = 1usize << n_qubits;
    let per_col = shots * magnification as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = vec![0.0; dim * dim];
    for b in 0..dim {
        let mut c = Circuit::new(n_qubits);
        for q in 0..n_qubits {
            if b >> q & 1 == 1 {
                c.x(q)?;
            }
        }
        let probs = outcome_distribution(&c, noise)?;
        let counts = sample_distribution(&probs, per_col, &mut rng);
        for (o, k) in counts.into_iter().enumerate() {
            matrix[o * dim + b] = k as f64 / per_col.max(1) as f64;
        }
    }
    Ok(CalibrationMatrix {
        n_qubits,
        shots_per_column: per_col,
        matrix,
    })
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Least squares `A p ~ f` over the simplex, starting from the projected unconstrained solution.
pub fn unfold_frequencies(freqs: &[f64], cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    if freqs.len() != cal.dim() {
        return Err(Error::SizeMismatch {
            left: cal.n_qubits,
            right: freqs.len().trailing_zeros() as usize,
        });
    }
    let a = cal.to_matrix();
    let f = DVector::from_column_slice(freqs);
    let lu = a.clone().lu();
    let direct = lu.solve(&f).ok_or(Error::SingularCalibration)?;
    if !direct.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularCalibration);
    }
    let ata = a.transpose() * &a;
    let atf = a.transpose() * &f;
    // Step 1/L with L the largest eigenvalue of A^T A.
    let lmax = ata.clone().symmetric_eigenvalues().max();
    if lmax <= 0.0 {
        return Err(Error::SingularCalibration);
    }
    let step = 1.0 / lmax;
    let mut p = DVector::from_vec(project_simplex(direct.as_slice()));
    let mut y = p.clone();
    let mut t = 1.0f64;
    for _ in 0..100_000 {
        let grad = &ata * &y - &atf;
        let next = DVector::from_vec(project_simplex((&y - grad * step).as_slice()));
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &p) * ((t - 1.0) / t_next);
        let moved = (&next - &p).amax();
        p = next;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
    }
    Ok(p.iter().copied().collect())
}

pub fn unfold_counts(raw: &ShotTable, cal: &CalibrationMatrix) -> Result<Vec<f64>> {
    if raw.n_qubits() != cal.n_qubits {
        return Err(Error::SizeMismatch {
            left: cal.n_qubits,
            right: raw.n_qubits(),
        });
    }
    unfold_frequencies(&raw.frequencies(), cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_qubit(a: [[f64; 2]; 2]) -> CalibrationMatrix {
        CalibrationMatrix {
            n_qubits: 1,
            shots_per_column: 0,
            matrix: vec![a[0][0], a[0][1], a[1][0], a[1][1]],
        }
    }

    #[test]
    fn inactive_constraint_gives_the_inverse() {
        let cal = one_qubit([[0.95, 0.10], [0.05, 0.90]]);
        let p = unfold_frequencies(&[0.5, 0.5], &cal).unwrap();
        assert!((p[0] - 0.4 / 0.85).abs() < 1e-12);
        assert!((p[1] - 0.45 / 0.85).abs() < 1e-12);
    }

    #[test]
    fn column_of_a_unfolds_to_a_unit_vector() {
        let cal = one_qubit([[0.95, 0.10], [0.05, 0.90]]);
        let p = unfold_frequencies(&[0.10, 0.90], &cal).unwrap();
        assert!((p[1] - 1.0).abs() < 1e-12 && p[0].abs() < 1e-12);
    }

    #[test]
    fn active_constraint_stays_on_the_simplex() {
        let cal = one_qubit([[0.95, 0.10], [0.05, 0.90]]);
        // Below the attainable range: the inverse would go negative.
        let p = unfold_frequencies(&[0.02, 0.98], &cal).unwrap();
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn singular_calibration_is_reported() {
        let cal = one_qubit([[0.5, 0.5], [0.5, 0.5]]);
        assert!(matches!(
            unfold_frequencies(&[0.5, 0.5], &cal),
            Err(Error::SingularCalibration)
        ));
    }

    #[test]
    fn noiseless_calibration_is_identity() {
        let cal = calibrate_readout(None, 2, 100, 1, 3).unwrap();
        assert_eq!(
            cal,
            CalibrationMatrix {
                shots_per_column: 100,
                ..CalibrationMatrix::identity(2)
            }
        );
    }

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.6, 0.6, -0.2]);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }
}
