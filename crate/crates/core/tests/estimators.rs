//! Shot estimators, tapered observables and persisted records against exact references.

use pqe_core::experiments::{
    from_json, run, tapered_correlator, to_json, Experiment, ExperimentConfig, RunRecord, Summary,
};
use pqe_core::mitigation::{taper_parity_custom, taper_standard};
use pqe_core::models::{build_tfim, correlation_observables, exact_diagonalize};
use pqe_core::solver::{residual_reference_shift, vqe_gradient};
use pqe_core::{Ansatz, ExactBackend, Mitigation, ShotBackend, SymmetryRule, TfimSpec};

#[test]
fn tapered_correlators_match_full_space() {
    let n = 4;
    let obs = build_tfim(&TfimSpec::new(n, 1.0, 1.0)).unwrap();
    let full = exact_diagonalize(&obs).unwrap();
    let psi = full.eigenvector(0).unwrap();
    let parity = SymmetryRule::even_parity(n).unwrap();
    let mut maps = vec![taper_parity_custom(&obs).unwrap()];
    for q in 0..n {
        maps.push(taper_standard(&obs, &parity.symmetry, q, 1).unwrap());
    }
    for (tapered, map) in maps {
        let t = exact_diagonalize(&tapered).unwrap();
        assert!((t.ground_energy - full.ground_energy).abs() < 1e-10);
        let phi = t.eigenvector(0).unwrap();
        for c in correlation_observables(n).unwrap() {
            let want = c.observable.expectation(&psi).unwrap();
            let got = tapered_correlator(&map, c.axis, c.i, c.j)
                .unwrap()
                .expectation(&phi)
                .unwrap();
            assert!(
                (want - got).abs() < 1e-10,
                "{:?} {} {}: {want} vs {got}",
                c.axis,
                c.i,
                c.j
            );
        }
        // Lifting the tapered ground state reproduces the full one up to a global sign.
        let lifted = map.lift_state(&phi).unwrap();
        let overlap: f64 = lifted
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a.conj() * b).re)
            .sum();
        assert!((overlap.abs() - 1.0).abs() < 1e-10);
    }
}

/// Mean of 100 seeded shot estimates sits within four standard errors of the exact value.
fn assert_unbiased(label: &str, exact: f64, samples: &[f64]) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(sd > 0.0, "{label}: estimates carry no shot noise");
    assert!(
        (mean - exact).abs() < 4.0 * sd / n.sqrt(),
        "{label}: mean {mean} exact {exact} sd {sd}"
    );
}

#[test]
fn shot_residuals_and_gradients_are_unbiased() {
    let obs = build_tfim(&TfimSpec::new(3, 1.0, 0.8)).unwrap();
    let a = Ansatz::combinatorial(3, true).unwrap();
    let theta = [0.4, -0.3, 0.2];
    for mu in 0..a.len() {
        let r_exact = residual_reference_shift(&a, &theta, mu, &obs, &mut ExactBackend).unwrap();
        let g_exact = vqe_gradient(&a, &theta, mu, &obs, &mut ExactBackend).unwrap();
        let mut rs = Vec::new();
        let mut gs = Vec::new();
        for seed in 0..100 {
            let mut b = ShotBackend::new(2000, None, Mitigation::default(), seed).unwrap();
            rs.push(residual_reference_shift(&a, &theta, mu, &obs, &mut b).unwrap());
            gs.push(vqe_gradient(&a, &theta, mu, &obs, &mut b).unwrap());
        }
        assert_unbiased(&format!("residual {mu}"), r_exact, &rs);
        assert_unbiased(&format!("gradient {mu}"), g_exact, &gs);
    }
}

fn small(e: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(e);
    c.repeats = 2;
    c.seed = 31;
    if e == Experiment::Scaling {
        c.study.sizes = vec![4];
        c.study.shot_magnification = 1;
        c.repeats = 1;
    }
    c
}

#[test]
fn records_round_trip_and_summaries_recompute() {
    for e in [
        Experiment::TfimMatrix,
        Experiment::TfimTruncation,
        Experiment::TfimCorrelations,
        Experiment::Calibrate,
    ] {
        let records = run(e, &small(e)).unwrap();
        let text = to_json(&records).unwrap();
        let back: Vec<RunRecord> = from_json(&text).unwrap();
        assert_eq!(back, records, "{e}");
        assert_eq!(to_json(&back).unwrap(), text);
        for r in &records {
            assert_eq!(r.recompute_summary(), r.summary, "{e} {}", r.label);
            assert_eq!(r.summary.repeats, r.repeats.len());
            assert!(r.timestamp.is_none());
        }
    }
}

#[test]
fn wrong_schema_is_rejected() {
    let records = run(Experiment::Calibrate, &small(Experiment::Calibrate)).unwrap();
    let text = to_json(&records).unwrap().replace("pqe-run/1", "pqe-run/0");
    assert!(from_json(&text).is_err());
}

#[test]
fn timestamps_only_when_requested() {
    let mut cfg = small(Experiment::Calibrate);
    cfg.output.timestamps = true;
    let r = &run(Experiment::Calibrate, &cfg).unwrap()[0];
    let ts = r.timestamp.as_deref().unwrap();
    assert!(humantime_like(ts), "{ts}");
}

fn humantime_like(ts: &str) -> bool {
    ts.len() == 20 && ts.ends_with('Z') && ts.as_bytes()[10] == b'T'
}

#[test]
fn summary_of_no_repeats_is_empty() {
    let s = Summary::from_repeats(&[], Some(-1.0), Some(-0.5));
    assert_eq!(s.repeats, 0);
    assert!(s.mean_energy.is_none());
    assert!(s.mean_recovered_pct.is_none());
}

#[test]
fn matrix_cells_share_seeds_per_repeat() {
    let records = run(Experiment::TfimMatrix, &small(Experiment::TfimMatrix)).unwrap();
    let seeds: Vec<Vec<u64>> = records
        .iter()
        .map(|r| r.repeats.iter().map(|p| p.seed).collect())
        .collect();
    assert!(seeds.windows(2).all(|w| w[0] == w[1]));
    assert_ne!(seeds[0][0], seeds[0][1]);
}
