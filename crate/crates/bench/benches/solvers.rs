use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pqe_bench::{bench_noise, tfim_problem};
use pqe_core::mitigation::{ExtrapolationKind, ExtrapolationPolicy};
use pqe_core::solver::{pqe_solve, residuals, vqe_solve};
use pqe_core::{
    ExactBackend, Mitigation, ResidualFormula, ShotBackend, SolverConfig, SymmetryRule,
};

fn exact_solves(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact_solve");
    g.sample_size(10);
    for n in [4, 5, 6] {
        let p = tfim_problem(n);
        let z = vec![0.0; p.ansatz.len()];
        let cfg = SolverConfig::default();
        g.bench_with_input(BenchmarkId::new("pqe", n), &p, |b, p| {
            b.iter(|| pqe_solve(&p.ansatz, &z, &p.observable, &mut ExactBackend, &cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("vqe", n), &p, |b, p| {
            b.iter(|| vqe_solve(&p.ansatz, &z, &p.observable, &mut ExactBackend, &cfg).unwrap())
        });
    }
    g.finish();
}

fn noisy_residual_sweep(c: &mut Criterion) {
    let p = tfim_problem(4);
    let theta = vec![0.1; p.ansatz.len()];
    let mut g = c.benchmark_group("noisy_residuals_n4");
    g.sample_size(10);
    for kind in [ExtrapolationKind::None, ExtrapolationKind::Linear] {
        let mitigation = Mitigation {
            calibration: None,
            postselection: Some(SymmetryRule::even_parity(4).unwrap()),
            extrapolation: ExtrapolationPolicy::with_kind(kind),
        };
        g.bench_function(format!("{kind:?}").to_lowercase(), |b| {
            let mut backend =
                ShotBackend::new(8192, Some(bench_noise()), mitigation.clone(), 3).unwrap();
            backend.calibrate(4, 8192, 1).unwrap();
            b.iter(|| {
                residuals(
                    &p.ansatz,
                    &theta,
                    &p.observable,
                    &mut backend,
                    ResidualFormula::ReferenceShift,
                )
                .unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, exact_solves, noisy_residual_sweep);
criterion_main!(benches);
