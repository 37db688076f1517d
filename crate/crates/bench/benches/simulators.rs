use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pqe_bench::{angles, bench_noise, tfim_problem};
use pqe_core::density::noisy_distribution;
use pqe_core::sampling::{basis_rotation, sample};
use pqe_core::statevector::simulate;
use pqe_core::{NoiseMethod, Pauli};

fn statevector(c: &mut Criterion) {
    let mut g = c.benchmark_group("statevector");
    for n in [4, 6, 8] {
        let p = tfim_problem(n);
        let circuit = p.ansatz.compile(&angles(p.ansatz.len())).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &circuit, |b, circ| {
            b.iter(|| simulate(black_box(circ)).unwrap())
        });
    }
    g.finish();
}

fn density_matrix(c: &mut Criterion) {
    let mut g = c.benchmark_group("density_matrix");
    g.sample_size(20);
    for n in [4, 5, 6] {
        let p = tfim_problem(n);
        let circuit = p.ansatz.compile(&angles(p.ansatz.len())).unwrap();
        let noise = bench_noise();
        g.bench_with_input(BenchmarkId::from_parameter(n), &circuit, |b, circ| {
            b.iter(|| noisy_distribution(black_box(circ), &noise).unwrap())
        });
    }
    g.finish();
}

fn shot_sampling(c: &mut Criterion) {
    let p = tfim_problem(4);
    let circuit = p.ansatz.compile(&angles(p.ansatz.len())).unwrap();
    let basis = basis_rotation(4, &[Pauli::X; 4]).unwrap();
    let mut g = c.benchmark_group("sample_8192_shots");
    g.sample_size(10);
    for (name, method) in [
        ("density_matrix", NoiseMethod::DensityMatrix),
        ("trajectories", NoiseMethod::Trajectories),
    ] {
        let noise = pqe_core::NoiseSpec {
            method,
            ..bench_noise()
        };
        g.bench_function(name, |b| {
            b.iter(|| sample(&circuit, &basis, 8192, Some(&noise), 7).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, statevector, density_matrix, shot_sampling);
criterion_main!(benches);
