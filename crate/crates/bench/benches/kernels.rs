use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phaseboost::access::{CopySource, OracleMode};
use phaseboost::weaklearn::DecisionTreeLearner;
use phaseboost::{agnostic_boost, StateVector};
use phaseboost_bench::{corrupted_tree_state, overlap_partner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn walsh_hadamard(c: &mut Criterion) {
    let mut group = c.benchmark_group("walsh_hadamard");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [10, 14, 18] {
        let psi = StateVector::random(n, &mut rng).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &psi, |b, psi| {
            b.iter(|| black_box(psi.walsh_hadamard()))
        });
    }
    group.finish();
}

fn boost_dt(c: &mut Criterion) {
    let mut group = c.benchmark_group("boost_dt");
    group.sample_size(10);
    for (mode, name) in [(OracleMode::Exact, "exact"), (OracleMode::Sampled, "sampled")] {
        let psi = corrupted_tree_state(10, 7, 0.85, 4).unwrap();
        let wal = DecisionTreeLearner { size: 8 };
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut src = CopySource::new(psi.clone(), mode, 4);
                black_box(agnostic_boost(&mut src, &wal, 0.1, 0.1).unwrap().kappa)
            })
        });
    }
    group.finish();
}

fn swap_test(c: &mut Criterion) {
    let hidden = StateVector::basis(1, 0).unwrap();
    let other = overlap_partner(0.5).unwrap();
    let mut group = c.benchmark_group("swap_test");
    for eps in [0.05, 0.02] {
        group.bench_with_input(BenchmarkId::from_parameter(eps), &eps, |b, &eps| {
            let mut src = CopySource::new(hidden.clone(), OracleMode::Sampled, 9);
            b.iter(|| black_box(src.swap_test_estimate(&other, eps, 0.01).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, walsh_hadamard, boost_dt, swap_test);
criterion_main!(benches);
