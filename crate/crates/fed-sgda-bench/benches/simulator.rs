//! Criterion benchmarks: per-round protocol throughput for each estimator,
//! the exact metrics probe (single evaluation vs the two-pass reference),
//! and the rank-based AUC metric.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use fed_sgda::{
    auc_metric, constant_steps, global_grads, grad_phi, potential_shifted, round_diagnostics,
    run_round, EstimatorKind, GradientEstimate, PotentialForm, PrimalDualPoint, ServerState,
};
use fed_sgda_bench::{bench_instance, bench_run_config};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One full protocol round (collection, estimate, local updates,
/// aggregation, exact diagnostics) per estimator, measured from the state
/// reached after a warm-up round so the recursive estimators run their
/// steady-state path.
fn round_throughput(c: &mut Criterion) {
    let (problem, clients, consts) = bench_instance();
    let (p, q) = problem.dims();
    let sched = constant_steps(1e-3, 1e-3);
    let mut group = c.benchmark_group("round");
    for estimator in [EstimatorKind::Mb, EstimatorKind::Storm, EstimatorKind::Spider] {
        let cfg = bench_run_config(estimator);
        let fresh = ServerState::new(1, PrimalDualPoint::zeros(p, q), estimator);
        let (warm, _) = run_round(fresh, &cfg, &problem, &clients, &consts, &sched)
            .expect("warm-up round runs");
        group.bench_function(estimator.name(), |b| {
            b.iter_batched(
                || warm.clone(),
                |state| run_round(state, &cfg, &problem, &clients, &consts, &sched).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

/// Exact per-round diagnostics: the shipped single-evaluation path against
/// the two-pass reference that re-evaluates at the dual maximizer.
fn diagnostics(c: &mut Criterion) {
    let (problem, clients, consts) = bench_instance();
    let (p, q) = problem.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let curr = PrimalDualPoint {
        x: (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        y: (0..q).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let prev = curr.clone();
    let (gx, gy) = global_grads(&problem, &clients, &curr).unwrap();
    let estimate = GradientEstimate { u: gx, v: gy };
    let sched = constant_steps(1e-3, 1e-3);

    let mut group = c.benchmark_group("diagnostics");
    group.bench_function("single_pass", |b| {
        b.iter(|| {
            round_diagnostics(
                &problem,
                &clients,
                &curr,
                &prev,
                &estimate,
                &consts,
                &sched,
                PotentialForm::MbForm,
                5,
                0,
                5,
            )
            .unwrap()
        })
    });
    group.bench_function("two_pass_reference", |b| {
        b.iter(|| {
            let pot = potential_shifted(
                &problem,
                &clients,
                &curr,
                &prev,
                5,
                5,
                &consts,
                &sched,
                PotentialForm::MbForm,
            )
            .unwrap();
            let gphi = grad_phi(&problem, &clients, &curr.x).unwrap();
            (pot, gphi)
        })
    });
    group.finish();
}

/// Rank-based AUC on ten thousand scores with tie groups.
fn auc(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scores: Vec<f64> = (0..10_000)
        .map(|_| (rng.gen_range(-1.0f64..1.0) * 64.0).round() / 64.0)
        .collect();
    let labels: Vec<i8> = (0..10_000)
        .map(|_| if rng.gen_bool(0.3) { 1 } else { -1 })
        .collect();
    c.bench_function("auc_metric/10k", |b| {
        b.iter(|| auc_metric(&scores, &labels).unwrap())
    });
}

criterion_group!(benches, round_throughput, diagnostics, auc);
criterion_main!(benches);
