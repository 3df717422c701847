//! Shared fixtures for the criterion benchmarks: a mid-sized synthetic
//! federation and ready-made run configurations, so every benchmark measures
//! the same workload.

use fed_sgda::{
    lipschitz_constants, ClientDataset, EstimatorKind, Problem, ProblemConfig, RunConfig,
    SamplingMode, ScheduleKind, SmoothnessConstants, SyntheticProblemConfig,
};

/// Benchmark federation: 50 clients x 40 samples in 15 dimensions — big
/// enough that per-round cost is dominated by gradient work, small enough
/// for quick calibration.
pub fn bench_instance() -> (Problem, Vec<ClientDataset>, SmoothnessConstants) {
    let cfg = ProblemConfig::Synthetic(SyntheticProblemConfig {
        p: 15,
        nu: 1.0,
        mu: 1.0,
        num_clients: 50,
        samples_per_client: 40,
        center_std: 0.5,
        sample_std: 0.1,
    });
    let instance = cfg.instantiate(7).expect("benchmark instance generates");
    let consts = lipschitz_constants(&instance.problem, &instance.clients)
        .expect("constants are measurable");
    (instance.problem, instance.clients, consts)
}

/// Round protocol used by the throughput benchmarks: S=5, K=5, b=5.
pub fn bench_run_config(estimator: EstimatorKind) -> RunConfig {
    RunConfig {
        problem: ProblemConfig::Synthetic(SyntheticProblemConfig {
            p: 15,
            nu: 1.0,
            mu: 1.0,
            num_clients: 50,
            samples_per_client: 40,
            center_std: 0.5,
            sample_std: 0.1,
        }),
        rounds: 100,
        clients_per_round: 5,
        local_steps: 5,
        batch_size: 5,
        estimator,
        schedule: ScheduleKind::Practical,
        c_eta: 1e-3,
        c_gamma: 1e-3,
        c_alpha: 1.0,
        rho: 1.0 / 3.0,
        spider_period: 5,
        spider_big_batch: 25,
        sampling: SamplingMode::WithReplacement,
        share_subsets: false,
    }
}
