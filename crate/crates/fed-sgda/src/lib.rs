//! Deterministic simulator for communication-efficient federated minimax
//! optimization.
//!
//! The library models a server and a population of clients jointly solving
//! `min_x max_y f(x, y)` where `f` is the average of client objectives, each
//! an average over that client's local samples.  The dual block is strongly
//! concave, so the outer objective `Φ(x) = max_y f(x, y)` and its gradient
//! are available through exact oracles, which the simulator uses for
//! measurement (never for optimization).
//!
//! Crate layout:
//!
//! * [`problems`] — the two built-in problem families (a nonconvex
//!   bump-plus-bilinear synthetic family and a pairwise ranking relaxation),
//!   dataset generation, and analytic smoothness constants;
//! * [`estimators`] — the three global gradient estimators (minibatch,
//!   momentum, periodic-anchor);
//! * [`schedules`] — theoretical and practical step-size schedules;
//! * [`engine`] — the two-phase round protocol;
//! * [`oracle`] — exact measurement oracles and the verification suite;
//! * [`rng`] — keyed, collision-free random streams that make every
//!   trajectory a pure function of `(seed, config)`.
//!
//! Determinism contract: subsets and minibatch indices are always processed
//! in ascending order, reductions sum in a fixed order and divide once, and
//! every random draw comes from a stream keyed by
//! `(seed, round, phase, client, step)`.  Two runs of the same configuration
//! and seed produce bit-identical trajectories on any machine with IEEE-754
//! doubles, regardless of how callers parallelize across runs.

pub mod engine;
pub mod error;
pub mod estimators;
pub mod model;
pub mod oracle;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod vecops;

pub use engine::{local_direction, local_update_phase, run_round, sample_clients, ServerState};
pub use error::{Error, Result};
pub use estimators::{
    mb_estimate, required_points, spider_update, storm_update, CollectedGradients, EstimatorKind,
    EstimatorState, RequiredPoints,
};
pub use model::{
    GradientEstimate, LocalDirection, PrimalDualPoint, RoundMetrics, RoundSchedule, RunConfig,
    SamplingMode, ScheduleKind, SmoothnessConstants,
};
pub use oracle::{
    argmax_y, argmax_y_numeric, estimation_error, finite_diff, global_eval, global_grads,
    grad_phi, phi_star_estimate, potential_shifted, round_diagnostics, verify_suite, CheckResult,
    InnerMaxResult, MaxMethod, PotentialForm, VerifyOptions,
};
pub use problems::auc::{auc_metric, AucProblemConfig, AucSample};
pub use problems::synthetic::{SyntheticProblemConfig, SyntheticSample};
pub use problems::textio::{parse_dataset_text, write_dataset_text};
pub use problems::{
    full_local_eval, full_local_grads, full_local_value, generate_auc, generate_synthetic,
    lipschitz_constants, sample_eval, sample_loss_grads, validate_datasets, ClientDataset,
    Problem, ProblemConfig, ProblemInstance, Sample,
};
pub use rng::{Phase, StreamKey};
pub use schedules::{
    constant_steps, practical_decay, round_schedule, theoretical_mb, theoretical_storm,
};
