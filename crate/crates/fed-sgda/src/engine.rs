//! The federated round protocol.
//!
//! One round has two phases.  In the **gradient collection phase** the server
//! contacts a client subset and gathers full local gradients at the current
//! averaged iterate (and, for the recursive estimators, at the previous one),
//! then folds them into the global estimate `(u_t, v_t)`.  In the **parameter
//! update phase** an independently drawn subset starts from the averaged
//! iterate and runs `K` drift-corrected local stochastic gradient
//! descent-ascent steps; the server averages the endpoints to produce the
//! next iterate.
//!
//! Every random decision is drawn from a stream keyed by
//! `(seed, round, phase, client, step)`, so the trajectory is a pure function
//! of the seed and configuration: per-client work may be reordered or
//! parallelized without changing a single bit of the output.  This module
//! itself runs sequentially; callers parallelize across seeds or
//! configurations.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimators::{
    mb_estimate, required_points, spider_update, storm_update, CollectedGradients, EstimatorKind,
    EstimatorState, RequiredPoints,
};
use crate::model::{
    GradientEstimate, LocalDirection, PrimalDualPoint, RoundMetrics, RoundSchedule, RunConfig,
    SamplingMode, SmoothnessConstants,
};
use crate::oracle::{self, PotentialForm};
use crate::problems::{full_local_grads, sample_loss_grads, ClientDataset, Problem, Sample};
use crate::rng::{Phase, StreamKey};
use crate::vecops;

/// Server-side state carried between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    /// Base seed of the run; every stream key derives from it.
    pub seed: u64,
    /// Current averaged iterate `z̄_t`.
    pub curr: PrimalDualPoint,
    /// Previous averaged iterate `z̄_{t−1}`; equal to `curr` before round 0.
    pub prev: PrimalDualPoint,
    /// Round counter `t`.
    pub round: usize,
    pub estimator_state: EstimatorState,
}

impl ServerState {
    /// Fresh state before round 0, with the bootstrap `prev = curr`.
    pub fn new(seed: u64, init: PrimalDualPoint, estimator: EstimatorKind) -> Self {
        ServerState {
            seed,
            prev: init.clone(),
            curr: init,
            round: 0,
            estimator_state: EstimatorState::new(estimator),
        }
    }
}

/// Draw a client subset, returned sorted ascending so that all downstream
/// iteration orders are canonical.
pub fn sample_clients(
    rng: &mut ChaCha8Rng,
    num_clients: usize,
    count: usize,
    mode: SamplingMode,
) -> Result<Vec<usize>> {
    if num_clients == 0 || count == 0 {
        return Err(Error::config("client sampling needs a nonempty range and count"));
    }
    let mut picks = match mode {
        SamplingMode::WithReplacement => (0..count)
            .map(|_| rng.gen_range(0..num_clients))
            .collect::<Vec<_>>(),
        SamplingMode::WithoutReplacement => {
            if count > num_clients {
                return Err(Error::config(format!(
                    "cannot draw {count} distinct clients from a pool of {num_clients}"
                )));
            }
            index::sample(rng, num_clients, count).into_vec()
        }
    };
    picks.sort_unstable();
    Ok(picks)
}

/// Drift-corrected update direction at `point` for one minibatch:
/// `d_x = ∇x F_i(point; B) − ∇x F_i(anchor; B) + u` and the dual analogue.
///
/// When `point` equals the anchor the two minibatch terms are evaluated
/// identically and cancel exactly, so the direction is bitwise `(u, v)` —
/// every client's first local step moves along the global estimate.
pub fn local_direction(
    problem: &Problem,
    point: &PrimalDualPoint,
    anchor: &PrimalDualPoint,
    batch: &[&Sample],
    estimate: &GradientEstimate,
) -> Result<LocalDirection> {
    let (gx_p, gy_p) = sample_loss_grads(problem, point, batch)?;
    let (gx_a, gy_a) = sample_loss_grads(problem, anchor, batch)?;
    let d_x = gx_p
        .iter()
        .zip(&gx_a)
        .zip(&estimate.u)
        .map(|((p, a), u)| p - a + u)
        .collect();
    let d_y = gy_p
        .iter()
        .zip(&gy_a)
        .zip(&estimate.v)
        .map(|((p, a), v)| p - a + v)
        .collect();
    Ok(LocalDirection { d_x, d_y })
}

/// Run `local_steps` drift-corrected local steps for one client, starting at
/// `anchor`, and return the endpoint `z^(K)`.
///
/// Each step draws its minibatch (uniform, without replacement, indices
/// sorted ascending) from the stream keyed by this `(seed, round, client,
/// step)`, independent of every other client and step.
#[allow(clippy::too_many_arguments)]
pub fn local_update_phase(
    problem: &Problem,
    client: &ClientDataset,
    anchor: &PrimalDualPoint,
    estimate: &GradientEstimate,
    sched: &RoundSchedule,
    local_steps: usize,
    batch_size: usize,
    seed: u64,
    round: usize,
) -> Result<PrimalDualPoint> {
    let n = client.samples.len();
    if batch_size == 0 || batch_size > n {
        return Err(Error::config(format!(
            "batch size {batch_size} is invalid for a client holding {n} samples"
        )));
    }
    let mut z = anchor.clone();
    for k in 0..local_steps {
        let mut rng = StreamKey {
            seed,
            round: round as u64,
            phase: Phase::LocalBatch,
            client: client.client_index as u64,
            step: k as u64,
        }
        .rng();
        let mut picks = index::sample(&mut rng, n, batch_size).into_vec();
        picks.sort_unstable();
        let batch: Vec<&Sample> = picks.iter().map(|&j| &client.samples[j]).collect();
        let dir = local_direction(problem, &z, anchor, &batch, estimate)?;
        for (xj, dj) in z.x.iter_mut().zip(&dir.d_x) {
            *xj -= sched.eta * dj;
        }
        for (yj, dj) in z.y.iter_mut().zip(&dir.d_y) {
            *yj += sched.gamma * dj;
        }
    }
    z.ensure_finite("local update endpoint")?;
    Ok(z)
}

/// Number of clients each phase contacts in round `t`.
fn round_batch_size(cfg: &RunConfig, t: usize) -> usize {
    if cfg.estimator == EstimatorKind::Spider && t % cfg.spider_period == 0 {
        cfg.spider_big_batch
    } else {
        cfg.clients_per_round
    }
}

/// Advance the protocol by one round and report the metrics of the state the
/// round started from.
pub fn run_round(
    state: ServerState,
    cfg: &RunConfig,
    problem: &Problem,
    datasets: &[ClientDataset],
    consts: &SmoothnessConstants,
    sched: &RoundSchedule,
) -> Result<(ServerState, RoundMetrics)> {
    let t = state.round;
    let num_clients = datasets.len();
    let batch_clients = round_batch_size(cfg, t);

    // Gradient collection phase.
    let mut collect_rng = StreamKey {
        seed: state.seed,
        round: t as u64,
        phase: Phase::CollectSubset,
        client: 0,
        step: 0,
    }
    .rng();
    let collect_subset = sample_clients(&mut collect_rng, num_clients, batch_clients, cfg.sampling)?;
    let needed = required_points(&state.estimator_state, t);
    let mut at_prev = Vec::new();
    let mut at_curr = Vec::with_capacity(collect_subset.len());
    for &i in &collect_subset {
        if needed == RequiredPoints::PrevAndCurrent {
            at_prev.push(full_local_grads(problem, &datasets[i], &state.prev)?);
        }
        at_curr.push(full_local_grads(problem, &datasets[i], &state.curr)?);
    }
    let collected = CollectedGradients {
        client_indices: collect_subset.clone(),
        at_prev,
        at_curr,
    };
    let estimate = match cfg.estimator {
        EstimatorKind::Mb => mb_estimate(&collected)?,
        // The momentum recursion has no history at t = 0 and bootstraps from
        // the plain subset average.
        EstimatorKind::Storm if t == 0 => mb_estimate(&collected)?,
        EstimatorKind::Storm => {
            storm_update(&state.estimator_state, &collected, sched.alpha, sched.beta)?
        }
        EstimatorKind::Spider => {
            spider_update(&state.estimator_state, &collected, t, cfg.spider_period)?
        }
    };
    estimate.ensure_finite("aggregated gradient estimate")?;

    // Parameter update phase, on an independently drawn subset unless the
    // ablation flag ties the two phases together.
    let update_subset = if cfg.share_subsets {
        collect_subset
    } else {
        let mut update_rng = StreamKey {
            seed: state.seed,
            round: t as u64,
            phase: Phase::UpdateSubset,
            client: 0,
            step: 0,
        }
        .rng();
        sample_clients(&mut update_rng, num_clients, batch_clients, cfg.sampling)?
    };
    let mut endpoint_xs = Vec::with_capacity(update_subset.len());
    let mut endpoint_ys = Vec::with_capacity(update_subset.len());
    for &i in &update_subset {
        // A client drawn twice (with replacement) repeats the identical local
        // phase: its stream is keyed by (seed, round, client, step) only.
        let endpoint = local_update_phase(
            problem,
            &datasets[i],
            &state.curr,
            &estimate,
            sched,
            cfg.local_steps,
            cfg.batch_size,
            state.seed,
            t,
        )?;
        endpoint_xs.push(endpoint.x);
        endpoint_ys.push(endpoint.y);
    }
    let next_curr = PrimalDualPoint {
        x: vecops::mean_vecs(&endpoint_xs),
        y: vecops::mean_vecs(&endpoint_ys),
    };
    next_curr.ensure_finite("aggregated server iterate")?;

    // Measure the state the round started from, with this round's estimate.
    let form = match cfg.estimator {
        EstimatorKind::Storm => PotentialForm::StormForm,
        _ => PotentialForm::MbForm,
    };
    let metrics = oracle::round_diagnostics(
        problem,
        datasets,
        &state.curr,
        &state.prev,
        &estimate,
        consts,
        sched,
        form,
        cfg.local_steps,
        t,
        batch_clients,
    )?;

    let mut estimator_state = state.estimator_state;
    estimator_state.prev_estimate = Some(estimate);
    if cfg.estimator == EstimatorKind::Spider {
        estimator_state.spider_phase = (t + 1) % cfg.spider_period;
    }
    let next = ServerState {
        seed: state.seed,
        prev: state.curr,
        curr: next_curr,
        round: t + 1,
        estimator_state,
    };
    Ok((next, metrics))
}
