//! Server-side global gradient estimators.
//!
//! Each round the server turns the gradients collected from a client subset
//! into an estimate `(u_t, v_t)` of the global gradient pair at the current
//! average point. Three estimators are provided:
//!
//! * **Mb** — plain subset average of the current-point gradients.
//! * **Storm** — momentum-corrected recursion
//!   `u_t = (1−α_t)(u_{t−1} − mean gx@prev) + mean gx@curr`, which reuses the
//!   previous estimate and the same subset's gradients at both the previous
//!   and current average points.
//! * **Spider** — periodic re-anchoring: every `m`-th round a large batch
//!   averages the current gradients from scratch; in between, the estimate
//!   is advanced by the subset mean of per-client two-point differences.
//!
//! Estimators only ever see gradient vectors, never raw client data; that
//! boundary is the federated contract of the module.
//!
//! Floating-point arrangement: the Storm recursion is evaluated in the
//! algebraically identical paired-difference form
//! `u_t = (1−α)(u_{t−1} + mean_i(gxᵢ@curr − gxᵢ@prev)) + α·mean gx@curr`.
//! This keeps two reduction identities *exact* in IEEE arithmetic: with
//! `α = 1` the result is bit-identical to the minibatch average, and with
//! `α = 0` at an unchanged point every paired difference is exactly zero, so
//! the previous estimate passes through unchanged. The textbook arrangement
//! would reintroduce a rounding wobble in both cases.

use crate::error::{Error, Result};
use crate::model::GradientEstimate;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Mb,
    Storm,
    Spider,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mb => "mb",
            EstimatorKind::Storm => "storm",
            EstimatorKind::Spider => "spider",
        }
    }
}

/// Which evaluation points the gradient-collection phase must request from
/// clients this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequiredPoints {
    CurrentOnly,
    PrevAndCurrent,
}

/// Estimator memory carried across rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub kind: EstimatorKind,
    /// `(u_{t−1}, v_{t−1})` for the recursive estimators; `None` for Mb and
    /// before the first round.
    pub prev_estimate: Option<GradientEstimate>,
    /// Current round's position within the anchor period, `t mod m`
    /// (Spider only; 0 for the others).
    pub spider_phase: usize,
}

impl EstimatorState {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorState {
            kind,
            prev_estimate: None,
            spider_phase: 0,
        }
    }
}

/// One client's gradient pair at one evaluation point.
pub type GradPair = (Vec<f64>, Vec<f64>);

/// Gradients gathered during one round's collection phase. `at_prev[i]` and
/// `at_curr[i]` come from the same client `client_indices[i]`, so paired
/// differences are per-client. `at_prev` stays empty on rounds where the
/// estimator only needs the current point.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectedGradients {
    pub client_indices: Vec<usize>,
    pub at_prev: Vec<GradPair>,
    pub at_curr: Vec<GradPair>,
}

impl CollectedGradients {
    fn check_nonempty(&self) -> Result<()> {
        if self.at_curr.is_empty() {
            return Err(Error::protocol("gradient collection is empty"));
        }
        if self.client_indices.len() != self.at_curr.len() {
            return Err(Error::protocol(format!(
                "{} client indices for {} current-point gradients",
                self.client_indices.len(),
                self.at_curr.len()
            )));
        }
        Ok(())
    }

    fn check_paired(&self) -> Result<()> {
        self.check_nonempty()?;
        if self.at_prev.len() != self.at_curr.len() {
            return Err(Error::protocol(format!(
                "collection has {} previous-point and {} current-point gradients; \
                 the recursive update needs them paired per client",
                self.at_prev.len(),
                self.at_curr.len()
            )));
        }
        Ok(())
    }
}

/// Which evaluation points the collection phase needs for round `t`.
pub fn required_points(state: &EstimatorState, t: usize) -> RequiredPoints {
    match state.kind {
        EstimatorKind::Mb => RequiredPoints::CurrentOnly,
        EstimatorKind::Storm => {
            if t == 0 {
                RequiredPoints::CurrentOnly
            } else {
                RequiredPoints::PrevAndCurrent
            }
        }
        EstimatorKind::Spider => {
            if state.spider_phase == 0 {
                RequiredPoints::CurrentOnly
            } else {
                RequiredPoints::PrevAndCurrent
            }
        }
    }
}

/// Mean of the gradient pairs in the order given (ascending client position),
/// each coordinate divided exactly once.
fn mean_pairs(pairs: &[GradPair]) -> GradientEstimate {
    let p = pairs[0].0.len();
    let q = pairs[0].1.len();
    let mut u = vec![0.0; p];
    let mut v = vec![0.0; q];
    for (gx, gy) in pairs {
        for (acc, g) in u.iter_mut().zip(gx) {
            *acc += g;
        }
        for (acc, g) in v.iter_mut().zip(gy) {
            *acc += g;
        }
    }
    let inv = 1.0 / pairs.len() as f64;
    vecops::scale(&mut u, inv);
    vecops::scale(&mut v, inv);
    GradientEstimate { u, v }
}

/// Mean of per-client two-point differences `g@curr − g@prev`, differenced
/// before summation so identical points contribute exact zeros.
fn mean_paired_diffs(collected: &CollectedGradients) -> GradientEstimate {
    let p = collected.at_curr[0].0.len();
    let q = collected.at_curr[0].1.len();
    let mut u = vec![0.0; p];
    let mut v = vec![0.0; q];
    for ((gx_c, gy_c), (gx_p, gy_p)) in collected.at_curr.iter().zip(&collected.at_prev) {
        for (acc, (c, pv)) in u.iter_mut().zip(gx_c.iter().zip(gx_p)) {
            *acc += c - pv;
        }
        for (acc, (c, pv)) in v.iter_mut().zip(gy_c.iter().zip(gy_p)) {
            *acc += c - pv;
        }
    }
    let inv = 1.0 / collected.at_curr.len() as f64;
    vecops::scale(&mut u, inv);
    vecops::scale(&mut v, inv);
    GradientEstimate { u, v }
}

/// Minibatch estimate: the plain average of the collected current-point
/// gradients.
pub fn mb_estimate(collected: &CollectedGradients) -> Result<GradientEstimate> {
    collected.check_nonempty()?;
    Ok(mean_pairs(&collected.at_curr))
}

/// Momentum-corrected update
/// `u_t = (1−α)(u_{t−1} − mean gx@prev) + mean gx@curr` (and `v_t` with β),
/// evaluated in the paired-difference arrangement described in the module
/// docs.
pub fn storm_update(
    state: &EstimatorState,
    collected: &CollectedGradients,
    alpha: f64,
    beta: f64,
) -> Result<GradientEstimate> {
    collected.check_paired()?;
    let prev = state.prev_estimate.as_ref().ok_or_else(|| {
        Error::protocol("momentum update requires the previous round's estimate")
    })?;
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::protocol(format!(
            "momentum weights must lie in [0, 1], got alpha={alpha}, beta={beta}"
        )));
    }
    let curr_mean = mean_pairs(&collected.at_curr);
    let diffs = mean_paired_diffs(collected);
    let u = prev
        .u
        .iter()
        .zip(&diffs.u)
        .zip(&curr_mean.u)
        .map(|((pu, du), cu)| (1.0 - alpha) * (pu + du) + alpha * cu)
        .collect();
    let v = prev
        .v
        .iter()
        .zip(&diffs.v)
        .zip(&curr_mean.v)
        .map(|((pv, dv), cv)| (1.0 - beta) * (pv + dv) + beta * cv)
        .collect();
    Ok(GradientEstimate { u, v })
}

/// Periodic-anchor update: re-average from scratch when `t mod m = 0`
/// (anchor round, large batch, current point only), otherwise advance the
/// previous estimate by the subset mean of per-client two-point differences.
pub fn spider_update(
    state: &EstimatorState,
    collected: &CollectedGradients,
    t: usize,
    m: usize,
) -> Result<GradientEstimate> {
    if m == 0 {
        return Err(Error::config("anchor period m must be at least 1"));
    }
    if t % m == 0 {
        if !collected.at_prev.is_empty() {
            return Err(Error::protocol(
                "anchor round received previous-point gradients it must not use",
            ));
        }
        collected.check_nonempty()?;
        Ok(mean_pairs(&collected.at_curr))
    } else {
        collected.check_paired()?;
        let prev = state.prev_estimate.as_ref().ok_or_else(|| {
            Error::protocol("inner-round update requires the previous round's estimate")
        })?;
        let diffs = mean_paired_diffs(collected);
        let u = prev.u.iter().zip(&diffs.u).map(|(pu, du)| pu + du).collect();
        let v = prev.v.iter().zip(&diffs.v).map(|(pv, dv)| pv + dv).collect();
        Ok(GradientEstimate { u, v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(gx: Vec<f64>, gy: Vec<f64>) -> GradPair {
        (gx, gy)
    }

    fn collected_curr(pairs: Vec<GradPair>) -> CollectedGradients {
        CollectedGradients {
            client_indices: (0..pairs.len()).collect(),
            at_prev: Vec::new(),
            at_curr: pairs,
        }
    }

    #[test]
    fn required_points_follow_the_estimator_table() {
        let mb = EstimatorState::new(EstimatorKind::Mb);
        assert_eq!(required_points(&mb, 0), RequiredPoints::CurrentOnly);
        assert_eq!(required_points(&mb, 5), RequiredPoints::CurrentOnly);

        let storm = EstimatorState::new(EstimatorKind::Storm);
        assert_eq!(required_points(&storm, 0), RequiredPoints::CurrentOnly);
        assert_eq!(required_points(&storm, 1), RequiredPoints::PrevAndCurrent);

        let mut spider = EstimatorState::new(EstimatorKind::Spider);
        // In a run with m = 4, round t = 4 sits at phase 0 again.
        spider.spider_phase = 4 % 4;
        assert_eq!(required_points(&spider, 4), RequiredPoints::CurrentOnly);
        spider.spider_phase = 5 % 4;
        assert_eq!(required_points(&spider, 5), RequiredPoints::PrevAndCurrent);
    }

    #[test]
    fn mb_with_a_single_client_returns_that_gradient_exactly() {
        let collected = collected_curr(vec![pair(vec![0.25, -7.0], vec![3.0])]);
        let est = mb_estimate(&collected).unwrap();
        assert_eq!(est.u, vec![0.25, -7.0]);
        assert_eq!(est.v, vec![3.0]);
    }

    #[test]
    fn mb_averages_two_clients() {
        let collected = collected_curr(vec![
            pair(vec![1.0, 0.0], vec![0.0]),
            pair(vec![3.0, 0.0], vec![0.0]),
        ]);
        let est = mb_estimate(&collected).unwrap();
        assert_eq!(est.u, vec![2.0, 0.0]);
    }

    #[test]
    fn mb_rejects_an_empty_collection() {
        let err = mb_estimate(&collected_curr(vec![])).unwrap_err();
        assert!(err.to_string().contains("empty"), "got: {err}");
    }

    #[test]
    fn storm_with_alpha_one_is_bitwise_the_minibatch_average() {
        let at_curr = vec![
            pair(vec![0.1, 0.2, -0.3], vec![1.5]),
            pair(vec![-1.0, 0.7, 0.33], vec![-2.25]),
        ];
        let at_prev = vec![
            pair(vec![5.0, 5.0, 5.0], vec![5.0]),
            pair(vec![-5.0, 0.0, 1.0], vec![2.0]),
        ];
        let collected = CollectedGradients {
            client_indices: vec![0, 1],
            at_prev,
            at_curr: at_curr.clone(),
        };
        let mut state = EstimatorState::new(EstimatorKind::Storm);
        state.prev_estimate = Some(GradientEstimate {
            u: vec![9.9, -9.9, 0.1],
            v: vec![4.2],
        });
        let storm = storm_update(&state, &collected, 1.0, 1.0).unwrap();
        let mb = mb_estimate(&collected_curr(at_curr)).unwrap();
        assert_eq!(storm, mb, "alpha = beta = 1 must reduce to the plain average");
    }

    #[test]
    fn storm_with_alpha_zero_at_an_unchanged_point_keeps_the_previous_estimate() {
        let grads = pair(vec![0.123, -4.5], vec![6.7]);
        let collected = CollectedGradients {
            client_indices: vec![3],
            at_prev: vec![grads.clone()],
            at_curr: vec![grads],
        };
        let prev = GradientEstimate {
            u: vec![1e16, -3.0e-7],
            v: vec![0.5],
        };
        let mut state = EstimatorState::new(EstimatorKind::Storm);
        state.prev_estimate = Some(prev.clone());
        let est = storm_update(&state, &collected, 0.0, 0.0).unwrap();
        assert_eq!(
            est, prev,
            "zero paired differences must pass the previous estimate through bitwise"
        );
    }

    #[test]
    fn storm_without_history_is_a_protocol_error() {
        let collected = CollectedGradients {
            client_indices: vec![0],
            at_prev: vec![pair(vec![1.0], vec![1.0])],
            at_curr: vec![pair(vec![1.0], vec![1.0])],
        };
        let state = EstimatorState::new(EstimatorKind::Storm);
        let err = storm_update(&state, &collected, 0.5, 0.5).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "got: {err}");
    }

    #[test]
    fn storm_with_unpaired_collection_is_a_protocol_error() {
        let collected = CollectedGradients {
            client_indices: vec![0, 1],
            at_prev: vec![pair(vec![1.0], vec![1.0])],
            at_curr: vec![
                pair(vec![1.0], vec![1.0]),
                pair(vec![2.0], vec![2.0]),
            ],
        };
        let mut state = EstimatorState::new(EstimatorKind::Storm);
        state.prev_estimate = Some(GradientEstimate {
            u: vec![0.0],
            v: vec![0.0],
        });
        let err = storm_update(&state, &collected, 0.5, 0.5).unwrap_err();
        assert!(err.to_string().contains("paired"), "got: {err}");
    }

    #[test]
    fn spider_anchor_round_equals_the_minibatch_average() {
        let pairs = vec![
            pair(vec![1.0, 2.0], vec![-1.0]),
            pair(vec![3.0, -2.0], vec![5.0]),
            pair(vec![0.5, 0.5], vec![0.5]),
        ];
        let collected = collected_curr(pairs.clone());
        let state = EstimatorState::new(EstimatorKind::Spider);
        let spider = spider_update(&state, &collected, 0, 4).unwrap();
        let mb = mb_estimate(&collected_curr(pairs)).unwrap();
        assert_eq!(spider, mb);
    }

    #[test]
    fn spider_inner_round_with_unchanged_point_keeps_the_previous_estimate() {
        let grads = pair(vec![0.9, -0.1], vec![2.0]);
        let collected = CollectedGradients {
            client_indices: vec![7],
            at_prev: vec![grads.clone()],
            at_curr: vec![grads],
        };
        let prev = GradientEstimate {
            u: vec![0.777, 123.456],
            v: vec![-9.0],
        };
        let mut state = EstimatorState::new(EstimatorKind::Spider);
        state.prev_estimate = Some(prev.clone());
        state.spider_phase = 2;
        let est = spider_update(&state, &collected, 2, 4).unwrap();
        assert_eq!(est, prev);
    }

    #[test]
    fn spider_anchor_round_rejects_prev_point_gradients() {
        let grads = pair(vec![1.0], vec![1.0]);
        let collected = CollectedGradients {
            client_indices: vec![0],
            at_prev: vec![grads.clone()],
            at_curr: vec![grads],
        };
        let state = EstimatorState::new(EstimatorKind::Spider);
        let err = spider_update(&state, &collected, 4, 4).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "got: {err}");
    }
}
