//! Step-size and momentum schedules.
//!
//! Two regimes are provided for each estimator:
//!
//! * **Theoretical** schedules derive every step size from the smoothness
//!   constants of the problem instance.  They are conservative by design and
//!   are primarily useful for validating the analysis (monotonicity, clamp
//!   behaviour, the fixed momentum plateau) rather than for fast convergence.
//! * **Practical** schedules take user-supplied coefficients.  For the
//!   minibatch and recursive-anchor (SPIDER-style) estimators these are plain
//!   constant steps; for the momentum (STORM-style) estimator they decay
//!   polynomially in the round index.
//!
//! All minima treat a term with a zero divisor as absent (`+inf`), so
//! degenerate instances (e.g. fully decoupled problems with `L21 = 0`) simply
//! drop the corresponding constraint.

use crate::model::{RoundSchedule, RunConfig, ScheduleKind, SmoothnessConstants};
use crate::estimators::EstimatorKind;

/// `1/x`, treating a non-positive divisor as "constraint absent".
fn inv_or_inf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / x
    } else {
        f64::INFINITY
    }
}

/// Smallest of the dual-step candidates shared by every theoretical schedule:
/// `min{ 1/(2*L2), 1/mu, 1/L21, 1/(192 * L_tilde * K) }`.
///
/// Returns the minimum together with the capped-coupling term
/// `1/(192 * L_tilde * K)` so callers can detect whether that branch is the
/// active one.
fn gamma_base(consts: &SmoothnessConstants, local_steps: usize) -> (f64, f64) {
    let k = local_steps as f64;
    let coupling_cap = inv_or_inf(192.0 * consts.l_tilde * k);
    let gamma = inv_or_inf(2.0 * consts.l2)
        .min(inv_or_inf(consts.mu))
        .min(inv_or_inf(consts.l21))
        .min(coupling_cap);
    (gamma, coupling_cap)
}

/// Primal step for a given dual step:
/// `min{ 1/(4*L1), 1/L_phi, 1/(42*L21), gamma, mu^2*gamma/(3*L12^2) }`.
fn eta_for_gamma(consts: &SmoothnessConstants, gamma: f64) -> f64 {
    let ratio_term = if consts.l12 > 0.0 {
        consts.mu * consts.mu * gamma / (3.0 * consts.l12 * consts.l12)
    } else {
        f64::INFINITY
    };
    inv_or_inf(4.0 * consts.l1)
        .min(inv_or_inf(consts.l_phi))
        .min(inv_or_inf(42.0 * consts.l21))
        .min(gamma)
        .min(ratio_term)
}

/// Theoretical constant schedule for the minibatch and recursive-anchor
/// estimators.  The momentum fields are fixed at 1 (which reduces the
/// momentum estimator to plain minibatch averaging and is ignored by the
/// others).
pub fn theoretical_mb(consts: &SmoothnessConstants, local_steps: usize) -> RoundSchedule {
    let (gamma, _) = gamma_base(consts, local_steps);
    let eta = eta_for_gamma(consts, gamma);
    RoundSchedule {
        eta,
        gamma,
        alpha: 1.0,
        beta: 1.0,
    }
}

/// Theoretical decaying schedule for the momentum estimator at round `t`.
///
/// The dual step adds a decaying candidate `S^(1/3) / (L_tilde * K * (t+1)^(1/3))`
/// to the constant candidates, and the momentum weight is
/// `min{1, 2304 * L_tilde^2 * K^2 * gamma_t^2}`.
///
/// When the active dual-step branch is the capped-coupling term
/// `1/(192 * L_tilde * K)`, the momentum formula collapses algebraically to
/// `2304 / 192^2 = 1/16`; we return that value exactly rather than through the
/// floating-point product so the plateau is bitwise stable.
pub fn theoretical_storm(
    consts: &SmoothnessConstants,
    local_steps: usize,
    clients_per_round: usize,
    round: usize,
) -> RoundSchedule {
    let k = local_steps as f64;
    let (base, coupling_cap) = gamma_base(consts, local_steps);
    let decay_divisor = consts.l_tilde * k * ((round + 1) as f64).cbrt();
    let decay = if decay_divisor > 0.0 {
        (clients_per_round as f64).cbrt() / decay_divisor
    } else {
        f64::INFINITY
    };
    let gamma = base.min(decay);
    let alpha = if gamma == coupling_cap {
        0.0625
    } else {
        let scaled = consts.l_tilde * k * gamma;
        (2304.0 * scaled * scaled).min(1.0)
    };
    RoundSchedule {
        eta: eta_for_gamma(consts, gamma),
        gamma,
        alpha,
        beta: alpha,
    }
}

/// Practical constant schedule (minibatch and recursive-anchor estimators).
pub fn constant_steps(eta: f64, gamma: f64) -> RoundSchedule {
    RoundSchedule {
        eta,
        gamma,
        alpha: 1.0,
        beta: 1.0,
    }
}

/// Practical polynomially decaying schedule for the momentum estimator:
/// `eta_t = c_eta/(t+1)^rho`, `gamma_t = c_gamma/(t+1)^rho`,
/// `alpha_t = beta_t = min{1, c_alpha/(t+1)^(2*rho)}`.
pub fn practical_decay(
    c_eta: f64,
    c_gamma: f64,
    c_alpha: f64,
    rho: f64,
    round: usize,
) -> RoundSchedule {
    let divisor = ((round + 1) as f64).powf(rho);
    let alpha = (c_alpha / (divisor * divisor)).min(1.0);
    RoundSchedule {
        eta: c_eta / divisor,
        gamma: c_gamma / divisor,
        alpha,
        beta: alpha,
    }
}

/// Schedule for round `t` under the run configuration.
pub fn round_schedule(
    cfg: &RunConfig,
    consts: &SmoothnessConstants,
    round: usize,
) -> RoundSchedule {
    match (cfg.schedule, cfg.estimator) {
        (ScheduleKind::Theoretical, EstimatorKind::Storm) => {
            theoretical_storm(consts, cfg.local_steps, cfg.clients_per_round, round)
        }
        (ScheduleKind::Theoretical, _) => theoretical_mb(consts, cfg.local_steps),
        (ScheduleKind::Practical, EstimatorKind::Storm) => {
            practical_decay(cfg.c_eta, cfg.c_gamma, cfg.c_alpha, cfg.rho, round)
        }
        (ScheduleKind::Practical, _) => constant_steps(cfg.c_eta, cfg.c_gamma),
    }
}
