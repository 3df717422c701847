//! Shared value types of the round protocol.
//!
//! Everything the server and clients exchange is built from two vectors: a
//! primal block `x` (minimized) and a dual block `y` (maximized). The types
//! here carry those blocks plus the run-level configuration and the per-round
//! bookkeeping the harness records.

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::problems::ProblemConfig;
use crate::vecops;

/// A point `z = (x, y)` of the minimax problem: `x` is descended, `y` is
/// ascended.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn zeros(p: usize, q: usize) -> Self {
        PrimalDualPoint {
            x: vec![0.0; p],
            y: vec![0.0; q],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    /// Squared distance `‖z - w‖²` over both blocks.
    pub fn dist_sq(&self, other: &PrimalDualPoint) -> f64 {
        vecops::norm_sq(&vecops::sub(&self.x, &other.x))
            + vecops::norm_sq(&vecops::sub(&self.y, &other.y))
    }

    /// Every value crossing a server/client boundary must be finite; a NaN
    /// or infinity this deep means an earlier step already went wrong, and
    /// letting it propagate silently would corrupt every later round.
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if vecops::all_finite(&self.x) && vecops::all_finite(&self.y) {
            Ok(())
        } else {
            Err(Error::protocol(format!(
                "non-finite coordinate in {context}"
            )))
        }
    }
}

/// Server-side estimate `(u, v)` of the global gradient pair
/// `(∇ₓ f, ∇ᵧ f)` at the current average point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl GradientEstimate {
    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if vecops::all_finite(&self.u) && vecops::all_finite(&self.v) {
            Ok(())
        } else {
            Err(Error::protocol(format!(
                "non-finite coordinate in {context}"
            )))
        }
    }
}

/// Drift-corrected update direction used by one client at one local step.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDirection {
    pub d_x: Vec<f64>,
    pub d_y: Vec<f64>,
}

/// Smoothness and dispersion constants of a problem instance.
///
/// The block constants have Hessian-block meaning: `l1` bounds `∇²ₓₓ`, `l2`
/// bounds `∇²ᵧᵧ`, `l12`/`l21` bound the mixed blocks, and `mu` is the
/// quadratic-growth rate of the concave side. The remaining fields are
/// derived and are always computed here, from the same expressions the tests
/// check bit-for-bit:
///
/// * `l_f  = max{ √(2(l1² + l21²)), √(2(l2² + l12²)) }` — joint gradient
///   Lipschitz constant of the per-sample losses;
/// * `l_phi = l1 + l12·l21 / (2μ)` — smoothness of the primal envelope
///   `Φ(x) = maxᵧ f(x, y)`;
/// * `l_tilde = 2(l_phi + l_f)` — the combined constant the step-size rules
///   are written in.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessConstants {
    pub l1: f64,
    pub l2: f64,
    pub l12: f64,
    pub l21: f64,
    pub mu: f64,
    pub l_f: f64,
    pub l_phi: f64,
    pub l_tilde: f64,
    /// Worst-case dispersion of per-client primal gradients around the
    /// global one, estimated on a probe set (see `problems::lipschitz_constants`).
    pub sigma1_sq: f64,
    /// Same for the dual block.
    pub sigma2_sq: f64,
}

impl SmoothnessConstants {
    pub fn new(
        l1: f64,
        l2: f64,
        l12: f64,
        l21: f64,
        mu: f64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::config(format!(
                "quadratic-growth constant mu must be positive, got {mu}"
            )));
        }
        for (name, v) in [
            ("l1", l1),
            ("l2", l2),
            ("l12", l12),
            ("l21", l21),
            ("sigma1_sq", sigma1_sq),
            ("sigma2_sq", sigma2_sq),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::config(format!(
                    "constant {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        let l_f = f64::max(
            (2.0 * (l1 * l1 + l21 * l21)).sqrt(),
            (2.0 * (l2 * l2 + l12 * l12)).sqrt(),
        );
        let l_phi = l1 + l12 * l21 / (2.0 * mu);
        let l_tilde = 2.0 * (l_phi + l_f);
        Ok(SmoothnessConstants {
            l1,
            l2,
            l12,
            l21,
            mu,
            l_f,
            l_phi,
            l_tilde,
            sigma1_sq,
            sigma2_sq,
        })
    }
}

/// Which step-size rule drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Steps derived from the smoothness constants (the convergence-theorem
    /// rules; see `schedules`).
    Theoretical,
    /// Hand-tuned steps: constants for the minibatch and periodic-anchor
    /// estimators, a `c/(t+1)^ρ` decay for the momentum estimator.
    Practical,
}

/// How client subsets are drawn each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Independent uniform draws; a client may appear more than once and
    /// then contributes with its multiplicity.
    WithReplacement,
    /// Uniform subset of distinct clients.
    WithoutReplacement,
}

/// Step sizes in force for one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSchedule {
    /// Primal (descent) step η_t.
    pub eta: f64,
    /// Dual (ascent) step γ_t.
    pub gamma: f64,
    /// Momentum mixing weight α_t for the primal estimator (1 = no memory).
    pub alpha: f64,
    /// Momentum mixing weight β_t for the dual estimator.
    pub beta: f64,
}

/// Everything needed to reproduce one run, minus the seed (seeds live with
/// the harness so one config can be replayed across a seed list).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// Number of communication rounds T.
    pub rounds: usize,
    /// Clients contacted per phase in ordinary rounds (S).
    pub clients_per_round: usize,
    /// Local steps per selected client (K).
    pub local_steps: usize,
    /// Minibatch size of each local step (b).
    pub batch_size: usize,
    pub estimator: EstimatorKind,
    pub schedule: ScheduleKind,
    /// Constant step (minibatch / periodic-anchor) or decay numerator
    /// (momentum) for η under the practical schedule.
    pub c_eta: f64,
    /// Same for γ.
    pub c_gamma: f64,
    /// Decay numerator for the momentum weights α, β (practical, momentum
    /// estimator only).
    pub c_alpha: f64,
    /// Decay exponent ρ ∈ (0, 1] of the practical momentum schedule.
    pub rho: f64,
    /// Anchor period m of the periodic-anchor estimator.
    pub spider_period: usize,
    /// Anchor-round client batch Ŝ of the periodic-anchor estimator.
    pub spider_big_batch: usize,
    pub sampling: SamplingMode,
    /// Reuse the collection subset for the update phase (ablation switch;
    /// the protocol default draws them independently).
    pub share_subsets: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if self.clients_per_round == 0 {
            return Err(Error::config("clients_per_round must be at least 1"));
        }
        let num_clients = self.problem.num_clients();
        if self.sampling == SamplingMode::WithoutReplacement
            && self.clients_per_round > num_clients
        {
            return Err(Error::config(format!(
                "clients_per_round {} exceeds the population of {num_clients} \
                 clients and sampling is without replacement",
                self.clients_per_round
            )));
        }
        if self.local_steps == 0 {
            return Err(Error::config("local_steps must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.batch_size > self.problem.samples_per_client() {
            return Err(Error::config(format!(
                "batch_size {} exceeds the {} samples held by each client",
                self.batch_size,
                self.problem.samples_per_client()
            )));
        }
        if self.schedule == ScheduleKind::Practical {
            if !(self.c_eta > 0.0) || !(self.c_gamma > 0.0) {
                return Err(Error::config(format!(
                    "practical schedule needs positive c_eta and c_gamma, got {} and {}",
                    self.c_eta, self.c_gamma
                )));
            }
            if self.estimator == EstimatorKind::Storm {
                if !(self.c_alpha > 0.0) {
                    return Err(Error::config(format!(
                        "momentum schedule needs positive c_alpha, got {}",
                        self.c_alpha
                    )));
                }
                if !(self.rho > 0.0 && self.rho <= 1.0) {
                    return Err(Error::config(format!(
                        "decay exponent rho must lie in (0, 1], got {}",
                        self.rho
                    )));
                }
            }
        }
        if self.estimator == EstimatorKind::Spider {
            if self.spider_period == 0 {
                return Err(Error::config("spider_period must be at least 1"));
            }
            if self.spider_big_batch == 0 {
                return Err(Error::config("spider_big_batch must be at least 1"));
            }
            if self.rounds % self.spider_period != 0 {
                // The periodic-anchor analysis covers whole periods only;
                // partial trailing periods would silently change the
                // estimator's error profile.
                return Err(Error::config(format!(
                    "rounds ({}) must be a multiple of spider_period ({})",
                    self.rounds, self.spider_period
                )));
            }
            if self.sampling == SamplingMode::WithoutReplacement
                && self.spider_big_batch > num_clients
            {
                return Err(Error::config(format!(
                    "spider_big_batch {} exceeds the population of {num_clients} \
                     clients and sampling is without replacement",
                    self.spider_big_batch
                )));
            }
        }
        Ok(())
    }
}

/// Diagnostics recorded for one round. Row `t` describes the state entering
/// round `t`: the averaged iterate the round starts from and the gradient
/// estimate formed at it.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub eta: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// `‖∇Φ(x̄_t)‖²` — the convergence measure.
    pub grad_phi_norm_sq: f64,
    /// Primal gap `Φ(x̄_t) − f(x̄_t, ȳ_t) ≥ 0`.
    pub phi_minus_f: f64,
    /// `‖u_t − ∇ₓ f(z̄_t)‖²` — primal estimation error.
    pub eps_x: f64,
    /// `‖v_t − ∇ᵧ f(z̄_t)‖²` — dual estimation error.
    pub eps_y: f64,
    /// Descent potential at the round's entry state (previous round's
    /// averaged point as anchor), without the constant `−Φ(x*)` shift.
    pub potential_shifted: f64,
    /// Client batch size of the round: each of the two phases contacts this
    /// many clients.
    pub clients_contacted: usize,
}
