//! The two minimax problem families the simulator ships with.
//!
//! Both families expose the same contract: per-sample losses
//! `F(x, y; ζ)` whose client averages form the local objectives
//! `f_i(x, y) = (1/n_i) Σ_ζ F(x, y; ζ)` and whose uniform client average is
//! the global objective `f = (1/N) Σ_i f_i`. The primal block `x` is
//! minimized, the dual block `y` is maximized, and `f(x, ·)` is an exactly
//! quadratic concave function in both families, which is what makes the
//! closed-form inner maximizers and the quadratic-growth (PL) identity in
//! `oracle` exact rather than approximate.
//!
//! * [`synthetic`]: a sum of smooth non-convex bumps in `x`, a bilinear
//!   coupling, and a `−(μ/2)‖y−c‖²` dual term; every sample is a triple
//!   `(a, b, c)` of `p`-vectors.
//! * [`auc`]: the ℓ2-relaxed AUC objective for a linear scorer; the primal
//!   block packs `(θ, a, b)` with `p = d + 2`, the dual block is the scalar
//!   `λ`.
//!
//! Aggregation order is pinned everywhere: per-sample terms accumulate in
//! dataset order, client results in ascending client order, and every mean
//! divides its finished sum exactly once.

pub mod auc;
pub mod synthetic;
pub mod textio;

pub use auc::{auc_metric, AucProblemConfig, AucSample};
pub use synthetic::{SyntheticProblemConfig, SyntheticSample};
pub use textio::{parse_dataset_text, write_dataset_text};

use crate::error::{Error, Result};
use crate::model::{PrimalDualPoint, SmoothnessConstants};
use crate::rng::{Phase, StreamKey};
use crate::vecops;
use rand::Rng;
use rand_distr::StandardNormal;

/// One training sample of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Synthetic(SyntheticSample),
    Auc(AucSample),
}

/// The data held by one client.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_index: usize,
    pub samples: Vec<Sample>,
}

/// Generation-time description of a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemConfig {
    Synthetic(SyntheticProblemConfig),
    Auc(AucProblemConfig),
}

/// A concrete problem with all objective parameters fixed. For the AUC
/// family this includes the class weight τ, which is frozen to the empirical
/// positive fraction of the generated training set at instantiation.
#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Synthetic(SyntheticProblemConfig),
    Auc(AucProblemConfig),
}

/// A generated instance: the fixed problem, the per-client training data,
/// and (AUC only) the held-out evaluation samples.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub problem: Problem,
    pub clients: Vec<ClientDataset>,
    pub held_out: Option<Vec<AucSample>>,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProblemConfig::Synthetic(c) => c.validate(),
            ProblemConfig::Auc(c) => c.validate(),
        }
    }

    pub fn num_clients(&self) -> usize {
        match self {
            ProblemConfig::Synthetic(c) => c.num_clients,
            ProblemConfig::Auc(c) => c.num_clients,
        }
    }

    pub fn samples_per_client(&self) -> usize {
        match self {
            ProblemConfig::Synthetic(c) => c.samples_per_client,
            ProblemConfig::Auc(c) => c.samples_per_client,
        }
    }

    /// Primal/dual dimensions `(p, q)` of the packed iterate.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            ProblemConfig::Synthetic(c) => (c.p, c.p),
            ProblemConfig::Auc(c) => (c.d + 2, 1),
        }
    }

    /// Generate the datasets and freeze the problem's data-dependent
    /// parameters. Deterministic given `seed`.
    pub fn instantiate(&self, seed: u64) -> Result<ProblemInstance> {
        self.validate()?;
        match self {
            ProblemConfig::Synthetic(c) => Ok(ProblemInstance {
                problem: Problem::Synthetic(c.clone()),
                clients: synthetic::generate_synthetic(c, seed),
                held_out: None,
            }),
            ProblemConfig::Auc(c) => {
                let generated = auc::generate_auc(c, seed)?;
                let mut fixed = c.clone();
                fixed.tau = generated.tau;
                Ok(ProblemInstance {
                    problem: Problem::Auc(fixed),
                    clients: generated.clients,
                    held_out: Some(generated.held_out),
                })
            }
        }
    }
}

/// Deterministic synthetic-family generation (see
/// [`SyntheticProblemConfig`] for the distribution parameters).
pub fn generate_synthetic(cfg: &SyntheticProblemConfig, seed: u64) -> Vec<ClientDataset> {
    synthetic::generate_synthetic(cfg, seed)
}

/// Deterministic AUC-family generation, including the held-out split and
/// the empirical class weight (see [`auc::GeneratedAuc`]).
pub fn generate_auc(cfg: &AucProblemConfig, seed: u64) -> Result<auc::GeneratedAuc> {
    auc::generate_auc(cfg, seed)
}

impl Problem {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Problem::Synthetic(c) => (c.p, c.p),
            Problem::Auc(c) => (c.d + 2, 1),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Problem::Synthetic(_) => "synthetic",
            Problem::Auc(_) => "auc",
        }
    }

    /// Exact curvature `μ` of the dual block. Both families are quadratic in
    /// `y` with Hessian `−μ·I`, which is what makes the inner maximizer
    /// available in closed form.
    pub fn dual_curvature(&self) -> f64 {
        match self {
            Problem::Synthetic(c) => c.mu,
            Problem::Auc(c) => 2.0 * c.tau * (1.0 - c.tau),
        }
    }

    fn check_point(&self, point: &PrimalDualPoint) -> Result<()> {
        let (p, q) = self.dims();
        if point.x.len() != p || point.y.len() != q {
            return Err(Error::config(format!(
                "point dimensions ({}, {}) do not match the problem's ({p}, {q})",
                point.x.len(),
                point.y.len()
            )));
        }
        Ok(())
    }

    /// Add the per-sample loss value and partial gradients at `point` into
    /// the accumulators. Family mismatch between problem and sample is a
    /// programming error once a run has been validated, hence a panic.
    fn accumulate_sample(
        &self,
        sample: &Sample,
        point: &PrimalDualPoint,
        value: &mut f64,
        gx: &mut [f64],
        gy: &mut [f64],
    ) {
        match (self, sample) {
            (Problem::Synthetic(c), Sample::Synthetic(s)) => {
                synthetic::accumulate(c, s, point, value, gx, gy)
            }
            (Problem::Auc(c), Sample::Auc(s)) => auc::accumulate(c, s, point, value, gx, gy),
            _ => panic!(
                "sample family does not match problem family {}",
                self.family_name()
            ),
        }
    }
}

/// Loss value and gradient pair of one sample's loss `F(·, ·; ζ)`.
pub fn sample_eval(
    problem: &Problem,
    point: &PrimalDualPoint,
    sample: &Sample,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    problem.check_point(point)?;
    let (p, q) = problem.dims();
    let mut value = 0.0;
    let mut gx = vec![0.0; p];
    let mut gy = vec![0.0; q];
    problem.accumulate_sample(sample, point, &mut value, &mut gx, &mut gy);
    Ok((value, gx, gy))
}

/// Minibatch gradient pair: the average of the per-sample partial gradients
/// over `batch`, summed in the order given and divided once.
pub fn sample_loss_grads(
    problem: &Problem,
    point: &PrimalDualPoint,
    batch: &[&Sample],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::config("minibatch must not be empty"));
    }
    problem.check_point(point)?;
    let (p, q) = problem.dims();
    let mut value = 0.0;
    let mut gx = vec![0.0; p];
    let mut gy = vec![0.0; q];
    for sample in batch {
        problem.accumulate_sample(sample, point, &mut value, &mut gx, &mut gy);
    }
    let inv = 1.0 / batch.len() as f64;
    vecops::scale(&mut gx, inv);
    vecops::scale(&mut gy, inv);
    Ok((gx, gy))
}

/// Exact local gradient pair `∇f_i` of one client: the average over the
/// client's entire dataset.
pub fn full_local_grads(
    problem: &Problem,
    client: &ClientDataset,
    point: &PrimalDualPoint,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if client.samples.is_empty() {
        return Err(Error::config(format!(
            "client {} holds no samples",
            client.client_index
        )));
    }
    problem.check_point(point)?;
    let (p, q) = problem.dims();
    let mut value = 0.0;
    let mut gx = vec![0.0; p];
    let mut gy = vec![0.0; q];
    for sample in &client.samples {
        problem.accumulate_sample(sample, point, &mut value, &mut gx, &mut gy);
    }
    let inv = 1.0 / client.samples.len() as f64;
    vecops::scale(&mut gx, inv);
    vecops::scale(&mut gy, inv);
    Ok((gx, gy))
}

/// Exact local loss value and gradient pair of one client in a single pass.
pub fn full_local_eval(
    problem: &Problem,
    client: &ClientDataset,
    point: &PrimalDualPoint,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if client.samples.is_empty() {
        return Err(Error::config(format!(
            "client {} holds no samples",
            client.client_index
        )));
    }
    problem.check_point(point)?;
    let (p, q) = problem.dims();
    let mut value = 0.0;
    let mut gx = vec![0.0; p];
    let mut gy = vec![0.0; q];
    for sample in &client.samples {
        problem.accumulate_sample(sample, point, &mut value, &mut gx, &mut gy);
    }
    let inv = 1.0 / client.samples.len() as f64;
    vecops::scale(&mut gx, inv);
    vecops::scale(&mut gy, inv);
    Ok((value / client.samples.len() as f64, gx, gy))
}

/// Exact local loss value `f_i` of one client.
pub fn full_local_value(
    problem: &Problem,
    client: &ClientDataset,
    point: &PrimalDualPoint,
) -> Result<f64> {
    if client.samples.is_empty() {
        return Err(Error::config(format!(
            "client {} holds no samples",
            client.client_index
        )));
    }
    problem.check_point(point)?;
    let (p, q) = problem.dims();
    let mut value = 0.0;
    let mut gx = vec![0.0; p];
    let mut gy = vec![0.0; q];
    for sample in &client.samples {
        problem.accumulate_sample(sample, point, &mut value, &mut gx, &mut gy);
    }
    Ok(value / client.samples.len() as f64)
}

/// Population cross second derivative `∂²f/∂x∂y` applied to a dual
/// displacement: `(1/N) Σ_i (1/n_i) Σ_ζ ∂²F/∂x∂y(ζ) · delta_y`.
///
/// In both families the primal–dual coupling is bilinear, so the per-sample
/// cross block is a constant and this map is independent of the evaluation
/// point. That gives the exact transport of gradients across dual moves,
/// `∇x f(x, y + δ) = ∇x f(x, y) + (∂²f/∂x∂y)·δ`, which the measurement
/// oracles use to evaluate the envelope gradient from a single data pass.
/// Aggregation follows the global convention: per-client means in dataset
/// order, then the client mean, each division performed once.
pub fn cross_coupling_apply(
    problem: &Problem,
    clients: &[ClientDataset],
    delta_y: &[f64],
) -> Result<Vec<f64>> {
    if clients.is_empty() {
        return Err(Error::config("no client datasets"));
    }
    let (p, q) = problem.dims();
    if delta_y.len() != q {
        return Err(Error::config(format!(
            "dual displacement has dimension {}, expected {q}",
            delta_y.len()
        )));
    }
    let mut per_client = Vec::with_capacity(clients.len());
    for client in clients {
        if client.samples.is_empty() {
            return Err(Error::config(format!(
                "client {} holds no samples",
                client.client_index
            )));
        }
        let mut acc = vec![0.0; p];
        for sample in &client.samples {
            match (problem, sample) {
                (Problem::Synthetic(_), Sample::Synthetic(s)) => {
                    synthetic::cross_apply(s, delta_y, &mut acc)
                }
                (Problem::Auc(c), Sample::Auc(s)) => auc::cross_apply(c, s, delta_y, &mut acc),
                _ => panic!(
                    "sample family does not match problem family {}",
                    problem.family_name()
                ),
            }
        }
        vecops::scale(&mut acc, 1.0 / client.samples.len() as f64);
        per_client.push(acc);
    }
    Ok(vecops::mean_vecs(&per_client))
}

/// Check that every client's samples belong to `problem`'s family and have
/// its dimensions. Called once at run start so the per-sample hot paths can
/// assume well-formed data.
pub fn validate_datasets(problem: &Problem, clients: &[ClientDataset]) -> Result<()> {
    if clients.is_empty() {
        return Err(Error::config("no client datasets"));
    }
    let (p, _q) = problem.dims();
    for client in clients {
        if client.samples.is_empty() {
            return Err(Error::config(format!(
                "client {} holds no samples",
                client.client_index
            )));
        }
        for sample in &client.samples {
            match (problem, sample) {
                (Problem::Synthetic(c), Sample::Synthetic(s)) => {
                    if s.a.len() != c.p || s.b.len() != c.p || s.c.len() != c.p {
                        return Err(Error::config(format!(
                            "client {}: sample blocks have dimension {}/{}/{}, expected {}",
                            client.client_index,
                            s.a.len(),
                            s.b.len(),
                            s.c.len(),
                            c.p
                        )));
                    }
                }
                (Problem::Auc(c), Sample::Auc(s)) => {
                    if s.w.len() != c.d {
                        return Err(Error::config(format!(
                            "client {}: feature vector has dimension {}, expected {}",
                            client.client_index,
                            s.w.len(),
                            c.d
                        )));
                    }
                    if s.label != 1 && s.label != -1 {
                        return Err(Error::config(format!(
                            "client {}: label {} is not ±1",
                            client.client_index, s.label
                        )));
                    }
                }
                _ => {
                    return Err(Error::config(format!(
                        "client {} holds samples of a different family than the {} problem \
                         (primal dimension {p})",
                        client.client_index,
                        problem.family_name()
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Analytic smoothness constants of the instance plus probe-based gradient
/// dispersion estimates.
///
/// The block constants come from exact per-sample Hessian bounds (documented
/// in each family's module). The dispersion terms σ₁², σ₂² bound a supremum
/// over all points, which is not computable, so they are *estimated*: at the
/// default initial point (the origin) plus 20 standard-normal probe points
/// drawn from a fixed stream, compute the exact population variance of the
/// per-client gradients around the global gradient and keep the worst case.
/// The probe stream is fixed so the estimate is a pure function of
/// `(problem, datasets)`.
pub fn lipschitz_constants(
    problem: &Problem,
    clients: &[ClientDataset],
) -> Result<SmoothnessConstants> {
    validate_datasets(problem, clients)?;
    let (l1, l2, l12, l21, mu) = match problem {
        Problem::Synthetic(c) => synthetic::hessian_block_bounds(c, clients),
        Problem::Auc(c) => auc::hessian_block_bounds(c, clients),
    };

    let (p, q) = problem.dims();
    let mut sigma1_sq: f64 = 0.0;
    let mut sigma2_sq: f64 = 0.0;
    let mut rng = StreamKey::global(0, Phase::SigmaProbe).rng();
    for probe in 0..=20 {
        let point = if probe == 0 {
            PrimalDualPoint::zeros(p, q)
        } else {
            PrimalDualPoint {
                x: (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
                y: (0..q).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            }
        };
        let per_client: Vec<(Vec<f64>, Vec<f64>)> = clients
            .iter()
            .map(|cl| full_local_grads(problem, cl, &point))
            .collect::<Result<_>>()?;
        let gx_mean = vecops::mean_vecs(&per_client.iter().map(|g| g.0.clone()).collect::<Vec<_>>());
        let gy_mean = vecops::mean_vecs(&per_client.iter().map(|g| g.1.clone()).collect::<Vec<_>>());
        let mut var_x = 0.0;
        let mut var_y = 0.0;
        for (gx, gy) in &per_client {
            var_x += vecops::norm_sq(&vecops::sub(gx, &gx_mean));
            var_y += vecops::norm_sq(&vecops::sub(gy, &gy_mean));
        }
        var_x /= clients.len() as f64;
        var_y /= clients.len() as f64;
        sigma1_sq = sigma1_sq.max(var_x);
        sigma2_sq = sigma2_sq.max(var_y);
    }

    SmoothnessConstants::new(l1, l2, l12, l21, mu, sigma1_sq, sigma2_sq)
}
