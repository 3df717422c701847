//! ℓ2-relaxed AUC maximization as a minimax problem.
//!
//! For a linear scorer `h(w) = θᵀw` on labeled features `(w, ℓ)`,
//! `ℓ ∈ {−1, +1}`, the relaxed AUC objective with class weight `τ` is the
//! sample average of
//!
//! ```text
//! ℓ = +1:  (1−τ)(h − a)²  − τ(1−τ)λ²  − 2(1+λ)(1−τ)h
//! ℓ = −1:  τ(h − b)²      − τ(1−τ)λ²  + 2(1+λ)τh
//! ```
//!
//! minimized over `(θ, a, b)` and maximized over `λ`. The primal block packs
//! the triplet as `x = (θ, a, b)` with `p = d + 2`; the dual block is the
//! scalar `y = (λ)`. The objective is an exact quadratic in `λ` with
//! curvature `−2τ(1−τ)`, so the dual maximizer is unique and closed-form.

use crate::error::{Error, Result};
use crate::model::PrimalDualPoint;
use crate::rng::{Phase, StreamKey};
use rand::Rng;
use rand_distr::StandardNormal;

/// One labeled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AucSample {
    pub w: Vec<f64>,
    /// Class label, +1 or −1.
    pub label: i8,
}

/// Generation and objective parameters of the AUC family.
#[derive(Debug, Clone, PartialEq)]
pub struct AucProblemConfig {
    /// Feature dimension d; the packed primal dimension is d + 2.
    pub d: usize,
    /// Class weight τ ∈ (0, 1) of the objective. Instantiation overwrites
    /// this with the empirical positive fraction of the generated training
    /// set, fixing it for the whole run; pre-instantiation configs may leave
    /// it at 0 as a "not yet frozen" placeholder.
    pub tau: f64,
    pub num_clients: usize,
    pub samples_per_client: usize,
    /// Target probability that a generated sample is positive.
    pub positive_fraction: f64,
    /// Fraction of the training data allocated to clients after sorting by
    /// label; the remainder is spread uniformly. At 1.0 clients become
    /// label-homogeneous, at 0.0 allocation is fully random.
    pub sorted_fraction: f64,
    /// Euclidean distance between the two class-conditional feature means.
    /// Features are drawn from `N(±(separation/2)·e, I)` with `e` the
    /// normalized all-ones direction (+ for positives, − for negatives).
    pub separation: f64,
}

impl AucProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("feature dimension d must be at least 1"));
        }
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(Error::config(format!(
                "class weight tau must lie in [0, 1) (0 = freeze from the generated data), got {}",
                self.tau
            )));
        }
        if self.num_clients == 0 {
            return Err(Error::config("num_clients must be at least 1"));
        }
        if self.samples_per_client == 0 {
            return Err(Error::config("samples_per_client must be at least 1"));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::config(format!(
                "positive_fraction must lie strictly between 0 and 1, got {}",
                self.positive_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.sorted_fraction) {
            return Err(Error::config(format!(
                "sorted_fraction must lie in [0, 1], got {}",
                self.sorted_fraction
            )));
        }
        if !(self.separation >= 0.0) {
            return Err(Error::config(format!(
                "separation must be nonnegative, got {}",
                self.separation
            )));
        }
        Ok(())
    }
}

/// Per-sample loss value and partial gradients, accumulated into the
/// caller's buffers. With `h = θᵀw` and `e` the residual against the
/// sample's class threshold:
///
/// ```text
/// ℓ = +1: ∂θ = 2(1−τ)e·w − 2(1+λ)(1−τ)·w   ∂a = −2(1−τ)e   ∂b = 0
///          ∂λ = −2τ(1−τ)λ − 2(1−τ)h
/// ℓ = −1: ∂θ = 2τe·w + 2(1+λ)τ·w            ∂a = 0          ∂b = −2τe
///          ∂λ = −2τ(1−τ)λ + 2τh
/// ```
pub(super) fn accumulate(
    cfg: &AucProblemConfig,
    s: &AucSample,
    point: &PrimalDualPoint,
    value: &mut f64,
    gx: &mut [f64],
    gy: &mut [f64],
) {
    let d = cfg.d;
    let tau = cfg.tau;
    let theta = &point.x[0..d];
    let a = point.x[d];
    let b = point.x[d + 1];
    let lambda = point.y[0];

    let mut h = 0.0;
    for (t, w) in theta.iter().zip(&s.w) {
        h += t * w;
    }

    if s.label == 1 {
        let e = h - a;
        *value += (1.0 - tau) * e * e
            - tau * (1.0 - tau) * lambda * lambda
            - 2.0 * (1.0 + lambda) * (1.0 - tau) * h;
        let coef_w = 2.0 * (1.0 - tau) * e - 2.0 * (1.0 + lambda) * (1.0 - tau);
        for (g, w) in gx[0..d].iter_mut().zip(&s.w) {
            *g += coef_w * w;
        }
        gx[d] += -2.0 * (1.0 - tau) * e;
        gy[0] += -2.0 * tau * (1.0 - tau) * lambda - 2.0 * (1.0 - tau) * h;
    } else {
        let e = h - b;
        *value += tau * e * e - tau * (1.0 - tau) * lambda * lambda
            + 2.0 * (1.0 + lambda) * tau * h;
        let coef_w = 2.0 * tau * e + 2.0 * (1.0 + lambda) * tau;
        for (g, w) in gx[0..d].iter_mut().zip(&s.w) {
            *g += coef_w * w;
        }
        gx[d + 1] += -2.0 * tau * e;
        gy[0] += -2.0 * tau * (1.0 - tau) * lambda + 2.0 * tau * h;
    }
}

/// Add this sample's cross second derivative `∂²F/∂x∂y` applied to the dual
/// displacement `delta_y` into `out`. The coupling is bilinear — the only
/// mixed term is `∓2λ·(class weight)·h` — so the result is independent of
/// the evaluation point: `∂²F/∂θ∂λ = −2(1−τ)w` for positives and `+2τw`
/// for negatives, and zero on the two threshold coordinates.
pub(super) fn cross_apply(cfg: &AucProblemConfig, s: &AucSample, delta_y: &[f64], out: &mut [f64]) {
    let coef = if s.label == 1 {
        -2.0 * (1.0 - cfg.tau) * delta_y[0]
    } else {
        2.0 * cfg.tau * delta_y[0]
    };
    for (o, w) in out[0..cfg.d].iter_mut().zip(&s.w) {
        *o += coef * w;
    }
}

/// Exact Hessian-block bounds `(L1, L2, L12, L21, μ)`.
///
/// Each sample's primal Hessian is rank one: `2(1−τ)·vvᵀ` with
/// `v = (w, −1, 0)` for positives, `2τ·vvᵀ` with `v = (w, 0, −1)` for
/// negatives, giving spectral norm `2(1−τ)(‖w‖²+1)` resp. `2τ(‖w‖²+1)`.
/// The mixed block is the vector `∂²/∂θ∂λ = ∓2(1−τ)w / ±2τw`, with norm
/// `2(1−τ)‖w‖` resp. `2τ‖w‖`. The dual curvature is the constant
/// `−2τ(1−τ)` for every sample, so `L2 = μ = 2τ(1−τ)` and the
/// quadratic-growth identity is exact.
pub(super) fn hessian_block_bounds(
    cfg: &AucProblemConfig,
    clients: &[super::ClientDataset],
) -> (f64, f64, f64, f64, f64) {
    let tau = cfg.tau;
    let mut l1: f64 = 0.0;
    let mut l12: f64 = 0.0;
    for client in clients {
        for sample in &client.samples {
            if let super::Sample::Auc(s) = sample {
                let w_norm_sq: f64 = s.w.iter().map(|v| v * v).sum();
                let class_weight = if s.label == 1 { 1.0 - tau } else { tau };
                l1 = l1.max(2.0 * class_weight * (w_norm_sq + 1.0));
                l12 = l12.max(2.0 * class_weight * w_norm_sq.sqrt());
            }
        }
    }
    let mu = 2.0 * tau * (1.0 - tau);
    (l1, mu, l12, l12, mu)
}

/// Output of [`generate_auc`]: the per-client training data, the held-out
/// evaluation samples (one quarter of the training size, i.e. an 80/20
/// split of everything generated), and the empirical positive fraction of
/// the training set that the run freezes as τ.
#[derive(Debug, Clone)]
pub struct GeneratedAuc {
    pub clients: Vec<super::ClientDataset>,
    pub held_out: Vec<AucSample>,
    pub tau: f64,
}

/// Draw a labeled pool and allocate it to clients.
///
/// Labels are Bernoulli(`positive_fraction`); features come from the two
/// class-conditional Gaussians described on [`AucProblemConfig::separation`].
/// A seed-fixed shuffle reserves 20% of the pool as the held-out split. Of
/// the remaining training pool, the first `(1 − sorted_fraction)` portion
/// (already uniformly shuffled) is dealt round-robin across clients; the
/// rest is stably sorted by label (negatives first) and fills the remaining
/// client capacity in client order, so clients become label-homogeneous as
/// `sorted_fraction → 1`. Every client ends up with exactly
/// `samples_per_client` samples.
pub fn generate_auc(cfg: &AucProblemConfig, seed: u64) -> Result<GeneratedAuc> {
    let n_train = cfg.num_clients * cfg.samples_per_client;
    let n_held_out = (n_train / 4).max(1);
    let total = n_train + n_held_out;
    let inv_sqrt_d = 1.0 / (cfg.d as f64).sqrt();
    let half_sep = cfg.separation / 2.0;

    let pool: Vec<AucSample> = (0..total)
        .map(|j| {
            let mut rng = StreamKey {
                seed,
                round: 0,
                phase: Phase::DataGen,
                client: 0,
                step: j as u64,
            }
            .rng();
            let label: i8 = if rng.gen::<f64>() < cfg.positive_fraction {
                1
            } else {
                -1
            };
            let mean = f64::from(label) * half_sep * inv_sqrt_d;
            let w = (0..cfg.d)
                .map(|_| mean + rng.sample::<f64, _>(StandardNormal))
                .collect();
            AucSample { w, label }
        })
        .collect();

    // Seed-fixed Fisher-Yates shuffle decides the held-out split and, at the
    // same time, the uniform order of the training pool.
    let mut order: Vec<usize> = (0..total).collect();
    let mut shuffle_rng = StreamKey::global(seed, Phase::HoldoutSplit).rng();
    for i in (1..total).rev() {
        let j = shuffle_rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let held_out: Vec<AucSample> = order[0..n_held_out]
        .iter()
        .map(|&j| pool[j].clone())
        .collect();
    let train: Vec<AucSample> = order[n_held_out..]
        .iter()
        .map(|&j| pool[j].clone())
        .collect();

    let positives = train.iter().filter(|s| s.label == 1).count();
    if positives == 0 || positives == n_train {
        return Err(Error::config(format!(
            "generated training set is single-class ({positives} of {n_train} positive); \
             adjust positive_fraction or the sample counts"
        )));
    }
    if !held_out.iter().any(|s| s.label == 1) || !held_out.iter().any(|s| s.label == -1) {
        return Err(Error::config(
            "held-out split is single-class; increase the sample counts",
        ));
    }
    let tau = positives as f64 / n_train as f64;

    let random_count =
        (((1.0 - cfg.sorted_fraction) * n_train as f64).round() as usize).min(n_train);
    let mut per_client: Vec<Vec<super::Sample>> =
        vec![Vec::with_capacity(cfg.samples_per_client); cfg.num_clients];
    for (j, sample) in train[0..random_count].iter().enumerate() {
        per_client[j % cfg.num_clients].push(super::Sample::Auc(sample.clone()));
    }
    let mut sorted_part: Vec<&AucSample> = train[random_count..].iter().collect();
    sorted_part.sort_by_key(|s| s.label); // stable: −1 before +1
    let mut next_client = 0;
    for sample in sorted_part {
        while per_client[next_client].len() == cfg.samples_per_client {
            next_client += 1;
        }
        per_client[next_client].push(super::Sample::Auc(sample.clone()));
    }

    let clients = per_client
        .into_iter()
        .enumerate()
        .map(|(client_index, samples)| super::ClientDataset {
            client_index,
            samples,
        })
        .collect();

    Ok(GeneratedAuc {
        clients,
        held_out,
        tau,
    })
}

/// Area under the ROC curve of `scores` against `labels`: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting 1/2.
///
/// Computed in O(m log m) by ranking with midranks for ties (the
/// Mann-Whitney statistic), which agrees *exactly* with the O(m²) pair
/// count: both divide the same integer-or-half numerator by `m⁺·m⁻`.
pub fn auc_metric(scores: &[f64], labels: &[i8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::config(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::config("scores must be finite"));
    }
    let m_pos = labels.iter().filter(|&&l| l == 1).count();
    let m_neg = labels.iter().filter(|&&l| l == -1).count();
    if m_pos + m_neg != labels.len() {
        return Err(Error::config("labels must be ±1"));
    }
    if m_pos == 0 || m_neg == 0 {
        return Err(Error::config(
            "AUC is undefined for single-class input (needs ≥1 positive and ≥1 negative)",
        ));
    }

    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&i, &j| scores[i].partial_cmp(&scores[j]).unwrap());

    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && scores[idx[end + 1]] == scores[idx[start]] {
            end += 1;
        }
        // 1-based midrank of the tie group [start, end].
        let midrank = (start + end) as f64 / 2.0 + 1.0;
        for &i in &idx[start..=end] {
            if labels[i] == 1 {
                rank_sum_pos += midrank;
            }
        }
        start = end + 1;
    }

    let u = rank_sum_pos - (m_pos * (m_pos + 1)) as f64 / 2.0;
    Ok(u / (m_pos as f64 * m_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::super::{full_local_grads, lipschitz_constants, Problem, Sample};
    use super::*;
    use rand::Rng;

    fn cfg(d: usize) -> AucProblemConfig {
        AucProblemConfig {
            d,
            tau: 0.3,
            num_clients: 4,
            samples_per_client: 10,
            positive_fraction: 0.3,
            sorted_fraction: 0.5,
            separation: 2.0,
        }
    }

    #[test]
    fn perfect_ordering_scores_auc_one() {
        assert_eq!(
            auc_metric(&[0.9, 0.8, 0.1], &[1, 1, -1]).unwrap(),
            1.0
        );
    }

    #[test]
    fn inverted_ordering_scores_auc_zero() {
        assert_eq!(auc_metric(&[0.1, 0.9], &[1, -1]).unwrap(), 0.0);
    }

    #[test]
    fn all_tied_scores_give_auc_half() {
        assert_eq!(
            auc_metric(&[0.0, 0.0, 0.0, 0.0], &[1, -1, 1, -1]).unwrap(),
            0.5
        );
    }

    #[test]
    fn single_class_input_is_an_error() {
        let err = auc_metric(&[0.1, 0.2], &[1, 1]).unwrap_err();
        assert!(
            err.to_string().contains("single-class"),
            "unexpected error: {err}"
        );
    }

    /// O(m²) reference: count correctly ordered pairs, ties as 1/2.
    fn brute_force_auc(scores: &[f64], labels: &[i8]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0u64;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != -1 {
                    continue;
                }
                pairs += 1;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
        num / pairs as f64
    }

    #[test]
    fn ranking_auc_equals_pair_count_exactly_including_ties() {
        let mut rng = StreamKey::global(31, Phase::Verify).rng();
        for trial in 0..20 {
            let m = 200;
            // Draw scores from a small lattice so ties actually occur.
            let scores: Vec<f64> = (0..m).map(|_| (rng.gen_range(0..40) as f64) / 8.0).collect();
            let labels: Vec<i8> = (0..m)
                .map(|_| if rng.gen::<f64>() < 0.35 { 1 } else { -1 })
                .collect();
            if !labels.contains(&1) || !labels.contains(&-1) {
                continue;
            }
            let fast = auc_metric(&scores, &labels).unwrap();
            let slow = brute_force_auc(&scores, &labels);
            assert_eq!(fast, slow, "trial {trial}: ranking {fast} vs pairs {slow}");
        }
    }

    #[test]
    fn sorted_fraction_zero_single_client_holds_everything() {
        let mut c = cfg(3);
        c.num_clients = 1;
        c.samples_per_client = 40;
        c.sorted_fraction = 0.0;
        let generated = generate_auc(&c, 7).unwrap();
        assert_eq!(generated.clients.len(), 1);
        assert_eq!(generated.clients[0].samples.len(), 40);
        assert_eq!(generated.held_out.len(), 10);
    }

    #[test]
    fn full_sorting_with_balanced_classes_makes_clients_label_pure() {
        let c = AucProblemConfig {
            d: 2,
            tau: 0.5,
            num_clients: 2,
            samples_per_client: 30,
            positive_fraction: 0.5,
            sorted_fraction: 1.0,
            separation: 1.0,
        };
        // Search a few seeds for an exactly balanced training draw; with 60
        // samples one appears quickly.
        let generated = (0..200u64)
            .find_map(|seed| {
                let g = generate_auc(&c, seed).ok()?;
                (g.tau == 0.5).then_some(g)
            })
            .expect("no exactly balanced draw among 200 seeds");
        for client in &generated.clients {
            let labels: Vec<i8> = client
                .samples
                .iter()
                .map(|s| match s {
                    Sample::Auc(a) => a.label,
                    _ => panic!("wrong family"),
                })
                .collect();
            assert!(
                labels.iter().all(|&l| l == labels[0]),
                "client {} mixes labels under full sorting: {labels:?}",
                client.client_index
            );
        }
    }

    #[test]
    fn positive_fraction_lands_within_three_binomial_standard_errors() {
        let mut c = cfg(4);
        c.num_clients = 25;
        c.samples_per_client = 40; // 1000 training samples
        let generated = generate_auc(&c, 13).unwrap();
        let n = (c.num_clients * c.samples_per_client) as f64;
        let se = (c.positive_fraction * (1.0 - c.positive_fraction) / n).sqrt();
        assert!(
            (generated.tau - c.positive_fraction).abs() <= 3.0 * se,
            "empirical fraction {} vs target {} (3 SE = {})",
            generated.tau,
            c.positive_fraction,
            3.0 * se
        );
    }

    #[test]
    fn every_client_gets_exactly_its_quota() {
        for sorted_fraction in [0.0, 0.37, 0.9, 1.0] {
            let mut c = cfg(3);
            c.sorted_fraction = sorted_fraction;
            let generated = generate_auc(&c, 3).unwrap();
            assert_eq!(generated.clients.len(), c.num_clients);
            for client in &generated.clients {
                assert_eq!(
                    client.samples.len(),
                    c.samples_per_client,
                    "client {} under sorted_fraction {sorted_fraction}",
                    client.client_index
                );
            }
        }
    }

    #[test]
    fn dual_gradient_is_linear_with_slope_minus_2_tau_one_minus_tau() {
        // ∂f/∂λ must be affine in λ with the exact curvature −2τ(1−τ),
        // independently of the data — this is what makes the inner
        // maximization a closed form.
        let c = cfg(5);
        let generated = generate_auc(&c, 21).unwrap();
        let mut fixed = c.clone();
        fixed.tau = generated.tau;
        let problem = Problem::Auc(fixed.clone());
        let client = &generated.clients[0];
        let x: Vec<f64> = (0..c.d + 2).map(|i| 0.1 * i as f64 - 0.3).collect();
        let grad_at = |lambda: f64| {
            let point = PrimalDualPoint {
                x: x.clone(),
                y: vec![lambda],
            };
            full_local_grads(&problem, client, &point).unwrap().1[0]
        };
        let (g0, g1, g2) = (grad_at(0.0), grad_at(1.0), grad_at(2.0));
        let slope = -2.0 * fixed.tau * (1.0 - fixed.tau);
        assert!((g1 - g0 - slope).abs() < 1e-12, "slope {} vs {}", g1 - g0, slope);
        assert!(
            (g2 - 2.0 * g1 + g0).abs() < 1e-12,
            "dual gradient is not affine in λ"
        );
    }

    #[test]
    fn hessian_block_bounds_match_a_hand_built_dataset() {
        let c = AucProblemConfig {
            d: 2,
            tau: 0.25,
            num_clients: 1,
            samples_per_client: 2,
            positive_fraction: 0.5,
            sorted_fraction: 0.0,
            separation: 1.0,
        };
        let clients = vec![super::super::ClientDataset {
            client_index: 0,
            samples: vec![
                Sample::Auc(AucSample {
                    w: vec![3.0, 4.0], // ‖w‖ = 5, ‖w‖² = 25
                    label: 1,
                }),
                Sample::Auc(AucSample {
                    w: vec![0.0, 2.0], // ‖w‖ = 2, ‖w‖² = 4
                    label: -1,
                }),
            ],
        }];
        let consts = lipschitz_constants(&Problem::Auc(c), &clients).unwrap();
        // Positive sample: 2·0.75·26 = 39; negative: 2·0.25·5 = 2.5.
        assert_eq!(consts.l1, 39.0);
        // Mixed: max(2·0.75·5, 2·0.25·2) = 7.5.
        assert_eq!(consts.l12, 7.5);
        assert_eq!(consts.l21, 7.5);
        assert_eq!(consts.l2, 2.0 * 0.25 * 0.75);
        assert_eq!(consts.mu, 2.0 * 0.25 * 0.75);
    }
}
