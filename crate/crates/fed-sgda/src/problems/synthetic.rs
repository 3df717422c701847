//! Synthetic nonconvex-PL minimax family.
//!
//! Each sample is a triple `ζ = (a, b, c)` of `p`-vectors and contributes
//!
//! ```text
//! F(x, y; ζ) = Σ_ℓ (1 − exp(−(x_ℓ − a_ℓ)² / (2ν)))     (nonconvex bumps)
//!            + (x − a)ᵀ b bᵀ (y − c)                     (bilinear coupling)
//!            − (μ/2) ‖y − c‖²                            (concave dual term)
//! ```
//!
//! The bump sum is bounded and non-convex in `x`; the dual side is an exact
//! `−μI` quadratic, so the global objective satisfies quadratic growth (PL)
//! on `y` with equality, and the inner maximizer has a closed form.

use crate::error::{Error, Result};
use crate::model::PrimalDualPoint;
use crate::rng::{Phase, StreamKey};
use crate::vecops;
use rand::Rng;
use rand_distr::StandardNormal;

/// One sample `ζ = (a, b, c)`: `a` anchors the bumps, `b` spans the rank-one
/// coupling, `c` anchors the dual quadratic.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Generation and objective parameters of the synthetic family.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProblemConfig {
    /// Dimension of each block (x and y are both `p`-vectors).
    pub p: usize,
    /// Bump width ν > 0; the bump curvature peaks at 1/ν.
    pub nu: f64,
    /// Dual concavity μ > 0.
    pub mu: f64,
    pub num_clients: usize,
    pub samples_per_client: usize,
    /// Per-coordinate variance of the client centers: each client draws a
    /// `3p`-dimensional center `w ~ N(0, center_std · I)` (so the entry
    /// standard deviation is `√center_std`).
    pub center_std: f64,
    /// Per-coordinate variance of samples around their client center:
    /// samples are drawn from `N(w, sample_std · I)`.
    pub sample_std: f64,
}

impl SyntheticProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("dimension p must be at least 1"));
        }
        if !(self.nu > 0.0) {
            return Err(Error::config(format!(
                "bump width nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.mu > 0.0) {
            return Err(Error::config(format!(
                "concavity mu must be positive, got {}",
                self.mu
            )));
        }
        if self.num_clients == 0 {
            return Err(Error::config("num_clients must be at least 1"));
        }
        if self.samples_per_client == 0 {
            return Err(Error::config("samples_per_client must be at least 1"));
        }
        if !(self.center_std >= 0.0) || !(self.sample_std >= 0.0) {
            return Err(Error::config(
                "center_std and sample_std must be nonnegative",
            ));
        }
        Ok(())
    }
}

/// Per-sample loss value and partial gradients, accumulated into the
/// caller's buffers:
///
/// ```text
/// ∇x F = g'(x; a) + b (bᵀ(y − c)),   g'_ℓ = ((x_ℓ − a_ℓ)/ν) e^{−(x_ℓ−a_ℓ)²/(2ν)}
/// ∇y F = b (bᵀ(x − a)) − μ (y − c)
/// ```
pub(super) fn accumulate(
    cfg: &SyntheticProblemConfig,
    s: &SyntheticSample,
    point: &PrimalDualPoint,
    value: &mut f64,
    gx: &mut [f64],
    gy: &mut [f64],
) {
    let nu = cfg.nu;
    let mu = cfg.mu;
    let mut b_dot_yc = 0.0;
    let mut b_dot_xa = 0.0;
    for l in 0..s.a.len() {
        b_dot_yc += s.b[l] * (point.y[l] - s.c[l]);
        b_dot_xa += s.b[l] * (point.x[l] - s.a[l]);
    }
    let mut bump_sum = 0.0;
    let mut yc_norm_sq = 0.0;
    for l in 0..s.a.len() {
        let dx = point.x[l] - s.a[l];
        let dy = point.y[l] - s.c[l];
        let bump = (-dx * dx / (2.0 * nu)).exp();
        bump_sum += 1.0 - bump;
        yc_norm_sq += dy * dy;
        gx[l] += (dx / nu) * bump + s.b[l] * b_dot_yc;
        gy[l] += s.b[l] * b_dot_xa - mu * dy;
    }
    *value += bump_sum + b_dot_xa * b_dot_yc - 0.5 * mu * yc_norm_sq;
}

/// Add this sample's cross second derivative `∂²F/∂x∂y` applied to the dual
/// displacement `delta_y` into `out`. The coupling `(x−a)ᵀb bᵀ(y−c)` is
/// bilinear, so the cross block is the constant rank-one matrix `b bᵀ` and
/// the application is `b·(bᵀ delta_y)` at every evaluation point.
pub(super) fn cross_apply(s: &SyntheticSample, delta_y: &[f64], out: &mut [f64]) {
    let b_dot_delta = vecops::dot(&s.b, delta_y);
    for (o, b) in out.iter_mut().zip(&s.b) {
        *o += b * b_dot_delta;
    }
}

/// Exact Hessian-block bounds `(L1, L2, L12, L21, μ)` of the family.
///
/// The bump term's second derivative in one coordinate is
/// `(1/ν)(1 − s²/ν) e^{−s²/(2ν)}` with `s = x_ℓ − a_ℓ`, whose absolute value
/// peaks at `1/ν` (attained at `s = 0`; the negative extremum at `s² = 3ν`
/// has magnitude `2e^{−3/2}/ν < 1/ν`). The coupling is linear in each block,
/// so it adds nothing to the diagonal blocks and exactly
/// `‖b bᵀ‖₂ = ‖b‖²` to the mixed ones. The dual Hessian is the constant
/// `−μI`.
pub(super) fn hessian_block_bounds(
    cfg: &SyntheticProblemConfig,
    clients: &[super::ClientDataset],
) -> (f64, f64, f64, f64, f64) {
    let mut max_b_norm_sq: f64 = 0.0;
    for client in clients {
        for sample in &client.samples {
            if let super::Sample::Synthetic(s) = sample {
                max_b_norm_sq = max_b_norm_sq.max(vecops::norm_sq(&s.b));
            }
        }
    }
    (1.0 / cfg.nu, cfg.mu, max_b_norm_sq, max_b_norm_sq, cfg.mu)
}

/// Draw the client datasets: client `i` gets a `3p`-dimensional center
/// `w_i ~ N(0, center_std · I)`, split into the `(a, b, c)` blocks, and
/// `samples_per_client` samples from `N(w_i, sample_std · I)`. Every
/// (client, sample) pair owns its own random stream, so generation is
/// independent of evaluation order.
pub fn generate_synthetic(cfg: &SyntheticProblemConfig, seed: u64) -> Vec<super::ClientDataset> {
    let center_sd = cfg.center_std.sqrt();
    let sample_sd = cfg.sample_std.sqrt();
    (0..cfg.num_clients)
        .map(|i| {
            let mut center_rng = StreamKey {
                seed,
                round: 0,
                phase: Phase::DataGen,
                client: i as u64,
                step: 0,
            }
            .rng();
            let center: Vec<f64> = (0..3 * cfg.p)
                .map(|_| center_sd * center_rng.sample::<f64, _>(StandardNormal))
                .collect();
            let samples = (0..cfg.samples_per_client)
                .map(|j| {
                    let mut rng = StreamKey {
                        seed,
                        round: 0,
                        phase: Phase::DataGen,
                        client: i as u64,
                        step: 1 + j as u64,
                    }
                    .rng();
                    let raw: Vec<f64> = center
                        .iter()
                        .map(|w| w + sample_sd * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    super::Sample::Synthetic(SyntheticSample {
                        a: raw[0..cfg.p].to_vec(),
                        b: raw[cfg.p..2 * cfg.p].to_vec(),
                        c: raw[2 * cfg.p..3 * cfg.p].to_vec(),
                    })
                })
                .collect();
            super::ClientDataset {
                client_index: i,
                samples,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{full_local_grads, lipschitz_constants, sample_eval, Problem, Sample};
    use super::*;

    fn small_cfg(p: usize) -> SyntheticProblemConfig {
        SyntheticProblemConfig {
            p,
            nu: 1.0,
            mu: 1.0,
            num_clients: 2,
            samples_per_client: 3,
            center_std: 0.5,
            sample_std: 0.1,
        }
    }

    #[test]
    fn gradients_vanish_at_the_sample_anchor() {
        let cfg = small_cfg(3);
        let s = SyntheticSample {
            a: vec![0.3, -0.2, 1.0],
            b: vec![0.5, 0.1, -0.4],
            c: vec![0.0, 2.0, -1.0],
        };
        let point = PrimalDualPoint {
            x: s.a.clone(),
            y: s.c.clone(),
        };
        let (value, gx, gy) =
            sample_eval(&Problem::Synthetic(cfg), &point, &Sample::Synthetic(s)).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(gx, vec![0.0; 3]);
        assert_eq!(gy, vec![0.0; 3]);
    }

    #[test]
    fn zero_coupling_vector_decouples_the_dual_gradient() {
        let cfg = small_cfg(2);
        let s = SyntheticSample {
            a: vec![1.0, -1.0],
            b: vec![0.0, 0.0],
            c: vec![0.5, 0.25],
        };
        let point = PrimalDualPoint {
            x: vec![0.2, 0.4],
            y: vec![-1.0, 3.0],
        };
        let (_, _, gy) =
            sample_eval(&Problem::Synthetic(cfg), &point, &Sample::Synthetic(s)).unwrap();
        // gy = −μ(y − c) with μ = 1.
        assert_eq!(gy, vec![-(-1.0 - 0.5), -(3.0 - 0.25)]);
    }

    #[test]
    fn duplicating_a_dataset_leaves_the_full_gradient_unchanged() {
        let cfg = small_cfg(4);
        let clients = generate_synthetic(&cfg, 11);
        let problem = Problem::Synthetic(cfg);
        let point = PrimalDualPoint {
            x: vec![0.1, -0.3, 0.7, 0.0],
            y: vec![0.9, 0.2, -0.5, 1.1],
        };
        let original = &clients[0];
        let mut doubled = original.clone();
        doubled.samples.extend(original.samples.iter().cloned());
        let (gx1, gy1) = full_local_grads(&problem, original, &point).unwrap();
        let (gx2, gy2) = full_local_grads(&problem, &doubled, &point).unwrap();
        for (u, v) in gx1.iter().zip(&gx2).chain(gy1.iter().zip(&gy2)) {
            assert!(
                (u - v).abs() <= 1e-12,
                "duplication shifted a gradient entry: {u} vs {v}"
            );
        }
    }

    #[test]
    fn generation_has_the_requested_shape() {
        let cfg = SyntheticProblemConfig {
            p: 4,
            num_clients: 2,
            samples_per_client: 3,
            ..small_cfg(4)
        };
        let clients = generate_synthetic(&cfg, 5);
        assert_eq!(clients.len(), 2);
        for (i, client) in clients.iter().enumerate() {
            assert_eq!(client.client_index, i);
            assert_eq!(client.samples.len(), 3);
            for sample in &client.samples {
                let Sample::Synthetic(s) = sample else {
                    panic!("wrong family")
                };
                assert_eq!((s.a.len(), s.b.len(), s.c.len()), (4, 4, 4));
            }
        }
    }

    #[test]
    fn zero_sample_noise_collapses_each_client_onto_its_center() {
        let cfg = SyntheticProblemConfig {
            sample_std: 0.0,
            ..small_cfg(3)
        };
        let clients = generate_synthetic(&cfg, 9);
        for client in clients {
            let Sample::Synthetic(first) = &client.samples[0] else {
                panic!("wrong family")
            };
            for sample in &client.samples {
                let Sample::Synthetic(s) = sample else {
                    panic!("wrong family")
                };
                assert_eq!(s, first, "client {} drew distinct samples", client.client_index);
            }
        }
    }

    #[test]
    fn center_entries_average_to_zero_within_three_standard_errors() {
        // 500 clients × 300 center entries drawn with per-entry variance 0.5:
        // the mean of 150000 entries has standard error √0.5/√150000.
        let cfg = SyntheticProblemConfig {
            p: 100,
            num_clients: 500,
            samples_per_client: 1,
            sample_std: 0.0, // samples equal centers, which makes them observable
            ..small_cfg(100)
        };
        let clients = generate_synthetic(&cfg, 2024);
        let mut sum = 0.0;
        let mut count = 0usize;
        for client in &clients {
            let Sample::Synthetic(s) = &client.samples[0] else {
                panic!("wrong family")
            };
            for v in s.a.iter().chain(&s.b).chain(&s.c) {
                sum += v;
                count += 1;
            }
        }
        assert_eq!(count, 500 * 300);
        let mean = sum / count as f64;
        let bound = 3.0 * 0.7071 / (150000f64).sqrt();
        assert!(
            mean.abs() <= bound,
            "center mean {mean} exceeds the 3-standard-error bound {bound}"
        );
    }

    #[test]
    fn constants_with_zero_coupling_give_lf_sqrt_2() {
        let cfg = SyntheticProblemConfig {
            p: 2,
            num_clients: 1,
            samples_per_client: 2,
            ..small_cfg(2)
        };
        let clients = vec![super::super::ClientDataset {
            client_index: 0,
            samples: vec![
                Sample::Synthetic(SyntheticSample {
                    a: vec![1.0, 2.0],
                    b: vec![0.0, 0.0],
                    c: vec![0.0, 0.0],
                }),
                Sample::Synthetic(SyntheticSample {
                    a: vec![-1.0, 0.5],
                    b: vec![0.0, 0.0],
                    c: vec![1.0, 1.0],
                }),
            ],
        }];
        let consts = lipschitz_constants(&Problem::Synthetic(cfg), &clients).unwrap();
        assert_eq!(consts.l1, 1.0);
        assert_eq!(consts.l2, 1.0);
        assert_eq!(consts.l12, 0.0);
        assert_eq!(consts.l21, 0.0);
        assert_eq!(consts.l_f, 2.0f64.sqrt());
    }

    #[test]
    fn constants_with_unit_coupling_give_lf_2_lphi_1p5_ltilde_7() {
        let cfg = SyntheticProblemConfig {
            p: 2,
            num_clients: 1,
            samples_per_client: 1,
            ..small_cfg(2)
        };
        let clients = vec![super::super::ClientDataset {
            client_index: 0,
            samples: vec![Sample::Synthetic(SyntheticSample {
                a: vec![0.0, 0.0],
                b: vec![1.0, 0.0], // ‖b‖² = 1
                c: vec![0.0, 0.0],
            })],
        }];
        let consts = lipschitz_constants(&Problem::Synthetic(cfg), &clients).unwrap();
        assert_eq!(consts.l12, 1.0);
        assert_eq!(consts.l21, 1.0);
        assert_eq!(consts.l_f, 2.0);
        assert_eq!(consts.l_phi, 1.5);
        assert_eq!(consts.l_tilde, 7.0);
    }
}
