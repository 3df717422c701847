//! Named hyperparameter presets: the tuned step-size settings for every
//! (clients-per-round, local-steps, batch) cell of the two experiment
//! families, each packaged as a complete runnable config.
//!
//! Three groups:
//! * `synthetic-s<S>-k<K>-<est>` — synthetic family, batch 5, decay
//!   exponent 1/3 for the momentum estimator;
//! * `auc-s<S>-k<K>-b<b>-<est>` — AUC family, mixed client allocation,
//!   decay exponent 1/5;
//! * `auc-sorted-s5-k<K>-b10-<est>` — AUC family with fully label-sorted
//!   client allocation (maximum heterogeneity), decay exponent 1/5.
//!
//! The estimator suffix is `mb` (constant steps) or `storm` (momentum with
//! `c/(t+1)^ρ` decay). Problem sizes are desk-scale so every preset runs in
//! seconds to minutes on one machine; the step sizes themselves are the
//! tuned table values. Print a preset with `fed-sgda presets <name>` and
//! feed it back via `fed-sgda run <file>`.

use fed_sgda::{
    AucProblemConfig, EstimatorKind, ProblemConfig, RunConfig, SamplingMode, ScheduleKind,
    SyntheticProblemConfig,
};

use crate::config::ExperimentConfig;

/// A named, fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub summary: String,
    pub config: ExperimentConfig,
}

/// Tuned steps for one synthetic cell: (S, K, mb η, mb γ, storm c_η,
/// storm c_γ, storm c_α); batch is 5 and storm ρ is 1/3 throughout.
const SYNTHETIC_ROWS: &[(usize, usize, f64, f64, f64, f64, f64)] = &[
    (5, 5, 1e-3, 1e-3, 1e-2, 1e-1, 1.0),
    (5, 10, 1e-4, 1e-3, 1e-3, 1e-2, 10.0),
    (5, 20, 1e-4, 1e-3, 1e-3, 1e-1, 1.0),
    (10, 5, 1e-3, 1e-3, 1e-2, 1e-1, 1.0),
    (10, 10, 1e-4, 1e-3, 1e-3, 1e-2, 1.0),
    (10, 20, 1e-4, 1e-3, 1e-3, 1e-2, 1.0),
    (20, 5, 1e-3, 1e-3, 1e-2, 1e-1, 1.0),
    (20, 10, 1e-3, 1e-2, 1e-3, 1e-2, 1.0),
    (20, 20, 1e-4, 1e-3, 1e-3, 1e-3, 1.0),
];

/// Tuned steps for one AUC cell: (S, K, batch, mb η, mb γ, storm c_η,
/// storm c_γ, storm c_α); storm ρ is 1/5 throughout.
const AUC_ROWS: &[(usize, usize, usize, f64, f64, f64, f64, f64)] = &[
    (5, 1, 5, 1.0, 1e-2, 1.0, 1e-1, 5.0),
    (5, 1, 10, 1.0, 1e-2, 1.0, 1e-1, 5.0),
    (5, 10, 5, 1e-1, 1e-2, 1.0, 1e-1, 10.0),
    (5, 10, 10, 1.0, 1e-1, 1.0, 1.0, 10.0),
    (5, 20, 5, 1e-1, 1e-1, 1.0, 1.0, 10.0),
    (5, 20, 10, 1.0, 1.0, 1.0, 1e-1, 10.0),
    (10, 1, 5, 1.0, 1e-2, 1.0, 1e-1, 5.0),
    (10, 1, 10, 1.0, 1e-3, 1.0, 1e-1, 5.0),
    (10, 10, 5, 1.0, 1.0, 1.0, 1.0, 5.0),
    (10, 10, 10, 1.0, 1e-1, 1.0, 1e-1, 5.0),
    (10, 20, 5, 1.0, 1e-1, 1.0, 1.0, 10.0),
    (10, 20, 10, 1.0, 1.0, 1.0, 1.0, 10.0),
    (20, 1, 5, 1.0, 1e-3, 1.0, 1e-1, 5.0),
    (20, 1, 10, 1.0, 1e-2, 1.0, 1e-1, 5.0),
    (20, 10, 5, 1.0, 1.0, 1.0, 1.0, 5.0),
    (20, 10, 10, 1.0, 1e-2, 1.0, 1e-1, 10.0),
    (20, 20, 5, 1.0, 1e-1, 1.0, 1e-1, 10.0),
    (20, 20, 10, 1.0, 1.0, 1.0, 1.0, 10.0),
];

/// Tuned steps for the label-sorted AUC cells: (K, mb η, mb γ, storm c_η,
/// storm c_γ, storm c_α); S is 5, batch is 10, storm ρ is 1/5.
const AUC_SORTED_ROWS: &[(usize, f64, f64, f64, f64, f64)] = &[
    (1, 1.0, 1e-2, 1.0, 1e-1, 5.0),
    (10, 1e-1, 1e-3, 1e-1, 1e-2, 10.0),
    (20, 1e-1, 1.0, 1e-1, 1e-1, 10.0),
];

const SYNTHETIC_RHO: f64 = 1.0 / 3.0;
const AUC_RHO: f64 = 1.0 / 5.0;

fn synthetic_config(
    clients_per_round: usize,
    local_steps: usize,
    estimator: EstimatorKind,
    c_eta: f64,
    c_gamma: f64,
    c_alpha: f64,
) -> ExperimentConfig {
    ExperimentConfig {
        run: RunConfig {
            problem: ProblemConfig::Synthetic(SyntheticProblemConfig {
                p: 20,
                nu: 1.0,
                mu: 1.0,
                num_clients: 100,
                samples_per_client: 50,
                center_std: 0.5,
                sample_std: 0.1,
            }),
            rounds: 500,
            clients_per_round,
            local_steps,
            batch_size: 5,
            estimator,
            schedule: ScheduleKind::Practical,
            c_eta,
            c_gamma,
            c_alpha,
            rho: SYNTHETIC_RHO,
            spider_period: 5,
            spider_big_batch: 25,
            sampling: SamplingMode::WithReplacement,
            share_subsets: false,
        },
        seeds: vec![1],
        output: None,
        estimate_phi_star: false,
    }
}

fn auc_config(
    clients_per_round: usize,
    local_steps: usize,
    batch_size: usize,
    sorted_fraction: f64,
    estimator: EstimatorKind,
    c_eta: f64,
    c_gamma: f64,
    c_alpha: f64,
) -> ExperimentConfig {
    ExperimentConfig {
        run: RunConfig {
            problem: ProblemConfig::Auc(AucProblemConfig {
                d: 20,
                tau: 0.0,
                num_clients: 50,
                samples_per_client: 40,
                positive_fraction: 0.3,
                sorted_fraction,
                separation: 2.0,
            }),
            rounds: 300,
            clients_per_round,
            local_steps,
            batch_size,
            estimator,
            schedule: ScheduleKind::Practical,
            c_eta,
            c_gamma,
            c_alpha,
            rho: AUC_RHO,
            spider_period: 5,
            spider_big_batch: 25,
            sampling: SamplingMode::WithReplacement,
            share_subsets: false,
        },
        seeds: vec![1],
        output: None,
        estimate_phi_star: false,
    }
}

fn estimator_label(estimator: EstimatorKind) -> &'static str {
    match estimator {
        EstimatorKind::Mb => "constant-step minibatch",
        EstimatorKind::Storm => "momentum with step decay",
        EstimatorKind::Spider => "periodic anchor",
    }
}

/// All presets, in listing order.
pub fn all() -> Vec<Preset> {
    let mut presets = Vec::new();
    for &(s, k, mb_eta, mb_gamma, st_eta, st_gamma, st_alpha) in SYNTHETIC_ROWS {
        for estimator in [EstimatorKind::Mb, EstimatorKind::Storm] {
            let (c_eta, c_gamma, c_alpha) = match estimator {
                EstimatorKind::Mb => (mb_eta, mb_gamma, 1.0),
                _ => (st_eta, st_gamma, st_alpha),
            };
            presets.push(Preset {
                name: format!("synthetic-s{s}-k{k}-{}", estimator.name()),
                summary: format!(
                    "synthetic, S={s}, K={k}, batch 5, {}",
                    estimator_label(estimator)
                ),
                config: synthetic_config(s, k, estimator, c_eta, c_gamma, c_alpha),
            });
        }
    }
    for &(s, k, b, mb_eta, mb_gamma, st_eta, st_gamma, st_alpha) in AUC_ROWS {
        for estimator in [EstimatorKind::Mb, EstimatorKind::Storm] {
            let (c_eta, c_gamma, c_alpha) = match estimator {
                EstimatorKind::Mb => (mb_eta, mb_gamma, 1.0),
                _ => (st_eta, st_gamma, st_alpha),
            };
            presets.push(Preset {
                name: format!("auc-s{s}-k{k}-b{b}-{}", estimator.name()),
                summary: format!(
                    "auc, S={s}, K={k}, batch {b}, {}",
                    estimator_label(estimator)
                ),
                config: auc_config(s, k, b, 0.5, estimator, c_eta, c_gamma, c_alpha),
            });
        }
    }
    for &(k, mb_eta, mb_gamma, st_eta, st_gamma, st_alpha) in AUC_SORTED_ROWS {
        for estimator in [EstimatorKind::Mb, EstimatorKind::Storm] {
            let (c_eta, c_gamma, c_alpha) = match estimator {
                EstimatorKind::Mb => (mb_eta, mb_gamma, 1.0),
                _ => (st_eta, st_gamma, st_alpha),
            };
            presets.push(Preset {
                name: format!("auc-sorted-s5-k{k}-b10-{}", estimator.name()),
                summary: format!(
                    "auc, label-sorted clients, S=5, K={k}, batch 10, {}",
                    estimator_label(estimator)
                ),
                config: auc_config(5, k, 10, 1.0, estimator, c_eta, c_gamma, c_alpha),
            });
        }
    }
    presets
}

/// Look up a preset by exact name.
pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{canonical_text, parse_experiment};

    #[test]
    fn there_are_sixty_distinct_presets_and_all_validate() {
        let presets = all();
        assert_eq!(presets.len(), 9 * 2 + 18 * 2 + 3 * 2);
        let mut names: Vec<&str> = presets.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), presets.len(), "preset names must be unique");
        for preset in &presets {
            preset
                .config
                .run
                .validate()
                .unwrap_or_else(|e| panic!("{} is invalid: {e}", preset.name));
        }
    }

    #[test]
    fn every_preset_round_trips_through_the_config_format() {
        for preset in all() {
            let text = canonical_text(&preset.config, None);
            let reparsed = parse_experiment(&text)
                .unwrap_or_else(|e| panic!("{} failed to reparse: {e}", preset.name));
            assert_eq!(reparsed, preset.config, "{} drifted in round trip", preset.name);
        }
    }

    #[test]
    fn tuned_step_values_are_frozen() {
        let p = find("synthetic-s20-k10-mb").unwrap().config;
        assert_eq!((p.run.c_eta, p.run.c_gamma), (1e-3, 1e-2));
        // The source table tunes gamma an order above eta for this cell.
        let p = find("synthetic-s20-k20-mb").unwrap().config;
        assert_eq!((p.run.c_eta, p.run.c_gamma), (1e-4, 1e-3));
        let p = find("synthetic-s5-k10-storm").unwrap().config;
        assert_eq!(
            (p.run.c_eta, p.run.c_gamma, p.run.c_alpha, p.run.rho),
            (1e-3, 1e-2, 10.0, 1.0 / 3.0)
        );
        let p = find("auc-s5-k20-b10-mb").unwrap().config;
        assert_eq!((p.run.c_eta, p.run.c_gamma), (1.0, 1.0));
        let p = find("auc-s10-k1-b10-mb").unwrap().config;
        assert_eq!((p.run.c_eta, p.run.c_gamma), (1.0, 1e-3));
        let p = find("auc-sorted-s5-k10-b10-storm").unwrap().config;
        assert_eq!(
            (p.run.c_eta, p.run.c_gamma, p.run.c_alpha, p.run.rho),
            (1e-1, 1e-2, 10.0, 0.2)
        );
    }

    #[test]
    fn sorted_presets_use_fully_label_sorted_allocation() {
        for preset in all() {
            let fed_sgda::ProblemConfig::Auc(c) = &preset.config.run.problem else {
                continue;
            };
            if preset.name.starts_with("auc-sorted-") {
                assert_eq!(c.sorted_fraction, 1.0, "{}", preset.name);
            } else {
                assert_eq!(c.sorted_fraction, 0.5, "{}", preset.name);
            }
        }
    }

    #[test]
    fn unknown_names_return_none() {
        assert!(find("synthetic-s7-k7-mb").is_none());
    }
}
