//! Experiment orchestration: multi-seed runs, grid sweeps, verification,
//! dataset export, and the CSV/metadata output contract.
//!
//! Output layout for a run with `output = <dir>`:
//!
//! ```text
//! <dir>/seed-<s>.csv     one per seed
//! <dir>/mean.csv         cross-seed means, same columns
//! <dir>/metadata.txt     config echo, per-seed constants, aggregate summary
//! ```
//!
//! A sweep nests one such directory per cell under its output directory and
//! adds `sweep-summary.csv` (one row per cell) once every cell has finished.
//!
//! CSV schema (fixed order):
//! `round,eta,gamma,alpha,grad_phi_norm_sq,phi_minus_f,eps_x,eps_y,potential_shifted,clients_contacted`
//! plus a trailing `test_auc` column for AUC-family runs. Row `t` describes
//! the state entering round `t`. Floats are shortest round-trip decimals, so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, ensure, Context, Result};
use rayon::prelude::*;

use crate::config::{sweep_cells, ExperimentConfig, SweepGrid};
use fed_sgda::{
    auc_metric, lipschitz_constants, phi_star_estimate, round_schedule, run_round, vecops,
    verify_suite, write_dataset_text, AucSample, CheckResult, ClientDataset, Problem,
    PrimalDualPoint, RoundMetrics, Sample, ServerState, SmoothnessConstants, VerifyOptions,
};

/// Everything one seed produced.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Constants of this seed's generated instance.
    pub consts: SmoothnessConstants,
    /// One row per round; row `t` is the state entering round `t`.
    pub metrics: Vec<RoundMetrics>,
    /// Held-out AUC of the entering state per round (AUC family only).
    pub test_auc: Option<Vec<f64>>,
    /// Class weight frozen from the generated data (AUC family only).
    pub frozen_tau: Option<f64>,
    /// Estimated outer minimum Φ(x*), when requested.
    pub phi_star: Option<f64>,
    /// Initial optimality gap `2Φ(x₀) − Φ(x*) − f(x₀, y₀)`, when Φ(x*)
    /// was estimated. Equals the first row's shifted potential minus Φ(x*)
    /// because the round-0 anchor distance is zero.
    pub c0_estimate: Option<f64>,
}

/// Cross-seed aggregate of one experiment.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub per_seed: Vec<SeedOutcome>,
    /// Per-round means of the metric columns. Schedule columns and client
    /// counts are identical across seeds and are copied, not averaged.
    pub mean_rounds: Vec<RoundMetrics>,
    pub mean_test_auc: Option<Vec<f64>>,
    /// Per-round min/max of the convergence measure `‖∇Φ‖²`.
    pub grad_phi_min: Vec<f64>,
    pub grad_phi_max: Vec<f64>,
    /// Cross-seed mean of the final round's `‖∇Φ‖²`.
    pub final_grad_phi_mean: f64,
    pub c0_mean: Option<f64>,
}

/// One finished sweep cell.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub name: String,
    pub config: ExperimentConfig,
    pub summary: RunSummary,
}

/// Run every seed of the experiment (in parallel), aggregate, and write the
/// output files if an output directory is configured. Any seed failure
/// aborts the whole experiment before anything is written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.run.validate()?;
    ensure!(!cfg.seeds.is_empty(), "at least one seed is required");
    let per_seed: Vec<SeedOutcome> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            run_seed(cfg, seed).with_context(|| format!("seed {seed}"))
        })
        .collect::<Result<_>>()?;
    let summary = aggregate(cfg, per_seed)?;
    if let Some(dir) = &cfg.output {
        write_run_outputs(dir, cfg, &summary)?;
    }
    Ok(summary)
}

/// Run the full Cartesian grid. Cells run in parallel, share the base
/// seeds, and write into per-cell directories; the combined summary table
/// is written once after every cell has completed.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<CellSummary>> {
    let cells = sweep_cells(base, grid);
    ensure!(!cells.is_empty(), "sweep grid has no cells");
    let summaries: Vec<RunSummary> = cells
        .par_iter()
        .map(|cell| {
            run_experiment(&cell.config).with_context(|| format!("sweep cell {}", cell.name))
        })
        .collect::<Result<_>>()?;
    let results: Vec<CellSummary> = cells
        .into_iter()
        .zip(summaries)
        .map(|(cell, summary)| CellSummary {
            name: cell.name,
            config: cell.config,
            summary,
        })
        .collect();
    if let Some(dir) = &base.output {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        let path = dir.join("sweep-summary.csv");
        write_text(&path, &sweep_summary_csv(&results))?;
    }
    Ok(results)
}

/// Run the oracle self-verification suite on the config's instance
/// (generated with the first seed).
pub fn verify(cfg: &ExperimentConfig, canary: bool) -> Result<Vec<CheckResult>> {
    let seed = cfg.seeds[0];
    let instance = cfg.run.problem.instantiate(seed)?;
    let consts = lipschitz_constants(&instance.problem, &instance.clients)?;
    let report = verify_suite(
        &instance.problem,
        &instance.clients,
        &consts,
        seed,
        VerifyOptions { canary },
    )?;
    Ok(report)
}

/// Export the generated datasets of every seed into the output directory:
/// `seed-<s>-train.txt` per seed, plus `seed-<s>-heldout.txt` for the AUC
/// family (the held-out samples as one pseudo-client). Returns the paths
/// written.
pub fn generate_data(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg
        .output
        .as_ref()
        .ok_or_else(|| anyhow!("dataset export needs an `output` directory in the config"))?;
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::new();
    for &seed in &cfg.seeds {
        let instance = cfg.run.problem.instantiate(seed)?;
        let train = dir.join(format!("seed-{seed}-train.txt"));
        write_clients(&train, &instance.clients)?;
        written.push(train);
        if let Some(held_out) = &instance.held_out {
            let wrapped = ClientDataset {
                client_index: 0,
                samples: held_out.iter().cloned().map(Sample::Auc).collect(),
            };
            let path = dir.join(format!("seed-{seed}-heldout.txt"));
            write_clients(&path, std::slice::from_ref(&wrapped))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn write_clients(path: &Path, clients: &[ClientDataset]) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let mut out = std::io::BufWriter::new(file);
    write_dataset_text(clients, &mut out)?;
    out.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    let instance = cfg.run.problem.instantiate(seed)?;
    let consts = lipschitz_constants(&instance.problem, &instance.clients)?;
    let (p, q) = instance.problem.dims();
    let mut state = ServerState::new(seed, PrimalDualPoint::zeros(p, q), cfg.run.estimator);
    let mut metrics = Vec::with_capacity(cfg.run.rounds);
    let mut test_auc = instance
        .held_out
        .as_ref()
        .map(|_| Vec::with_capacity(cfg.run.rounds));
    for t in 0..cfg.run.rounds {
        if let (Some(held_out), Some(series)) = (&instance.held_out, test_auc.as_mut()) {
            series.push(held_out_auc(&instance.problem, held_out, &state.curr)?);
        }
        let sched = round_schedule(&cfg.run, &consts, t);
        let (next, row) = run_round(
            state,
            &cfg.run,
            &instance.problem,
            &instance.clients,
            &consts,
            &sched,
        )?;
        state = next;
        metrics.push(row);
    }
    let phi_star = if cfg.estimate_phi_star {
        Some(phi_star_estimate(
            &instance.problem,
            &instance.clients,
            &consts,
            seed,
        )?)
    } else {
        None
    };
    let c0_estimate = phi_star.map(|ps| metrics[0].potential_shifted - ps);
    let frozen_tau = match &instance.problem {
        Problem::Auc(c) => Some(c.tau),
        Problem::Synthetic(_) => None,
    };
    Ok(SeedOutcome {
        seed,
        consts,
        metrics,
        test_auc,
        frozen_tau,
        phi_star,
        c0_estimate,
    })
}

/// Held-out AUC of the linear scorer packed in the primal block's first `d`
/// coordinates.
fn held_out_auc(
    problem: &Problem,
    held_out: &[AucSample],
    point: &PrimalDualPoint,
) -> Result<f64> {
    let Problem::Auc(c) = problem else {
        return Err(anyhow!("held-out evaluation needs an AUC problem"));
    };
    let theta = &point.x[..c.d];
    let scores: Vec<f64> = held_out.iter().map(|s| vecops::dot(theta, &s.w)).collect();
    let labels: Vec<i8> = held_out.iter().map(|s| s.label).collect();
    Ok(auc_metric(&scores, &labels)?)
}

fn aggregate(cfg: &ExperimentConfig, per_seed: Vec<SeedOutcome>) -> Result<RunSummary> {
    let rounds = cfg.run.rounds;
    for outcome in &per_seed {
        ensure!(
            outcome.metrics.len() == rounds,
            "seed {} produced {} metric rows for {rounds} rounds",
            outcome.seed,
            outcome.metrics.len()
        );
        if let Some(series) = &outcome.test_auc {
            ensure!(
                series.len() == rounds,
                "seed {} produced {} AUC values for {rounds} rounds",
                outcome.seed,
                series.len()
            );
        }
    }
    let inv = 1.0 / per_seed.len() as f64;
    let mut mean_rounds = Vec::with_capacity(rounds);
    let mut grad_phi_min = vec![f64::INFINITY; rounds];
    let mut grad_phi_max = vec![f64::NEG_INFINITY; rounds];
    for t in 0..rounds {
        let first = &per_seed[0].metrics[t];
        let mut mean = RoundMetrics {
            round: first.round,
            // Schedule columns are functions of (config, constants, round)
            // only... except that the constants are per-seed under the
            // theoretical rule, so averaging would blur them. The columns are
            // copied from the first seed and the remaining columns averaged;
            // per-seed CSVs carry the exact per-seed values.
            eta: first.eta,
            gamma: first.gamma,
            alpha: first.alpha,
            grad_phi_norm_sq: 0.0,
            phi_minus_f: 0.0,
            eps_x: 0.0,
            eps_y: 0.0,
            potential_shifted: 0.0,
            clients_contacted: first.clients_contacted,
        };
        for outcome in &per_seed {
            let row = &outcome.metrics[t];
            mean.grad_phi_norm_sq += row.grad_phi_norm_sq;
            mean.phi_minus_f += row.phi_minus_f;
            mean.eps_x += row.eps_x;
            mean.eps_y += row.eps_y;
            mean.potential_shifted += row.potential_shifted;
            grad_phi_min[t] = grad_phi_min[t].min(row.grad_phi_norm_sq);
            grad_phi_max[t] = grad_phi_max[t].max(row.grad_phi_norm_sq);
        }
        mean.grad_phi_norm_sq *= inv;
        mean.phi_minus_f *= inv;
        mean.eps_x *= inv;
        mean.eps_y *= inv;
        mean.potential_shifted *= inv;
        mean_rounds.push(mean);
    }
    let mean_test_auc = if per_seed.iter().all(|o| o.test_auc.is_some()) {
        Some(
            (0..rounds)
                .map(|t| {
                    let sum: f64 = per_seed
                        .iter()
                        .map(|o| o.test_auc.as_ref().expect("checked above")[t])
                        .sum();
                    sum * inv
                })
                .collect(),
        )
    } else {
        None
    };
    let final_grad_phi_mean = mean_rounds
        .last()
        .map(|m| m.grad_phi_norm_sq)
        .expect("rounds >= 1 is enforced by config validation");
    let c0_mean = if per_seed.iter().all(|o| o.c0_estimate.is_some()) {
        let sum: f64 = per_seed.iter().filter_map(|o| o.c0_estimate).sum();
        Some(sum * inv)
    } else {
        None
    };
    Ok(RunSummary {
        per_seed,
        mean_rounds,
        mean_test_auc,
        grad_phi_min,
        grad_phi_max,
        final_grad_phi_mean,
        c0_mean,
    })
}

fn write_run_outputs(dir: &Path, cfg: &ExperimentConfig, summary: &RunSummary) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    for outcome in &summary.per_seed {
        let path = dir.join(format!("seed-{}.csv", outcome.seed));
        write_text(
            &path,
            &metrics_csv(&outcome.metrics, outcome.test_auc.as_deref()),
        )?;
    }
    write_text(
        &dir.join("mean.csv"),
        &metrics_csv(&summary.mean_rounds, summary.mean_test_auc.as_deref()),
    )?;
    write_text(&dir.join("metadata.txt"), &metadata_text(cfg, summary))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Render metric rows in the fixed CSV schema (plus `test_auc` when given).
pub fn metrics_csv(rows: &[RoundMetrics], test_auc: Option<&[f64]>) -> String {
    let mut out = String::new();
    out.push_str(
        "round,eta,gamma,alpha,grad_phi_norm_sq,phi_minus_f,eps_x,eps_y,\
         potential_shifted,clients_contacted",
    );
    if test_auc.is_some() {
        out.push_str(",test_auc");
    }
    out.push('\n');
    for (t, m) in rows.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            m.round,
            m.eta,
            m.gamma,
            m.alpha,
            m.grad_phi_norm_sq,
            m.phi_minus_f,
            m.eps_x,
            m.eps_y,
            m.potential_shifted,
            m.clients_contacted
        );
        if let Some(series) = test_auc {
            let _ = write!(out, ",{}", series[t]);
        }
        out.push('\n');
    }
    out
}

fn sweep_summary_csv(cells: &[CellSummary]) -> String {
    let mut out = String::new();
    out.push_str(
        "cell,estimator,clients_per_round,local_steps,rounds,final_grad_phi_mean,c0_mean\n",
    );
    for cell in cells {
        let run = &cell.config.run;
        let c0 = cell
            .summary
            .c0_mean
            .map(|v| v.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell.name,
            run.estimator.name(),
            run.clients_per_round,
            run.local_steps,
            run.rounds,
            cell.summary.final_grad_phi_mean,
            c0
        );
    }
    out
}

fn metadata_text(cfg: &ExperimentConfig, summary: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str("# experiment metadata\n");
    out.push_str("# metrics cadence: every round; CSV row t is the state entering round t\n");
    out.push_str("# floats are shortest round-trip decimals\n\n");
    out.push_str("[config]\n");
    out.push_str(&crate::config::canonical_text(cfg, None));
    for outcome in &summary.per_seed {
        let c = &outcome.consts;
        let _ = write!(
            out,
            "\n[seed {}]\nl1 = {}\nl2 = {}\nl12 = {}\nl21 = {}\nmu = {}\nl_f = {}\n\
             l_phi = {}\nl_tilde = {}\nsigma1_sq = {}\nsigma2_sq = {}\n",
            outcome.seed,
            c.l1,
            c.l2,
            c.l12,
            c.l21,
            c.mu,
            c.l_f,
            c.l_phi,
            c.l_tilde,
            c.sigma1_sq,
            c.sigma2_sq
        );
        if let Some(tau) = outcome.frozen_tau {
            let _ = writeln!(out, "frozen_tau = {tau}");
        }
        if let Some(phi_star) = outcome.phi_star {
            let _ = writeln!(out, "phi_star = {phi_star}");
        }
        if let Some(c0) = outcome.c0_estimate {
            let _ = writeln!(out, "c0_estimate = {c0}");
        }
        let _ = writeln!(
            out,
            "final_grad_phi_norm_sq = {}",
            outcome
                .metrics
                .last()
                .map(|m| m.grad_phi_norm_sq)
                .unwrap_or(f64::NAN)
        );
    }
    let _ = write!(
        out,
        "\n[aggregate]\nnum_seeds = {}\nfinal_grad_phi_mean = {}\n",
        summary.per_seed.len(),
        summary.final_grad_phi_mean
    );
    if let Some(c0) = summary.c0_mean {
        let _ = writeln!(out, "c0_mean = {c0}");
    }
    if summary.mean_test_auc.is_some() {
        out.push_str(
            "\n# note: test_auc is measured with a linear scorer on generated held-out\n\
             # data; values are specific to this instance and are not comparable to\n\
             # AUC numbers obtained with other models or datasets.\n",
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_experiment, parse_sweep};

    fn tiny_synthetic(extra: &str) -> ExperimentConfig {
        let base = "problem.synthetic.p = 3\nproblem.synthetic.num_clients = 4\n\
                    problem.synthetic.samples_per_client = 6\nrounds = 3\n\
                    clients_per_round = 2\nlocal_steps = 2\nbatch_size = 3\n\
                    estimate_phi_star = false\n";
        parse_experiment(&format!("{base}{extra}")).unwrap()
    }

    fn tiny_auc(extra: &str) -> ExperimentConfig {
        let base = "problem.family = auc\nproblem.auc.d = 3\nproblem.auc.num_clients = 4\n\
                    problem.auc.samples_per_client = 10\nrounds = 3\nclients_per_round = 2\n\
                    local_steps = 2\nbatch_size = 3\nestimate_phi_star = false\n";
        parse_experiment(&format!("{base}{extra}")).unwrap()
    }

    #[test]
    fn one_round_one_seed_yields_one_metrics_row() {
        let mut cfg = tiny_synthetic("");
        cfg.run.rounds = 1;
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.per_seed.len(), 1);
        assert_eq!(summary.per_seed[0].metrics.len(), 1);
        assert_eq!(summary.mean_rounds.len(), 1);
        assert_eq!(summary.mean_rounds[0].round, 0);
    }

    #[test]
    fn identical_configs_write_identical_csv_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_synthetic("seeds = 5, 6\n");
        let mut paths = Vec::new();
        for name in ["first", "second"] {
            cfg.output = Some(dir.path().join(name));
            run_experiment(&cfg).unwrap();
            paths.push(cfg.output.clone().unwrap());
        }
        for file in ["seed-5.csv", "seed-6.csv", "mean.csv"] {
            let a = fs::read(paths[0].join(file)).unwrap();
            let b = fs::read(paths[1].join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical runs");
        }
    }

    #[test]
    fn csv_schema_is_stable_and_auc_runs_append_test_auc() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_auc("");
        cfg.output = Some(dir.path().join("out"));
        let summary = run_experiment(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("out/seed-1.csv")).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "round,eta,gamma,alpha,grad_phi_norm_sq,phi_minus_f,eps_x,eps_y,\
             potential_shifted,clients_contacted,test_auc"
        );
        assert_eq!(csv.lines().count(), 1 + cfg.run.rounds);
        // Zero initialization ties every held-out score, so the starting
        // AUC is exactly one half.
        let series = summary.per_seed[0].test_auc.as_ref().unwrap();
        assert_eq!(series[0], 0.5);
        assert_eq!(series.len(), cfg.run.rounds);
        assert!(summary.per_seed[0].frozen_tau.is_some());
    }

    #[test]
    fn synthetic_runs_have_no_auc_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_synthetic("");
        cfg.output = Some(dir.path().join("out"));
        run_experiment(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("out/seed-1.csv")).unwrap();
        assert!(!csv.lines().next().unwrap().contains("test_auc"));
    }

    #[test]
    fn c0_is_first_potential_minus_phi_star() {
        let mut cfg = tiny_synthetic("");
        cfg.estimate_phi_star = true;
        let summary = run_experiment(&cfg).unwrap();
        let outcome = &summary.per_seed[0];
        let phi_star = outcome.phi_star.unwrap();
        assert_eq!(
            outcome.c0_estimate.unwrap(),
            outcome.metrics[0].potential_shifted - phi_star
        );
        // The initial gap dominates the best reachable value, so C0 > 0 on
        // any nontrivial instance.
        assert!(outcome.c0_estimate.unwrap() > 0.0);
        assert_eq!(
            summary.c0_mean.unwrap(),
            outcome.c0_estimate.unwrap() * (1.0 / 1.0)
        );
    }

    #[test]
    fn cross_seed_mean_is_sum_times_reciprocal() {
        let cfg = tiny_synthetic("seeds = 2, 3\n");
        let summary = run_experiment(&cfg).unwrap();
        let inv = 1.0 / 2.0;
        for (t, mean) in summary.mean_rounds.iter().enumerate() {
            let a = &summary.per_seed[0].metrics[t];
            let b = &summary.per_seed[1].metrics[t];
            assert_eq!(
                mean.grad_phi_norm_sq,
                (a.grad_phi_norm_sq + b.grad_phi_norm_sq) * inv
            );
            assert_eq!(summary.grad_phi_min[t], a.grad_phi_norm_sq.min(b.grad_phi_norm_sq));
            assert_eq!(summary.grad_phi_max[t], a.grad_phi_norm_sq.max(b.grad_phi_norm_sq));
            assert_eq!(mean.eta, a.eta);
            assert_eq!(mean.clients_contacted, a.clients_contacted);
        }
        assert_eq!(
            summary.final_grad_phi_mean,
            summary.mean_rounds.last().unwrap().grad_phi_norm_sq
        );
    }

    #[test]
    fn single_cell_sweep_equals_run_experiment() {
        let (cfg, grid) = parse_sweep(
            "problem.synthetic.p = 3\nproblem.synthetic.num_clients = 4\n\
             problem.synthetic.samples_per_client = 6\nrounds = 3\nclients_per_round = 2\n\
             local_steps = 2\nbatch_size = 3\nestimate_phi_star = false\n",
        )
        .unwrap();
        let cells = sweep(&cfg, &grid).unwrap();
        assert_eq!(cells.len(), 1);
        let direct = run_experiment(&cfg).unwrap();
        assert_eq!(cells[0].summary.mean_rounds, direct.mean_rounds);
        assert_eq!(
            cells[0].summary.final_grad_phi_mean,
            direct.final_grad_phi_mean
        );
    }

    #[test]
    fn sweep_cells_share_data_generation_and_write_summary() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("grid");
        let (mut cfg, grid) = parse_sweep(
            "problem.synthetic.p = 3\nproblem.synthetic.num_clients = 4\n\
             problem.synthetic.samples_per_client = 6\nrounds = 3\nclients_per_round = 2\n\
             local_steps = 2\nbatch_size = 3\nestimate_phi_star = false\n\
             sweep.estimators = mb, storm\n",
        )
        .unwrap();
        cfg.output = Some(out.clone());
        let cells = sweep(&cfg, &grid).unwrap();
        assert_eq!(cells.len(), 2);
        // Same seed + same problem config => identical generated instances,
        // so the measured constants coincide across estimator cells.
        assert_eq!(cells[0].summary.per_seed[0].consts, cells[1].summary.per_seed[0].consts);
        let table = fs::read_to_string(out.join("sweep-summary.csv")).unwrap();
        assert_eq!(table.lines().count(), 3);
        assert!(table.lines().nth(1).unwrap().starts_with("est-mb_S-2_K-2,mb,2,2,3,"));
        assert!(out.join("est-storm_S-2_K-2/mean.csv").exists());
        assert!(out.join("est-mb_S-2_K-2/metadata.txt").exists());
    }

    #[test]
    fn generated_datasets_round_trip_through_the_text_format() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_auc("");
        cfg.output = Some(dir.path().join("data"));
        let written = generate_data(&cfg).unwrap();
        assert_eq!(written.len(), 2); // train + heldout for one seed
        let instance = cfg.run.problem.instantiate(cfg.seeds[0]).unwrap();
        let mut reader =
            std::io::BufReader::new(fs::File::open(dir.path().join("data/seed-1-train.txt")).unwrap());
        let parsed = fed_sgda::parse_dataset_text(&mut reader).unwrap();
        assert_eq!(parsed, instance.clients);
    }

    #[test]
    fn generate_data_requires_an_output_directory() {
        let cfg = tiny_synthetic("");
        let err = generate_data(&cfg).unwrap_err();
        assert!(err.to_string().contains("output"), "got: {err}");
    }

    #[test]
    fn metadata_mentions_constants_and_auc_note() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_auc("");
        cfg.output = Some(dir.path().join("out"));
        run_experiment(&cfg).unwrap();
        let meta = fs::read_to_string(dir.path().join("out/metadata.txt")).unwrap();
        assert!(meta.contains("[config]"));
        assert!(meta.contains("problem.family = auc"));
        assert!(meta.contains("[seed 1]"));
        assert!(meta.contains("l_tilde = "));
        assert!(meta.contains("frozen_tau = "));
        assert!(meta.contains("not comparable"));
    }
}
