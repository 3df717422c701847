//! The experiment-config file format: flat `key = value` lines.
//!
//! Syntax
//! ------
//! * One `key = value` pair per line; surrounding whitespace is ignored.
//! * `#` starts a comment (full-line or trailing); values therefore cannot
//!   contain `#`.
//! * Keys are lowercase words of `[a-z0-9_.]`; dots select nested config
//!   (e.g. `problem.synthetic.nu`).
//! * Lists (seeds, sweep axes) are comma-separated.
//! * Every key has a default, so the empty file is a valid config.
//! * Unknown keys, duplicate keys, and keys of the non-selected problem
//!   family are errors, with line numbers in the message.
//!
//! Keys and defaults
//! -----------------
//! ```text
//! problem.family = synthetic            # synthetic | auc
//! # synthetic family (used when family = synthetic)
//! problem.synthetic.p = 10              # block dimension (x and y)
//! problem.synthetic.nu = 1              # bump width > 0
//! problem.synthetic.mu = 1              # dual concavity > 0
//! problem.synthetic.num_clients = 20
//! problem.synthetic.samples_per_client = 20
//! problem.synthetic.center_std = 0.5    # client-center variance
//! problem.synthetic.sample_std = 0.1    # within-client sample variance
//! # auc family (used when family = auc); the class weight tau is not a key:
//! # it is frozen to the empirical positive fraction at data generation
//! problem.auc.d = 10                    # feature dimension (primal dim d+2)
//! problem.auc.num_clients = 20
//! problem.auc.samples_per_client = 40
//! problem.auc.positive_fraction = 0.3
//! problem.auc.sorted_fraction = 0.5     # label-sorted allocation share
//! problem.auc.separation = 2            # class-mean distance
//! rounds = 200                          # communication rounds T
//! clients_per_round = 5                 # S
//! local_steps = 5                       # K
//! batch_size = 5                        # b
//! estimator = mb                        # mb | storm | spider
//! schedule = practical                  # practical | theoretical
//! c_eta = 0.001                         # practical eta (constant or decay numerator)
//! c_gamma = 0.001                       # practical gamma
//! c_alpha = 1                           # momentum-weight numerator (storm)
//! rho = 0.3333333333333333              # decay exponent in (0, 1] (storm)
//! spider_period = 5                     # anchor period m
//! spider_big_batch = 25                 # anchor-round client batch
//! sampling = with_replacement           # with_replacement | without_replacement
//! share_subsets = false                 # reuse collection subset for updates
//! seeds = 1                             # distinct 64-bit seeds, comma-separated
//! # output = runs/my-experiment         # directory for CSV + metadata (omit: no files)
//! estimate_phi_star = true              # estimate the outer minimum for C0 reporting
//! # sweep axes (sweep subcommand only; default = the base value)
//! # sweep.clients_per_round = 5, 10, 20
//! # sweep.local_steps = 5, 10, 20
//! # sweep.estimators = mb, storm
//! ```
//!
//! Metrics cadence is fixed: one row per round, describing the state the
//! round starts from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use fed_sgda::{
    AucProblemConfig, EstimatorKind, ProblemConfig, RunConfig, SamplingMode, ScheduleKind,
    SyntheticProblemConfig,
};

/// A full experiment: the run protocol plus harness-level settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    /// Seeds to replay the run under; one CSV per seed.
    pub seeds: Vec<u64>,
    /// Output directory; `None` keeps everything in memory.
    pub output: Option<PathBuf>,
    /// Estimate the outer minimum once per seed for the initial-gap report.
    pub estimate_phi_star: bool,
}

/// Axes of a sweep: the Cartesian grid over client batch, local steps, and
/// estimator. Missing axes default to the base config's single value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub clients_per_round: Vec<usize>,
    pub local_steps: Vec<usize>,
    pub estimators: Vec<EstimatorKind>,
}

/// One cell of a sweep: its directory name and the fully resolved config.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub config: ExperimentConfig,
}

/// Resolve a grid into its cells, in estimator-major, then client-batch,
/// then local-steps order. Every cell shares the base seeds (so data
/// generation and client sampling coincide across cells) and writes under
/// `<output>/<cell name>`.
pub fn sweep_cells(base: &ExperimentConfig, grid: &SweepGrid) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &estimator in &grid.estimators {
        for &clients_per_round in &grid.clients_per_round {
            for &local_steps in &grid.local_steps {
                let name = format!(
                    "est-{}_S-{}_K-{}",
                    estimator.name(),
                    clients_per_round,
                    local_steps
                );
                let mut config = base.clone();
                config.run.estimator = estimator;
                config.run.clients_per_round = clients_per_round;
                config.run.local_steps = local_steps;
                config.output = base.output.as_ref().map(|dir| dir.join(&name));
                cells.push(SweepCell { name, config });
            }
        }
    }
    cells
}

/// Parse a single-run config; `sweep.*` keys are rejected here.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let (config, _grid) = parse_internal(text, false)?;
    Ok(config)
}

/// Parse a sweep config; missing `sweep.*` axes default to the base value
/// (a one-cell grid reproduces `run`). Every cell is validated up front.
pub fn parse_sweep(text: &str) -> Result<(ExperimentConfig, SweepGrid)> {
    let (config, grid) = parse_internal(text, true)?;
    Ok((config, grid.expect("sweep parse always produces a grid")))
}

struct RawEntry {
    line: usize,
    value: String,
    used: bool,
}

struct RawConfig {
    entries: BTreeMap<String, RawEntry>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                bail!("line {line}: expected `key = value`, got `{stripped}`");
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
            {
                bail!(
                    "line {line}: key `{key}` must be lowercase letters, digits, `_`, and `.`"
                );
            }
            if value.is_empty() {
                bail!("line {line}: key `{key}` has an empty value");
            }
            if let Some(prev) = entries.get(key) {
                bail!(
                    "line {line}: key `{key}` already set on line {}",
                    prev.line
                );
            }
            entries.insert(
                key.to_string(),
                RawEntry {
                    line,
                    value: value.to_string(),
                    used: false,
                },
            );
        }
        Ok(RawConfig { entries })
    }

    /// Consume a key's value, if present.
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let entry = self.entries.get_mut(key)?;
        entry.used = true;
        Some((entry.line, entry.value.clone()))
    }

    fn f64_key(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| anyhow!("line {line}: value of `{key}` must be a number, got `{v}`")),
        }
    }

    fn usize_key(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| {
                anyhow!("line {line}: value of `{key}` must be a nonnegative integer, got `{v}`")
            }),
        }
    }

    fn bool_key(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((_, v)) if v == "true" => Ok(true),
            Some((_, v)) if v == "false" => Ok(false),
            Some((line, v)) => Err(anyhow!(
                "line {line}: value of `{key}` must be true or false, got `{v}`"
            )),
        }
    }

    fn choice_key(&mut self, key: &str, allowed: &[&str], default: &str) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some((_, v)) if allowed.contains(&v.as_str()) => Ok(v),
            Some((line, v)) => Err(anyhow!(
                "line {line}: value of `{key}` must be one of {}, got `{v}`",
                allowed.join(" | ")
            )),
        }
    }

    fn u64_list_key(&mut self, key: &str, default: &[u64]) -> Result<Vec<u64>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => split_list(&v, line, key)?
                .iter()
                .map(|item| {
                    item.parse().map_err(|_| {
                        anyhow!(
                            "line {line}: `{key}` items must be nonnegative integers, got `{item}`"
                        )
                    })
                })
                .collect(),
        }
    }

    fn usize_list_key(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.take(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => split_list(&v, line, key)?
                .iter()
                .map(|item| {
                    item.parse().map_err(|_| {
                        anyhow!(
                            "line {line}: `{key}` items must be nonnegative integers, got `{item}`"
                        )
                    })
                })
                .collect(),
        }
    }

    /// Error if any key with the given prefix is present (used or not).
    fn forbid_prefix(&self, prefix: &str, reason: &str) -> Result<()> {
        let mut offenders: Vec<(usize, &str)> = self
            .entries
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(k, e)| (e.line, k.as_str()))
            .collect();
        offenders.sort_unstable();
        if let Some((line, key)) = offenders.first() {
            bail!("line {line}: key `{key}` is not allowed here ({reason})");
        }
        Ok(())
    }

    /// Error on any key that was never consumed.
    fn finish(self) -> Result<()> {
        let mut unused: Vec<(usize, String)> = self
            .entries
            .into_iter()
            .filter(|(_, e)| !e.used)
            .map(|(k, e)| (e.line, k))
            .collect();
        unused.sort_unstable();
        if unused.is_empty() {
            return Ok(());
        }
        let listed = unused
            .iter()
            .map(|(line, key)| format!("`{key}` (line {line})"))
            .collect::<Vec<_>>()
            .join(", ");
        bail!("unknown config keys: {listed}");
    }
}

fn split_list<'a>(value: &'a str, line: usize, key: &str) -> Result<Vec<&'a str>> {
    let items: Vec<&str> = value.split(',').map(str::trim).collect();
    if items.iter().any(|s| s.is_empty()) {
        bail!("line {line}: `{key}` has an empty list item");
    }
    Ok(items)
}

fn parse_estimator(name: &str) -> EstimatorKind {
    match name {
        "mb" => EstimatorKind::Mb,
        "storm" => EstimatorKind::Storm,
        "spider" => EstimatorKind::Spider,
        _ => unreachable!("estimator names are validated before dispatch"),
    }
}

fn parse_internal(text: &str, allow_sweep: bool) -> Result<(ExperimentConfig, Option<SweepGrid>)> {
    let mut raw = RawConfig::parse(text)?;

    let family = raw.choice_key("problem.family", &["synthetic", "auc"], "synthetic")?;
    let problem = match family.as_str() {
        "synthetic" => {
            raw.forbid_prefix("problem.auc.", "problem.family is synthetic")?;
            ProblemConfig::Synthetic(SyntheticProblemConfig {
                p: raw.usize_key("problem.synthetic.p", 10)?,
                nu: raw.f64_key("problem.synthetic.nu", 1.0)?,
                mu: raw.f64_key("problem.synthetic.mu", 1.0)?,
                num_clients: raw.usize_key("problem.synthetic.num_clients", 20)?,
                samples_per_client: raw.usize_key("problem.synthetic.samples_per_client", 20)?,
                center_std: raw.f64_key("problem.synthetic.center_std", 0.5)?,
                sample_std: raw.f64_key("problem.synthetic.sample_std", 0.1)?,
            })
        }
        "auc" => {
            raw.forbid_prefix("problem.synthetic.", "problem.family is auc")?;
            ProblemConfig::Auc(AucProblemConfig {
                d: raw.usize_key("problem.auc.d", 10)?,
                // The class weight is data-determined: generation freezes it
                // to the empirical positive fraction, so it is not a key.
                tau: 0.0,
                num_clients: raw.usize_key("problem.auc.num_clients", 20)?,
                samples_per_client: raw.usize_key("problem.auc.samples_per_client", 40)?,
                positive_fraction: raw.f64_key("problem.auc.positive_fraction", 0.3)?,
                sorted_fraction: raw.f64_key("problem.auc.sorted_fraction", 0.5)?,
                separation: raw.f64_key("problem.auc.separation", 2.0)?,
            })
        }
        _ => unreachable!("family names are validated before dispatch"),
    };

    let estimator = parse_estimator(&raw.choice_key(
        "estimator",
        &["mb", "storm", "spider"],
        "mb",
    )?);
    let schedule = match raw
        .choice_key("schedule", &["practical", "theoretical"], "practical")?
        .as_str()
    {
        "practical" => ScheduleKind::Practical,
        _ => ScheduleKind::Theoretical,
    };
    let sampling = match raw
        .choice_key(
            "sampling",
            &["with_replacement", "without_replacement"],
            "with_replacement",
        )?
        .as_str()
    {
        "with_replacement" => SamplingMode::WithReplacement,
        _ => SamplingMode::WithoutReplacement,
    };

    let run = RunConfig {
        problem,
        rounds: raw.usize_key("rounds", 200)?,
        clients_per_round: raw.usize_key("clients_per_round", 5)?,
        local_steps: raw.usize_key("local_steps", 5)?,
        batch_size: raw.usize_key("batch_size", 5)?,
        estimator,
        schedule,
        c_eta: raw.f64_key("c_eta", 1e-3)?,
        c_gamma: raw.f64_key("c_gamma", 1e-3)?,
        c_alpha: raw.f64_key("c_alpha", 1.0)?,
        rho: raw.f64_key("rho", 1.0 / 3.0)?,
        spider_period: raw.usize_key("spider_period", 5)?,
        spider_big_batch: raw.usize_key("spider_big_batch", 25)?,
        sampling,
        share_subsets: raw.bool_key("share_subsets", false)?,
    };

    let seeds = raw.u64_list_key("seeds", &[1])?;
    if seeds.is_empty() {
        bail!("at least one seed is required");
    }
    {
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            bail!("seeds must be distinct, got {seeds:?}");
        }
    }

    let output = raw.take("output").map(|(_, v)| PathBuf::from(v));
    let estimate_phi_star = raw.bool_key("estimate_phi_star", true)?;

    let grid = if allow_sweep {
        let clients_per_round =
            raw.usize_list_key("sweep.clients_per_round", &[run.clients_per_round])?;
        let local_steps = raw.usize_list_key("sweep.local_steps", &[run.local_steps])?;
        let estimator_names: Vec<String> = match raw.take("sweep.estimators") {
            None => vec![run.estimator.name().to_string()],
            Some((line, v)) => split_list(&v, line, "sweep.estimators")?
                .iter()
                .map(|item| {
                    if ["mb", "storm", "spider"].contains(item) {
                        Ok(item.to_string())
                    } else {
                        Err(anyhow!(
                            "line {line}: `sweep.estimators` items must be mb | storm | spider, \
                             got `{item}`"
                        ))
                    }
                })
                .collect::<Result<_>>()?,
        };
        for (axis, values) in [
            ("sweep.clients_per_round", &clients_per_round),
            ("sweep.local_steps", &local_steps),
        ] {
            let mut sorted = values.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != values.len() {
                bail!("`{axis}` values must be distinct, got {values:?}");
            }
        }
        {
            let mut sorted = estimator_names.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != estimator_names.len() {
                bail!("`sweep.estimators` values must be distinct, got {estimator_names:?}");
            }
        }
        Some(SweepGrid {
            clients_per_round,
            local_steps,
            estimators: estimator_names.iter().map(|n| parse_estimator(n)).collect(),
        })
    } else {
        raw.forbid_prefix("sweep.", "sweep axes are only valid for the sweep subcommand")?;
        None
    };

    raw.finish()?;

    let config = ExperimentConfig {
        run,
        seeds,
        output,
        estimate_phi_star,
    };
    config.run.validate()?;
    if let Some(grid) = &grid {
        for cell in sweep_cells(&config, grid) {
            cell.config
                .run
                .validate()
                .map_err(|e| anyhow!("sweep cell {}: {e}", cell.name))?;
        }
    }
    Ok((config, grid))
}

/// Serialize a config back to the file format, every key explicit, floats in
/// shortest round-trip decimal. `parse` of the result reproduces the config
/// exactly.
pub fn canonical_text(config: &ExperimentConfig, grid: Option<&SweepGrid>) -> String {
    let mut out = String::new();
    let run = &config.run;
    match &run.problem {
        ProblemConfig::Synthetic(c) => {
            writeln_kv(&mut out, "problem.family", "synthetic");
            writeln_kv(&mut out, "problem.synthetic.p", c.p);
            writeln_kv(&mut out, "problem.synthetic.nu", c.nu);
            writeln_kv(&mut out, "problem.synthetic.mu", c.mu);
            writeln_kv(&mut out, "problem.synthetic.num_clients", c.num_clients);
            writeln_kv(
                &mut out,
                "problem.synthetic.samples_per_client",
                c.samples_per_client,
            );
            writeln_kv(&mut out, "problem.synthetic.center_std", c.center_std);
            writeln_kv(&mut out, "problem.synthetic.sample_std", c.sample_std);
        }
        ProblemConfig::Auc(c) => {
            writeln_kv(&mut out, "problem.family", "auc");
            writeln_kv(&mut out, "problem.auc.d", c.d);
            writeln_kv(&mut out, "problem.auc.num_clients", c.num_clients);
            writeln_kv(
                &mut out,
                "problem.auc.samples_per_client",
                c.samples_per_client,
            );
            writeln_kv(&mut out, "problem.auc.positive_fraction", c.positive_fraction);
            writeln_kv(&mut out, "problem.auc.sorted_fraction", c.sorted_fraction);
            writeln_kv(&mut out, "problem.auc.separation", c.separation);
        }
    }
    writeln_kv(&mut out, "rounds", run.rounds);
    writeln_kv(&mut out, "clients_per_round", run.clients_per_round);
    writeln_kv(&mut out, "local_steps", run.local_steps);
    writeln_kv(&mut out, "batch_size", run.batch_size);
    writeln_kv(&mut out, "estimator", run.estimator.name());
    writeln_kv(
        &mut out,
        "schedule",
        match run.schedule {
            ScheduleKind::Practical => "practical",
            ScheduleKind::Theoretical => "theoretical",
        },
    );
    writeln_kv(&mut out, "c_eta", run.c_eta);
    writeln_kv(&mut out, "c_gamma", run.c_gamma);
    writeln_kv(&mut out, "c_alpha", run.c_alpha);
    writeln_kv(&mut out, "rho", run.rho);
    writeln_kv(&mut out, "spider_period", run.spider_period);
    writeln_kv(&mut out, "spider_big_batch", run.spider_big_batch);
    writeln_kv(
        &mut out,
        "sampling",
        match run.sampling {
            SamplingMode::WithReplacement => "with_replacement",
            SamplingMode::WithoutReplacement => "without_replacement",
        },
    );
    writeln_kv(&mut out, "share_subsets", run.share_subsets);
    writeln_kv(&mut out, "seeds", join_display(&config.seeds));
    if let Some(path) = &config.output {
        writeln_kv(&mut out, "output", path.display());
    }
    writeln_kv(&mut out, "estimate_phi_star", config.estimate_phi_star);
    if let Some(grid) = grid {
        writeln_kv(
            &mut out,
            "sweep.clients_per_round",
            join_display(&grid.clients_per_round),
        );
        writeln_kv(&mut out, "sweep.local_steps", join_display(&grid.local_steps));
        writeln_kv(
            &mut out,
            "sweep.estimators",
            grid.estimators
                .iter()
                .map(|e| e.name())
                .collect::<Vec<_>>()
                .join(", "),
        );
    }
    out
}

fn writeln_kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

fn join_display<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
