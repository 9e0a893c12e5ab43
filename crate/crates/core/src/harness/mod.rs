//! Seeded experiment sweeps, aggregation and output files.
//!
//! A sweep runs every configured algorithm on every seed. The instance and
//! the payoff stream depend only on the seed, so all algorithms face the
//! same problem and the same noise for the same action choices.
//!
//! Output layout:
//!
//! ```text
//! <out>/config.json
//! <out>/traces/<algorithm>_seed<seed>.csv
//! <out>/epochs/<algorithm>_seed<seed>.jsonl
//! <out>/aggregate.csv
//! <out>/summary.json
//! ```

pub mod audit;
pub mod config;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audit::{audit, AuditReport};
pub use config::{Algorithm, ExperimentConfig, DEFAULT_CONTEXT_SET_SIZE};

use crate::contextual::{run_reduction, ContextSource, ContextualInstance, ReductionConfig};
use crate::elim::{epoch_log_jsonl, run_elimination, ElimConfig, EpochRecord};
use crate::env::{drive, DelayEnv, RunRecord};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, BanditInstance, PayoffKind};
use crate::linucb::LinUcb;
use crate::seed::stream;

/// Instance used for `seed`.
pub fn instance_for(config: &ExperimentConfig, seed: u64) -> BanditInstance {
    generate_instance(seed, config.n, config.k)
        .with_max_delay(config.d)
        .with_payoff_kind(config.payoff_kind)
        .with_noise_law(config.noise_law)
}

/// Payoff stream used for `seed`; independent of the algorithm.
pub fn env_stream(seed: u64) -> ChaCha8Rng {
    stream(seed, "env", 0)
}

/// Result of one (algorithm, seed) run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub algorithm: String,
    pub seed: u64,
    pub record: RunRecord,
    pub epochs: Vec<EpochRecord>,
}

impl RunOutput {
    pub fn final_regret(&self) -> f64 {
        self.record.final_regret()
    }
}

/// Runs `algorithm` on the instance of `seed`.
pub fn run_single(config: &ExperimentConfig, algorithm: &Algorithm, seed: u64) -> Result<RunOutput> {
    let instance = instance_for(config, seed);
    let rng = env_stream(seed);
    let elim = |kind: PayoffKind, epsilon: f64| ElimConfig {
        epsilon,
        guess_mode: config.b_mode,
        spanner_budget: config.spanner_budget,
        beta: config.beta,
        ..ElimConfig::new(kind, config.t, config.d)
    };
    let (record, epochs) = match algorithm {
        Algorithm::ElimLoss => {
            let run = run_elimination(&instance, elim(PayoffKind::Loss, 0.0), rng)?;
            (run.record, run.epochs)
        }
        Algorithm::ElimReward => {
            let run = run_elimination(&instance, elim(PayoffKind::Reward, 0.0), rng)?;
            (run.record, run.epochs)
        }
        Algorithm::ElimMisspecified { epsilon } => {
            let run = run_elimination(&instance, elim(config.payoff_kind, *epsilon), rng)?;
            (run.record, run.epochs)
        }
        Algorithm::Linucb { lambda } => {
            let mut env = DelayEnv::new(instance.clone(), config.t, rng);
            let mut learner = LinUcb::new(instance.actions.clone(), config.payoff_kind, config.t, *lambda);
            drive(&mut env, &mut learner)?;
            (env.finish().0, Vec::new())
        }
        Algorithm::ContextualReduction { delta, context_set_size } => {
            let size = context_set_size.unwrap_or(DEFAULT_CONTEXT_SET_SIZE).min(config.k);
            let ctx = ContextualInstance {
                theta: instance.theta.clone(),
                source: ContextSource::Subsets { pool: instance.actions.clone(), size },
                max_delay: config.d,
                noise_law: config.noise_law,
            };
            let rc = ReductionConfig {
                horizon: config.t,
                delta: *delta,
                cover: config.cover_cfg,
                spanner_budget: config.spanner_budget,
            };
            let run = run_reduction(&ctx, &rc, rng)?;
            (run.record, Vec::new())
        }
    };
    Ok(RunOutput { algorithm: algorithm.label(), seed, record, epochs })
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Rounds kept in the aggregate curve: every `downsample`-th round.
pub fn sampled_rounds(horizon: u64, downsample: u64) -> impl Iterator<Item = u64> {
    let f = downsample.max(1);
    (1..=horizon / f).map(move |i| i * f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: u64,
    pub algorithm: String,
    pub mean_regret: f64,
    pub std_regret: f64,
}

/// Mean and std of cumulative regret across seeds at the sampled rounds.
/// `runs` must all belong to one algorithm and share a horizon.
pub fn aggregate(algorithm: &str, runs: &[&RunRecord], horizon: u64, downsample: u64) -> Vec<AggregateRow> {
    sampled_rounds(horizon, downsample)
        .map(|t| {
            let values: Vec<f64> = runs.iter().map(|r| r.rows[(t - 1) as usize].cum_regret).collect();
            let (mean_regret, std_regret) = mean_std(&values);
            AggregateRow { t, algorithm: algorithm.to_string(), mean_regret, std_regret }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgorithmFinal {
    pub algorithm: String,
    pub mean: f64,
    pub std: f64,
    /// Final regret per seed, in config seed order.
    pub finals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdict {
    pub better: String,
    pub worse: String,
    pub mean_better: f64,
    pub mean_worse: f64,
    /// The better algorithm has strictly lower final regret on every seed.
    pub all_seeds: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RhoStats {
    pub algorithm: String,
    pub epochs: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Summary {
    pub config_hash: String,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub downsample: u64,
    pub finals: Vec<AlgorithmFinal>,
    pub verdicts: Vec<Verdict>,
    pub spanner_rho: Vec<RhoStats>,
}

/// Pairwise ordering of two algorithms' final regrets.
pub fn compare(a: &AlgorithmFinal, b: &AlgorithmFinal) -> Verdict {
    let (better, worse) = if a.mean <= b.mean { (a, b) } else { (b, a) };
    let all_seeds = better.finals.iter().zip(&worse.finals).all(|(x, y)| x < y);
    let verdict = if better.mean == worse.mean {
        "tie".to_string()
    } else if all_seeds {
        "strict ordering in all seeds".to_string()
    } else {
        "ordering of means only".to_string()
    };
    Verdict {
        better: better.algorithm.clone(),
        worse: worse.algorithm.clone(),
        mean_better: better.mean,
        mean_worse: worse.mean,
        all_seeds,
        verdict,
    }
}

fn rho_stats(algorithm: &str, epochs: impl Iterator<Item = f64>) -> Option<RhoStats> {
    let rhos: Vec<f64> = epochs.filter(|r| r.is_finite()).collect();
    if rhos.is_empty() {
        return None;
    }
    Some(RhoStats {
        algorithm: algorithm.to_string(),
        epochs: rhos.len(),
        min: rhos.iter().copied().fold(f64::INFINITY, f64::min),
        mean: rhos.iter().sum::<f64>() / rhos.len() as f64,
        max: rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Builds the summary from finished runs (in algorithm-major, seed-minor
/// order).
pub fn summarize(config: &ExperimentConfig, runs: &[RunOutput], downsample: u64) -> Summary {
    let finals: Vec<AlgorithmFinal> = config
        .algorithms
        .iter()
        .map(|alg| {
            let label = alg.label();
            let finals: Vec<f64> = runs.iter().filter(|r| r.algorithm == label).map(RunOutput::final_regret).collect();
            let (mean, std) = mean_std(&finals);
            AlgorithmFinal { algorithm: label, mean, std, finals }
        })
        .collect();
    let mut verdicts = Vec::new();
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            verdicts.push(compare(&finals[i], &finals[j]));
        }
    }
    let spanner_rho = config
        .algorithms
        .iter()
        .filter_map(|alg| {
            let label = alg.label();
            rho_stats(
                &label,
                runs.iter()
                    .filter(|r| r.algorithm == label)
                    .flat_map(|r| r.epochs.iter().filter(|e| !e.truncated).map(|e| e.rho)),
            )
        })
        .collect();
    Summary {
        config_hash: config.hash(),
        horizon: config.t,
        seeds: config.seeds.clone(),
        downsample,
        finals,
        verdicts,
        spanner_rho,
    }
}

/// Plain-text table of final regrets and verdicts.
pub fn render_table(summary: &Summary) -> String {
    let width = summary.finals.iter().map(|f| f.algorithm.len()).max().unwrap_or(9).max(9);
    let mut out = format!("{:<width$}  {:>12}  {:>12}\n", "algorithm", "mean", "std");
    for f in &summary.finals {
        out.push_str(&format!("{:<width$}  {:>12.3}  {:>12.3}\n", f.algorithm, f.mean, f.std));
    }
    for v in &summary.verdicts {
        out.push_str(&format!("{} < {}: {}\n", v.better, v.worse, v.verdict));
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    pub downsample: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { jobs: None, downsample: 1 }
    }
}

#[derive(Debug)]
pub struct SweepResult {
    pub runs: Vec<RunOutput>,
    pub aggregate: Vec<AggregateRow>,
    pub summary: Summary,
}

pub fn trace_path(out: &Path, algorithm: &str, seed: u64) -> PathBuf {
    out.join("traces").join(format!("{algorithm}_seed{seed}.csv"))
}

pub fn epoch_path(out: &Path, algorithm: &str, seed: u64) -> PathBuf {
    out.join("epochs").join(format!("{algorithm}_seed{seed}.jsonl"))
}

fn prepare_output(out: &Path) -> Result<()> {
    fs::create_dir_all(out.join("traces"))?;
    fs::create_dir_all(out.join("epochs"))?;
    let probe = out.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)?;
    Ok(())
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(fs::File::create(path)?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Runs the sweep in memory without touching the file system.
pub fn run_runs(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<RunOutput>> {
    config.validate()?;
    let tasks: Vec<(&Algorithm, u64)> =
        config.algorithms.iter().flat_map(|a| config.seeds.iter().map(move |&s| (a, s))).collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| tasks.par_iter().map(|(a, s)| run_single(config, a, *s)).collect())
}

/// Runs every (algorithm, seed) pair and writes all outputs under `out`.
pub fn run_sweep(config: &ExperimentConfig, out: &Path, options: SweepOptions) -> Result<SweepResult> {
    config.validate()?;
    prepare_output(out)?;
    let downsample = options.downsample.max(1);
    let runs = run_runs(config, options.jobs)?;
    for r in &runs {
        r.record.write_csv(BufWriter::new(fs::File::create(trace_path(out, &r.algorithm, r.seed))?))?;
        if !r.epochs.is_empty() {
            fs::write(epoch_path(out, &r.algorithm, r.seed), epoch_log_jsonl(&r.epochs)?)?;
        }
    }
    let mut rows = Vec::new();
    for alg in &config.algorithms {
        let label = alg.label();
        let records: Vec<&RunRecord> = runs.iter().filter(|r| r.algorithm == label).map(|r| &r.record).collect();
        rows.extend(aggregate(&label, &records, config.t, downsample));
    }
    write_aggregate(&out.join("aggregate.csv"), &rows)?;
    let summary = summarize(config, &runs, downsample);
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    let mut stored = config.clone();
    stored.output_dir = out.to_path_buf();
    fs::write(out.join("config.json"), stored.to_json()?)?;
    log::info!("sweep finished: {} runs written to {}", runs.len(), out.display());
    Ok(SweepResult { runs, aggregate: rows, summary })
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join("summary.json"))?)?)
}
