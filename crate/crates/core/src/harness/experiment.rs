//! Replicated experiments: per-run environments and algorithm runs, metric
//! curves from the oracle, and aggregation across runs.
//!
//! Every random draw comes from a ChaCha8 stream of the master seed chosen by
//! (purpose, horizon index, run index), so a run's result does not depend on
//! which worker executes it or in what order.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Algorithm, ExperimentConfig, HorizonMode, Metric, OracleConfig};
use crate::baselines::{run_per_slot_baseline, SlotAlgorithm};
use crate::env::{EnvironmentSpec, Trajectory};
use crate::environments::BidDistribution;
use crate::error::{Error, Result};
use crate::etc::{self, EtcConfig};
use crate::oracle::{self, MeanMethod, MeanTable};
use crate::par;

const STREAM_ENV: u64 = 1;
const STREAM_DATA: u64 = 2;
const STREAM_ORACLE: u64 = 3;
const STREAM_ETC: u64 = 4;
const STREAM_UCB1: u64 = 5;
const STREAM_TS: u64 = 6;

/// The stream for `purpose` in horizon `h` of run `run`.
pub fn stream(seed: u64, purpose: u64, h: usize, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 56) | ((h as u64) << 32) | run as u64);
    rng
}

fn algorithm_stream(alg: Algorithm) -> u64 {
    match alg {
        Algorithm::EtcSlate => STREAM_ETC,
        Algorithm::Ucb1PerSlot => STREAM_UCB1,
        Algorithm::TsPerSlot => STREAM_TS,
    }
}

/// Mean and 95% half-width of one metric at one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregatePoint {
    pub t: u64,
    pub mean: f64,
    pub half_width: f64,
    /// Runs that contributed.
    pub n: usize,
}

impl AggregatePoint {
    pub fn ci_low(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn ci_high(&self) -> f64 {
        self.mean + self.half_width
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub algorithm: Algorithm,
    pub metric: Metric,
    pub points: Vec<AggregatePoint>,
    /// Metric at every report point, per run; `Err` holds the run's error.
    pub runs: Vec<std::result::Result<Vec<f64>, String>>,
}

impl AggregateResult {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &str)> {
        self.runs
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e.as_str())))
    }

    pub fn last(&self) -> Option<&AggregatePoint> {
        self.points.last()
    }
}

/// What ETC did in one run at one horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct EtcRunInfo {
    pub horizon: u64,
    pub n_hat: u64,
    pub explore_rounds: u64,
    pub truncated: bool,
    /// Whether the committed slate is optimal; `None` without an oracle.
    pub correct: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: Vec<AggregateResult>,
    /// Per run, per horizon (a single entry in curve mode).
    pub etc_runs: Vec<Vec<EtcRunInfo>>,
}

impl ExperimentReport {
    pub fn result(&self, alg: Algorithm) -> Option<&AggregateResult> {
        self.results.iter().find(|r| r.algorithm == alg)
    }

    /// Share of ETC runs at horizon index `h` that committed to a suboptimal
    /// slate, with the number of runs counted.
    pub fn misidentification_rate(&self, h: usize) -> Option<(f64, usize)> {
        let flags: Vec<bool> = self
            .etc_runs
            .iter()
            .filter_map(|runs| runs.get(h).and_then(|r| r.correct))
            .collect();
        if flags.is_empty() {
            return None;
        }
        let wrong = flags.iter().filter(|ok| !**ok).count();
        Some((wrong as f64 / flags.len() as f64, flags.len()))
    }
}

/// Sample mean and `1.96·sd/√n`, zero half-width for a single value.
pub fn mean_and_half_width(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

struct RunOutput {
    /// Per algorithm, metric at the report points.
    curves: Vec<std::result::Result<Vec<f64>, String>>,
    etc: Vec<EtcRunInfo>,
}

/// Bid lists, when the environment needs them, drawn once per experiment.
pub fn prepare_bids(config: &ExperimentConfig) -> Result<Option<Vec<Arc<BidDistribution>>>> {
    config
        .environment
        .prepare_bids(&mut stream(config.seed, STREAM_DATA, 0, 0))
}

/// The environment of run `run`.
pub fn build_run_env(
    config: &ExperimentConfig,
    bids: Option<&[Arc<BidDistribution>]>,
    run: usize,
) -> Result<EnvironmentSpec> {
    config
        .environment
        .build(bids, &mut stream(config.seed, STREAM_ENV, 0, run))
}

/// Mean table for an environment under the configured oracle.
pub fn build_table(config: &ExperimentConfig, env: &EnvironmentSpec, run: usize) -> Result<MeanTable> {
    let method = match config.oracle {
        OracleConfig::Exact => MeanMethod::Exact,
        OracleConfig::MonteCarlo { samples } => {
            let seed = stream(config.seed, STREAM_ORACLE, 0, run).next_u64();
            MeanMethod::MonteCarlo { samples, seed }
        }
    };
    oracle::build_mean_table(env, method)
}

fn sample_at(curve: &[f64], points: &[u64]) -> Vec<f64> {
    points.iter().map(|&t| curve[(t - 1) as usize]).collect()
}

fn metric_curve(metric: Metric, traj: &Trajectory, table: Option<&MeanTable>) -> Result<Vec<f64>> {
    match metric {
        Metric::Regret => oracle::pseudo_regret_curve(
            traj,
            table.ok_or_else(|| Error::Config("regret needs an oracle".into()))?,
        ),
        Metric::Ppr => oracle::per_period_reward(traj),
    }
}

#[allow(clippy::too_many_arguments)]
fn play(
    config: &ExperimentConfig,
    alg: Algorithm,
    env: &EnvironmentSpec,
    table: Option<&MeanTable>,
    horizon: u64,
    h: usize,
    run: usize,
    etc_info: &mut Vec<EtcRunInfo>,
) -> Result<Trajectory> {
    let mut rng = stream(config.seed, algorithm_stream(alg), h, run);
    match alg {
        Algorithm::EtcSlate => {
            let tuning = config.tuning.resolve(table.map(MeanTable::delta_min))?;
            let etc_config = EtcConfig::tuned(horizon, env.k(), tuning)?;
            let res = etc::run(env, &etc_config, &mut rng)?;
            let correct = match table {
                Some(t) => Some(t.gap(&res.chosen_slate)? <= oracle::GAP_TOLERANCE),
                None => None,
            };
            etc_info.push(EtcRunInfo {
                horizon,
                n_hat: res.n_hat,
                explore_rounds: res.explore_rounds,
                truncated: res.truncated,
                correct,
            });
            Ok(res.trajectory)
        }
        Algorithm::Ucb1PerSlot => run_per_slot_baseline(env, SlotAlgorithm::Ucb1, horizon, &mut rng),
        Algorithm::TsPerSlot => run_per_slot_baseline(env, SlotAlgorithm::Ts, horizon, &mut rng),
    }
}

fn run_one(
    config: &ExperimentConfig,
    bids: Option<&[Arc<BidDistribution>]>,
    run: usize,
) -> RunOutput {
    let n_alg = config.algorithms.len();
    let fail_all = |e: Error| RunOutput {
        curves: vec![Err(e.to_string()); n_alg],
        etc: Vec::new(),
    };
    let env = match build_run_env(config, bids, run) {
        Ok(env) => env,
        Err(e) => return fail_all(e),
    };
    let needs_table = config.metric == Metric::Regret
        || (config.algorithms.contains(&Algorithm::EtcSlate) && config.tuning.needs_oracle_gap());
    let table = if needs_table {
        match build_table(config, &env, run) {
            Ok(t) => Some(t),
            Err(e) => return fail_all(e),
        }
    } else {
        None
    };

    let mut etc_info = Vec::new();
    let mut curves = Vec::with_capacity(n_alg);
    for &alg in &config.algorithms {
        let result = (|| -> Result<Vec<f64>> {
            match config.mode {
                HorizonMode::Sweep => {
                    let mut values = Vec::with_capacity(config.horizons.len());
                    for (h, &horizon) in config.horizons.iter().enumerate() {
                        let traj = play(config, alg, &env, table.as_ref(), horizon, h, run, &mut etc_info)?;
                        let curve = metric_curve(config.metric, &traj, table.as_ref())?;
                        values.push(*curve.last().ok_or(Error::EmptyTrajectory)?);
                    }
                    Ok(values)
                }
                HorizonMode::Curve => {
                    let horizon = config.max_horizon();
                    let traj = play(config, alg, &env, table.as_ref(), horizon, 0, run, &mut etc_info)?;
                    let curve = metric_curve(config.metric, &traj, table.as_ref())?;
                    Ok(sample_at(&curve, &config.report_points()))
                }
            }
        })();
        curves.push(result.map_err(|e| e.to_string()));
    }
    RunOutput {
        curves,
        etc: etc_info,
    }
}

/// Runs every replication and aggregates per algorithm. Failing runs are
/// recorded and left out of the aggregate; the experiment fails only if every
/// run of some algorithm failed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let bids = prepare_bids(config)?;
    let outputs = par::map_indexed(config.replications, |run| run_one(config, bids.as_deref(), run));
    let points = config.report_points();

    let mut results = Vec::with_capacity(config.algorithms.len());
    for (a, &alg) in config.algorithms.iter().enumerate() {
        let runs: Vec<_> = outputs.iter().map(|o| o.curves[a].clone()).collect();
        let ok: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
        if ok.is_empty() {
            let first = runs[0].as_ref().err().cloned().unwrap_or_default();
            return Err(Error::Config(format!("every run of {} failed: {first}", alg.name())));
        }
        let agg = points
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let values: Vec<f64> = ok.iter().map(|c| c[i]).collect();
                let (mean, half_width) = mean_and_half_width(&values);
                AggregatePoint {
                    t,
                    mean,
                    half_width,
                    n: values.len(),
                }
            })
            .collect();
        results.push(AggregateResult {
            algorithm: alg,
            metric: config.metric,
            points: agg,
            runs,
        });
    }
    Ok(ExperimentReport {
        config: config.clone(),
        results,
        etc_runs: outputs.into_iter().map(|o| o.etc).collect(),
    })
}
