//! Experiment configuration, read from and written to TOML.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, SlotDistribution};
use crate::environments::{
    make_example1_env, make_f_analog, make_header_bidding_env, make_uniform_env, BidDistribution,
    FVariant, ReservePriceGrid,
};
use crate::error::{Error, Result};
use crate::etc::Tuning;
use crate::ingestion::{build_bid_distribution, parse_bid_log, DEFAULT_BOOTSTRAP_N};
use crate::reward::{RewardFunction, Term, WeightedTerm};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "etc-slate")]
    EtcSlate,
    #[serde(rename = "ucb1-per-slot")]
    Ucb1PerSlot,
    #[serde(rename = "ts-per-slot")]
    TsPerSlot,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::EtcSlate, Algorithm::Ucb1PerSlot, Algorithm::TsPerSlot];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::EtcSlate => "etc-slate",
            Algorithm::Ucb1PerSlot => "ucb1-per-slot",
            Algorithm::TsPerSlot => "ts-per-slot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Cumulative pseudo-regret.
    Regret,
    /// Per-period reward, the running mean of realized slate rewards.
    Ppr,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Regret => "regret",
            Metric::Ppr => "ppr",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HorizonMode {
    /// A fresh run per horizon; one point per horizon.
    #[default]
    Sweep,
    /// One run at the largest horizon, sampled at `curve_points` rounds.
    Curve,
}

/// ETC tuning as written in a config. Leaving `delta_min` out of the
/// problem-dependent rule takes the true gap from the oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TuningConfig {
    ProblemDependent {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_min: Option<f64>,
        m: f64,
    },
    ProblemIndependent { m: f64 },
    ProblemIndependentUnscaled { m: f64 },
    Manual { kappa: f64, gamma: f64 },
}

impl TuningConfig {
    pub fn needs_oracle_gap(&self) -> bool {
        matches!(self, TuningConfig::ProblemDependent { delta_min: None, .. })
    }

    pub fn resolve(&self, oracle_gap: Option<f64>) -> Result<Tuning> {
        Ok(match *self {
            TuningConfig::ProblemDependent { delta_min, m } => Tuning::ProblemDependent {
                delta_min: delta_min.or(oracle_gap).ok_or_else(|| {
                    Error::Config("problem-dependent tuning needs delta_min or an oracle".into())
                })?,
                m,
            },
            TuningConfig::ProblemIndependent { m } => Tuning::ProblemIndependent { m },
            TuningConfig::ProblemIndependentUnscaled { m } => Tuning::ProblemIndependentUnscaled { m },
            TuningConfig::Manual { kappa, gamma } => Tuning::Manual { kappa, gamma },
        })
    }
}

/// How slate means are computed for regret and misidentification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleConfig {
    #[default]
    Exact,
    MonteCarlo { samples: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SlotConfig {
    Uniform { lower: f64, upper: f64 },
    Point { value: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl SlotConfig {
    fn build(&self) -> Result<SlotDistribution> {
        match self {
            SlotConfig::Uniform { lower, upper } => SlotDistribution::uniform(*lower, *upper),
            SlotConfig::Point { value } => SlotDistribution::point_mass(*value),
            SlotConfig::Discrete { values, probs } => {
                SlotDistribution::discrete(values.clone(), probs.clone())
            }
        }
    }

    fn from_distribution(d: &SlotDistribution) -> Result<Self> {
        Ok(match d {
            SlotDistribution::Uniform { lower, upper } if lower == upper => {
                SlotConfig::Point { value: *lower }
            }
            SlotDistribution::Uniform { lower, upper } => SlotConfig::Uniform {
                lower: *lower,
                upper: *upper,
            },
            SlotDistribution::Discrete { values, probs } => SlotConfig::Discrete {
                values: values.clone(),
                probs: probs.clone(),
            },
            SlotDistribution::Auction { .. } => {
                return Err(Error::Config("auction slots have no explicit form".into()))
            }
        })
    }
}

/// One term of a weighted combination. A single slot is the identity, more
/// slots take their max. Slots are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub weight: f64,
    pub slots: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RewardConfig {
    /// Max over all slots.
    Max,
    /// One of the pairwise-max families, generalized to any `m >= 3`.
    Family { variant: FVariant },
    Combination { terms: Vec<TermConfig> },
}

impl RewardConfig {
    fn build(&self, m: usize) -> Result<RewardFunction> {
        match self {
            RewardConfig::Max => RewardFunction::max_of_all(m),
            RewardConfig::Family { variant } => make_f_analog(*variant, m),
            RewardConfig::Combination { terms } => {
                let mut out = Vec::with_capacity(terms.len());
                for t in terms {
                    if t.slots.contains(&0) {
                        return Err(Error::Config("reward term slots are 1-based".into()));
                    }
                    let slots: Vec<usize> = t.slots.iter().map(|s| s - 1).collect();
                    let term = match slots.as_slice() {
                        [] => return Err(Error::Config("reward term without slots".into())),
                        [one] => Term::Identity(*one),
                        _ => Term::Max(slots),
                    };
                    out.push(WeightedTerm {
                        weight: t.weight,
                        term,
                    });
                }
                RewardFunction::combination(m, out)
            }
        }
    }

    fn from_reward(f: &RewardFunction) -> Result<Self> {
        let terms = f
            .terms()
            .ok_or_else(|| Error::Config("opaque reward functions have no explicit form".into()))?;
        Ok(RewardConfig::Combination {
            terms: terms
                .iter()
                .map(|t| TermConfig {
                    weight: t.weight,
                    slots: t.term.slots().iter().map(|s| s + 1).collect(),
                })
                .collect(),
        })
    }
}

/// Where one SSP's two bid lists come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SspConfig {
    /// Log-normal `(mu, sigma)` per exchange, clipped at `cap`.
    Lognormal {
        first: (f64, f64),
        second: (f64, f64),
        cap: f64,
    },
    /// Uniform `[lo, hi)` per exchange.
    Uniform { first: (f64, f64), second: (f64, f64) },
    /// Bootstrapped from one cell of a bid log.
    Csv {
        path: PathBuf,
        advertiser: String,
        day: u32,
        hour: u32,
    },
}

fn default_bootstrap_n() -> usize {
    DEFAULT_BOOTSTRAP_N
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentConfig {
    Explicit {
        reward: RewardConfig,
        /// `slots[i][j]` is slot `i + 1` under base action `j + 1`.
        slots: Vec<Vec<SlotConfig>>,
    },
    /// Fresh uniform slot distributions per replication.
    UniformRandom { m: usize, k: usize, reward: FVariant },
    /// The fixed two-slot counterexample where per-slot greedy is wrong.
    Example1,
    /// One SSP per slot, `k` reserve prices on a grid.
    HeaderBidding {
        k: usize,
        ssps: Vec<SspConfig>,
        #[serde(default = "default_bootstrap_n")]
        bootstrap_n: usize,
    },
}

impl EnvironmentConfig {
    /// Explicit config describing `env`. Fails for opaque rewards and auction
    /// slots.
    pub fn explicit_from(env: &EnvironmentSpec) -> Result<Self> {
        Ok(EnvironmentConfig::Explicit {
            reward: RewardConfig::from_reward(env.reward())?,
            slots: env
                .slots()
                .map(|row| row.iter().map(SlotConfig::from_distribution).collect())
                .collect::<Result<_>>()?,
        })
    }

    /// Whether the environment is drawn afresh for each replication.
    pub fn is_random(&self) -> bool {
        matches!(self, EnvironmentConfig::UniformRandom { .. })
    }

    /// Builds the environment. `data` holds the bid lists from
    /// [`EnvironmentConfig::prepare_bids`]; `env_rng` feeds per-replication
    /// draws.
    pub fn build<R: rand::Rng + ?Sized>(
        &self,
        data: Option<&[Arc<BidDistribution>]>,
        env_rng: &mut R,
    ) -> Result<EnvironmentSpec> {
        match self {
            EnvironmentConfig::Explicit { reward, slots } => {
                let dists = slots
                    .iter()
                    .map(|row| row.iter().map(SlotConfig::build).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                EnvironmentSpec::new(dists, reward.build(slots.len())?)
            }
            EnvironmentConfig::UniformRandom { m, k, reward } => {
                make_uniform_env(*m, *k, make_f_analog(*reward, *m)?, env_rng)
            }
            EnvironmentConfig::Example1 => Ok(make_example1_env()),
            EnvironmentConfig::HeaderBidding { k, .. } => {
                let bids = data.ok_or_else(|| Error::Config("bid lists were not prepared".into()))?;
                make_header_bidding_env(bids.to_vec(), &ReservePriceGrid::new(*k)?)
            }
        }
    }

    /// Bid lists shared by every replication; `None` for other environments.
    pub fn prepare_bids<R: rand::Rng + ?Sized>(
        &self,
        data_rng: &mut R,
    ) -> Result<Option<Vec<Arc<BidDistribution>>>> {
        let EnvironmentConfig::HeaderBidding {
            ssps, bootstrap_n, ..
        } = self
        else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(ssps.len());
        for ssp in ssps {
            let d = match ssp {
                SspConfig::Lognormal { first, second, cap } => {
                    BidDistribution::lognormal_clipped(*first, *second, *cap, *bootstrap_n, data_rng)?
                }
                SspConfig::Uniform { first, second } => {
                    BidDistribution::uniform(*first, *second, *bootstrap_n, data_rng)?
                }
                SspConfig::Csv {
                    path,
                    advertiser,
                    day,
                    hour,
                } => {
                    let log = parse_bid_log(path)?;
                    build_bid_distribution(&log.records, advertiser, *day, *hour, *bootstrap_n, data_rng)?
                }
            };
            out.push(Arc::new(d));
        }
        Ok(Some(out))
    }
}

fn default_curve_points() -> usize {
    100
}

/// A complete, re-runnable experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub replications: usize,
    pub horizons: Vec<u64>,
    #[serde(default)]
    pub mode: HorizonMode,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    pub algorithms: Vec<Algorithm>,
    pub metric: Metric,
    pub tuning: TuningConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub environment: EnvironmentConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Config(format!("`{}` is not a usable name", self.name)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be a non-empty list of positive rounds".into()));
        }
        if self.mode == HorizonMode::Curve && self.curve_points == 0 {
            return Err(Error::Config("curve_points must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        if let OracleConfig::MonteCarlo { samples: 0 } = self.oracle {
            return Err(Error::Config("oracle samples must be positive".into()));
        }
        if self.replications > u32::MAX as usize || self.horizons.len() > 1 << 16 {
            return Err(Error::Config("too many replications or horizons".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// The rounds at which the metric is reported.
    pub fn report_points(&self) -> Vec<u64> {
        match self.mode {
            HorizonMode::Sweep => self.horizons.clone(),
            HorizonMode::Curve => {
                let t = self.max_horizon();
                let p = (self.curve_points as u64).min(t);
                let mut pts: Vec<u64> = (1..=p).map(|i| (i * t).div_ceil(p)).collect();
                pts.dedup();
                pts
            }
        }
    }

    pub fn max_horizon(&self) -> u64 {
        self.horizons.iter().copied().max().unwrap_or(0)
    }
}
