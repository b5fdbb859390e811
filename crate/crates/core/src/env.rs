//! Environments: per-slot reward distributions, the slate reward function and
//! the stepping contract, plus the per-round records they produce.

use std::sync::Arc;

use rand::Rng;

use crate::environments::auction::{ssp_revenue_unchecked, BidDistribution};
use crate::error::{Error, Result};
use crate::reward::RewardFunction;
use crate::slate::{slate_count, Slate};

/// Reward distribution of one (slot, base action) pair. Every sample lies in
/// `[0,1]`.
#[derive(Clone, Debug)]
pub enum SlotDistribution {
    /// Uniform on `[lower, upper]`; `lower == upper` is a point mass.
    Uniform { lower: f64, upper: f64 },
    /// Finite support with the given probabilities.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    /// Second-price auction revenue at a fixed reserve price.
    Auction {
        reserve: f64,
        bids: Arc<BidDistribution>,
    },
}

impl SlotDistribution {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(0.0 <= lower && lower <= upper && upper <= 1.0) {
            return Err(Error::InvalidEnvironment(format!(
                "uniform interval [{lower}, {upper}] is not inside [0, 1]"
            )));
        }
        Ok(SlotDistribution::Uniform { lower, upper })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        SlotDistribution::uniform(value, value)
    }

    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidEnvironment(
                "discrete distribution needs equally many values and probabilities".into(),
            ));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidEnvironment(
                "discrete support must lie in [0, 1]".into(),
            ));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidEnvironment(
                "discrete probabilities must be non-negative and sum to 1".into(),
            ));
        }
        Ok(SlotDistribution::Discrete { values, probs })
    }

    pub fn auction(reserve: f64, bids: Arc<BidDistribution>) -> Result<Self> {
        if !(0.0..=1.0).contains(&reserve) {
            return Err(Error::InvalidEnvironment(format!(
                "reserve price {reserve} outside [0, 1]"
            )));
        }
        Ok(SlotDistribution::Auction { reserve, bids })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SlotDistribution::Uniform { lower, upper } => {
                if lower == upper {
                    *lower
                } else {
                    // `lower + (upper - lower) * u` can round past `upper`.
                    (lower + (upper - lower) * rng.random::<f64>()).min(*upper)
                }
            }
            SlotDistribution::Discrete { values, probs } => {
                let u = rng.random::<f64>();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated non-empty")
            }
            SlotDistribution::Auction { reserve, bids } => {
                let (top, second) = bids.sample_pair(rng);
                ssp_revenue_unchecked(*reserve, top, second)
            }
        }
    }

    /// Closed-form mean, when one exists.
    pub fn mean(&self) -> Option<f64> {
        match self {
            SlotDistribution::Uniform { lower, upper } => Some(0.5 * (lower + upper)),
            SlotDistribution::Discrete { values, probs } => {
                Some(values.iter().zip(probs).map(|(v, p)| v * p).sum())
            }
            SlotDistribution::Auction { .. } => None,
        }
    }
}

/// A slate bandit instance with `M` slots and `K` base actions per slot.
#[derive(Clone, Debug)]
pub struct EnvironmentSpec {
    m: usize,
    k: usize,
    slots: Vec<SlotDistribution>,
    reward: RewardFunction,
}

impl EnvironmentSpec {
    /// `slots[i][j]` is the distribution of slot `i` under base action `j + 1`.
    pub fn new(slots: Vec<Vec<SlotDistribution>>, reward: RewardFunction) -> Result<Self> {
        let m = slots.len();
        let k = slots.first().map_or(0, Vec::len);
        if m == 0 || k == 0 {
            return Err(Error::InvalidEnvironment(
                "need at least one slot and one base action".into(),
            ));
        }
        if let Some(i) = slots.iter().position(|row| row.len() != k) {
            return Err(Error::InvalidEnvironment(format!(
                "slot {} has {} base actions, slot 1 has {k}; all slots must have the same K",
                i + 1,
                slots[i].len()
            )));
        }
        if reward.slots() != m {
            return Err(Error::InvalidEnvironment(format!(
                "reward function takes {} slots, environment has {m}",
                reward.slots()
            )));
        }
        slate_count(m, k)?;
        Ok(EnvironmentSpec {
            m,
            k,
            slots: slots.into_iter().flatten().collect(),
            reward,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `K^M`.
    pub fn slate_count(&self) -> u64 {
        slate_count(self.m, self.k).expect("checked at construction")
    }

    pub fn reward(&self) -> &RewardFunction {
        &self.reward
    }

    /// Distribution of `slot` (0-based) under 0-based action index `action`.
    pub fn slot(&self, slot: usize, action: usize) -> &SlotDistribution {
        &self.slots[slot * self.k + action]
    }

    pub fn slots(&self) -> impl Iterator<Item = &[SlotDistribution]> {
        self.slots.chunks(self.k)
    }

    /// Plays `slate` once: one independent draw per slot, then the slate reward.
    pub fn step<R: Rng + ?Sized>(&self, slate: &Slate, rng: &mut R) -> Result<RoundOutcome> {
        slate.validate(self.m, self.k)?;
        let mut slot_rewards = vec![0.0; self.m];
        let slate_reward = self.step_into(slate.indices(), rng, &mut slot_rewards);
        Ok(RoundOutcome {
            slate: slate.clone(),
            slot_rewards,
            slate_reward,
        })
    }

    /// Allocation-free [`EnvironmentSpec::step`] for a pre-validated slate.
    pub(crate) fn step_into<R: Rng + ?Sized>(
        &self,
        indices: &[u32],
        rng: &mut R,
        slot_rewards: &mut [f64],
    ) -> f64 {
        for (slot, (&a, out)) in indices.iter().zip(slot_rewards.iter_mut()).enumerate() {
            *out = self.slot(slot, a as usize).sample(rng);
        }
        self.reward.eval_unchecked(slot_rewards)
    }
}

/// What the agent sees after one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    pub slate: Slate,
    pub slot_rewards: Vec<f64>,
    pub slate_reward: f64,
}

/// Per-round history, stored column-wise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    m: usize,
    actions: Vec<u32>,
    slot_rewards: Vec<f64>,
    slate_rewards: Vec<f64>,
}

impl Trajectory {
    pub fn new(m: usize) -> Self {
        Trajectory {
            m,
            ..Default::default()
        }
    }

    pub fn with_capacity(m: usize, rounds: usize) -> Self {
        Trajectory {
            m,
            actions: Vec::with_capacity(m * rounds),
            slot_rewards: Vec::with_capacity(m * rounds),
            slate_rewards: Vec::with_capacity(rounds),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.slate_rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slate_rewards.is_empty()
    }

    pub fn push(&mut self, outcome: &RoundOutcome) {
        self.push_parts(outcome.slate.indices(), &outcome.slot_rewards, outcome.slate_reward);
    }

    pub(crate) fn push_parts(&mut self, indices: &[u32], slot_rewards: &[f64], slate_reward: f64) {
        debug_assert_eq!(indices.len(), self.m);
        self.actions.extend_from_slice(indices);
        self.slot_rewards.extend_from_slice(slot_rewards);
        self.slate_rewards.push(slate_reward);
    }

    pub fn append(&mut self, other: Trajectory) {
        assert_eq!(self.m, other.m, "slot count mismatch");
        self.actions.extend(other.actions);
        self.slot_rewards.extend(other.slot_rewards);
        self.slate_rewards.extend(other.slate_rewards);
    }

    /// 0-based indices of the slate played in round `t` (0-based).
    pub fn slate_indices(&self, t: usize) -> &[u32] {
        &self.actions[t * self.m..(t + 1) * self.m]
    }

    pub fn slate(&self, t: usize) -> Slate {
        Slate::from_indices(self.slate_indices(t).to_vec())
    }

    pub fn slot_rewards(&self, t: usize) -> &[f64] {
        &self.slot_rewards[t * self.m..(t + 1) * self.m]
    }

    pub fn slate_rewards(&self) -> &[f64] {
        &self.slate_rewards
    }

    pub fn round(&self, t: usize) -> RoundOutcome {
        RoundOutcome {
            slate: self.slate(t),
            slot_rewards: self.slot_rewards(t).to_vec(),
            slate_reward: self.slate_rewards[t],
        }
    }

    pub fn rounds(&self) -> impl Iterator<Item = RoundOutcome> + '_ {
        (0..self.len()).map(|t| self.round(t))
    }
}
