//! Per-slot benchmark: one independent K-armed bandit per slot, each learning
//! from its own slot reward, with their choices combined into the slate.
//!
//! This is the natural approach when the slate reward is monotone in the slot
//! means; it has no way to see interactions across slots.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, Trajectory};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlotAlgorithm {
    Ucb1,
    Ts,
}

impl fmt::Display for SlotAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlotAlgorithm::Ucb1 => "ucb1",
            SlotAlgorithm::Ts => "ts",
        })
    }
}

impl FromStr for SlotAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ucb1" => Ok(SlotAlgorithm::Ucb1),
            "ts" => Ok(SlotAlgorithm::Ts),
            other => Err(Error::InvalidParameter(format!("unknown slot bandit `{other}`"))),
        }
    }
}

/// State of one slot's bandit. Arms are reported 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum SlotBanditState {
    Ucb1 {
        counts: Vec<u64>,
        sums: Vec<f64>,
        t: u64,
    },
    /// Beta posteriors, starting from `Beta(1, 1)`.
    Ts {
        alpha: Vec<f64>,
        beta: Vec<f64>,
        t: u64,
    },
}

impl SlotBanditState {
    pub fn new(algo: SlotAlgorithm, k: usize) -> Self {
        match algo {
            SlotAlgorithm::Ucb1 => SlotBanditState::Ucb1 {
                counts: vec![0; k],
                sums: vec![0.0; k],
                t: 0,
            },
            SlotAlgorithm::Ts => SlotBanditState::Ts {
                alpha: vec![1.0; k],
                beta: vec![1.0; k],
                t: 0,
            },
        }
    }

    pub fn arms(&self) -> usize {
        match self {
            SlotBanditState::Ucb1 { counts, .. } => counts.len(),
            SlotBanditState::Ts { alpha, .. } => alpha.len(),
        }
    }

    pub fn rounds(&self) -> u64 {
        match self {
            SlotBanditState::Ucb1 { t, .. } | SlotBanditState::Ts { t, .. } => *t,
        }
    }

    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            SlotBanditState::Ucb1 { .. } => ucb1_select(self),
            SlotBanditState::Ts { .. } => ts_select(self, rng),
        }
    }
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Plays every never-pulled arm first (lowest index first), then maximizes
/// `mean + √(2 ln t / n)`. Ties go to the lowest index. Returns a 1-based arm.
///
/// A Thompson state falls back to its posterior means.
pub fn ucb1_select(state: &SlotBanditState) -> usize {
    match state {
        SlotBanditState::Ucb1 { counts, sums, t } => {
            if let Some(unpulled) = counts.iter().position(|&c| c == 0) {
                return unpulled + 1;
            }
            let log_t = (*t as f64).ln();
            argmax_first(
                counts
                    .iter()
                    .zip(sums)
                    .map(|(&n, &s)| s / n as f64 + (2.0 * log_t / n as f64).sqrt()),
            ) + 1
        }
        SlotBanditState::Ts { alpha, beta, .. } => {
            argmax_first(alpha.iter().zip(beta).map(|(a, b)| a / (a + b))) + 1
        }
    }
}

/// Samples `θ ~ Beta(α, β)` per arm and returns the 1-based argmax.
///
/// A UCB1 state is treated as a uniform prior over its arms.
pub fn ts_select<R: Rng + ?Sized>(state: &SlotBanditState, rng: &mut R) -> usize {
    match state {
        SlotBanditState::Ts { alpha, beta, .. } => {
            argmax_first(alpha.iter().zip(beta).map(|(&a, &b)| {
                Beta::new(a, b)
                    .expect("posterior parameters stay >= 1")
                    .sample(rng)
            })) + 1
        }
        SlotBanditState::Ucb1 { counts, .. } => rng.random_range(0..counts.len()) + 1,
    }
}

/// Records `reward` for 1-based `arm`. UCB1 accumulates counts and sums;
/// Thompson sampling draws `Bernoulli(reward)` and bumps `α` on success,
/// `β` on failure.
pub fn slot_update<R: Rng + ?Sized>(
    state: &mut SlotBanditState,
    arm: usize,
    reward: f64,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::OutOfUnitInterval {
            index: arm,
            value: reward,
        });
    }
    if arm == 0 || arm > state.arms() {
        return Err(Error::InvalidParameter(format!(
            "arm {arm} outside 1..={}",
            state.arms()
        )));
    }
    let i = arm - 1;
    match state {
        SlotBanditState::Ucb1 { counts, sums, t } => {
            counts[i] += 1;
            sums[i] += reward;
            *t += 1;
        }
        SlotBanditState::Ts { alpha, beta, t } => {
            if rng.random::<f64>() < reward {
                alpha[i] += 1.0;
            } else {
                beta[i] += 1.0;
            }
            *t += 1;
        }
    }
    Ok(())
}

/// Runs `M` independent slot bandits for `horizon` rounds.
///
/// Each slot bandit draws its own randomness from a private stream seeded off
/// `rng` up front, and only ever sees its own slot reward. Environment noise
/// comes from `rng` itself.
pub fn run_per_slot_baseline<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    algo: SlotAlgorithm,
    horizon: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    let (m, k) = (env.m(), env.k());
    let mut bandits: Vec<(SlotBanditState, ChaCha8Rng)> = (0..m)
        .map(|_| {
            (
                SlotBanditState::new(algo, k),
                ChaCha8Rng::seed_from_u64(rng.next_u64()),
            )
        })
        .collect();
    let horizon = horizon as usize;
    let mut traj = Trajectory::with_capacity(m, horizon);
    let mut slate = vec![0u32; m];
    let mut slot_rewards = vec![0.0; m];
    for _ in 0..horizon {
        for (slot, (state, own)) in bandits.iter_mut().enumerate() {
            slate[slot] = (state.select(own) - 1) as u32;
        }
        let r = env.step_into(&slate, rng, &mut slot_rewards);
        for (slot, (state, own)) in bandits.iter_mut().enumerate() {
            slot_update(state, slate[slot] as usize + 1, slot_rewards[slot], own)?;
        }
        traj.push_parts(&slate, &slot_rewards, r);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SlotDistribution;
    use crate::reward::RewardFunction;

    fn ucb(counts: Vec<u64>, sums: Vec<f64>) -> SlotBanditState {
        let t = counts.iter().sum();
        SlotBanditState::Ucb1 { counts, sums, t }
    }

    #[test]
    fn ucb1_prefers_dominant_mean() {
        assert_eq!(ucb1_select(&ucb(vec![10, 10], vec![9.0, 1.0])), 1);
        assert_eq!(ucb1_select(&ucb(vec![10, 10], vec![1.0, 9.0])), 2);
    }

    #[test]
    fn ucb1_tie_goes_to_lowest_arm() {
        assert_eq!(ucb1_select(&ucb(vec![1, 1], vec![0.5, 0.5])), 1);
    }

    #[test]
    fn ucb1_warm_up_plays_unpulled_arm() {
        assert_eq!(ucb1_select(&ucb(vec![3, 0, 0], vec![3.0, 0.0, 0.0])), 2);
        let fresh = SlotBanditState::new(SlotAlgorithm::Ucb1, 4);
        assert_eq!(ucb1_select(&fresh), 1);
    }

    #[test]
    fn ts_concentrated_posteriors() {
        let state = SlotBanditState::Ts {
            alpha: vec![1000.0, 1.0],
            beta: vec![1.0, 1000.0],
            t: 2000,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..1000).all(|_| ts_select(&state, &mut rng) == 1));
    }

    #[test]
    fn ts_uniform_prior_is_symmetric() {
        let state = SlotBanditState::new(SlotAlgorithm::Ts, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[ts_select(&state, &mut rng) - 1] += 1;
        }
        for c in counts {
            // 4 standard deviations of a Binomial(n, 1/4) proportion.
            assert!((c as f64 / n as f64 - 0.25).abs() < 4.0 * (0.1875 / n as f64).sqrt());
        }
        let single = SlotBanditState::new(SlotAlgorithm::Ts, 1);
        assert_eq!(ts_select(&single, &mut rng), 1);
    }

    #[test]
    fn updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ts = SlotBanditState::new(SlotAlgorithm::Ts, 2);
        slot_update(&mut ts, 1, 1.0, &mut rng).unwrap();
        slot_update(&mut ts, 2, 0.0, &mut rng).unwrap();
        assert_eq!(
            ts,
            SlotBanditState::Ts {
                alpha: vec![2.0, 1.0],
                beta: vec![1.0, 2.0],
                t: 2
            }
        );
        let mut u = SlotBanditState::new(SlotAlgorithm::Ucb1, 2);
        slot_update(&mut u, 2, 0.5, &mut rng).unwrap();
        assert_eq!(u, ucb(vec![0, 1], vec![0.0, 0.5]));
        assert!(slot_update(&mut u, 1, 1.5, &mut rng).is_err());
        assert!(slot_update(&mut u, 3, 0.5, &mut rng).is_err());
        assert!(slot_update(&mut u, 0, 0.5, &mut rng).is_err());
    }

    #[test]
    fn counts_sum_to_rounds() {
        let env = crate::environments::make_example1_env();
        for algo in [SlotAlgorithm::Ucb1, SlotAlgorithm::Ts] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let traj = run_per_slot_baseline(&env, algo, 500, &mut rng).unwrap();
            assert_eq!(traj.len(), 500);
        }
    }

    #[test]
    fn single_slot_is_a_plain_bandit() {
        let slots = vec![vec![
            SlotDistribution::uniform(0.1, 0.3).unwrap(),
            SlotDistribution::uniform(0.6, 0.8).unwrap(),
            SlotDistribution::uniform(0.3, 0.5).unwrap(),
        ]];
        let env = EnvironmentSpec::new(slots, RewardFunction::max_of_all(1).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let traj = run_per_slot_baseline(&env, SlotAlgorithm::Ucb1, 3000, &mut rng).unwrap();
        let best = (0..3000).filter(|&t| traj.slate_indices(t)[0] == 1).count();
        assert!(best > 2500, "{best}");
        for t in 0..3000 {
            assert_eq!(traj.slate_rewards()[t], traj.slot_rewards(t)[0]);
        }
    }

    #[test]
    fn point_masses_converge_to_slot_argmax() {
        let pm = |v| SlotDistribution::point_mass(v).unwrap();
        let slots = vec![vec![pm(0.2), pm(0.9), pm(0.5)], vec![pm(0.7), pm(0.1), pm(0.3)]];
        let env = EnvironmentSpec::new(slots, RewardFunction::max_of_all(2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj = run_per_slot_baseline(&env, SlotAlgorithm::Ucb1, 2000, &mut rng).unwrap();
        let tail: Vec<_> = (1900..2000).map(|t| traj.slate(t).to_string()).collect();
        assert!(tail.iter().filter(|s| *s == "(2,1)").count() >= 95);
    }
}
