//! Slate bandits with non-separable slate rewards.
//!
//! A slate picks one base action per slot. Each slot returns a reward in
//! `[0, 1]` and the slate reward is a known function `f` of those slot
//! rewards. [`etc`] explores only the `K` diagonal slates, rebuilds i.i.d.
//! samples for every slate from the stored slot rewards, and commits to the
//! best reconstructed mean. [`baselines`] holds per-slot UCB1 and Thompson
//! sampling learners, [`oracle`] the ground-truth means and regret, and
//! [`harness`] the experiment runner behind the `slate-bandit` binary.

pub mod baselines;
pub mod env;
pub mod environments;
pub mod error;
pub mod etc;
pub mod harness;
pub mod ingestion;
pub mod oracle;
pub mod par;
pub mod reward;
pub mod slate;

pub use env::{EnvironmentSpec, RoundOutcome, SlotDistribution, Trajectory};
pub use error::{Error, Result};
pub use etc::{EtcConfig, EtcResult, Tuning};
pub use reward::RewardFunction;
pub use slate::Slate;
