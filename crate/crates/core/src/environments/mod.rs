//! Concrete environment builders: randomized uniform slot rewards with the
//! pairwise-max reward functions, the two-slot monotonicity counterexample,
//! and header bidding with one second-price auction per SSP.

pub mod auction;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, SlotDistribution};
use crate::error::{Error, Result};
use crate::reward::{RewardFunction, Term, WeightedTerm};

pub use auction::{sample_bid_pair, ssp_revenue, BidDistribution, ReservePriceGrid};

/// The three pairwise-max reward functions of the simulated experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FVariant {
    /// Chained pairs: `max{Y1,Y2}, max{Y2,Y3}, …`.
    F1,
    /// Two pairwise maxes at the ends, identities in between.
    F2,
    /// Every pair anchored on slot 1: `max{Y1,Yj}` for `j >= 2`.
    F3,
}

impl fmt::Display for FVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FVariant::F1 => "f1",
            FVariant::F2 => "f2",
            FVariant::F3 => "f3",
        })
    }
}

impl FromStr for FVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(FVariant::F1),
            "f2" => Ok(FVariant::F2),
            "f3" => Ok(FVariant::F3),
            other => Err(Error::InvalidParameter(format!("unknown reward `{other}`"))),
        }
    }
}

/// The five-slot reward functions exactly.
pub fn make_f(variant: FVariant, m: usize) -> Result<RewardFunction> {
    if m != 5 {
        return Err(Error::InvalidParameter(format!(
            "{variant} is defined for five slots, got {m}; use make_f_analog"
        )));
    }
    make_f_analog(variant, m)
}

/// Same construction generalized to `m >= 3` slots, with equal weights over
/// the terms. For `m = 5` this equals [`make_f`].
///
/// * f1: `max{Y_i, Y_{i+1}}` for `i = 1..m-1`
/// * f2: `max{Y1,Y2}`, `Y_3 … Y_{max(3, m-1)}`, `max{Y_{m-1},Y_m}`
/// * f3: `max{Y1,Y_j}` for `j = 2..m`
pub fn make_f_analog(variant: FVariant, m: usize) -> Result<RewardFunction> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "pairwise-max families need at least three slots, got {m}"
        )));
    }
    let terms: Vec<Term> = match variant {
        FVariant::F1 => (0..m - 1).map(|i| Term::Max(vec![i, i + 1])).collect(),
        FVariant::F2 => {
            let mut t = vec![Term::Max(vec![0, 1])];
            t.extend((2..(m - 1).max(3)).map(Term::Identity));
            t.push(Term::Max(vec![m - 2, m - 1]));
            t
        }
        FVariant::F3 => (1..m).map(|j| Term::Max(vec![0, j])).collect(),
    };
    let w = 1.0 / terms.len() as f64;
    RewardFunction::combination(
        m,
        terms
            .into_iter()
            .map(|term| WeightedTerm { weight: w, term })
            .collect(),
    )
}

/// Uniform slot rewards `U[a - c, a + c]` with `a ~ U[0.4, 0.6]` and
/// `c ~ U[0.1, 0.3]` drawn independently for every (slot, base action).
pub fn make_uniform_env<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    reward: RewardFunction,
    rng: &mut R,
) -> Result<EnvironmentSpec> {
    if m < 2 || k < 2 {
        return Err(Error::InvalidParameter(format!(
            "uniform environments need m >= 2 and k >= 2 (got m = {m}, k = {k})"
        )));
    }
    let mut slots = Vec::with_capacity(m);
    for _ in 0..m {
        let mut row = Vec::with_capacity(k);
        for _ in 0..k {
            let a = rng.random_range(0.4..=0.6);
            let c = rng.random_range(0.1..=0.3);
            row.push(SlotDistribution::uniform(a - c, a + c)?);
        }
        slots.push(row);
    }
    EnvironmentSpec::new(slots, reward)
}

/// Two slots, two actions each, max reward:
/// slot 1: `a ~ U(0.4,0.5)`, `b ~ U(0.0,0.1)`; slot 2: `c ~ U(0.4,0.5)`,
/// `d ~ U(0.15,0.7)`. Action 1 is `a`/`c`, action 2 is `b`/`d`. Per-slot
/// greedy picks `(a, c)` but the best slate is `(a, d)`.
pub fn make_example1_env() -> EnvironmentSpec {
    let u = |l, h| SlotDistribution::uniform(l, h).expect("constant interval");
    EnvironmentSpec::new(
        vec![vec![u(0.4, 0.5), u(0.0, 0.1)], vec![u(0.4, 0.5), u(0.15, 0.7)]],
        RewardFunction::max_of_all(2).expect("two slots"),
    )
    .expect("constant environment")
}

/// One slot per SSP; action `j` sets that SSP's reserve to `grid[j]`. The
/// slate reward is the largest SSP revenue.
pub fn make_header_bidding_env(
    bid_dists: Vec<Arc<BidDistribution>>,
    grid: &ReservePriceGrid,
) -> Result<EnvironmentSpec> {
    let m = bid_dists.len();
    let slots = bid_dists
        .into_iter()
        .map(|bids| {
            grid.prices()
                .iter()
                .map(|&p| SlotDistribution::auction(p, bids.clone()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    EnvironmentSpec::new(slots, RewardFunction::max_of_all(m)?)
}
