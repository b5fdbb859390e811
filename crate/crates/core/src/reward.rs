//! Slate-level reward functions.
//!
//! The closed algebra is a convex combination of terms, each either a single
//! slot reward or the maximum over a set of slots. That covers the chained,
//! mixed and anchored pairwise-max functions as well as max-of-all. Anything
//! else goes through [`RewardFunction::opaque`], which only the Monte-Carlo
//! oracle can handle.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// A term of the convex combination. Slot indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Identity(usize),
    Max(Vec<usize>),
}

impl Term {
    fn eval(&self, rewards: &[f64]) -> f64 {
        match self {
            Term::Identity(i) => rewards[*i],
            Term::Max(slots) => slots
                .iter()
                .map(|&i| rewards[i])
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn slots(&self) -> &[usize] {
        match self {
            Term::Identity(i) => std::slice::from_ref(i),
            Term::Max(slots) => slots,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTerm {
    pub weight: f64,
    pub term: Term,
}

type OpaqueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Maps `M` slot rewards in `[0,1]` to a slate reward in `[0,1]`.
#[derive(Clone)]
pub enum RewardFunction {
    Combination {
        slots: usize,
        terms: Vec<WeightedTerm>,
    },
    Opaque {
        slots: usize,
        name: String,
        func: Arc<OpaqueFn>,
    },
}

impl fmt::Debug for RewardFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardFunction::Combination { slots, terms } => f
                .debug_struct("Combination")
                .field("slots", slots)
                .field("terms", terms)
                .finish(),
            RewardFunction::Opaque { slots, name, .. } => f
                .debug_struct("Opaque")
                .field("slots", slots)
                .field("name", name)
                .finish_non_exhaustive(),
        }
    }
}

impl RewardFunction {
    /// Validates weights (non-negative, summing to one) and slot indices.
    pub fn combination(slots: usize, terms: Vec<WeightedTerm>) -> Result<Self> {
        if slots == 0 {
            return Err(Error::InvalidParameter(
                "reward function needs at least one slot".into(),
            ));
        }
        if terms.is_empty() {
            return Err(Error::InvalidParameter("empty convex combination".into()));
        }
        let mut total = 0.0;
        for t in &terms {
            if !(t.weight.is_finite() && t.weight >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "term weight {} is not a non-negative number",
                    t.weight
                )));
            }
            total += t.weight;
            let used = t.term.slots();
            if used.is_empty() {
                return Err(Error::InvalidParameter("max over no slots".into()));
            }
            if let Some(&bad) = used.iter().find(|&&i| i >= slots) {
                return Err(Error::InvalidParameter(format!(
                    "term refers to slot {} but there are {slots} slots",
                    bad + 1
                )));
            }
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(RewardFunction::Combination { slots, terms })
    }

    /// `max{Y_1, …, Y_M}`.
    pub fn max_of_all(slots: usize) -> Result<Self> {
        RewardFunction::combination(
            slots,
            vec![WeightedTerm {
                weight: 1.0,
                term: Term::Max((0..slots).collect()),
            }],
        )
    }

    /// `Σ w · max{Y_i, Y_j}` over `(w, i, j)` with 0-based slots. `i == j`
    /// yields an identity term.
    pub fn weighted_pairwise_max(slots: usize, pairs: &[(f64, usize, usize)]) -> Result<Self> {
        let terms = pairs
            .iter()
            .map(|&(weight, i, j)| WeightedTerm {
                weight,
                term: if i == j {
                    Term::Identity(i)
                } else {
                    Term::Max(vec![i, j])
                },
            })
            .collect();
        RewardFunction::combination(slots, terms)
    }

    /// An arbitrary function. The caller promises outputs in `[0,1]`; values
    /// outside are clamped on evaluation.
    pub fn opaque(
        slots: usize,
        name: impl Into<String>,
        func: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        RewardFunction::Opaque {
            slots,
            name: name.into(),
            func: Arc::new(func),
        }
    }

    pub fn slots(&self) -> usize {
        match self {
            RewardFunction::Combination { slots, .. } | RewardFunction::Opaque { slots, .. } => {
                *slots
            }
        }
    }

    pub fn terms(&self) -> Option<&[WeightedTerm]> {
        match self {
            RewardFunction::Combination { terms, .. } => Some(terms),
            RewardFunction::Opaque { .. } => None,
        }
    }

    pub fn evaluate(&self, slot_rewards: &[f64]) -> Result<f64> {
        if slot_rewards.len() != self.slots() {
            return Err(Error::LengthMismatch {
                expected: self.slots(),
                got: slot_rewards.len(),
            });
        }
        if let Some((index, &value)) = slot_rewards
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::OutOfUnitInterval { index, value });
        }
        Ok(self.eval_unchecked(slot_rewards))
    }

    /// Hot-path evaluation; the caller guarantees length and range.
    #[inline]
    pub(crate) fn eval_unchecked(&self, slot_rewards: &[f64]) -> f64 {
        let v = match self {
            RewardFunction::Combination { terms, .. } => terms
                .iter()
                .map(|t| t.weight * t.term.eval(slot_rewards))
                .sum::<f64>(),
            RewardFunction::Opaque { func, .. } => func(slot_rewards),
        };
        v.clamp(0.0, 1.0)
    }
}
