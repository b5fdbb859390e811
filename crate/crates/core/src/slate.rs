//! Slates and the mixed-radix enumeration of the slate space.
//!
//! Base actions are numbered `1..=K` at every public boundary (constructors,
//! accessors, `Display`, `FromStr`). Internally a slate stores 0-based indices
//! so it can address per-slot tables directly.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One base action per slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slate(Box<[u32]>);

impl Slate {
    /// Builds a slate from 1-based base actions.
    pub fn from_actions(actions: &[usize]) -> Result<Self> {
        let mut indices = Vec::with_capacity(actions.len());
        for (slot, &a) in actions.iter().enumerate() {
            if a == 0 || a > u32::MAX as usize {
                return Err(Error::InvalidSlate(format!(
                    "slot {} has base action {a}; actions are numbered from 1",
                    slot + 1
                )));
            }
            indices.push((a - 1) as u32);
        }
        Ok(Slate(indices.into_boxed_slice()))
    }

    /// Builds a slate from 0-based indices.
    pub fn from_indices(indices: Vec<u32>) -> Self {
        Slate(indices.into_boxed_slice())
    }

    /// The slate `(action, …, action)` with `m` slots. `action` is 1-based.
    pub fn diagonal(m: usize, action: usize) -> Result<Self> {
        Slate::from_actions(&vec![action; m])
    }

    /// Inverse of [`Slate::rank`].
    pub fn from_rank(mut rank: u64, m: usize, k: usize) -> Self {
        let mut indices = vec![0u32; m];
        for slot in (0..m).rev() {
            indices[slot] = (rank % k as u64) as u32;
            rank /= k as u64;
        }
        Slate(indices.into_boxed_slice())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based base action in slot `slot` (slot is 0-based).
    pub fn action(&self, slot: usize) -> usize {
        self.0[slot] as usize + 1
    }

    /// 1-based base actions, slot by slot.
    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&i| i as usize + 1)
    }

    /// 0-based indices.
    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.0.windows(2).all(|w| w[0] == w[1])
    }

    pub fn validate(&self, m: usize, k: usize) -> Result<()> {
        if self.len() != m {
            return Err(Error::InvalidSlate(format!(
                "{self} has {} slots, environment has {m}",
                self.len()
            )));
        }
        if let Some(slot) = self.0.iter().position(|&i| i as usize >= k) {
            return Err(Error::InvalidSlate(format!(
                "{self}: slot {} action {} exceeds K = {k}",
                slot + 1,
                self.action(slot)
            )));
        }
        Ok(())
    }

    /// Position in the lexicographic enumeration of all `k^m` slates.
    pub fn rank(&self, k: usize) -> u64 {
        rank_of(&self.0, k)
    }
}

pub(crate) fn rank_of(indices: &[u32], k: usize) -> u64 {
    indices
        .iter()
        .fold(0u64, |acc, &i| acc * k as u64 + i as u64)
}

impl fmt::Display for Slate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (n, a) in self.actions().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Slate {
    type Err = Error;

    /// Accepts `(1,2,3)`, `1,2,3` or `1 2 3`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let actions = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidSlate(format!("cannot parse `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if actions.is_empty() {
            return Err(Error::InvalidSlate(format!("cannot parse `{s}`")));
        }
        Slate::from_actions(&actions)
    }
}

/// `k^m`, or an error if it overflows `u64`.
pub fn slate_count(m: usize, k: usize) -> Result<u64> {
    let exp = u32::try_from(m).map_err(|_| Error::SlateCountOverflow { m, k })?;
    (k as u64)
        .checked_pow(exp)
        .ok_or(Error::SlateCountOverflow { m, k })
}

/// Lexicographic odometer over a contiguous range of slate ranks.
#[derive(Clone, Debug)]
pub struct SlateIter {
    k: u32,
    current: Vec<u32>,
    remaining: u64,
}

impl SlateIter {
    /// Slates with rank in `start..end`.
    pub fn range(m: usize, k: usize, start: u64, end: u64) -> Self {
        let first = Slate::from_rank(start, m, k.max(1));
        SlateIter {
            k: k as u32,
            current: first.0.into_vec(),
            remaining: end.saturating_sub(start),
        }
    }

    /// Borrowed view of the current slate; pair with [`SlateIter::advance`].
    pub(crate) fn next_indices(&mut self) -> Option<&[u32]> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(&self.current)
    }

    pub(crate) fn advance(&mut self) {
        for slot in (0..self.current.len()).rev() {
            self.current[slot] += 1;
            if self.current[slot] < self.k {
                return;
            }
            self.current[slot] = 0;
        }
    }
}

impl Iterator for SlateIter {
    type Item = Slate;

    fn next(&mut self) -> Option<Slate> {
        let slate = Slate::from_indices(self.next_indices()?.to_vec());
        self.advance();
        Some(slate)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, usize::try_from(self.remaining).ok())
    }
}

impl ExactSizeIterator for SlateIter {}

/// Every slate of an `m`-slot, `k`-action problem, each exactly once, in
/// ascending lexicographic order. Slates are generated lazily.
pub fn enumerate_slates(m: usize, k: usize) -> Result<SlateIter> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "enumeration needs m >= 1 and k >= 1 (got m = {m}, k = {k})"
        )));
    }
    let count = slate_count(m, k)?;
    Ok(SlateIter::range(m, k, 0, count))
}

/// Calls `visit(rank, indices)` for every slate with rank in `start..end`.
pub(crate) fn for_each_in_range(
    m: usize,
    k: usize,
    start: u64,
    end: u64,
    mut visit: impl FnMut(u64, &[u32]),
) {
    let mut it = SlateIter::range(m, k, start, end);
    let mut rank = start;
    while let Some(idx) = it.next_indices() {
        visit(rank, idx);
        rank += 1;
        it.advance();
    }
}
