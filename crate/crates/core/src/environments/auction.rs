//! Second-price auctions with a reserve price, and bootstrap bid distributions.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};

/// Publisher revenue of a second-price auction with reserve `reserve`, top bid
/// `top` and second bid `second`: nothing if the reserve exceeds the top bid,
/// otherwise the larger of the second bid and the reserve.
pub fn ssp_revenue(reserve: f64, top: f64, second: f64) -> Result<f64> {
    if !(0.0 <= second && second <= top && top <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bids must satisfy 0 <= W <= X <= 1 (X = {top}, W = {second})"
        )));
    }
    if !(0.0..=1.0).contains(&reserve) {
        return Err(Error::InvalidParameter(format!(
            "reserve {reserve} outside [0, 1]"
        )));
    }
    Ok(ssp_revenue_unchecked(reserve, top, second))
}

#[inline]
pub(crate) fn ssp_revenue_unchecked(reserve: f64, top: f64, second: f64) -> f64 {
    if reserve > top {
        0.0
    } else {
        second.max(reserve)
    }
}

/// `K` reserve prices equally spaced on `[0.1, 0.8]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReservePriceGrid(Vec<f64>);

impl ReservePriceGrid {
    pub const LOW: f64 = 0.1;
    pub const HIGH: f64 = 0.8;

    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(
                "a reserve price grid needs at least two points".into(),
            ));
        }
        let step = (Self::HIGH - Self::LOW) / (k - 1) as f64;
        let mut prices: Vec<f64> = (0..k).map(|j| Self::LOW + step * j as f64).collect();
        prices[k - 1] = Self::HIGH;
        Ok(ReservePriceGrid(prices))
    }

    pub fn prices(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Two bootstrap lists of second-bid values, one per ad exchange, and the
/// normalizer `max(L1 ∪ L2)`. Each draw takes one value from each list; the
/// larger becomes the top bid and the smaller the second bid, both divided by
/// the normalizer.
#[derive(Clone, Debug, PartialEq)]
pub struct BidDistribution {
    first: Vec<f64>,
    second: Vec<f64>,
    max: f64,
}

impl BidDistribution {
    pub fn new(first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::InvalidParameter("bid lists must be non-empty".into()));
        }
        if first.iter().chain(&second).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "bid values must be finite and non-negative".into(),
            ));
        }
        let max = first.iter().chain(&second).copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::InvalidParameter("all bids are zero".into()));
        }
        Ok(BidDistribution { first, second, max })
    }

    /// Lists of `n` log-normal draws each, clipped at `cap`.
    pub fn lognormal_clipped<R: Rng + ?Sized>(
        first: (f64, f64),
        second: (f64, f64),
        cap: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let draw = |(mu, sigma): (f64, f64), rng: &mut R| -> Result<Vec<f64>> {
            let dist = LogNormal::new(mu, sigma)
                .map_err(|e| Error::InvalidParameter(format!("log-normal: {e}")))?;
            Ok((0..n).map(|_| dist.sample(rng).min(cap)).collect())
        };
        let l1 = draw(first, rng)?;
        let l2 = draw(second, rng)?;
        BidDistribution::new(l1, l2)
    }

    /// Lists of `n` uniform draws each on the given intervals.
    pub fn uniform<R: Rng + ?Sized>(
        first: (f64, f64),
        second: (f64, f64),
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let draw = |(lo, hi): (f64, f64), rng: &mut R| -> Result<Vec<f64>> {
            if !(0.0 <= lo && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "uniform bid interval [{lo}, {hi}] is invalid"
                )));
            }
            Ok((0..n).map(|_| rng.random_range(lo..hi)).collect())
        };
        let l1 = draw(first, rng)?;
        let l2 = draw(second, rng)?;
        BidDistribution::new(l1, l2)
    }

    pub fn first(&self) -> &[f64] {
        &self.first
    }

    pub fn second(&self) -> &[f64] {
        &self.second
    }

    pub fn normalizer(&self) -> f64 {
        self.max
    }

    /// One `(X, W)` draw with `0 <= W <= X <= 1`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let a = self.first[rng.random_range(0..self.first.len())];
        let b = self.second[rng.random_range(0..self.second.len())];
        (a.max(b) / self.max, a.min(b) / self.max)
    }
}

/// Free-function form of [`BidDistribution::sample_pair`].
pub fn sample_bid_pair<R: Rng + ?Sized>(dist: &BidDistribution, rng: &mut R) -> (f64, f64) {
    dist.sample_pair(rng)
}
