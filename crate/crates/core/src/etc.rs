//! Explore-then-commit for slate bandits with a known, possibly
//! non-separable, slate reward function.
//!
//! Exploration plays only the `K` diagonal slates `(l, …, l)`, each `N̂`
//! times, and stores every observed slot reward per (slot, base action). Since
//! slot rewards are independent across slots, the `n`-th stored sample of each
//! slot can be recombined into an i.i.d. sample of *any* slate's reward. The
//! slate with the highest reconstructed empirical mean is then played for the
//! rest of the horizon.
//!
//! Exploration therefore costs `K·N̂` rounds rather than `N̂·K^M`, while the
//! selection scan still visits all `K^M` slates (streamed, never
//! materialized).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentSpec, Trajectory};
use crate::error::{Error, Result};
use crate::par;
use crate::reward::RewardFunction;
use crate::slate::{for_each_in_range, Slate};

/// Slates per work item in the selection scan.
const SCAN_CHUNK: u64 = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtcConfig {
    pub horizon: u64,
    pub kappa: f64,
    pub gamma: f64,
}

impl EtcConfig {
    pub fn new(horizon: u64, kappa: f64, gamma: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        check_kappa_gamma(kappa, gamma)?;
        Ok(EtcConfig {
            horizon,
            kappa,
            gamma,
        })
    }

    /// Config for a `k`-action problem with horizon `horizon` under `tuning`.
    pub fn tuned(horizon: u64, k: usize, tuning: Tuning) -> Result<Self> {
        let (kappa, gamma) = match tuning {
            Tuning::ProblemDependent { delta_min, m } => tune_problem_dependent(horizon, delta_min, m)?,
            Tuning::ProblemIndependent { m } => tune_problem_independent(horizon, k, m)?,
            Tuning::ProblemIndependentUnscaled { m } => {
                tune_problem_independent_unscaled(horizon, k, m)?
            }
            Tuning::Manual { kappa, gamma } => (kappa, gamma),
        };
        EtcConfig::new(horizon, kappa, gamma)
    }
}

fn check_kappa_gamma(kappa: f64, gamma: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be > 0, got {kappa}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    Ok(())
}

/// How `(kappa, gamma)` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Tuning {
    /// `kappa = delta_min`, `gamma = T^-m`.
    ProblemDependent { delta_min: f64, m: f64 },
    /// `kappa = T^(-1/3)·√K·√ln T·√(1+m)`, `gamma = T^-m`.
    ProblemIndependent { m: f64 },
    /// As [`Tuning::ProblemIndependent`] without the `√(1+m)` factor.
    ProblemIndependentUnscaled { m: f64 },
    Manual { kappa: f64, gamma: f64 },
}

/// `N̂ = ⌈(2/κ²)·(ln|B| − ln γ)⌉`, the number of plays per diagonal slate.
pub fn exploration_budget(kappa: f64, gamma: f64, slate_count: u64) -> Result<u64> {
    check_kappa_gamma(kappa, gamma)?;
    if slate_count == 0 {
        return Err(Error::InvalidParameter("slate count must be positive".into()));
    }
    let raw = (2.0 / (kappa * kappa)) * ((slate_count as f64).ln() - gamma.ln());
    let n = raw.ceil();
    if n.is_nan() || n >= u64::MAX as f64 {
        return Err(Error::InvalidParameter(format!(
            "exploration budget {raw} does not fit in 64 bits"
        )));
    }
    Ok((n as u64).max(1))
}

/// Slot rewards observed during exploration: for every slot `i` and base
/// action `l`, the list of `Y_i(l)` samples in the order they were observed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExploreStore {
    m: usize,
    k: usize,
    n_hat: usize,
    lists: Vec<Vec<f64>>,
}

impl ExploreStore {
    pub fn new(m: usize, k: usize, n_hat: usize) -> Self {
        ExploreStore {
            m,
            k,
            n_hat,
            lists: (0..m * k).map(|_| Vec::with_capacity(n_hat)).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Target samples per list.
    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    /// Appends an observation of slot `slot` under 0-based action `action`.
    pub fn push(&mut self, slot: usize, action: usize, value: f64) {
        self.lists[slot * self.k + action].push(value);
    }

    /// Samples of slot `slot` under 0-based action `action`.
    pub fn samples(&self, slot: usize, action: usize) -> &[f64] {
        &self.lists[slot * self.k + action]
    }

    pub fn is_complete(&self) -> bool {
        self.n_hat > 0 && self.lists.iter().all(|l| l.len() == self.n_hat)
    }

    /// Multiplies every stored sample by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for v in self.lists.iter_mut().flatten() {
            *v *= factor;
        }
    }

    fn check_complete(&self) -> Result<()> {
        if self.is_complete() {
            return Ok(());
        }
        let short = self
            .lists
            .iter()
            .position(|l| l.len() != self.n_hat)
            .unwrap_or(0);
        Err(Error::IncompleteStore(format!(
            "slot {} action {} holds {} of {} samples",
            short / self.k.max(1) + 1,
            short % self.k.max(1) + 1,
            self.lists.get(short).map_or(0, Vec::len),
            self.n_hat
        )))
    }

    /// Sum of the reconstructed samples of the slate with indices `indices`.
    /// `buf` has length `m`.
    #[inline]
    fn reconstructed_sum(&self, indices: &[u32], f: &RewardFunction, buf: &mut [f64]) -> f64 {
        let lists: Vec<&[f64]> = indices
            .iter()
            .enumerate()
            .map(|(slot, &a)| self.samples(slot, a as usize))
            .collect();
        let mut sum = 0.0;
        for n in 0..self.n_hat {
            for (y, list) in buf.iter_mut().zip(&lists) {
                *y = list[n];
            }
            sum += f.eval_unchecked(buf);
        }
        sum
    }
}

/// Plays each diagonal slate `(l, …, l)` exactly `n_hat` times, in order
/// `l = 1..K`, recording every slot reward.
pub fn explore<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    n_hat: u64,
    rng: &mut R,
) -> Result<(ExploreStore, Trajectory)> {
    if n_hat == 0 {
        return Err(Error::InvalidParameter("n_hat must be at least 1".into()));
    }
    let n_hat = usize::try_from(n_hat)
        .map_err(|_| Error::InvalidParameter(format!("n_hat {n_hat} too large")))?;
    let (m, k) = (env.m(), env.k());
    let mut store = ExploreStore::new(m, k, n_hat);
    let mut traj = Trajectory::with_capacity(m, k * n_hat);
    let mut slot_rewards = vec![0.0; m];
    for l in 0..k {
        let diagonal = vec![l as u32; m];
        for _ in 0..n_hat {
            let r = env.step_into(&diagonal, rng, &mut slot_rewards);
            for (slot, &y) in slot_rewards.iter().enumerate() {
                store.push(slot, l, y);
            }
            traj.push_parts(&diagonal, &slot_rewards, r);
        }
    }
    Ok((store, traj))
}

/// The `n_hat` artificial samples `Ŷ^n(b) = f(z_{b_1,1,n}, …, z_{b_M,M,n})`:
/// sample `n` pairs the `n`-th stored observation of every slot.
pub fn reconstruct_samples(
    store: &ExploreStore,
    slate: &Slate,
    f: &RewardFunction,
) -> Result<Vec<f64>> {
    store.check_complete()?;
    slate.validate(store.m, store.k)?;
    if f.slots() != store.m {
        return Err(Error::LengthMismatch {
            expected: store.m,
            got: f.slots(),
        });
    }
    let mut buf = vec![0.0; store.m];
    Ok((0..store.n_hat)
        .map(|n| {
            for (slot, y) in buf.iter_mut().enumerate() {
                *y = store.samples(slot, slate.indices()[slot] as usize)[n];
            }
            f.eval_unchecked(&buf)
        })
        .collect())
}

/// The slate with the highest reconstructed empirical mean over all `K^M`
/// slates. Ties go to the lexicographically smallest slate.
pub fn select_best_slate(store: &ExploreStore, env: &EnvironmentSpec) -> Result<Slate> {
    store.check_complete()?;
    if store.m != env.m() || store.k != env.k() {
        return Err(Error::IncompleteStore(format!(
            "store is {}x{} but environment is {}x{}",
            store.m,
            store.k,
            env.m(),
            env.k()
        )));
    }
    let (m, k) = (env.m(), env.k());
    let f = env.reward();
    let n_hat = store.n_hat as f64;
    let chunks = par::chunk_bounds(env.slate_count(), SCAN_CHUNK);
    let winners = par::map_indexed(chunks.len(), |c| {
        let (start, end) = chunks[c];
        let mut buf = vec![0.0; m];
        let mut best: Option<(f64, u64)> = None;
        for_each_in_range(m, k, start, end, |rank, idx| {
            let mean = store.reconstructed_sum(idx, f, &mut buf) / n_hat;
            // Strict comparison keeps the earliest rank among equal means.
            if best.is_none_or(|(b, _)| mean > b) {
                best = Some((mean, rank));
            }
        });
        best
    });
    let (_, rank) = winners
        .into_iter()
        .flatten()
        .fold(None::<(f64, u64)>, |acc, (mean, rank)| match acc {
            Some((b, r)) if b > mean || (b == mean && r < rank) => Some((b, r)),
            _ => Some((mean, rank)),
        })
        .expect("at least one slate");
    Ok(Slate::from_rank(rank, m, k))
}

/// Outcome of one ETC run.
#[derive(Clone, Debug)]
pub struct EtcResult {
    /// The slate committed to.
    pub chosen_slate: Slate,
    pub trajectory: Trajectory,
    /// Rounds spent exploring, `K · n_hat_used`.
    pub explore_rounds: u64,
    /// `N̂` from the exploration budget.
    pub n_hat: u64,
    /// Plays per diagonal slate actually made; smaller than `n_hat` only when
    /// truncated.
    pub n_hat_used: u64,
    /// Set when `K·N̂` exceeded the horizon and exploration was cut to
    /// `⌊T/K⌋` plays per diagonal slate.
    pub truncated: bool,
}

/// Explores, selects, then plays the selected slate until round `T`.
pub fn run<R: Rng + ?Sized>(
    env: &EnvironmentSpec,
    config: &EtcConfig,
    rng: &mut R,
) -> Result<EtcResult> {
    let n_hat = exploration_budget(config.kappa, config.gamma, env.slate_count())?;
    let k = env.k() as u64;
    let horizon = config.horizon;
    let (n_used, truncated) = match k.checked_mul(n_hat) {
        Some(n) if n <= horizon => (n_hat, false),
        _ => (horizon / k, true),
    };
    if n_used == 0 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} is shorter than K = {k}; cannot play every diagonal slate once"
        )));
    }
    let (store, mut trajectory) = explore(env, n_used, rng)?;
    let chosen_slate = select_best_slate(&store, env)?;
    let explore_rounds = k * n_used;

    let commit = (horizon - explore_rounds) as usize;
    let mut commit_traj = Trajectory::with_capacity(env.m(), commit);
    let mut slot_rewards = vec![0.0; env.m()];
    for _ in 0..commit {
        let r = env.step_into(chosen_slate.indices(), rng, &mut slot_rewards);
        commit_traj.push_parts(chosen_slate.indices(), &slot_rewards, r);
    }
    trajectory.append(commit_traj);

    Ok(EtcResult {
        chosen_slate,
        trajectory,
        explore_rounds,
        n_hat,
        n_hat_used: n_used,
        truncated,
    })
}

fn check_m(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent m must be > 0, got {m}")));
    }
    Ok(())
}

/// `(kappa, gamma) = (delta_min, T^-m)`. A lower bound on the true gap is a
/// valid `delta_min`.
pub fn tune_problem_dependent(horizon: u64, delta_min: f64, m: f64) -> Result<(f64, f64)> {
    if !(delta_min.is_finite() && delta_min > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta_min must be > 0, got {delta_min}"
        )));
    }
    check_m(m)?;
    Ok((delta_min, (horizon as f64).powf(-m)))
}

/// `kappa = T^(-1/3)·√K·√ln T·√(1+m)`, `gamma = T^-m`.
pub fn tune_problem_independent(horizon: u64, k: usize, m: f64) -> Result<(f64, f64)> {
    let (kappa, gamma) = tune_problem_independent_unscaled(horizon, k, m)?;
    Ok((kappa * (1.0 + m).sqrt(), gamma))
}

/// `kappa = T^(-1/3)·√K·√ln T`, `gamma = T^-m`.
pub fn tune_problem_independent_unscaled(horizon: u64, k: usize, m: f64) -> Result<(f64, f64)> {
    if horizon < 2 {
        return Err(Error::InvalidParameter(format!(
            "problem-independent tuning needs T >= 2, got {horizon}"
        )));
    }
    check_m(m)?;
    let t = horizon as f64;
    let kappa = t.powf(-1.0 / 3.0) * (k as f64).sqrt() * t.ln().sqrt();
    Ok((kappa, t.powf(-m)))
}

/// `T^(2/3)·(2 + √(2K ln T)) + 1`: expected-regret bound under
/// problem-independent tuning with `m = 1` (valid when `K^M <= T`).
pub fn evaluate_regret_bound(horizon: u64, k: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::InvalidParameter(format!(
            "the regret bound needs T >= 2, got {horizon}"
        )));
    }
    let t = horizon as f64;
    Ok(t.powf(2.0 / 3.0) * (2.0 + (2.0 * k as f64 * t.ln()).sqrt()) + 1.0)
}

/// `(2K/Δ²)·(ln|B| + m ln T) + T^(1-m)` for problem-dependent tuning.
pub fn problem_dependent_regret_bound(
    horizon: u64,
    k: usize,
    slate_count: u64,
    delta_min: f64,
    m: f64,
) -> Result<f64> {
    tune_problem_dependent(horizon, delta_min, m)?;
    let t = horizon as f64;
    Ok(2.0 * k as f64 / (delta_min * delta_min) * ((slate_count as f64).ln() + m * t.ln())
        + t.powf(1.0 - m))
}

/// `(2T^(2/3)/ln T)·(ln|B| + m ln T) + T^(1-m) + T^(2/3)·√K·√ln T` for
/// [`tune_problem_independent_unscaled`].
pub fn problem_independent_regret_bound(
    horizon: u64,
    k: usize,
    slate_count: u64,
    m: f64,
) -> Result<f64> {
    tune_problem_independent_unscaled(horizon, k, m)?;
    let t = horizon as f64;
    let t23 = t.powf(2.0 / 3.0);
    Ok(2.0 * t23 / t.ln() * ((slate_count as f64).ln() + m * t.ln())
        + t.powf(1.0 - m)
        + t23 * (k as f64).sqrt() * t.ln().sqrt())
}
