use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slate_bandits::baselines::{run_per_slot_baseline, SlotAlgorithm};
use slate_bandits::environments::{make_f_analog, make_uniform_env, ssp_revenue, FVariant};
use slate_bandits::etc::{self, EtcConfig};
use slate_bandits::harness::mean_and_half_width;
use slate_bandits::ingestion::{build_bid_distribution, BidLogRecord};
use slate_bandits::oracle::{
    build_mean_table, expected_pairwise_max_uniform, per_period_reward, pseudo_regret_curve,
    MeanMethod,
};
use slate_bandits::slate::enumerate_slates;
use slate_bandits::{EnvironmentSpec, RewardFunction};

/// Midpoint rule for `∫₀¹ (1 − F1(t)·F2(t)) dt` with uniform CDFs.
fn numeric_max(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cdf = |(l, h): (f64, f64), t: f64| ((t - l) / (h - l)).clamp(0.0, 1.0);
    let n = 200_000;
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            1.0 - cdf(a, t) * cdf(b, t)
        })
        .sum::<f64>()
        / n as f64
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (0.0..0.9f64, 0.01..1.0f64).prop_map(|(l, w)| (l, (l + w).min(1.0)))
}

fn random_env(seed: u64, m: usize, k: usize, variant: FVariant) -> EnvironmentSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = if m >= 3 {
        make_f_analog(variant, m).unwrap()
    } else {
        RewardFunction::max_of_all(m).unwrap()
    };
    make_uniform_env(m, k, f, &mut rng).unwrap()
}

fn variant() -> impl Strategy<Value = FVariant> {
    prop_oneof![Just(FVariant::F1), Just(FVariant::F2), Just(FVariant::F3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pairwise_max_matches_quadrature(a in interval(), b in interval()) {
        prop_assume!(a.1 - a.0 > 1e-3 && b.1 - b.0 > 1e-3);
        let exact = expected_pairwise_max_uniform(a, b).unwrap();
        prop_assert!((exact - numeric_max(a, b)).abs() < 1e-6);
        prop_assert!(exact >= a.0.max(b.0) - 1e-12 && exact <= a.1.max(b.1) + 1e-12);
    }

    #[test]
    fn regret_is_monotone_and_ppr_bounded(
        seed in any::<u64>(),
        m in 2usize..5,
        k in 2usize..5,
        v in variant(),
        horizon in 1u64..600,
        ts in any::<bool>(),
    ) {
        let env = random_env(seed, m, k, v);
        let table = build_mean_table(&env, MeanMethod::Exact).unwrap();
        let algo = if ts { SlotAlgorithm::Ts } else { SlotAlgorithm::Ucb1 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let traj = run_per_slot_baseline(&env, algo, horizon, &mut rng).unwrap();
        let regret = pseudo_regret_curve(&traj, &table).unwrap();
        prop_assert_eq!(regret.len() as u64, horizon);
        prop_assert!(regret[0] >= 0.0);
        prop_assert!(regret.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(*regret.last().unwrap() <= horizon as f64 * table.delta_max() + 1e-9);
        let ppr = per_period_reward(&traj).unwrap();
        prop_assert!(ppr.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn selection_is_the_reconstructed_argmax(
        seed in any::<u64>(),
        m in 2usize..4,
        k in 2usize..5,
        v in variant(),
        n_hat in 1u64..40,
    ) {
        let env = random_env(seed, m, k, v);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let (store, traj) = etc::explore(&env, n_hat, &mut rng).unwrap();
        prop_assert_eq!(traj.len() as u64, k as u64 * n_hat);
        let chosen = etc::select_best_slate(&store, &env).unwrap();
        let mut best: Option<(f64, slate_bandits::Slate)> = None;
        for slate in enumerate_slates(m, k).unwrap() {
            let samples = etc::reconstruct_samples(&store, &slate, env.reward()).unwrap();
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            if best.as_ref().is_none_or(|(b, _)| mean > *b) {
                best = Some((mean, slate));
            }
        }
        let (best_mean, _) = best.unwrap();
        let chosen_samples = etc::reconstruct_samples(&store, &chosen, env.reward()).unwrap();
        let chosen_mean = chosen_samples.iter().sum::<f64>() / chosen_samples.len() as f64;
        prop_assert!((chosen_mean - best_mean).abs() < 1e-9);
    }

    #[test]
    fn etc_spends_k_times_n_hat_exploring(
        seed in any::<u64>(),
        k in 2usize..6,
        horizon in 2u64..3000,
        kappa in 0.2..2.0f64,
        gamma in 0.01..0.5f64,
    ) {
        prop_assume!(horizon >= k as u64);
        let env = random_env(seed, 3, k, FVariant::F1);
        let config = EtcConfig::new(horizon, kappa, gamma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let res = etc::run(&env, &config, &mut rng).unwrap();
        prop_assert_eq!(res.trajectory.len() as u64, horizon);
        prop_assert_eq!(res.explore_rounds, k as u64 * res.n_hat_used);
        prop_assert_eq!(res.truncated, k as u64 * res.n_hat > horizon);
        for t in 0..res.explore_rounds as usize {
            let s = res.trajectory.slate(t);
            prop_assert!(s.is_diagonal());
            prop_assert_eq!(s.action(0), t / res.n_hat_used as usize + 1);
        }
    }

    #[test]
    fn ssp_revenue_stays_in_unit_interval(p in 0.0..=1.0f64, x in 0.0..=1.0f64, frac in 0.0..=1.0f64) {
        let w = x * frac;
        let r = ssp_revenue(p, x, w).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(r == 0.0 || r >= p);
    }

    #[test]
    fn bootstrap_draws_from_the_cell(
        bids in prop::collection::vec((0usize..3, 0.01..500.0f64), 2..60),
        n in 1usize..200,
        seed in any::<u64>(),
    ) {
        let records: Vec<BidLogRecord> = bids
            .iter()
            .map(|&(ex, b)| BidLogRecord {
                advertiser_id: "a".into(),
                day: 1,
                hour: 2,
                exchange_id: ex as i64,
                second_bid: b,
            })
            .collect();
        let mut ids: Vec<i64> = records.iter().map(|r| r.exchange_id).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let result = build_bid_distribution(&records, "a", 1, 2, n, &mut rng);
        if ids.len() < 2 {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let d = result.unwrap();
        let pool = |id: i64| -> Vec<f64> {
            records.iter().filter(|r| r.exchange_id == id).map(|r| r.second_bid).collect()
        };
        let (p1, p2) = (pool(ids[0]), pool(ids[1]));
        prop_assert_eq!(d.first().len(), n);
        prop_assert_eq!(d.second().len(), n);
        prop_assert!(d.first().iter().all(|v| p1.contains(v)));
        prop_assert!(d.second().iter().all(|v| p2.contains(v)));
        let lmax = d.first().iter().chain(d.second()).copied().fold(0.0, f64::max);
        prop_assert_eq!(d.normalizer(), lmax);
        for _ in 0..20 {
            let (x, w) = d.sample_pair(&mut rng);
            prop_assert!(0.0 <= w && w <= x && x <= 1.0);
        }
    }

    #[test]
    fn confidence_intervals_bracket_the_mean(values in prop::collection::vec(-1e3..1e3f64, 1..60)) {
        let (mean, hw) = mean_and_half_width(&values);
        prop_assert!(hw >= 0.0);
        prop_assert!(mean - hw <= mean && mean <= mean + hw);
        if values.len() == 1 {
            prop_assert_eq!(hw, 0.0);
        }
    }
}
