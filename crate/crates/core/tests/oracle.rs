use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slate_bandits::environments::{make_example1_env, make_f_analog, make_uniform_env, FVariant};
use slate_bandits::oracle::{
    build_mean_table, exact_slate_mean, expected_max, mc_slate_mean, MeanMethod, DEFAULT_DELTA,
};
use slate_bandits::slate::enumerate_slates;
use slate_bandits::{EnvironmentSpec, Error, RewardFunction, Slate, SlotDistribution};

#[test]
fn max_over_three_uniforms_matches_simulation() {
    let u = |l, h| SlotDistribution::uniform(l, h).unwrap();
    let (a, b, c) = (u(0.1, 0.5), u(0.3, 0.4), u(0.0, 0.9));
    let exact = expected_max(&[&a, &b, &c]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let n = 2_000_000;
    let sim = (0..n)
        .map(|_| a.sample(&mut rng).max(b.sample(&mut rng)).max(c.sample(&mut rng)))
        .sum::<f64>()
        / n as f64;
    assert!((exact - sim).abs() < 1e-3, "{exact} vs {sim}");
}

#[test]
fn table_means_match_monte_carlo_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let env = make_uniform_env(3, 3, make_f_analog(FVariant::F2, 3).unwrap(), &mut rng).unwrap();
    let exact = build_mean_table(&env, MeanMethod::Exact).unwrap();
    let mc = build_mean_table(&env, MeanMethod::MonteCarlo { samples: 200_000, seed: 1 }).unwrap();
    for (e, m) in exact.means().iter().zip(mc.means()) {
        assert!((e - m).abs() < 0.005);
    }
    for slate in enumerate_slates(3, 3).unwrap() {
        assert_eq!(exact.mean(&slate).unwrap(), exact_slate_mean(&env, &slate).unwrap());
    }
    let best = exact.best_mean();
    assert!(exact.means().iter().all(|m| *m <= best));
    assert!(exact.delta_min() > 0.0);
}

#[test]
fn monte_carlo_covers_exact_for_point_masses_and_mixtures() {
    let pm = |v| SlotDistribution::point_mass(v).unwrap();
    let slots = vec![
        vec![pm(0.2), SlotDistribution::discrete(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap()],
        vec![SlotDistribution::uniform(0.3, 0.9).unwrap(), pm(0.6)],
    ];
    let env = EnvironmentSpec::new(slots, RewardFunction::max_of_all(2).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for slate in enumerate_slates(2, 2).unwrap() {
        let exact = exact_slate_mean(&env, &slate).unwrap();
        let mc = mc_slate_mean(&env, &slate, 400_000, DEFAULT_DELTA, &mut rng).unwrap();
        assert!((exact - mc.estimate).abs() <= mc.half_width, "{slate}");
    }
    // (2,1): max(Bernoulli(½), U[0.3,0.9]) = ½·1 + ½·0.6.
    let s = Slate::from_actions(&[2, 1]).unwrap();
    assert!((exact_slate_mean(&env, &s).unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn opaque_rewards_need_monte_carlo() {
    let base = make_example1_env();
    let slots: Vec<Vec<SlotDistribution>> = base.slots().map(|r| r.to_vec()).collect();
    let f = RewardFunction::opaque(2, "product", |y: &[f64]| y[0] * y[1]);
    let env = EnvironmentSpec::new(slots, f).unwrap();
    let s = Slate::from_actions(&[1, 1]).unwrap();
    assert!(matches!(exact_slate_mean(&env, &s), Err(Error::UnsupportedExact)));
    assert!(matches!(build_mean_table(&env, MeanMethod::Exact), Err(Error::UnsupportedExact)));
    let table = build_mean_table(&env, MeanMethod::MonteCarlo { samples: 100_000, seed: 4 }).unwrap();
    // Independent slots: E[Y1·Y2] = 0.45 · 0.45.
    assert!((table.mean(&s).unwrap() - 0.2025).abs() < 0.002);
}

#[test]
fn table_rejects_foreign_slates() {
    let table = build_mean_table(&make_example1_env(), MeanMethod::Exact).unwrap();
    assert!(matches!(
        table.mean(&Slate::from_actions(&[1, 3]).unwrap()),
        Err(Error::MissingSlate(_))
    ));
    assert!(table.mean(&Slate::from_actions(&[1, 1, 1]).unwrap()).is_err());
}
