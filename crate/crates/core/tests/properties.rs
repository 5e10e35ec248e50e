use fm3q::eval::{normalize_returns, play_match, MatchConfig, TablePolicy};
use fm3q::games::{fresh_state, random_tabular_game, RandomGameSpec};
use fm3q::learner::{igmm_check, Fm3qTopology, MixerSpec, NeuralFactorizedQ};
use fm3q::oracle::{max_min, min_max, minimax_bellman, nashconv, solve_superb_q};
use fm3q::seeded_rng;
use proptest::prelude::*;
use rand::Rng;

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn min_max_dominates_max_min(q in proptest::collection::vec(-5.0f64..5.0, 12)) {
        let lo = min_max(&q, 3, 4);
        let hi = max_min(&q, 3, 4);
        prop_assert!(hi.value <= lo.value);
        prop_assert_eq!(q[lo.pro * 4 + lo.ant], lo.value);
    }

    #[test]
    fn bellman_backup_contracts(seed in 0u64..500, gamma in 0.0f64..0.99) {
        let game = random_tabular_game(&RandomGameSpec::new(seed, 3, 1, 2, 2, gamma)).unwrap();
        let n = game.rewards().len();
        let mut rng = seeded_rng(seed, 1);
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let q2: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lhs = sup(&minimax_bellman(&game, &q), &minimax_bellman(&game, &q2));
        prop_assert!(lhs <= gamma * sup(&q, &q2) + 1e-12);
    }

    #[test]
    fn nashconv_is_nonnegative(seed in 0u64..500, pro in proptest::collection::vec(0usize..4, 3), ant in proptest::collection::vec(0usize..2, 3)) {
        let game = random_tabular_game(&RandomGameSpec::new(seed, 3, 2, 1, 2, 0.7)).unwrap();
        prop_assert!(nashconv(&game, &pro, &ant, 1e-10).unwrap() >= -1e-9);
    }

    #[test]
    fn superb_values_are_bounded(seed in 0u64..500, gamma in 0.0f64..0.95) {
        let game = random_tabular_game(&RandomGameSpec::new(seed, 4, 1, 1, 3, gamma)).unwrap();
        let r_max = game.rewards().iter().map(|r| r.abs()).fold(0.0, f64::max);
        let sol = solve_superb_q(&game, 1e-10, None).unwrap();
        for v in &sol.v_star.data {
            prop_assert!(v.abs() <= r_max / (1.0 - gamma) + 1e-8);
        }
    }

    #[test]
    fn monotone_models_satisfy_igmm(seed in 0u64..10_000, hidden in 2usize..12, mix in 1usize..10, state in 0usize..5) {
        let game = random_tabular_game(&RandomGameSpec::new(seed, 5, 2, 2, 3, 0.9)).unwrap();
        let model = NeuralFactorizedQ::new(Fm3qTopology::for_game(&game, 1, &[hidden], MixerSpec::hyper(mix)), &mut seeded_rng(seed, 0)).unwrap();
        prop_assert!(igmm_check(&model, &fresh_state(&game, state, 0, 1)).unwrap().is_consistent());
    }

    #[test]
    fn stochastic_matches_are_zero_sum(seed in 0u64..500, pro in proptest::collection::vec(0usize..2, 3), ant in proptest::collection::vec(0usize..2, 3)) {
        let game = random_tabular_game(&RandomGameSpec::new(seed, 3, 1, 1, 2, 0.8).horizon(8)).unwrap();
        let a = TablePolicy::new(&game, pro.clone(), ant.clone()).unwrap();
        let b = TablePolicy::new(&game, ant, pro).unwrap();
        let result = play_match(&game, &a, &b, &MatchConfig { episodes: 20, window: 1 }, &mut seeded_rng(seed, 2)).unwrap();
        prop_assert!(result.pro_returns.iter().zip(&result.ant_returns).all(|(p, q)| p + q == 0.0));
        prop_assert!(result.is_zero_sum());
        prop_assert_eq!(result.episodes, 20);
    }

    #[test]
    fn normalized_returns_span_the_unit_interval(raw in proptest::collection::vec(-100.0f64..100.0, 2..10)) {
        let norm = normalize_returns(&raw);
        prop_assert!(norm.iter().all(|x| (0.0..=1.0).contains(x)));
        let lo = norm.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = norm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((lo == 0.0 && hi == 1.0) || (lo == 0.5 && hi == 0.5));
    }
}
