//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! tolerances are pinned as constants below.

use std::fs;
use std::process::Command;
use std::time::Instant;

use fm3q::baselines::selfplay_independent_train;
use fm3q::eval::{ablate_buffer, play_match, AblationSizes, MatchConfig, MatchResult, ScriptedPolicy, TablePolicy};
use fm3q::games::{
    fresh_state, grid_keepaway_game, random_tabular_game, GridConfig, JointAction, RandomGameSpec, TabularGame, Team, TwoTeamGame,
};
use fm3q::learner::{
    exact_operator_apply, extract_policies, full_coverage_dataset, igmm_check, tabulate_policy, BufferSpec, Fm3qTopology,
    MixerSpec, NeuralFactorizedQ, RoundRecord, TabularFactorizedQ, TeamPolicy, TrainConfig,
};
use fm3q::numerics::check_gradient;
use fm3q::oracle::{nashconv, solve_superb_q};
use fm3q::seeded_rng;
use rand::Rng;

const CONTRACTION_SLACK: f64 = 1e-9;
const CONVERGENCE_DISTANCE: f64 = 1e-6;
const RATIO_SLACK: f64 = 1e-9;
const GRAD_EPS: f64 = 1e-5;
const GRAD_MAX_REL: f64 = 1e-4;
/// Configurations closer than this to a kink are redrawn.
const KINK_MARGIN: f64 = 1e-3;
const NASHCONV_FRACTION: f64 = 0.05;
const TREND_MIN: f64 = 0.9;
const SEEDS: [u64; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
const REQUIRED_SEEDS: usize = 6;

/// Online-learning settings shared by the learned methods.
const EPISODES: usize = 500;
const LEARNING_RATE: f64 = 2e-3;
const HIDDEN: usize = 32;
const MIX_HIDDEN: usize = 16;
const UPDATES: usize = 10;

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn sup(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn criterion_1_contraction() {
    let start = Instant::now();
    let gammas = [0.5, 0.9, 0.99];
    let (mut trials, mut held, mut worst) = (0, 0, f64::NEG_INFINITY);
    for g in 0..12u64 {
        let gamma = gammas[g as usize % 3];
        let spec = RandomGameSpec::new(100 + g, 2 + g as usize % 4, 2, 2, 2 + g as usize % 2, gamma);
        let game = random_tabular_game(&spec).unwrap();
        let data = full_coverage_dataset(&game);
        let (pro, ant) = (game.pro_action_counts(), game.ant_action_counts());
        let mut rng = seeded_rng(g, 0);
        for _ in 0..10 {
            let scale = rng.gen_range(0.1..10.0);
            let q = TabularFactorizedQ::random(&mut rng, game.n_states(), &pro, &ant, scale);
            let q2 = TabularFactorizedQ::random(&mut rng, game.n_states(), &pro, &ant, scale);
            let tq = exact_operator_apply(&q, &data, gamma).unwrap();
            let tq2 = exact_operator_apply(&q2, &data, gamma).unwrap();
            let lhs = sup(tq.q_tot_table(), tq2.q_tot_table());
            let rhs = gamma * sup(q.q_tot_table(), q2.q_tot_table());
            trials += 1;
            worst = worst.max(lhs - rhs);
            if lhs <= rhs + CONTRACTION_SLACK {
                held += 1;
            }
        }
    }
    let ok = trials >= 100 && held == trials;
    println!(
        "criterion 1 contraction: {} ({held}/{trials} pairs on 12 games, worst excess {worst:.3e}, {:.1}s)",
        verdict(ok),
        start.elapsed().as_secs_f64()
    );
    assert!(ok);
}

#[test]
fn criterion_2_convergence() {
    let start = Instant::now();
    let gammas = [0.5, 0.9, 0.99];
    let mut failures = Vec::new();
    let mut iterations = Vec::new();
    for g in 0..10u64 {
        let gamma = gammas[g as usize % 3];
        let spec = RandomGameSpec::new(200 + g, 2 + g as usize % 4, 2, 2, 2, gamma).deterministic();
        let game = random_tabular_game(&spec).unwrap();
        let oracle = solve_superb_q(&game, 1e-13, None).unwrap();
        let data = full_coverage_dataset(&game);
        let mut q = TabularFactorizedQ::for_game(&game);
        let mut last_residual: Option<f64> = None;
        let mut ratio_ok = true;
        let mut k = 0;
        while sup(q.q_tot_table(), &oracle.q_star.data) > CONVERGENCE_DISTANCE && k < 20_000 {
            let next = exact_operator_apply(&q, &data, gamma).unwrap();
            let residual = sup(next.q_tot_table(), q.q_tot_table());
            if let Some(prev) = last_residual {
                ratio_ok &= residual <= gamma * prev + RATIO_SLACK;
            }
            last_residual = Some(residual);
            q = next;
            k += 1;
        }
        let reached = sup(q.q_tot_table(), &oracle.q_star.data) <= CONVERGENCE_DISTANCE;
        iterations.push(k);
        if !(reached && ratio_ok) {
            failures.push(g);
        }
    }
    let ok = failures.is_empty();
    println!(
        "criterion 2 convergence: {} (10 deterministic games, iterations {iterations:?}, failures {failures:?}, {:.1}s)",
        verdict(ok),
        start.elapsed().as_secs_f64()
    );
    assert!(ok);
}

#[test]
fn criterion_3_igmm() {
    let start = Instant::now();
    let game = random_tabular_game(&RandomGameSpec::new(300, 50, 2, 2, 3, 0.9)).unwrap();
    let (mut cases, mut consistent) = (0, 0);
    for m in 0..50u64 {
        let hidden = [4 + (m as usize % 3) * 4];
        let mixer = MixerSpec::hyper(2 + m as usize % 7);
        let topo = Fm3qTopology::for_game(&game, 1, &hidden, mixer);
        let model = NeuralFactorizedQ::new(topo, &mut seeded_rng(m, 0)).unwrap();
        for s in 0..50 {
            let state = fresh_state(&game, s, 0, 1);
            cases += 1;
            if igmm_check(&model, &state).unwrap().is_consistent() {
                consistent += 1;
            }
        }
    }
    let ok = consistent == cases;
    println!(
        "criterion 3 IGMM: {} ({consistent}/{cases} model-state cases, 81 joint actions, {:.1}s)",
        verdict(ok),
        start.elapsed().as_secs_f64()
    );
    assert!(ok);
}

#[test]
fn criterion_4_gradient() {
    let start = Instant::now();
    let mut rng = seeded_rng(400, 0);
    let (mut configs, mut redrawn, mut worst) = (0, 0, 0.0f64);
    let mut attempt = 0u64;
    while configs < 20 {
        attempt += 1;
        let n_pro = rng.gen_range(1..=2);
        let n_ant = rng.gen_range(1..=2);
        let actions = rng.gen_range(2..=3);
        let game = random_tabular_game(&RandomGameSpec::new(attempt, 4, n_pro, n_ant, actions, 0.9)).unwrap();
        let hidden: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(3..=8)).collect();
        let topo = Fm3qTopology::for_game(&game, 1, &hidden, MixerSpec::hyper(rng.gen_range(2..=8)));
        let model = NeuralFactorizedQ::new(topo, &mut seeded_rng(attempt, 1)).unwrap();
        let net = model.net();
        let state = fresh_state(&game, rng.gen_range(0..4), 0, 1);
        let action = JointAction::new(
            (0..n_pro).map(|_| rng.gen_range(0..actions)).collect(),
            (0..n_ant).map(|_| rng.gen_range(0..actions)).collect(),
        );
        let params = model.params().values();
        let (_, mut tape) = net.mix_forward(params, &state, &action).unwrap();
        if net.kink_distance(&tape) < KINK_MARGIN {
            redrawn += 1;
            continue;
        }
        let mut grad = vec![0.0; params.len()];
        net.backward(params, &mut tape, 1.0, &mut grad).unwrap();
        let report = check_gradient(|p| net.q_tot(p, &state, &action).unwrap(), params, &grad, GRAD_EPS);
        worst = worst.max(report.max_relative_error);
        configs += 1;
    }
    let ok = worst <= GRAD_MAX_REL;
    println!(
        "criterion 4 gradient: {} (max relative error {worst:.3e} over {configs} configurations, {redrawn} redrawn near kinks, {:.1}s)",
        verdict(ok),
        start.elapsed().as_secs_f64()
    );
    assert!(ok);
}

/// First seed whose 4-state, 2v2, 2-action deterministic game has a pure
/// saddle at every state of Q*.
fn acceptance_game() -> (u64, TabularGame) {
    (0u64..)
        .map(|seed| (seed, random_tabular_game(&RandomGameSpec::new(seed, 4, 2, 2, 2, 0.5).deterministic()).unwrap()))
        .find(|(_, game)| solve_superb_q(game, 1e-12, None).unwrap().has_pure_saddles(1e-12))
        .unwrap()
}

fn exact_nashconv(game: &TabularGame, policy: &dyn TeamPolicy) -> f64 {
    let pro = tabulate_policy(policy, game, Team::Pro, 1).unwrap();
    let ant = tabulate_policy(policy, game, Team::Ant, 1).unwrap();
    nashconv(game, &pro, &ant, 1e-10).unwrap()
}

fn coordinator_ok(rounds: &[RoundRecord], episodes: usize) -> bool {
    rounds.len() == episodes
        && rounds
            .iter()
            .all(|r| r.updates == UPDATES && r.batch_size == (r.buffer_len / UPDATES).max(1) && r.target_synced)
}

#[test]
fn criteria_5_to_8_online_learning() {
    let start = Instant::now();
    let (game_seed, game) = acceptance_game();
    let r_max = game.rewards().iter().map(|r| r.abs()).fold(0.0, f64::max);
    let threshold = NASHCONV_FRACTION * r_max / (1.0 - game.gamma());
    let config = TrainConfig {
        episodes: EPISODES,
        hidden: vec![HIDDEN],
        mixer: MixerSpec::hyper(MIX_HIDDEN),
        learning_rate: LEARNING_RATE,
        buffer: BufferSpec::full(),
        updates_per_round: UPDATES,
        checkpoint_every: Some(EPISODES / 10),
        ..TrainConfig::default()
    };
    let total_steps = EPISODES * game.horizon();
    let sizes = AblationSizes {
        small: total_steps / 20,
        large: total_steps / 4,
    };
    let matches = MatchConfig::default();
    let ablation = ablate_buffer(&game, sizes, &config, &SEEDS, &matches).unwrap();

    // Criterion 5: the full-buffer cohort is the FM3Q run.
    let fm3q: Vec<f64> = ablation.runs.iter().map(|r| exact_nashconv(&game, &extract_policies(r[2].model.clone()))).collect();
    let mut iql = Vec::new();
    let mut iql_rounds_ok = true;
    for &seed in &SEEDS {
        let out = selfplay_independent_train(&game, &TrainConfig { seed, ..config.clone() }).unwrap();
        iql_rounds_ok &= coordinator_ok(&out.rounds, EPISODES);
        iql.push(exact_nashconv(&game, &out.model));
    }
    let solved = fm3q.iter().filter(|&&v| v <= threshold).count();
    let (fm3q_median, iql_median) = (median(&fm3q), median(&iql));
    let ordered = iql_median > fm3q_median;
    let ok5 = solved >= REQUIRED_SEEDS && ordered;
    println!(
        "criterion 5 online learning: {} (game seed {game_seed}, threshold {threshold:.4}; FM3Q ≤ threshold on {solved}/8, \
         median {fm3q_median:.4}; IQL median {iql_median:.4}, strictly higher: {ordered}; FM3Q {fm3q:.4?}; IQL {iql:.4?})",
        verdict(ok5)
    );

    // Criterion 6: checkpoints of the same runs.
    let trends: Vec<f64> = ablation
        .seeds
        .iter()
        .map(|s| s.trend[2].as_ref().map_or(0.0, |t| t.fraction_later_beats_earlier))
        .collect();
    let trend_ok = trends.iter().filter(|&&t| t >= TREND_MIN).count();
    let ok6 = trend_ok >= REQUIRED_SEEDS;
    println!(
        "criterion 6 optimization trend: {} (fraction ≥ {TREND_MIN} on {trend_ok}/8 seeds: {trends:.3?})",
        verdict(ok6)
    );

    // Criterion 7: buffer ablation.
    let steps_match = ablation.seeds.iter().all(|s| s.total_steps == [total_steps; 3]);
    let ordered7 = ablation.seeds.iter().filter(|s| s.ordered()).count();
    let finals: Vec<[f64; 3]> = ablation.seeds.iter().map(|s| s.final_rr).collect();
    let ok7 = steps_match && ordered7 >= REQUIRED_SEEDS;
    println!(
        "criterion 7 buffer ablation: {} (sizes {}/{}/full of {total_steps} steps; full ≥ large ≥ small on {ordered7}/8; \
         normalized RR [small, large, full] {finals:.3?})",
        verdict(ok7),
        sizes.small,
        sizes.large
    );

    // Criterion 8: every round of every run above.
    let fm3q_rounds_ok = ablation.runs.iter().flatten().all(|o| coordinator_ok(&o.rounds, EPISODES));
    let ok8 = fm3q_rounds_ok && iql_rounds_ok;
    println!(
        "criterion 8 coordinator: {} ({} FM3Q runs and {} IQL runs, U={UPDATES}, B=max(1,⌊L/U⌋), bit-exact target refresh)",
        verdict(ok8),
        ablation.runs.len() * 3,
        SEEDS.len()
    );
    println!("criteria 5-8 runtime {:.1}s", start.elapsed().as_secs_f64());
    assert!(ok5 && ok6 && ok7 && ok8, "criteria 5-8: {ok5} {ok6} {ok7} {ok8}");
}

fn train_metrics(dir: &std::path::Path, name: &str) -> Vec<u8> {
    let config = serde_json::json!({
        "game": {"type": "random", "seed": 9, "n_states": 3, "n_pro": 2, "n_ant": 2, "actions_per_agent": 2, "gamma": 0.8},
        "episodes": 20,
        "hidden": [8],
        "mix_hidden": 4,
        "seed": 11,
        "checkpoint_every": 5,
        "eval": {"nashconv_every": 5}
    });
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, config.to_string()).unwrap();
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_fm3q"))
        .args(["train", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    fs::read(out.join("metrics.csv")).unwrap()
}

#[test]
fn criterion_9_zero_sum_and_determinism() {
    let start = Instant::now();
    let mut episodes = 0;
    let mut zero_sum = true;
    let stochastic = random_tabular_game(&RandomGameSpec::new(900, 4, 2, 2, 2, 0.9)).unwrap();
    let grid = grid_keepaway_game(&GridConfig::new(5)).unwrap();
    let mut rng = seeded_rng(900, 0);
    let mut record = |result: MatchResult| {
        episodes += result.episodes;
        zero_sum &= result.pro_returns.iter().zip(&result.ant_returns).all(|(p, a)| p + a == 0.0);
    };
    for k in 0..10 {
        let pro: Vec<usize> = (0..4).map(|_| rng.gen_range(0..4)).collect();
        let ant: Vec<usize> = (0..4).map(|_| rng.gen_range(0..4)).collect();
        let a = TablePolicy::new(&stochastic, pro.clone(), ant.clone()).unwrap();
        let b = TablePolicy::new(&stochastic, ant, pro).unwrap();
        let config = MatchConfig { episodes: 50, window: 1 };
        record(play_match(&stochastic, &a, &b, &config, &mut seeded_rng(900, k)).unwrap());
    }
    let bot = ScriptedPolicy(&grid);
    let topo = Fm3qTopology::for_game(&grid, 1, &[8], MixerSpec::hyper(4));
    let learned = extract_policies(NeuralFactorizedQ::new(topo, &mut seeded_rng(901, 0)).unwrap());
    for (k, (p, a)) in [(&bot as &dyn TeamPolicy, &learned as &dyn TeamPolicy), (&learned, &bot)].into_iter().enumerate() {
        record(play_match(&grid, p, a, &MatchConfig { episodes: 50, window: 1 }, &mut seeded_rng(902, k as u64)).unwrap());
    }

    let dir = tempfile::tempdir().unwrap();
    let first = train_metrics(dir.path(), "a");
    let second = train_metrics(dir.path(), "b");
    let identical = first == second && !first.is_empty();
    let ok = zero_sum && identical;
    println!(
        "criterion 9 zero-sum and determinism: {} ({episodes} match episodes with Pro + Ant = 0 exactly: {zero_sum}; \
         metrics CSV byte-identical across two runs: {identical}, {:.1}s)",
        verdict(ok),
        start.elapsed().as_secs_f64()
    );
    assert!(ok);
}
