use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{fresh_state, sample_support, step, AugmentedState, JointAction, Team, TwoTeamGame};
use crate::learner::TeamPolicy;

/// z for a two-sided 95% normal interval.
pub const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    /// Episodes per match on stochastic games; deterministic games play one
    /// episode per initial state instead.
    pub episodes: usize,
    /// History window the policies were trained with.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_window() -> usize {
    1
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { episodes: 100, window: 1 }
    }
}

/// Discounted returns of one match, from both teams' points of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// True when the game and both policies are deterministic and every
    /// initial state was played once with its probability as weight.
    pub exact: bool,
    pub episodes: usize,
    pub weights: Vec<f64>,
    pub pro_returns: Vec<f64>,
    pub ant_returns: Vec<f64>,
    /// Weighted mean Pro return.
    pub mean_return: f64,
    /// Share of episodes with positive Pro return.
    pub pro_win_rate: f64,
    /// Share of episodes with negative Pro return.
    pub ant_win_rate: f64,
    pub draw_rate: f64,
    /// 95% normal-approximation half-width of `mean_return`; 0 when exact.
    pub half_width: f64,
}

impl MatchResult {
    /// Pro return + Ant return = 0 exactly in every episode.
    pub fn is_zero_sum(&self) -> bool {
        self.pro_returns.iter().zip(&self.ant_returns).all(|(p, a)| p + a == 0.0)
    }

    fn from_episodes(exact: bool, weights: Vec<f64>, pro_returns: Vec<f64>, ant_returns: Vec<f64>) -> Self {
        let mean_return: f64 = weights.iter().zip(&pro_returns).map(|(w, g)| w * g).sum();
        let share = |pred: &dyn Fn(f64) -> bool| -> f64 {
            weights.iter().zip(&pro_returns).filter(|(_, &g)| pred(g)).map(|(w, _)| w).sum()
        };
        let pro_win_rate = share(&|g| g > 0.0);
        let ant_win_rate = share(&|g| g < 0.0);
        let draw_rate = share(&|g| g == 0.0);
        let n = pro_returns.len();
        let half_width = if exact || n < 2 {
            0.0
        } else {
            let var: f64 = pro_returns.iter().map(|g| (g - mean_return).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        };
        Self {
            exact,
            episodes: n,
            weights,
            pro_returns,
            ant_returns,
            mean_return,
            pro_win_rate,
            ant_win_rate,
            draw_rate,
            half_width,
        }
    }
}

/// Plays one episode from `start` and returns (Pro, Ant) discounted returns.
fn play_episode<G, R>(game: &G, pro: &dyn TeamPolicy, ant: &dyn TeamPolicy, start: usize, window: usize, rng: &mut R) -> Result<(f64, f64)>
where
    G: TwoTeamGame + ?Sized,
    R: Rng + ?Sized,
{
    let gamma = game.gamma();
    let mut state: AugmentedState = fresh_state(game, start, 0, window);
    let (mut g_pro, mut g_ant, mut discount) = (0.0, 0.0, 1.0);
    loop {
        let action = JointAction::new(pro.act(&state, Team::Pro)?, ant.act(&state, Team::Ant)?);
        let st = step(game, &state, &action, rng)?;
        g_pro += discount * st.reward;
        g_ant += discount * -st.reward;
        discount *= gamma;
        if st.done {
            return Ok((g_pro, g_ant));
        }
        state = st.next_state;
    }
}

/// Plays `pro` against `ant` with greedy (ε = 0) policies. On deterministic
/// games each initial state is played once and weighted by its probability,
/// which makes the result exact; otherwise `config.episodes` episodes are
/// sampled.
pub fn play_match<G, R>(game: &G, pro: &dyn TeamPolicy, ant: &dyn TeamPolicy, config: &MatchConfig, rng: &mut R) -> Result<MatchResult>
where
    G: TwoTeamGame + ?Sized,
    R: Rng + ?Sized,
{
    let initial = game.initial_distribution();
    let (exact, starts, weights): (bool, Vec<usize>, Vec<f64>) = if game.is_deterministic() {
        (true, initial.iter().map(|&(s, _)| s).collect(), initial.iter().map(|&(_, p)| p).collect())
    } else {
        if config.episodes == 0 {
            return Err(Error::Config("a match needs at least one episode".into()));
        }
        let n = config.episodes;
        let starts = (0..n).map(|_| sample_support(&initial, rng)).collect();
        (false, starts, vec![1.0 / n as f64; n])
    };
    let mut pro_returns = Vec::with_capacity(starts.len());
    let mut ant_returns = Vec::with_capacity(starts.len());
    for &s in &starts {
        let (p, a) = play_episode(game, pro, ant, s, config.window, rng)?;
        pro_returns.push(p);
        ant_returns.push(a);
    }
    let result = MatchResult::from_episodes(exact, weights, pro_returns, ant_returns);
    debug_assert!(result.is_zero_sum());
    Ok(result)
}

/// The game's hand-written bot as a policy.
pub struct ScriptedPolicy<'g, G: ?Sized>(pub &'g G);

impl<G: TwoTeamGame + ?Sized> TeamPolicy for ScriptedPolicy<'_, G> {
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>> {
        Ok(self.0.scripted_action(state.state, team))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::TablePolicy;
    use crate::games::{grid_keepaway_game, matrix_team_game, random_tabular_game, GridConfig, PayoffTensor, RandomGameSpec};
    use crate::oracle::solve_superb_q;
    use crate::seeded_rng;

    #[test]
    fn oracle_pair_earns_the_game_value() {
        for seed in 0..20 {
            let game = random_tabular_game(&RandomGameSpec::new(seed, 4, 1, 1, 3, 0.5).deterministic().horizon(60)).unwrap();
            let sol = solve_superb_q(&game, 1e-13, None).unwrap();
            if !sol.has_pure_saddles(1e-12) {
                continue;
            }
            let table = TablePolicy::from_oracle(&game, &sol).unwrap();
            let r = play_match(&game, &table, &table, &MatchConfig::default(), &mut seeded_rng(0, 0)).unwrap();
            let v: f64 = game.initial().iter().zip(&sol.v_star.data).map(|(p, v)| p * v).sum();
            assert!(r.exact);
            assert!((r.mean_return - v).abs() <= 1e-9, "seed {seed}: {} vs {v}", r.mean_return);
            assert!(r.is_zero_sum());
        }
    }

    #[test]
    fn grid_bot_matches_are_zero_sum() {
        let game = grid_keepaway_game(&GridConfig::new(5)).unwrap();
        let bot = ScriptedPolicy(&game);
        let r = play_match(&game, &bot, &bot, &MatchConfig::default(), &mut seeded_rng(0, 0)).unwrap();
        assert!(r.exact && r.is_zero_sum());
        assert_eq!(r.episodes, 1);
    }

    #[test]
    fn symmetric_matrix_self_play_is_zero() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0], vec![1.0, -1.0, 0.0]]), 1, 1).unwrap();
        for k in 0..3 {
            let p = TablePolicy::new(&game, vec![k], vec![k]).unwrap();
            let r = play_match(&game, &p, &p, &MatchConfig::default(), &mut seeded_rng(0, 0)).unwrap();
            assert_eq!(r.mean_return, 0.0);
            assert_eq!(r.draw_rate, 1.0);
        }
    }

    #[test]
    fn sampled_matches_are_reproducible() {
        let game = random_tabular_game(&RandomGameSpec::new(3, 3, 1, 1, 2, 0.9).horizon(8)).unwrap();
        let p = TablePolicy::new(&game, vec![0, 1, 0], vec![1, 1, 0]).unwrap();
        let config = MatchConfig { episodes: 50, window: 1 };
        let a = play_match(&game, &p, &p, &config, &mut seeded_rng(5, 3)).unwrap();
        let b = play_match(&game, &p, &p, &config, &mut seeded_rng(5, 3)).unwrap();
        assert_eq!(a, b);
        assert!(!a.exact && a.half_width > 0.0);
        assert!(a.is_zero_sum());
    }
}
