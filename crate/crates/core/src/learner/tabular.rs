use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FactorizedQ;
use crate::error::{Error, Result};
use crate::games::{AugmentedState, EpisodeStep, JointAction, JointSpace, TabularGame, Team, TwoTeamGame};
use crate::oracle::min_max;

/// Table-backed factorized Q over global states.
///
/// Q_tot is stored as its own table so the closed-form operator solution can
/// be held exactly; [`TabularFactorizedQ::from_individuals`] builds the summed
/// form Q_tot = Σ Q_i^+ − Σ Q_j^−.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularFactorizedQ {
    n_states: usize,
    pro_actions: Vec<usize>,
    ant_actions: Vec<usize>,
    /// [s][pro joint][ant joint].
    q_tot: Vec<f64>,
    /// pro[i][s·|A_i| + a_i].
    pro: Vec<Vec<f64>>,
    ant: Vec<Vec<f64>>,
}

/// One dataset entry with joint action indices. `weight` is the sample's
/// probability mass (1 for sampled transitions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularTransition {
    pub state: usize,
    pub pro: usize,
    pub ant: usize,
    pub reward: f64,
    pub next_state: usize,
    pub done: bool,
    pub weight: f64,
}

impl TabularTransition {
    pub fn from_step(step: &EpisodeStep, pro: &JointSpace, ant: &JointSpace) -> Result<Self> {
        Ok(Self {
            state: step.state.state,
            pro: pro.encode(&step.action.pro)?,
            ant: ant.encode(&step.action.ant)?,
            reward: step.reward,
            next_state: step.next_state.state,
            done: step.done,
            weight: 1.0,
        })
    }
}

impl TabularFactorizedQ {
    pub fn from_parts(
        n_states: usize,
        pro_actions: Vec<usize>,
        ant_actions: Vec<usize>,
        q_tot: Vec<f64>,
        pro: Vec<Vec<f64>>,
        ant: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let na = JointSpace::new(&pro_actions).size();
        let nb = JointSpace::new(&ant_actions).size();
        if q_tot.len() != n_states * na * nb {
            return Err(Error::Dimension(format!(
                "q_tot has {} entries, expected {}",
                q_tot.len(),
                n_states * na * nb
            )));
        }
        for (tables, counts) in [(&pro, &pro_actions), (&ant, &ant_actions)] {
            if tables.len() != counts.len()
                || tables.iter().zip(counts.iter()).any(|(t, &c)| t.len() != n_states * c)
            {
                return Err(Error::Dimension("individual tables do not match action counts".into()));
            }
        }
        Ok(Self {
            n_states,
            pro_actions,
            ant_actions,
            q_tot,
            pro,
            ant,
        })
    }

    pub fn zeros(n_states: usize, pro_actions: &[usize], ant_actions: &[usize]) -> Self {
        let na = JointSpace::new(pro_actions).size();
        let nb = JointSpace::new(ant_actions).size();
        Self {
            n_states,
            pro_actions: pro_actions.to_vec(),
            ant_actions: ant_actions.to_vec(),
            q_tot: vec![0.0; n_states * na * nb],
            pro: pro_actions.iter().map(|&c| vec![0.0; n_states * c]).collect(),
            ant: ant_actions.iter().map(|&c| vec![0.0; n_states * c]).collect(),
        }
    }

    pub fn for_game(game: &TabularGame) -> Self {
        Self::zeros(game.n_states(), game.pro_action_counts(), game.ant_action_counts())
    }

    /// Q_tot(s, a, b) = Σ_i Q_i^+(s, a_i) − Σ_j Q_j^−(s, b_j).
    pub fn from_individuals(
        n_states: usize,
        pro_actions: Vec<usize>,
        ant_actions: Vec<usize>,
        pro: Vec<Vec<f64>>,
        ant: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let mut fq = Self::from_parts(
            n_states,
            pro_actions.clone(),
            ant_actions.clone(),
            vec![0.0; n_states * JointSpace::new(&pro_actions).size() * JointSpace::new(&ant_actions).size()],
            pro,
            ant,
        )?;
        let (ps, as_) = (JointSpace::new(&pro_actions), JointSpace::new(&ant_actions));
        for s in 0..n_states {
            for ai in 0..ps.size() {
                let a = ps.decode(ai);
                let plus: f64 = a.iter().enumerate().map(|(i, &x)| fq.pro[i][s * pro_actions[i] + x]).sum();
                for bi in 0..as_.size() {
                    let b = as_.decode(bi);
                    let minus: f64 = b.iter().enumerate().map(|(j, &y)| fq.ant[j][s * ant_actions[j] + y]).sum();
                    let idx = fq.index(s, ai, bi);
                    fq.q_tot[idx] = plus - minus;
                }
            }
        }
        Ok(fq)
    }

    /// Arbitrary Q_tot with entries uniform in [−scale, scale] and individual
    /// tables marking a uniformly chosen action per agent and state.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        pro_actions: &[usize],
        ant_actions: &[usize],
        scale: f64,
    ) -> Self {
        let mut fq = Self::zeros(n_states, pro_actions, ant_actions);
        for q in &mut fq.q_tot {
            *q = rng.gen_range(-scale..=scale);
        }
        for (tables, counts) in [(&mut fq.pro, pro_actions), (&mut fq.ant, ant_actions)] {
            for (t, &c) in tables.iter_mut().zip(counts) {
                for s in 0..n_states {
                    t[s * c + rng.gen_range(0..c)] = 1.0;
                }
            }
        }
        fq
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn joint_sizes(&self) -> (usize, usize) {
        (JointSpace::new(&self.pro_actions).size(), JointSpace::new(&self.ant_actions).size())
    }

    fn index(&self, s: usize, a: usize, b: usize) -> usize {
        let (na, nb) = self.joint_sizes();
        (s * na + a) * nb + b
    }

    /// Q_tot table [s][a][b].
    pub fn q_tot_table(&self) -> &[f64] {
        &self.q_tot
    }

    /// Q_tot(s, ·, ·) as a row-major matrix.
    pub fn state_matrix(&self, s: usize) -> &[f64] {
        let (na, nb) = self.joint_sizes();
        &self.q_tot[s * na * nb..(s + 1) * na * nb]
    }

    pub fn individual_table(&self, team: Team, agent: usize) -> &[f64] {
        match team {
            Team::Pro => &self.pro[agent],
            Team::Ant => &self.ant[agent],
        }
    }

    /// V(s) = min_b max_a Q_tot(s, a, b) for every state.
    pub fn minimax_values(&self) -> Vec<f64> {
        let (na, nb) = self.joint_sizes();
        (0..self.n_states).map(|s| min_max(self.state_matrix(s), na, nb).value).collect()
    }
}

impl FactorizedQ for TabularFactorizedQ {
    fn pro_action_counts(&self) -> &[usize] {
        &self.pro_actions
    }

    fn ant_action_counts(&self) -> &[usize] {
        &self.ant_actions
    }

    fn agent_values(&self, state: &AugmentedState, team: Team, agent: usize) -> Result<Vec<f64>> {
        let s = state.state;
        let counts = match team {
            Team::Pro => &self.pro_actions,
            Team::Ant => &self.ant_actions,
        };
        let c = *counts
            .get(agent)
            .ok_or_else(|| Error::Dimension(format!("no {team:?} agent {agent}")))?;
        if s >= self.n_states {
            return Err(Error::Dimension(format!("state {s} out of {}", self.n_states)));
        }
        Ok(self.individual_table(team, agent)[s * c..(s + 1) * c].to_vec())
    }

    fn q_tot(&self, state: &AugmentedState, action: &JointAction) -> Result<f64> {
        if state.state >= self.n_states {
            return Err(Error::Dimension(format!("state {} out of {}", state.state, self.n_states)));
        }
        let a = JointSpace::new(&self.pro_actions).encode(&action.pro)?;
        let b = JointSpace::new(&self.ant_actions).encode(&action.ant)?;
        Ok(self.q_tot[self.index(state.state, a, b)])
    }

    fn joint_table(&self, state: &AugmentedState) -> Result<Vec<f64>> {
        super::guarded_spaces(&self.pro_actions, &self.ant_actions)?;
        if state.state >= self.n_states {
            return Err(Error::Dimension(format!("state {} out of {}", state.state, self.n_states)));
        }
        Ok(self.state_matrix(state.state).to_vec())
    }
}

/// Every (s, a, b) paired with each successor s′, weighted by P(s′|s, a, b).
/// Applying the operator to this dataset uses the exact expectation.
pub fn full_coverage_dataset(game: &TabularGame) -> Vec<TabularTransition> {
    let (na, nb) = game.joint_sizes();
    let mut out = Vec::new();
    for s in 0..game.n_states() {
        for a in 0..na {
            for b in 0..nb {
                let reward = game.reward_at(s, a, b);
                for (next_state, &p) in game.transition_row(s, a, b).iter().enumerate() {
                    if p > 0.0 {
                        out.push(TabularTransition {
                            state: s,
                            pro: a,
                            ant: b,
                            reward,
                            next_state,
                            done: game.is_terminal(next_state),
                            weight: p,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Closed-form minimizer of the empirical minimax Bellman error.
///
/// q_tot(s, a, b) is the dataset mean of e = r + γ·min_b′ max_a′ Q_tot(s′)
/// (e = r on terminal samples). Each agent's individual table is the
/// indicator of its component of (a*, b*) = argmin_b max_a q_tot(s).
pub fn exact_operator_apply(
    fq: &TabularFactorizedQ,
    dataset: &[TabularTransition],
    gamma: f64,
) -> Result<TabularFactorizedQ> {
    let (na, nb) = fq.joint_sizes();
    let n = fq.n_states;
    let values = fq.minimax_values();
    let mut sum = vec![0.0; n * na * nb];
    let mut mass = vec![0.0; n * na * nb];
    for t in dataset {
        if t.state >= n || t.next_state >= n || t.pro >= na || t.ant >= nb {
            return Err(Error::Dimension(format!("transition {t:?} outside the table")));
        }
        let e = if t.done { t.reward } else { t.reward + gamma * values[t.next_state] };
        let idx = fq.index(t.state, t.pro, t.ant);
        sum[idx] += t.weight * e;
        mass[idx] += t.weight;
    }
    let missing: Vec<(usize, usize, usize)> = mass
        .iter()
        .enumerate()
        .filter(|(_, &m)| m <= 0.0)
        .map(|(idx, _)| (idx / (na * nb), (idx / nb) % na, idx % nb))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Uncovered { missing });
    }
    let q_tot: Vec<f64> = sum.iter().zip(&mass).map(|(s, m)| s / m).collect();
    let mut next = TabularFactorizedQ::zeros(n, &fq.pro_actions, &fq.ant_actions);
    next.q_tot = q_tot;
    let (ps, as_) = (JointSpace::new(&fq.pro_actions), JointSpace::new(&fq.ant_actions));
    for s in 0..n {
        let sol = min_max(next.state_matrix(s), na, nb);
        for (i, &a) in ps.decode(sol.pro).iter().enumerate() {
            next.pro[i][s * fq.pro_actions[i] + a] = 1.0;
        }
        for (j, &b) in as_.decode(sol.ant).iter().enumerate() {
            next.ant[j][s * fq.ant_actions[j] + b] = 1.0;
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{fresh_state, matrix_team_game, random_tabular_game, PayoffTensor, RandomGameSpec};
    use crate::oracle::{solve_superb_q, sup_distance};
    #[test]
    fn zero_discount_gives_mean_reward() {
        let game = random_tabular_game(&RandomGameSpec::new(3, 2, 1, 1, 2, 0.0)).unwrap();
        let next = exact_operator_apply(&TabularFactorizedQ::for_game(&game), &full_coverage_dataset(&game), 0.0).unwrap();
        for (q, r) in next.q_tot_table().iter().zip(game.rewards()) {
            assert!((q - r).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_duplicates_are_averaged() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0]]), 1, 1).unwrap();
        let t = |reward| TabularTransition {
            state: 0,
            pro: 0,
            ant: 0,
            reward,
            next_state: 0,
            done: true,
            weight: 1.0,
        };
        let next = exact_operator_apply(&TabularFactorizedQ::for_game(&game), &[t(1.0), t(2.0)], 0.5).unwrap();
        assert_eq!(next.q_tot_table(), &[1.5]);
    }

    #[test]
    fn missing_entries_are_reported() {
        let game = random_tabular_game(&RandomGameSpec::new(1, 2, 1, 1, 2, 0.5)).unwrap();
        let mut data = full_coverage_dataset(&game);
        data.retain(|t| !(t.state == 1 && t.pro == 0 && t.ant == 1));
        match exact_operator_apply(&TabularFactorizedQ::for_game(&game), &data, 0.5) {
            Err(Error::Uncovered { missing }) => assert_eq!(missing, vec![(1, 0, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn indicators_mark_the_minimax_profile() {
        let game = random_tabular_game(&RandomGameSpec::new(5, 3, 2, 2, 2, 0.7)).unwrap();
        let next = exact_operator_apply(&TabularFactorizedQ::for_game(&game), &full_coverage_dataset(&game), 0.7).unwrap();
        let (na, nb) = next.joint_sizes();
        for s in 0..3 {
            let sol = min_max(next.state_matrix(s), na, nb);
            let greedy = next.greedy(&fresh_state(&game, s, 0, 1)).unwrap();
            assert_eq!(JointSpace::new(&[2, 2]).encode(&greedy.pro).unwrap(), sol.pro);
            assert_eq!(JointSpace::new(&[2, 2]).encode(&greedy.ant).unwrap(), sol.ant);
        }
    }

    #[test]
    fn iteration_reaches_the_oracle_on_stochastic_games() {
        let game = random_tabular_game(&RandomGameSpec::new(9, 3, 1, 2, 2, 0.8)).unwrap();
        let oracle = solve_superb_q(&game, 1e-12, None).unwrap();
        let data = full_coverage_dataset(&game);
        let mut q = TabularFactorizedQ::for_game(&game);
        for _ in 0..200 {
            q = exact_operator_apply(&q, &data, 0.8).unwrap();
        }
        assert!(sup_distance(q.q_tot_table(), &oracle.q_star.data) < 1e-9);
    }

    #[test]
    fn summed_tables_combine_individuals() {
        let fq = TabularFactorizedQ::from_individuals(
            1,
            vec![2],
            vec![2],
            vec![vec![2.0, 0.0]],
            vec![vec![3.0, 1.0]],
        )
        .unwrap();
        assert_eq!(fq.q_tot_table(), &[-1.0, 1.0, -3.0, -1.0]);
    }
}
