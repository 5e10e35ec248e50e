use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{default_horizon, JointSpace, Team, TwoTeamGame, JOINT_ACTION_GUARD};
use crate::error::{Error, Result};

/// Row-major flat array with declared dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension(format!(
                "tensor dims {dims:?} need {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }
}

/// A fully enumerated game: explicit transition and reward tensors over joint
/// action indices. Fully observable: every agent observes the one-hot state
/// tagged with its own index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabularDocument", into = "TabularDocument")]
pub struct TabularGame {
    n_states: usize,
    pro_counts: Vec<usize>,
    ant_counts: Vec<usize>,
    gamma: f64,
    horizon: usize,
    reward_bound: f64,
    initial: Vec<f64>,
    /// [s][a][b][s′]
    transition: Vec<f64>,
    /// [s][a][b]
    reward: Vec<f64>,
    deterministic: bool,
    n_pro_joint: usize,
    n_ant_joint: usize,
}

/// On-disk form of a [`TabularGame`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularDocument {
    pub version: u32,
    pub kind: String,
    pub pro_actions: Vec<usize>,
    pub ant_actions: Vec<usize>,
    pub gamma: f64,
    pub horizon: usize,
    pub reward_bound: f64,
    pub initial: Vec<f64>,
    pub transition: Tensor,
    pub reward: Tensor,
}

impl From<TabularGame> for TabularDocument {
    fn from(g: TabularGame) -> Self {
        let a = g.pro_joint().size();
        let b = g.ant_joint().size();
        let s = g.n_states;
        TabularDocument {
            version: 1,
            kind: "tabular".into(),
            pro_actions: g.pro_counts,
            ant_actions: g.ant_counts,
            gamma: g.gamma,
            horizon: g.horizon,
            reward_bound: g.reward_bound,
            initial: g.initial,
            transition: Tensor {
                dims: vec![s, a, b, s],
                data: g.transition,
            },
            reward: Tensor {
                dims: vec![s, a, b],
                data: g.reward,
            },
        }
    }
}

impl TryFrom<TabularDocument> for TabularGame {
    type Error = Error;

    fn try_from(doc: TabularDocument) -> Result<Self> {
        if doc.kind != "tabular" {
            return Err(Error::Config(format!("expected kind \"tabular\", got {:?}", doc.kind)));
        }
        let s = doc.initial.len();
        TabularGame::new(
            s,
            doc.pro_actions,
            doc.ant_actions,
            doc.gamma,
            doc.horizon,
            doc.initial,
            doc.transition,
            doc.reward,
            Some(doc.reward_bound),
        )
    }
}

impl TabularGame {
    /// Builds and validates a tabular game. `reward_bound` defaults to the
    /// largest |R| entry.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        pro_counts: Vec<usize>,
        ant_counts: Vec<usize>,
        gamma: f64,
        horizon: usize,
        initial: Vec<f64>,
        transition: Tensor,
        reward: Tensor,
        reward_bound: Option<f64>,
    ) -> Result<Self> {
        if n_states == 0 || pro_counts.is_empty() || ant_counts.is_empty() {
            return Err(Error::Config("need at least one state and one agent per team".into()));
        }
        if pro_counts.iter().chain(&ant_counts).any(|&c| c == 0) {
            return Err(Error::Config("every agent needs at least one action".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma {gamma} outside [0,1)")));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let a = JointSpace::new(&pro_counts).size();
        let b = JointSpace::new(&ant_counts).size();
        if a * b > JOINT_ACTION_GUARD {
            return Err(Error::EnumerationGuard {
                actual: a * b,
                limit: JOINT_ACTION_GUARD,
            });
        }
        if transition.dims != [n_states, a, b, n_states] {
            return Err(Error::Dimension(format!(
                "transition dims {:?}, expected {:?}",
                transition.dims,
                [n_states, a, b, n_states]
            )));
        }
        if reward.dims != [n_states, a, b] {
            return Err(Error::Dimension(format!(
                "reward dims {:?}, expected {:?}",
                reward.dims,
                [n_states, a, b]
            )));
        }
        Tensor::new(transition.dims.clone(), transition.data.clone())?;
        Tensor::new(reward.dims.clone(), reward.data.clone())?;
        if initial.len() != n_states {
            return Err(Error::Dimension(format!(
                "initial distribution has {} entries for {n_states} states",
                initial.len()
            )));
        }
        let check_dist = |row: &[f64], what: &str| -> Result<()> {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Config(format!("{what} has negative or non-finite mass")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{what} sums to {total}")));
            }
            Ok(())
        };
        check_dist(&initial, "initial distribution")?;
        let mut deterministic = true;
        for (row_index, row) in transition.data.chunks(n_states).enumerate() {
            check_dist(row, &format!("transition row {row_index}"))?;
            if row.iter().filter(|&&p| p > 0.0).count() != 1 {
                deterministic = false;
            }
        }
        if reward.data.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("reward tensor".into()));
        }
        let max_abs = reward.data.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let reward_bound = reward_bound.unwrap_or(max_abs);
        if max_abs > reward_bound + 1e-12 {
            return Err(Error::Config(format!(
                "reward entry {max_abs} exceeds declared bound {reward_bound}"
            )));
        }
        Ok(Self {
            n_states,
            pro_counts,
            ant_counts,
            gamma,
            horizon,
            reward_bound,
            initial,
            transition: transition.data,
            reward: reward.data,
            deterministic,
            n_pro_joint: a,
            n_ant_joint: b,
        })
    }

    fn index(&self, state: usize, pro: &[usize], ant: &[usize]) -> (usize, usize) {
        let a = self.pro_joint();
        let b = self.ant_joint();
        debug_assert!(state < self.n_states);
        let ai = a.encode(pro).expect("pro action validated by caller");
        let bi = b.encode(ant).expect("ant action validated by caller");
        (ai, bi)
    }

    /// (Pro joint action count, Ant joint action count).
    pub fn joint_sizes(&self) -> (usize, usize) {
        (self.n_pro_joint, self.n_ant_joint)
    }

    /// R(s, a, b) by joint indices.
    pub fn reward_at(&self, state: usize, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.n_pro_joint, self.n_ant_joint);
        self.reward[(state * na + a) * nb + b]
    }

    /// P(·|s, a, b) by joint indices as a dense row over next states.
    pub fn transition_row(&self, state: usize, a: usize, b: usize) -> &[f64] {
        let (na, nb) = (self.n_pro_joint, self.n_ant_joint);
        let start = ((state * na + a) * nb + b) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    /// Reward tensor [s][a][b].
    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Same dynamics and rewards with a different discount (and matching
    /// default horizon).
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut g = self.clone();
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma {gamma} outside [0,1)")));
        }
        g.gamma = gamma;
        g.horizon = default_horizon(gamma);
        Ok(g)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let mut g = self.clone();
        g.horizon = horizon;
        Ok(g)
    }

    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        let doc = TabularDocument {
            initial,
            ..TabularDocument::from(self.clone())
        };
        TabularGame::try_from(doc)
    }

    /// Replaces the reward tensor [s][a][b].
    pub fn with_rewards(&self, rewards: Vec<f64>) -> Result<Self> {
        let mut doc = TabularDocument::from(self.clone());
        doc.reward.data = rewards;
        doc.reward_bound = doc.reward.data.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        TabularGame::try_from(doc)
    }
}

impl TwoTeamGame for TabularGame {
    fn pro_action_counts(&self) -> &[usize] {
        &self.pro_counts
    }
    fn ant_action_counts(&self) -> &[usize] {
        &self.ant_counts
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn reward_bound(&self) -> f64 {
        self.reward_bound
    }
    fn n_states(&self) -> usize {
        self.n_states
    }
    fn initial_distribution(&self) -> Vec<(usize, f64)> {
        support(&self.initial)
    }
    fn transition(&self, state: usize, pro: &[usize], ant: &[usize]) -> Vec<(usize, f64)> {
        let (a, b) = self.index(state, pro, ant);
        support(self.transition_row(state, a, b))
    }
    fn reward(&self, state: usize, pro: &[usize], ant: &[usize]) -> f64 {
        let (a, b) = self.index(state, pro, ant);
        self.reward_at(state, a, b)
    }
    fn is_deterministic(&self) -> bool {
        self.deterministic
    }
    fn observation_dim(&self, team: Team) -> usize {
        self.n_states + self.team_size(team)
    }
    fn observe(&self, state: usize, team: Team, agent: usize) -> Vec<f64> {
        let mut obs = vec![0.0; self.observation_dim(team)];
        obs[state] = 1.0;
        obs[self.n_states + agent] = 1.0;
        obs
    }
    fn state_dim(&self) -> usize {
        self.n_states
    }
    fn state_features(&self, state: usize) -> Vec<f64> {
        let mut f = vec![0.0; self.n_states];
        f[state] = 1.0;
        f
    }
    /// Myopic security bot: Pro picks the joint action maximizing the worst
    /// immediate reward, Ant the one minimizing the best immediate reward.
    fn scripted_action(&self, state: usize, team: Team) -> Vec<usize> {
        let (na, nb) = (self.pro_joint().size(), self.ant_joint().size());
        match team {
            Team::Pro => {
                let (mut best, mut best_value) = (0, f64::NEG_INFINITY);
                for a in 0..na {
                    let worst = (0..nb)
                        .map(|b| self.reward_at(state, a, b))
                        .fold(f64::INFINITY, f64::min);
                    if worst > best_value {
                        best = a;
                        best_value = worst;
                    }
                }
                self.pro_joint().decode(best)
            }
            Team::Ant => {
                let (mut best, mut best_value) = (0, f64::INFINITY);
                for b in 0..nb {
                    let top = (0..na)
                        .map(|a| self.reward_at(state, a, b))
                        .fold(f64::NEG_INFINITY, f64::max);
                    if top < best_value {
                        best = b;
                        best_value = top;
                    }
                }
                self.ant_joint().decode(best)
            }
        }
    }
}

fn support(row: &[f64]) -> Vec<(usize, f64)> {
    row.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| (s, p))
        .collect()
}

/// Parameters of a seeded random tabular game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGameSpec {
    pub seed: u64,
    pub n_states: usize,
    pub n_pro: usize,
    pub n_ant: usize,
    pub actions_per_agent: usize,
    pub gamma: f64,
    /// Defaults to the smallest H with γ^H ≤ 1e-3.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// One uniformly drawn successor per (s, a, b) instead of a normalized
    /// random distribution.
    #[serde(default)]
    pub deterministic: bool,
}

impl RandomGameSpec {
    pub fn new(
        seed: u64,
        n_states: usize,
        n_pro: usize,
        n_ant: usize,
        actions_per_agent: usize,
        gamma: f64,
    ) -> Self {
        Self {
            seed,
            n_states,
            n_pro,
            n_ant,
            actions_per_agent,
            gamma,
            horizon: None,
            deterministic: false,
        }
    }

    pub fn deterministic(mut self) -> Self {
        self.deterministic = true;
        self
    }

    pub fn horizon(mut self, horizon: usize) -> Self {
        self.horizon = Some(horizon);
        self
    }
}

/// Seeded random tabular game: transitions from normalized uniform(0,1]
/// draws, rewards uniform in [−1, 1], uniform initial distribution.
pub fn random_tabular_game(spec: &RandomGameSpec) -> Result<TabularGame> {
    if spec.n_states == 0 || spec.n_pro == 0 || spec.n_ant == 0 || spec.actions_per_agent == 0 {
        return Err(Error::Config("state, agent and action counts must be at least 1".into()));
    }
    let pro_counts = vec![spec.actions_per_agent; spec.n_pro];
    let ant_counts = vec![spec.actions_per_agent; spec.n_ant];
    let a = JointSpace::new(&pro_counts).size();
    let b = JointSpace::new(&ant_counts).size();
    if a.saturating_mul(b) > JOINT_ACTION_GUARD {
        return Err(Error::EnumerationGuard {
            actual: a.saturating_mul(b),
            limit: JOINT_ACTION_GUARD,
        });
    }
    let s = spec.n_states;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut transition = Vec::with_capacity(s * a * b * s);
    for _ in 0..s * a * b {
        if spec.deterministic {
            let next = rng.gen_range(0..s);
            transition.extend((0..s).map(|k| if k == next { 1.0 } else { 0.0 }));
        } else {
            // 1 - U[0,1) lies in (0,1].
            let draws: Vec<f64> = (0..s).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let total: f64 = draws.iter().sum();
            transition.extend(draws.iter().map(|d| d / total));
        }
    }
    let reward: Vec<f64> = (0..s * a * b).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let horizon = spec.horizon.unwrap_or_else(|| default_horizon(spec.gamma));
    TabularGame::new(
        s,
        pro_counts,
        ant_counts,
        spec.gamma,
        horizon,
        vec![1.0 / s as f64; s],
        Tensor::new(vec![s, a, b, s], transition)?,
        Tensor::new(vec![s, a, b], reward)?,
        Some(1.0),
    )
}

/// Payoff tensor for a one-shot team game: one dimension per agent, Pro
/// agents first, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl PayoffTensor {
    /// Two-player matrix with rows for Pro and columns for Ant.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self {
            dims: vec![rows.len(), cols],
            data: rows.iter().flatten().copied().collect(),
        }
    }
}

/// Single-state, γ = 0, H = 1 game whose reward reads the payoff tensor.
pub fn matrix_team_game(payoff: &PayoffTensor, n: usize, m: usize) -> Result<TabularGame> {
    if payoff.dims.len() != n + m || n == 0 || m == 0 {
        return Err(Error::Dimension(format!(
            "payoff tensor has {} dimensions for {n} + {m} agents",
            payoff.dims.len()
        )));
    }
    let tensor = Tensor::new(payoff.dims.clone(), payoff.data.clone())?;
    let pro_counts = payoff.dims[..n].to_vec();
    let ant_counts = payoff.dims[n..].to_vec();
    let a = JointSpace::new(&pro_counts).size();
    let b = JointSpace::new(&ant_counts).size();
    // Row-major over (pro agents..., ant agents...) is exactly [a][b].
    TabularGame::new(
        1,
        pro_counts,
        ant_counts,
        0.0,
        1,
        vec![1.0],
        Tensor::new(vec![1, a, b, 1], vec![1.0; a * b])?,
        Tensor::new(vec![1, a, b], tensor.data)?,
        None,
    )
}
