use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::games::{reset, step, AugmentedState, History, JointAction, Team, TwoTeamGame};
use crate::learner::{argmax, Coordinator, MetricsRow, ReplayBuffer, RoundRecord, TeamPolicy, TrainConfig};
use crate::numerics::{adam_step, Activation, AdamState, DenseNet, ParamDocument, ParamVector};
use crate::seeded_rng;

pub const IQL_DOCUMENT_VERSION: u32 = 1;

const STREAM_INIT: u64 = 0;
const STREAM_ROLLOUT: u64 = 1;
/// Agent k samples its batches from stream `STREAM_BATCH_BASE + k`.
const STREAM_BATCH_BASE: u64 = 2;

/// One agent's Q network over its own history features.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentAgent {
    pub team: Team,
    pub index: usize,
    net: DenseNet,
    params: ParamVector,
}

impl IndependentAgent {
    fn new<R: Rng + ?Sized>(team: Team, index: usize, inputs: usize, hidden: &[usize], actions: usize, rng: &mut R) -> Result<Self> {
        let net = agent_net(inputs, hidden, actions)?;
        let mut params = ParamVector::new();
        net.register(&agent_prefix(team, index), &mut params);
        net.init(rng, params.values_mut());
        Ok(Self { team, index, net, params })
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn values(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.net.predict(self.params.values(), features)
    }

    fn features<'a>(&self, state: &'a AugmentedState) -> &'a [f64] {
        let histories = match self.team {
            Team::Pro => &state.pro,
            Team::Ant => &state.ant,
        };
        histories[self.index].features()
    }
}

fn agent_net(inputs: usize, hidden: &[usize], actions: usize) -> Result<DenseNet> {
    let mut sizes = vec![inputs];
    sizes.extend_from_slice(hidden);
    sizes.push(actions);
    DenseNet::new(&sizes, Activation::Relu, Activation::Identity)
}

fn agent_prefix(team: Team, index: usize) -> String {
    match team {
        Team::Pro => format!("pro{index}"),
        Team::Ant => format!("ant{index}"),
    }
}

/// Independent Q-learners for both teams. Each agent maximizes its own
/// team's reward and treats every other agent as part of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentModel {
    window: usize,
    hidden: Vec<usize>,
    pro: Vec<IndependentAgent>,
    ant: Vec<IndependentAgent>,
}

impl IndependentModel {
    pub fn new<G: TwoTeamGame + ?Sized, R: Rng + ?Sized>(game: &G, window: usize, hidden: &[usize], rng: &mut R) -> Result<Self> {
        let build = |team: Team, rng: &mut R| -> Result<Vec<IndependentAgent>> {
            game.action_counts(team)
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let inputs = History::feature_len(window, game.observation_dim(team), n);
                    IndependentAgent::new(team, i, inputs, hidden, n, rng)
                })
                .collect()
        };
        let pro = build(Team::Pro, rng)?;
        let ant = build(Team::Ant, rng)?;
        Ok(Self {
            window,
            hidden: hidden.to_vec(),
            pro,
            ant,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn agents(&self, team: Team) -> &[IndependentAgent] {
        match team {
            Team::Pro => &self.pro,
            Team::Ant => &self.ant,
        }
    }

    fn agents_mut(&mut self) -> impl Iterator<Item = &mut IndependentAgent> {
        self.pro.iter_mut().chain(self.ant.iter_mut())
    }

    /// ε-greedy joint action, drawing per agent in the order Pro0.., Ant0...
    fn select<R: Rng + ?Sized>(&self, state: &AugmentedState, epsilon: f64, rng: &mut R) -> Result<JointAction> {
        let pick = |agent: &IndependentAgent, rng: &mut R| -> Result<usize> {
            let n = agent.net.output_dim();
            if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                return Ok(rng.gen_range(0..n));
            }
            Ok(argmax(&agent.values(agent.features(state))?))
        };
        let pro = self.pro.iter().map(|a| pick(a, rng)).collect::<Result<Vec<_>>>()?;
        let ant = self.ant.iter().map(|a| pick(a, rng)).collect::<Result<Vec<_>>>()?;
        Ok(JointAction::new(pro, ant))
    }

    pub fn to_document(&self) -> IndependentDocument {
        let docs = |agents: &[IndependentAgent]| -> Vec<AgentDocument> {
            agents
                .iter()
                .map(|a| AgentDocument {
                    inputs: a.net.input_dim(),
                    actions: a.net.output_dim(),
                    params: a.params.clone().into(),
                })
                .collect()
        };
        IndependentDocument {
            version: IQL_DOCUMENT_VERSION,
            kind: "iql_model".into(),
            window: self.window,
            hidden: self.hidden.clone(),
            pro: docs(&self.pro),
            ant: docs(&self.ant),
        }
    }

    pub fn from_document(doc: IndependentDocument) -> Result<Self> {
        if doc.version != IQL_DOCUMENT_VERSION || doc.kind != "iql_model" {
            return Err(Error::Config(format!(
                "expected iql_model version {IQL_DOCUMENT_VERSION}, got {} version {}",
                doc.kind, doc.version
            )));
        }
        let load = |team: Team, agents: Vec<AgentDocument>| -> Result<Vec<IndependentAgent>> {
            agents
                .into_iter()
                .enumerate()
                .map(|(index, a)| {
                    let net = agent_net(a.inputs, &doc.hidden, a.actions)?;
                    let params = ParamVector::try_from(a.params)?;
                    let mut expected = ParamVector::new();
                    net.register(&agent_prefix(team, index), &mut expected);
                    if params.layout() != expected.layout() {
                        return Err(Error::Dimension(format!("{} parameters do not match the network", agent_prefix(team, index))));
                    }
                    Ok(IndependentAgent { team, index, net, params })
                })
                .collect()
        };
        Ok(Self {
            window: doc.window,
            hidden: doc.hidden.clone(),
            pro: load(Team::Pro, doc.pro)?,
            ant: load(Team::Ant, doc.ant)?,
        })
    }
}

impl TeamPolicy for IndependentModel {
    fn act(&self, state: &AugmentedState, team: Team) -> Result<Vec<usize>> {
        self.agents(team)
            .iter()
            .map(|a| a.values(a.features(state)).map(|v| argmax(&v)))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDocument {
    pub inputs: usize,
    pub actions: usize,
    pub params: ParamDocument,
}

/// On-disk form of an [`IndependentModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndependentDocument {
    pub version: u32,
    pub kind: String,
    pub window: usize,
    pub hidden: Vec<usize>,
    pub pro: Vec<AgentDocument>,
    pub ant: Vec<AgentDocument>,
}

impl Serialize for IndependentModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IndependentModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = IndependentDocument::deserialize(deserializer)?;
        IndependentModel::from_document(doc).map_err(serde::de::Error::custom)
    }
}

/// What one agent stores: its own features, action and team reward.
#[derive(Debug, Clone, PartialEq)]
struct AgentTransition {
    features: Vec<f64>,
    action: usize,
    reward: f64,
    next_features: Vec<f64>,
    done: bool,
}

#[derive(Debug, Clone)]
pub struct IqlOutcome {
    pub model: IndependentModel,
    pub metrics: Vec<MetricsRow>,
    pub checkpoints: Vec<(usize, IndependentModel)>,
    /// Pro0's rounds; every agent follows the same schedule.
    pub rounds: Vec<RoundRecord>,
    pub total_steps: usize,
}

struct AgentLearner {
    buffer: ReplayBuffer<AgentTransition>,
    coordinator: Coordinator,
    target: Vec<f64>,
    adam: AdamState,
    batch_rng: rand_chacha::ChaCha8Rng,
}

/// Mean squared TD error against r + γ·max_a′ Q̂(o′, a′) and its gradient.
fn agent_loss(agent: &IndependentAgent, target: &[f64], batch: &[&AgentTransition], gamma: f64) -> Result<(f64, Vec<f64>)> {
    let params = agent.params.values();
    let mut grad = vec![0.0; params.len()];
    let n = batch.len() as f64;
    let mut total = 0.0;
    for t in batch {
        let y = if t.done || gamma == 0.0 {
            t.reward
        } else {
            let next = agent.net.predict(target, &t.next_features)?;
            t.reward + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
        let (out, mut tape) = agent.net.forward(params, &t.features)?;
        let err = out[t.action] - y;
        total += err * err;
        let mut upstream = vec![0.0; out.len()];
        upstream[t.action] = 2.0 * err / n;
        agent.net.backward(params, &mut tape, &upstream, &mut grad)?;
    }
    let loss = total / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("independent Q loss".into()));
    }
    Ok((loss, grad))
}

/// Self-play training of independent per-agent Q networks. Uses the same
/// episode loop, ε schedule, buffer mode and B = max(1, ⌊L/U⌋) round rule as
/// FM3Q, but every agent keeps its own buffer, optimizer and target and
/// regresses onto its own reward: +r for Pro agents, −r for Ant agents.
/// The mixer and target-checking fields of `config` are ignored.
pub fn selfplay_independent_train<G: TwoTeamGame + ?Sized>(game: &G, config: &TrainConfig) -> Result<IqlOutcome> {
    config.validate()?;
    let mut model = IndependentModel::new(game, config.window, &config.hidden, &mut seeded_rng(config.seed, STREAM_INIT))?;
    let mut rollout_rng = seeded_rng(config.seed, STREAM_ROLLOUT);
    let mut learners = model
        .pro
        .iter()
        .chain(&model.ant)
        .enumerate()
        .map(|(k, agent)| {
            Ok(AgentLearner {
                buffer: ReplayBuffer::new(config.buffer)?,
                coordinator: Coordinator::new(config.updates_per_round)?,
                target: agent.params.values().to_vec(),
                adam: AdamState::new(agent.params.len()),
                batch_rng: seeded_rng(config.seed, STREAM_BATCH_BASE + k as u64),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = game.gamma();
    let m = config.episodes;
    let mut metrics = Vec::with_capacity(m);
    let mut checkpoints = Vec::new();
    let mut total_steps = 0;

    for episode in 0..m {
        let epsilon = config.epsilon.at(episode, m);
        let mut state = reset(game, config.window, &mut rollout_rng);
        loop {
            let action = model.select(&state, epsilon, &mut rollout_rng)?;
            let st = step(game, &state, &action, &mut rollout_rng)?;
            total_steps += 1;
            for (agent, learner) in model.agents_mut().zip(&mut learners) {
                let (own_action, reward) = match agent.team {
                    Team::Pro => (st.action.pro[agent.index], st.reward),
                    Team::Ant => (st.action.ant[agent.index], -st.reward),
                };
                learner.buffer.push(AgentTransition {
                    features: agent.features(&st.state).to_vec(),
                    action: own_action,
                    reward,
                    next_features: agent.features(&st.next_state).to_vec(),
                    done: st.done,
                });
            }
            let done = st.done;
            state = st.next_state;
            if done {
                break;
            }
        }

        let mut loss_sum = 0.0;
        let mut loss_count = 0;
        for (agent, learner) in model.agents_mut().zip(&mut learners) {
            let len = learner.buffer.len();
            let plan = learner.coordinator.plan(len, &mut learner.batch_rng);
            for batch in &plan {
                let refs: Vec<&AgentTransition> = batch.iter().map(|&i| learner.buffer.get(i).expect("planned index in range")).collect();
                let (loss, grad) = agent_loss(agent, &learner.target, &refs, gamma)?;
                adam_step(agent.params.values_mut(), &grad, &mut learner.adam, config.learning_rate)?;
                loss_sum += loss;
                loss_count += 1;
            }
            learner.coordinator.refresh(episode, len, plan.len(), agent.params.values(), &mut learner.target);
        }

        let len = learners[0].buffer.len();
        metrics.push(MetricsRow {
            episode,
            loss: if loss_count == 0 { 0.0 } else { loss_sum / loss_count as f64 },
            epsilon,
            buffer_size: len,
            batch_size: learners[0].coordinator.batch_size(len),
            nashconv: None,
        });
        let done_count = episode + 1;
        if let Some(k) = config.checkpoint_every {
            if done_count % k == 0 {
                checkpoints.push((done_count, model.clone()));
            }
        }
    }

    let rounds = learners.swap_remove(0).coordinator.into_rounds();
    Ok(IqlOutcome {
        model,
        metrics,
        checkpoints,
        rounds,
        total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{fresh_state, matrix_team_game, PayoffTensor};
    use crate::learner::MixerSpec;

    fn config(episodes: usize) -> TrainConfig {
        TrainConfig {
            episodes,
            hidden: vec![8],
            mixer: MixerSpec::sum(),
            learning_rate: 1e-2,
            checkpoint_every: Some(10),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_episodes_returns_initial_agents() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]), 1, 1).unwrap();
        let out = selfplay_independent_train(&game, &config(0)).unwrap();
        let fresh = IndependentModel::new(&game, 1, &[8], &mut seeded_rng(0, STREAM_INIT)).unwrap();
        assert_eq!(out.model, fresh);
        assert!(out.metrics.is_empty());
    }

    #[test]
    fn dominant_actions_are_learned() {
        // Pro's row 1 dominates row 0; Ant's column 0 dominates column 1.
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![0.0, 0.5], vec![1.0, 1.5]]), 1, 1).unwrap();
        let out = selfplay_independent_train(&game, &config(300)).unwrap();
        let s = fresh_state(&game, 0, 0, 1);
        assert_eq!(out.model.act(&s, Team::Pro).unwrap(), vec![1]);
        assert_eq!(out.model.act(&s, Team::Ant).unwrap(), vec![0]);
        assert_eq!(out.checkpoints.len(), 30);
    }

    #[test]
    fn document_round_trip_is_exact() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), 1, 1).unwrap();
        let out = selfplay_independent_train(&game, &config(5)).unwrap();
        let json = serde_json::to_string(&out.model).unwrap();
        let back: IndependentModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out.model);
    }

    #[test]
    fn rounds_follow_the_coordinator_rule() {
        let game = matrix_team_game(&PayoffTensor::from_matrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]]), 1, 1).unwrap();
        let out = selfplay_independent_train(&game, &config(25)).unwrap();
        for (k, r) in out.rounds.iter().enumerate() {
            assert_eq!(r.buffer_len, k + 1);
            assert_eq!(r.updates, 10);
            assert_eq!(r.batch_size, ((k + 1) / 10).max(1));
            assert!(r.target_synced);
        }
    }
}
