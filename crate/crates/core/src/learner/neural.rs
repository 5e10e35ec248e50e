use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mixer::{MixTape, Mixer, MixerSpec};
use super::{argmax, guarded_spaces, FactorizedQ};
use crate::error::{Error, Result};
use crate::games::{AugmentedState, EpisodeStep, History, JointAction, Team, TwoTeamGame};
use crate::numerics::{Activation, DenseNet, ParamDocument, ParamVector, Tape};
use crate::oracle::min_max;

pub const MODEL_DOCUMENT_VERSION: u32 = 1;

/// Shapes of every individual network and of the mixer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fm3qTopology {
    pub pro_inputs: Vec<usize>,
    pub ant_inputs: Vec<usize>,
    pub pro_actions: Vec<usize>,
    pub ant_actions: Vec<usize>,
    pub state_dim: usize,
    /// Hidden layer widths of each individual Q network (relu).
    pub hidden: Vec<usize>,
    pub mixer: MixerSpec,
}

impl Fm3qTopology {
    pub fn for_game<G: TwoTeamGame + ?Sized>(game: &G, window: usize, hidden: &[usize], mixer: MixerSpec) -> Self {
        let inputs = |team: Team| -> Vec<usize> {
            game.action_counts(team)
                .iter()
                .map(|&n| History::feature_len(window, game.observation_dim(team), n))
                .collect()
        };
        Self {
            pro_inputs: inputs(Team::Pro),
            ant_inputs: inputs(Team::Ant),
            pro_actions: game.pro_action_counts().to_vec(),
            ant_actions: game.ant_action_counts().to_vec(),
            state_dim: game.state_dim(),
            hidden: hidden.to_vec(),
            mixer,
        }
    }
}

/// Network structure without parameters. All functions take the flat
/// parameter slice explicitly so training and target copies share one net.
#[derive(Debug, Clone)]
pub struct Fm3qNet {
    topology: Fm3qTopology,
    pro: Vec<DenseNet>,
    ant: Vec<DenseNet>,
    mixer: Mixer,
    pro_offsets: Vec<usize>,
    ant_offsets: Vec<usize>,
    mix_offset: usize,
    layout: ParamVector,
}

/// Forward record of one Q_tot evaluation.
#[derive(Debug, Clone)]
pub struct QTotTape {
    pro: Vec<(Tape, usize)>,
    ant: Vec<(Tape, usize)>,
    mix: MixTape,
}

impl Fm3qNet {
    pub fn new(topology: Fm3qTopology) -> Result<Self> {
        let t = &topology;
        if t.pro_inputs.len() != t.pro_actions.len() || t.ant_inputs.len() != t.ant_actions.len() {
            return Err(Error::Config("one input size per agent is required".into()));
        }
        if t.pro_actions.is_empty() || t.ant_actions.is_empty() {
            return Err(Error::Config("both teams need at least one agent".into()));
        }
        let build = |inputs: &[usize], actions: &[usize]| -> Result<Vec<DenseNet>> {
            inputs
                .iter()
                .zip(actions)
                .map(|(&i, &a)| {
                    let mut sizes = vec![i];
                    sizes.extend(&t.hidden);
                    sizes.push(a);
                    DenseNet::new(&sizes, Activation::Relu, Activation::Identity)
                })
                .collect()
        };
        let pro = build(&t.pro_inputs, &t.pro_actions)?;
        let ant = build(&t.ant_inputs, &t.ant_actions)?;
        let mixer = Mixer::new(t.mixer, pro.len() + ant.len(), t.state_dim)?;
        let mut layout = ParamVector::new();
        let pro_offsets = pro.iter().enumerate().map(|(i, n)| n.register(&format!("pro{i}"), &mut layout)).collect();
        let ant_offsets = ant.iter().enumerate().map(|(j, n)| n.register(&format!("ant{j}"), &mut layout)).collect();
        let mix_offset = mixer.register(&mut layout);
        Ok(Self {
            topology,
            pro,
            ant,
            mixer,
            pro_offsets,
            ant_offsets,
            mix_offset,
            layout,
        })
    }

    pub fn topology(&self) -> &Fm3qTopology {
        &self.topology
    }

    pub fn mixer(&self) -> &Mixer {
        &self.mixer
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    /// Zero-valued parameter vector carrying the layout.
    pub fn layout(&self) -> &ParamVector {
        &self.layout
    }

    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        let mut params = self.layout.clone();
        let values = params.values_mut();
        for (net, &at) in self.pro.iter().zip(&self.pro_offsets).chain(self.ant.iter().zip(&self.ant_offsets)) {
            net.init(rng, &mut values[at..at + net.param_count()]);
        }
        let m = self.mix_offset;
        self.mixer.init(rng, &mut values[m..m + self.mixer.param_count()]);
        params
    }

    fn agent(&self, team: Team, i: usize) -> Result<(&DenseNet, usize)> {
        let (nets, offsets) = match team {
            Team::Pro => (&self.pro, &self.pro_offsets),
            Team::Ant => (&self.ant, &self.ant_offsets),
        };
        nets.get(i)
            .map(|n| (n, offsets[i]))
            .ok_or_else(|| Error::Dimension(format!("no {team:?} agent {i}")))
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "model has {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        Ok(())
    }

    fn mix_params<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.mix_offset..self.mix_offset + self.mixer.param_count()]
    }

    pub fn agent_values(&self, params: &[f64], team: Team, i: usize, features: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let (net, at) = self.agent(team, i)?;
        net.predict(&params[at..at + net.param_count()], features)
    }

    fn histories<'a>(state: &'a AugmentedState, team: Team) -> &'a [History] {
        match team {
            Team::Pro => &state.pro,
            Team::Ant => &state.ant,
        }
    }

    /// Individual value vectors for every Pro agent, then every Ant agent.
    pub fn all_values(&self, params: &[f64], state: &AugmentedState) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let team_values = |team: Team, n: usize| -> Result<Vec<Vec<f64>>> {
            let hs = Self::histories(state, team);
            if hs.len() != n {
                return Err(Error::Dimension(format!("state has {} {team:?} histories, model {n}", hs.len())));
            }
            hs.iter()
                .enumerate()
                .map(|(i, h)| self.agent_values(params, team, i, h.features()))
                .collect()
        };
        Ok((team_values(Team::Pro, self.pro.len())?, team_values(Team::Ant, self.ant.len())?))
    }

    fn mixer_inputs(pro: &[Vec<f64>], ant: &[Vec<f64>], action: &JointAction) -> Result<Vec<f64>> {
        if action.pro.len() != pro.len() || action.ant.len() != ant.len() {
            return Err(Error::Dimension("joint action arity does not match the model".into()));
        }
        let pick = |v: &Vec<f64>, a: usize| -> Result<f64> {
            v.get(a)
                .copied()
                .ok_or_else(|| Error::InvalidAction(format!("action {a} of {}", v.len())))
        };
        let mut z = Vec::with_capacity(pro.len() + ant.len());
        for (v, &a) in pro.iter().zip(&action.pro) {
            z.push(pick(v, a)?);
        }
        for (v, &b) in ant.iter().zip(&action.ant) {
            z.push(-pick(v, b)?);
        }
        Ok(z)
    }

    pub fn q_tot(&self, params: &[f64], state: &AugmentedState, action: &JointAction) -> Result<f64> {
        let (pro, ant) = self.all_values(params, state)?;
        let z = Self::mixer_inputs(&pro, &ant, action)?;
        self.mixer.predict(self.mix_params(params), &z, &state.global)
    }

    /// Individual argmax profile and Q_tot there.
    pub fn greedy_value(&self, params: &[f64], state: &AugmentedState) -> Result<(JointAction, f64)> {
        let (pro, ant) = self.all_values(params, state)?;
        let action = JointAction::new(pro.iter().map(|v| argmax(v)).collect(), ant.iter().map(|v| argmax(v)).collect());
        let z = Self::mixer_inputs(&pro, &ant, &action)?;
        let q = self.mixer.predict(self.mix_params(params), &z, &state.global)?;
        Ok((action, q))
    }

    /// Q_tot for every joint action pair, row-major by Pro joint index.
    pub fn joint_table(&self, params: &[f64], state: &AugmentedState) -> Result<Vec<f64>> {
        let (ps, as_) = guarded_spaces(&self.topology.pro_actions, &self.topology.ant_actions)?;
        let (pro, ant) = self.all_values(params, state)?;
        let weights = self.mixer.weights(self.mix_params(params), &state.global)?;
        let mut table = Vec::with_capacity(ps.size() * as_.size());
        for ai in 0..ps.size() {
            let a = ps.decode(ai);
            for bi in 0..as_.size() {
                let z = Self::mixer_inputs(&pro, &ant, &JointAction::new(a.clone(), as_.decode(bi)))?;
                table.push(weights.apply(&z));
            }
        }
        Ok(table)
    }

    pub fn mix_forward(&self, params: &[f64], state: &AugmentedState, action: &JointAction) -> Result<(f64, QTotTape)> {
        self.check_params(params)?;
        let run = |team: Team, nets: &[DenseNet], acts: &[usize]| -> Result<Vec<(Vec<f64>, Tape, usize)>> {
            let hs = Self::histories(state, team);
            if hs.len() != nets.len() || acts.len() != nets.len() {
                return Err(Error::Dimension(format!("{team:?} arity does not match the model")));
            }
            hs.iter()
                .zip(acts)
                .enumerate()
                .map(|(i, (h, &a))| {
                    let (net, at) = self.agent(team, i)?;
                    let (out, tape) = net.forward(&params[at..at + net.param_count()], h.features())?;
                    Ok((out, tape, a))
                })
                .collect()
        };
        let pro = run(Team::Pro, &self.pro, &action.pro)?;
        let ant = run(Team::Ant, &self.ant, &action.ant)?;
        let pro_vals: Vec<Vec<f64>> = pro.iter().map(|(v, _, _)| v.clone()).collect();
        let ant_vals: Vec<Vec<f64>> = ant.iter().map(|(v, _, _)| v.clone()).collect();
        let z = Self::mixer_inputs(&pro_vals, &ant_vals, action)?;
        let (q, mix) = self.mixer.forward(self.mix_params(params), &z, &state.global)?;
        Ok((
            q,
            QTotTape {
                pro: pro.into_iter().map(|(_, t, a)| (t, a)).collect(),
                ant: ant.into_iter().map(|(_, t, a)| (t, a)).collect(),
                mix,
            },
        ))
    }

    /// Accumulates ∂(upstream·Q_tot)/∂params into `grad`.
    pub fn backward(&self, params: &[f64], tape: &mut QTotTape, upstream: f64, grad: &mut [f64]) -> Result<()> {
        self.check_params(params)?;
        if grad.len() != params.len() {
            return Err(Error::Dimension("gradient buffer has the wrong length".into()));
        }
        let m = self.mix_offset;
        let mp = self.mixer.param_count();
        let dz = self
            .mixer
            .backward(&params[m..m + mp], &mut tape.mix, upstream, &mut grad[m..m + mp])?;
        let n_pro = self.pro.len();
        for (team, tapes, sign, base) in [(Team::Pro, &mut tape.pro, 1.0, 0), (Team::Ant, &mut tape.ant, -1.0, n_pro)] {
            for (i, (t, a)) in tapes.iter_mut().enumerate() {
                let (net, at) = self.agent(team, i)?;
                let mut up = vec![0.0; net.output_dim()];
                up[*a] = sign * dz[base + i];
                let n = net.param_count();
                net.backward(&params[at..at + n], t, &up, &mut grad[at..at + n])?;
            }
        }
        Ok(())
    }

    /// Smallest distance of any kinked unit's pre-activation from its kink.
    pub fn kink_distance(&self, tape: &QTotTape) -> f64 {
        let agents = tape
            .pro
            .iter()
            .enumerate()
            .map(|(i, (t, _))| self.pro[i].kink_distance(t))
            .chain(tape.ant.iter().enumerate().map(|(j, (t, _))| self.ant[j].kink_distance(t)));
        agents.fold(self.mixer.kink_distance(&tape.mix), f64::min)
    }
}

/// e = r + γ·Q̂_tot(s̃′, â′, b̂′) at the target model's individual argmaxes;
/// e = r on terminal steps.
pub fn td_target(net: &Fm3qNet, target: &[f64], step: &EpisodeStep, gamma: f64) -> Result<f64> {
    if step.done || gamma == 0.0 {
        return Ok(step.reward);
    }
    let (_, q) = net.greedy_value(target, &step.next_state)?;
    Ok(step.reward + gamma * q)
}

/// [`td_target`] cross-checked against exhaustive min_b′ max_a′ enumeration.
pub fn td_target_checked(net: &Fm3qNet, target: &[f64], step: &EpisodeStep, gamma: f64) -> Result<f64> {
    let e = td_target(net, target, step, gamma)?;
    if step.done || gamma == 0.0 {
        return Ok(e);
    }
    let table = net.joint_table(target, &step.next_state)?;
    let (ps, as_) = guarded_spaces(&net.topology.pro_actions, &net.topology.ant_actions)?;
    let exhaustive = step.reward + gamma * min_max(&table, ps.size(), as_.size()).value;
    if (exhaustive - e).abs() > 1e-9 {
        return Err(Error::IgmmViolation(format!(
            "individual-argmax target {e} differs from enumerated min-max target {exhaustive}"
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// ∂loss/∂params; the target parameters receive nothing.
    pub grad: Vec<f64>,
}

/// Mean squared TD error over `batch` and its gradient.
pub fn loss(net: &Fm3qNet, params: &[f64], target: &[f64], batch: &[&EpisodeStep], gamma: f64) -> Result<LossOutput> {
    if batch.is_empty() {
        return Err(Error::Config("loss needs a nonempty batch".into()));
    }
    let mut grad = vec![0.0; params.len()];
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for step in batch {
        let e = td_target(net, target, step, gamma)?;
        let (q, mut tape) = net.mix_forward(params, &step.state, &step.action)?;
        let diff = q - e;
        total += diff * diff;
        net.backward(params, &mut tape, 2.0 * diff * scale, &mut grad)?;
    }
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    Ok(LossOutput { loss, grad })
}

/// A neural factorized model: structure plus parameters.
#[derive(Debug, Clone)]
pub struct NeuralFactorizedQ {
    net: Fm3qNet,
    params: ParamVector,
}

impl NeuralFactorizedQ {
    pub fn new<R: Rng + ?Sized>(topology: Fm3qTopology, rng: &mut R) -> Result<Self> {
        let net = Fm3qNet::new(topology)?;
        let params = net.init(rng);
        Ok(Self { net, params })
    }

    pub fn from_parts(net: Fm3qNet, params: ParamVector) -> Result<Self> {
        if params.layout() != net.layout().layout() {
            return Err(Error::Dimension("parameter layout does not match the topology".into()));
        }
        Ok(Self { net, params })
    }

    pub fn net(&self) -> &Fm3qNet {
        &self.net
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamVector {
        &mut self.params
    }

    pub fn to_document(&self) -> ModelDocument {
        self.clone().into()
    }
}

impl FactorizedQ for NeuralFactorizedQ {
    fn pro_action_counts(&self) -> &[usize] {
        &self.net.topology.pro_actions
    }

    fn ant_action_counts(&self) -> &[usize] {
        &self.net.topology.ant_actions
    }

    fn agent_values(&self, state: &AugmentedState, team: Team, agent: usize) -> Result<Vec<f64>> {
        let h = Fm3qNet::histories(state, team)
            .get(agent)
            .ok_or_else(|| Error::Dimension(format!("state has no {team:?} agent {agent}")))?;
        self.net.agent_values(self.params.values(), team, agent, h.features())
    }

    fn q_tot(&self, state: &AugmentedState, action: &JointAction) -> Result<f64> {
        self.net.q_tot(self.params.values(), state, action)
    }

    fn joint_table(&self, state: &AugmentedState) -> Result<Vec<f64>> {
        self.net.joint_table(self.params.values(), state)
    }
}

/// Checkpoint form of a [`NeuralFactorizedQ`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub kind: String,
    pub topology: Fm3qTopology,
    pub params: ParamDocument,
}

const MODEL_KIND: &str = "fm3q_model";

impl From<NeuralFactorizedQ> for ModelDocument {
    fn from(m: NeuralFactorizedQ) -> Self {
        Self {
            version: MODEL_DOCUMENT_VERSION,
            kind: MODEL_KIND.into(),
            topology: m.net.topology,
            params: m.params.into(),
        }
    }
}

impl TryFrom<ModelDocument> for NeuralFactorizedQ {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_DOCUMENT_VERSION || doc.kind != MODEL_KIND {
            return Err(Error::Config(format!(
                "expected {MODEL_KIND} version {MODEL_DOCUMENT_VERSION}, got {} version {}",
                doc.kind, doc.version
            )));
        }
        let net = Fm3qNet::new(doc.topology)?;
        NeuralFactorizedQ::from_parts(net, doc.params.try_into()?)
    }
}

impl Serialize for NeuralFactorizedQ {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for NeuralFactorizedQ {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDocument::deserialize(d)?;
        doc.try_into().map_err(serde::de::Error::custom)
    }
}
