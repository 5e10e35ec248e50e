//! State-conditioned mixing of individual Q values into Q_tot.
//!
//! The hyper mixer computes
//! Q_tot = Σ_h |w2(s)|_h · elu(Σ_k z_k·|W1(s)|_{k,h} + b1(s)_h) + b2(s)
//! where z = [Q_1^+(a_1), …, Q_n^+(a_n), −Q_1^−(b_1), …, −Q_m^−(b_m)].
//! W1, b1 and w2 come from single dense layers on the global state features;
//! b2 comes from a one-hidden-layer relu net.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Activation, DenseNet, ParamVector, Tape};

pub const DEFAULT_MIX_HIDDEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixerKind {
    /// Q_tot = Σ z_k, no parameters.
    Sum,
    Hyper,
}

fn default_hidden() -> usize {
    DEFAULT_MIX_HIDDEN
}

fn default_monotone() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixerSpec {
    pub kind: MixerKind,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Apply |·| to hypernetwork weights. Turning this off breaks the
    /// monotonicity that IGMM relies on; it exists for counterexamples.
    #[serde(default = "default_monotone")]
    pub monotone: bool,
}

impl Default for MixerSpec {
    fn default() -> Self {
        Self {
            kind: MixerKind::Hyper,
            hidden: DEFAULT_MIX_HIDDEN,
            monotone: true,
        }
    }
}

impl MixerSpec {
    pub fn sum() -> Self {
        Self {
            kind: MixerKind::Sum,
            hidden: 0,
            monotone: true,
        }
    }

    pub fn hyper(hidden: usize) -> Self {
        Self {
            kind: MixerKind::Hyper,
            hidden,
            monotone: true,
        }
    }
}

#[derive(Debug, Clone)]
struct HyperNets {
    w1: DenseNet,
    b1: DenseNet,
    w2: DenseNet,
    b2: DenseNet,
    /// Offsets of each net inside the mixer's parameter slice.
    offsets: [usize; 4],
}

#[derive(Debug, Clone)]
pub struct Mixer {
    spec: MixerSpec,
    inputs: usize,
    state_dim: usize,
    hyper: Option<HyperNets>,
    param_count: usize,
}

/// Mixing weights for one global state, with the monotonicity transform
/// already applied.
#[derive(Debug, Clone)]
pub struct MixWeights {
    kind: MixerKind,
    hidden: usize,
    /// Row-major [input k][hidden h].
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl MixWeights {
    pub fn apply(&self, z: &[f64]) -> f64 {
        match self.kind {
            MixerKind::Sum => z.iter().sum(),
            MixerKind::Hyper => self.output(&self.hidden_pre(z)),
        }
    }

    /// Pre-activations of the mixing hidden layer.
    fn hidden_pre(&self, z: &[f64]) -> Vec<f64> {
        let h = self.hidden;
        (0..h)
            .map(|j| {
                let mut u = self.b1[j];
                for (k, &zk) in z.iter().enumerate() {
                    u += zk * self.w1[k * h + j];
                }
                u
            })
            .collect()
    }

    fn output(&self, u: &[f64]) -> f64 {
        let mut out = self.b2;
        for (&uj, &wj) in u.iter().zip(&self.w2) {
            out += wj * Activation::Elu.apply(uj);
        }
        out
    }
}

/// Forward record for [`Mixer::backward`].
#[derive(Debug, Clone)]
pub struct MixTape {
    z: Vec<f64>,
    hyper: Option<HyperTape>,
    consumed: bool,
}

#[derive(Debug, Clone)]
struct HyperTape {
    tapes: [Tape; 4],
    raw_w1: Vec<f64>,
    raw_w2: Vec<f64>,
    weights: MixWeights,
    /// Pre-activations of the mixing hidden layer.
    u: Vec<f64>,
}

impl Mixer {
    pub fn new(spec: MixerSpec, inputs: usize, state_dim: usize) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::Config("mixer needs at least one input".into()));
        }
        let hyper = match spec.kind {
            MixerKind::Sum => None,
            MixerKind::Hyper => {
                if spec.hidden == 0 || state_dim == 0 {
                    return Err(Error::Config("hyper mixer needs hidden ≥ 1 and state features".into()));
                }
                let h = spec.hidden;
                let w1 = DenseNet::new(&[state_dim, inputs * h], Activation::Identity, Activation::Identity)?;
                let b1 = DenseNet::new(&[state_dim, h], Activation::Identity, Activation::Identity)?;
                let w2 = DenseNet::new(&[state_dim, h], Activation::Identity, Activation::Identity)?;
                let b2 = DenseNet::new(&[state_dim, h, 1], Activation::Relu, Activation::Identity)?;
                let mut offsets = [0; 4];
                let mut at = 0;
                for (o, net) in offsets.iter_mut().zip([&w1, &b1, &w2, &b2]) {
                    *o = at;
                    at += net.param_count();
                }
                Some(HyperNets { w1, b1, w2, b2, offsets })
            }
        };
        let param_count = hyper
            .as_ref()
            .map_or(0, |h| [&h.w1, &h.b1, &h.w2, &h.b2].iter().map(|n| n.param_count()).sum());
        Ok(Self {
            spec,
            inputs,
            state_dim,
            hyper,
            param_count,
        })
    }

    pub fn spec(&self) -> MixerSpec {
        self.spec
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Adds the mixer's layout entries and returns its starting offset.
    pub fn register(&self, params: &mut ParamVector) -> usize {
        let start = params.len();
        if let Some(h) = &self.hyper {
            h.w1.register("mix.w1", params);
            h.b1.register("mix.b1", params);
            h.w2.register("mix.w2", params);
            h.b2.register("mix.b2", params);
        }
        start
    }

    pub fn init<R: rand::Rng + ?Sized>(&self, rng: &mut R, params: &mut [f64]) {
        if let Some(h) = &self.hyper {
            for (k, net) in [&h.w1, &h.b1, &h.w2, &h.b2].into_iter().enumerate() {
                let at = h.offsets[k];
                net.init(rng, &mut params[at..at + net.param_count()]);
            }
        }
    }

    fn slices<'a>(&self, h: &HyperNets, params: &'a [f64]) -> [&'a [f64]; 4] {
        let nets = [&h.w1, &h.b1, &h.w2, &h.b2];
        std::array::from_fn(|k| &params[h.offsets[k]..h.offsets[k] + nets[k].param_count()])
    }

    fn transform(&self, raw: &[f64]) -> Vec<f64> {
        if self.spec.monotone {
            raw.iter().map(|w| w.abs()).collect()
        } else {
            raw.to_vec()
        }
    }

    fn check(&self, params: &[f64], state: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(Error::Dimension(format!(
                "mixer expects {} parameters, got {}",
                self.param_count,
                params.len()
            )));
        }
        if self.hyper.is_some() && state.len() != self.state_dim {
            return Err(Error::Dimension(format!(
                "mixer expects {} state features, got {}",
                self.state_dim,
                state.len()
            )));
        }
        Ok(())
    }

    /// Mixing weights for global state features `state`.
    pub fn weights(&self, params: &[f64], state: &[f64]) -> Result<MixWeights> {
        self.check(params, state)?;
        let Some(h) = &self.hyper else {
            return Ok(MixWeights {
                kind: MixerKind::Sum,
                hidden: 0,
                w1: Vec::new(),
                b1: Vec::new(),
                w2: Vec::new(),
                b2: 0.0,
            });
        };
        let [pw1, pb1, pw2, pb2] = self.slices(h, params);
        Ok(MixWeights {
            kind: MixerKind::Hyper,
            hidden: self.spec.hidden,
            w1: self.transform(&h.w1.predict(pw1, state)?),
            b1: h.b1.predict(pb1, state)?,
            w2: self.transform(&h.w2.predict(pw2, state)?),
            b2: h.b2.predict(pb2, state)?[0],
        })
    }

    pub fn predict(&self, params: &[f64], z: &[f64], state: &[f64]) -> Result<f64> {
        self.check_z(z)?;
        Ok(self.weights(params, state)?.apply(z))
    }

    fn check_z(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.inputs {
            return Err(Error::Dimension(format!("mixer expects {} inputs, got {}", self.inputs, z.len())));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], z: &[f64], state: &[f64]) -> Result<(f64, MixTape)> {
        self.check_z(z)?;
        self.check(params, state)?;
        let Some(h) = &self.hyper else {
            return Ok((
                z.iter().sum(),
                MixTape {
                    z: z.to_vec(),
                    hyper: None,
                    consumed: false,
                },
            ));
        };
        let [pw1, pb1, pw2, pb2] = self.slices(h, params);
        let (raw_w1, t_w1) = h.w1.forward(pw1, state)?;
        let (b1, t_b1) = h.b1.forward(pb1, state)?;
        let (raw_w2, t_w2) = h.w2.forward(pw2, state)?;
        let (b2, t_b2) = h.b2.forward(pb2, state)?;
        let weights = MixWeights {
            kind: MixerKind::Hyper,
            hidden: self.spec.hidden,
            w1: self.transform(&raw_w1),
            b1,
            w2: self.transform(&raw_w2),
            b2: b2[0],
        };
        let u = weights.hidden_pre(z);
        let out = weights.output(&u);
        Ok((
            out,
            MixTape {
                z: z.to_vec(),
                hyper: Some(HyperTape {
                    tapes: [t_w1, t_b1, t_w2, t_b2],
                    raw_w1,
                    raw_w2,
                    weights,
                    u,
                }),
                consumed: false,
            },
        ))
    }

    fn transform_grad(&self, raw: f64) -> f64 {
        if self.spec.monotone {
            Activation::Abs.derivative(raw)
        } else {
            1.0
        }
    }

    /// Accumulates ∂(upstream·Q_tot)/∂params into `grad` (the mixer's slice)
    /// and returns ∂(upstream·Q_tot)/∂z.
    pub fn backward(&self, params: &[f64], tape: &mut MixTape, upstream: f64, grad: &mut [f64]) -> Result<Vec<f64>> {
        if tape.consumed {
            return Err(Error::TapeConsumed);
        }
        if grad.len() != self.param_count {
            return Err(Error::Dimension("mixer gradient buffer has the wrong length".into()));
        }
        tape.consumed = true;
        let Some(ht) = tape.hyper.as_mut() else {
            return Ok(vec![upstream; tape.z.len()]);
        };
        let h = self.hyper.as_ref().expect("hyper tape implies hyper nets");
        let hd = self.spec.hidden;
        let z = &tape.z;
        let w = &ht.weights;
        let mut d_w1 = vec![0.0; self.inputs * hd];
        let mut d_b1 = vec![0.0; hd];
        let mut d_w2 = vec![0.0; hd];
        let mut dz = vec![0.0; self.inputs];
        for j in 0..hd {
            let uj = ht.u[j];
            d_w2[j] = upstream * Activation::Elu.apply(uj) * self.transform_grad(ht.raw_w2[j]);
            let du = upstream * w.w2[j] * Activation::Elu.derivative(uj);
            d_b1[j] = du;
            for k in 0..self.inputs {
                d_w1[k * hd + j] = du * z[k] * self.transform_grad(ht.raw_w1[k * hd + j]);
                dz[k] += du * w.w1[k * hd + j];
            }
        }
        let [pw1, pb1, pw2, pb2] = self.slices(h, params);
        let nets = [&h.w1, &h.b1, &h.w2, &h.b2];
        let [t_w1, t_b1, t_w2, t_b2] = &mut ht.tapes;
        let jobs: [(&[f64], &mut Tape, Vec<f64>); 4] = [
            (pw1, t_w1, d_w1),
            (pb1, t_b1, d_b1),
            (pw2, t_w2, d_w2),
            (pb2, t_b2, vec![upstream]),
        ];
        for (k, (p, t, up)) in jobs.into_iter().enumerate() {
            let at = h.offsets[k];
            nets[k].backward(p, t, &up, &mut grad[at..at + nets[k].param_count()])?;
        }
        Ok(dz)
    }

    /// Smallest |pre-activation| among kinked units (relu in the b2 net and
    /// the weight abs transform).
    pub fn kink_distance(&self, tape: &MixTape) -> f64 {
        let Some(ht) = &tape.hyper else {
            return f64::INFINITY;
        };
        let h = self.hyper.as_ref().expect("hyper tape implies hyper nets");
        let mut d = h.b2.kink_distance(&ht.tapes[3]);
        if self.spec.monotone {
            d = ht.raw_w1.iter().chain(&ht.raw_w2).fold(d, |acc, w| acc.min(w.abs()));
        }
        d
    }
}
