use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Elu,
    Abs,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Abs => x.abs(),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`. Subgradients at 0: relu 0, abs 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// Whether the derivative is discontinuous at 0.
    pub fn has_kink(self) -> bool {
        matches!(self, Activation::Relu | Activation::Abs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

impl DenseLayer {
    /// Weights [outputs][inputs] followed by biases [outputs].
    pub fn param_count(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

/// Stack of affine layers, each followed by its activation. Parameters live
/// in a caller-owned flat slice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<DenseLayer>,
}

/// Recorded forward intermediates for one reverse pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input of every layer, then the final output.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    consumed: bool,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map_or(&[], Vec::as_slice)
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

impl DenseNet {
    /// `sizes` = [input, hidden..., output]; hidden layers use `hidden`, the
    /// last layer uses `output`.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Dimension(format!("invalid layer sizes {sizes:?}")));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| DenseLayer {
                inputs: w[0],
                outputs: w[1],
                activation: if k == last { output } else { hidden },
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Dimension(format!(
                    "layer output {} feeds layer input {}",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Registers this net's blocks under `prefix` and returns the start offset.
    pub fn register(&self, prefix: &str, params: &mut ParamVector) -> usize {
        let start = params.len();
        for (k, layer) in self.layers.iter().enumerate() {
            params.push(format!("{prefix}.l{k}.weight"), vec![layer.outputs, layer.inputs]);
            params.push(format!("{prefix}.l{k}.bias"), vec![layer.outputs]);
        }
        start
    }

    /// Uniform(−1/√fan_in, 1/√fan_in) for weights and biases.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R, params: &mut [f64]) {
        let mut offset = 0;
        for layer in &self.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for p in &mut params[offset..offset + layer.param_count()] {
                *p = rng.gen_range(-bound..=bound);
            }
            offset += layer.param_count();
        }
    }

    fn check_input(&self, params: &[f64], input: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "net needs {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        if input.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "net input is {}, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    fn affine(layer: &DenseLayer, params: &[f64], x: &[f64], pre: &mut Vec<f64>) {
        let (weights, biases) = params.split_at(layer.outputs * layer.inputs);
        pre.clear();
        pre.extend(weights.chunks_exact(layer.inputs).zip(biases).map(|(row, b)| {
            row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi)
        }));
    }

    /// Forward pass without recording.
    pub fn predict(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(params, input)?;
        let mut x = input.to_vec();
        let mut pre = Vec::new();
        let mut offset = 0;
        for layer in &self.layers {
            let n = layer.param_count();
            Self::affine(layer, &params[offset..offset + n], &x, &mut pre);
            x.clear();
            x.extend(pre.iter().map(|&p| layer.activation.apply(p)));
            offset += n;
        }
        Ok(x)
    }

    /// Forward pass recording a tape for [`DenseNet::backward`].
    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check_input(params, input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pres = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());
        let mut offset = 0;
        for layer in &self.layers {
            let n = layer.param_count();
            let mut pre = Vec::with_capacity(layer.outputs);
            Self::affine(layer, &params[offset..offset + n], activations.last().unwrap(), &mut pre);
            activations.push(pre.iter().map(|&p| layer.activation.apply(p)).collect());
            pres.push(pre);
            offset += n;
        }
        let out = activations.last().unwrap().clone();
        Ok((
            out,
            Tape {
                activations,
                pre: pres,
                consumed: false,
            },
        ))
    }

    /// Reverse pass: accumulates ∂(upstream·output)/∂params into `grad` and
    /// returns the gradient with respect to the input. Each tape can be used
    /// once.
    pub fn backward(
        &self,
        params: &[f64],
        tape: &mut Tape,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        if tape.consumed {
            return Err(Error::TapeConsumed);
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Dimension(format!(
                "upstream has {} entries for output {}",
                upstream.len(),
                self.output_dim()
            )));
        }
        if grad.len() != self.param_count() || tape.pre.len() != self.layers.len() {
            return Err(Error::Dimension("gradient buffer or tape does not match net".into()));
        }
        tape.consumed = true;
        let mut delta = upstream.to_vec();
        let mut offset = self.param_count();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let n = layer.param_count();
            offset -= n;
            let pre = &tape.pre[k];
            let x = &tape.activations[k];
            for (d, &p) in delta.iter_mut().zip(pre) {
                *d *= layer.activation.derivative(p);
            }
            let (w, _) = params[offset..offset + n].split_at(layer.outputs * layer.inputs);
            let (gw, gb) = grad[offset..offset + n].split_at_mut(layer.outputs * layer.inputs);
            let mut next = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = o * layer.inputs;
                for i in 0..layer.inputs {
                    gw[row + i] += d * x[i];
                    next[i] += d * w[row + i];
                }
            }
            delta = next;
        }
        Ok(delta)
    }

    /// Smallest |pre-activation| over units whose activation has a kink.
    pub fn kink_distance(&self, tape: &Tape) -> f64 {
        self.layers
            .iter()
            .zip(&tape.pre)
            .filter(|(l, _)| l.activation.has_kink())
            .flat_map(|(_, pre)| pre.iter().map(|p| p.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}
