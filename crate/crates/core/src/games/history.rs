use serde::{Deserialize, Serialize};

/// A length-k observation-action window for one agent.
///
/// The flat feature vector holds the last `k` observations (oldest first)
/// followed by one-hot encodings of the last `k - 1` actions. Slots before the
/// start of the episode are zero. With `k = 1` the features are exactly the
/// current observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    window: usize,
    obs_dim: usize,
    n_actions: usize,
    features: Vec<f64>,
}

impl History {
    pub fn start(window: usize, observation: Vec<f64>, n_actions: usize) -> Self {
        let window = window.max(1);
        let obs_dim = observation.len();
        let mut features = vec![0.0; window * obs_dim + (window - 1) * n_actions];
        features[(window - 1) * obs_dim..window * obs_dim].copy_from_slice(&observation);
        Self {
            window,
            obs_dim,
            n_actions,
            features,
        }
    }

    /// The window after taking `action` and then observing `observation`.
    pub fn rolled(&self, observation: Vec<f64>, action: usize) -> Self {
        let mut next = self.clone();
        let k = self.window;
        let obs_end = k * self.obs_dim;
        next.features.copy_within(self.obs_dim..obs_end, 0);
        next.features[(k - 1) * self.obs_dim..obs_end].copy_from_slice(&observation);
        if k > 1 {
            let acts = &mut next.features[obs_end..];
            acts.copy_within(self.n_actions.., 0);
            let last = (k - 2) * self.n_actions;
            acts[last..].iter_mut().for_each(|x| *x = 0.0);
            acts[last + action] = 1.0;
        }
        next
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Feature length for a window over observations of `obs_dim` and
    /// `n_actions` actions.
    pub fn feature_len(window: usize, obs_dim: usize, n_actions: usize) -> usize {
        let window = window.max(1);
        window * obs_dim + (window - 1) * n_actions
    }
}

/// s̃ = ⟨τ, v, s⟩: per-agent histories for both teams plus the global state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub state: usize,
    /// Step index within the episode.
    pub t: usize,
    pub pro: Vec<History>,
    pub ant: Vec<History>,
    /// Global state features fed to the mixing hypernetworks.
    pub global: Vec<f64>,
}
