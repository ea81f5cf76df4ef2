//! The trained artifact: separate actor and critic networks plus the
//! checkpoint container that makes a training run resumable and auditable.

use std::path::Path;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{log_softmax_rows, sample_categorical, softmax_rows};
use super::mlp::{GradVisitor, Mlp};
use super::{AdamState, PpoConfig, PpoError};
use crate::scalar::argmax;
use crate::Scalar;

pub const CHECKPOINT_FORMAT: &str = "hosim-ppo";
pub const CHECKPOINT_VERSION: u64 = 1;

/// Actor and critic over the same observation layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Agent<S: Scalar> {
    pub actor: Mlp<S>,
    pub critic: Mlp<S>,
    pub obs_dim: usize,
    pub n_actions: usize,
}

impl<S: Scalar> Agent<S> {
    /// Orthogonally initialized pair: hidden gain √2 (inside the MLP), actor
    /// head gain 0.01, critic head gain 1.0. The actor consumes the RNG
    /// first, then the critic.
    pub fn init(obs_dim: usize, n_actions: usize, hidden: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(n_actions);
        let mut critic_sizes = vec![obs_dim];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        Self {
            actor: Mlp::orthogonal_init(&actor_sizes, 0.01, rng),
            critic: Mlp::orthogonal_init(&critic_sizes, 1.0, rng),
            obs_dim,
            n_actions,
        }
    }

    /// Greedy action: the mode of the policy distribution.
    pub fn act_greedy(&self, state: &[S]) -> usize {
        argmax(&self.actor.forward_one(state))
    }

    /// Sampled action with its log-probability, plus the value estimate.
    pub fn act_sample(&self, state: &[S], rng: &mut impl rand::Rng) -> (usize, S, S) {
        let row = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("one row");
        let logits = self.actor.forward(&row);
        let probs = softmax_rows(&logits);
        let logp = log_softmax_rows(&logits);
        let u: f64 = rng.random_range(0.0..1.0);
        let action = sample_categorical(probs.row(0).as_slice().expect("contiguous"), u);
        let value = self.critic.forward(&row)[[0, 0]];
        (action, logp[[0, action]], value)
    }

    pub fn value_of(&self, state: &[S]) -> S {
        self.critic.forward_one(state)[0]
    }

    /// Layer shape signature, used to reject incompatible checkpoints.
    fn shape_signature(&self) -> Vec<(usize, usize)> {
        self.actor
            .layers
            .iter()
            .chain(self.critic.layers.iter())
            .map(|l| (l.w.nrows(), l.w.ncols()))
            .collect()
    }
}

impl<S: Scalar> GradVisitor<S> for Agent<S> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[S])) {
        self.actor.visit(&mut |name, s| f(&format!("actor/{name}"), s));
        self.critic.visit(&mut |name, s| f(&format!("critic/{name}"), s));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        self.actor.visit_mut(&mut |name, s| f(&format!("actor/{name}"), s));
        self.critic.visit_mut(&mut |name, s| f(&format!("critic/{name}"), s));
    }
}

/// Everything needed to resume or audit a run: parameters, optimizer
/// moments, the config that produced them, and the sampler's RNG state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Checkpoint<S: Scalar> {
    pub format: String,
    pub version: u64,
    pub dtype: String,
    pub timesteps: u64,
    pub agent: Agent<S>,
    pub adam: AdamState<S>,
    pub config: PpoConfig<S>,
    pub rng: ChaCha8Rng,
}

pub fn save_checkpoint<S: Scalar>(path: &Path, ckpt: &Checkpoint<S>) -> Result<(), PpoError> {
    let text = serde_json::to_string(ckpt)
        .map_err(|e| PpoError::MalformedCheckpoint(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Load and validate: the format tag, version, and dtype must match this
/// build, and the layer shapes must agree with the stored config's
/// architecture (a hand-edited or truncated file fails here, not later).
pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<Checkpoint<S>, PpoError> {
    let text = std::fs::read_to_string(path)?;
    let probe: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| PpoError::MalformedCheckpoint(e.to_string()))?;
    match probe.get("format").and_then(|v| v.as_str()) {
        Some(CHECKPOINT_FORMAT) => {}
        other => {
            return Err(PpoError::MalformedCheckpoint(format!(
                "format tag {other:?}, expected {CHECKPOINT_FORMAT:?}"
            )))
        }
    }
    match probe.get("version").and_then(|v| v.as_u64()) {
        Some(CHECKPOINT_VERSION) => {}
        Some(v) => return Err(PpoError::UnsupportedVersion(v)),
        None => return Err(PpoError::MalformedCheckpoint("missing version".into())),
    }
    if let Some(dtype) = probe.get("dtype").and_then(|v| v.as_str()) {
        if dtype != S::DTYPE {
            return Err(PpoError::DtypeMismatch { expected: S::DTYPE, found: dtype.to_string() });
        }
    } else {
        return Err(PpoError::MalformedCheckpoint("missing dtype".into()));
    }
    let ckpt: Checkpoint<S> = serde_json::from_str(&text)
        .map_err(|e| PpoError::MalformedCheckpoint(e.to_string()))?;

    // Cross-check stored shapes against the architecture the config claims.
    let mut expected = Vec::new();
    let mut push_sizes = |sizes: &[usize]| {
        for i in 0..sizes.len() - 1 {
            expected.push((sizes[i + 1], sizes[i]));
        }
    };
    let mut actor_sizes = vec![ckpt.agent.obs_dim];
    actor_sizes.extend_from_slice(&ckpt.config.hidden);
    actor_sizes.push(ckpt.agent.n_actions);
    push_sizes(&actor_sizes);
    let mut critic_sizes = vec![ckpt.agent.obs_dim];
    critic_sizes.extend_from_slice(&ckpt.config.hidden);
    critic_sizes.push(1);
    push_sizes(&critic_sizes);
    if ckpt.agent.shape_signature() != expected {
        return Err(PpoError::ShapeMismatch(format!(
            "stored layers {:?} do not match configured architecture {:?}",
            ckpt.agent.shape_signature(),
            expected
        )));
    }
    Ok(ckpt)
}
