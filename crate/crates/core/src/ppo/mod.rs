//! Proximal policy optimization, self-contained: tanh MLPs with a
//! hand-rolled reverse pass, generalized advantage estimation, the clipped
//! surrogate objective with entropy regularization, Adam, and a two-phase
//! training driver over the handover environment.

mod adam;
mod agent;
mod buffer;
mod gae;
mod loss;
mod mlp;
mod train;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use agent::{load_checkpoint, save_checkpoint, Agent, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use buffer::RolloutBuffer;
pub use gae::compute_gae;
pub use loss::{
    entropy_of_probs, log_softmax_rows, policy_loss_and_grad, sample_categorical, softmax_rows,
    value_loss_and_grad, PolicyLossOut,
};
pub use mlp::{GradVisitor, Layer, Mlp};
pub use train::{train, train_with, ResumeState, TrainLog, TrainLogRow, TrainOutcome, UpdateView};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::Scalar;

/// Hyperparameters. Everything the training driver and the optimizer need,
/// serializable so checkpoints carry their own provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct PpoConfig<S: Scalar> {
    pub lr: S,
    pub clip_eps: S,
    pub gamma: S,
    pub gae_lambda: S,
    pub ent_coef: S,
    pub vf_coef: S,
    /// Steps collected per environment per update.
    pub rollout_len: usize,
    pub minibatch_size: usize,
    pub epochs_per_update: usize,
    pub max_grad_norm: S,
    pub total_timesteps: u64,
    pub n_envs: usize,
    /// Fraction of the budget spent in curriculum phase 1 (episodes end on
    /// link failure only) before phase 2 (ping-pongs also end episodes).
    pub phase1_frac: f64,
    pub seed: u64,
    /// Hidden layer widths for both networks.
    pub hidden: Vec<usize>,
    /// Normalize advantages over each update's buffer.
    pub advantage_norm: bool,
    /// Clip the global gradient norm at `max_grad_norm`.
    pub grad_clip: bool,
}

impl<S: Scalar> Default for PpoConfig<S> {
    fn default() -> Self {
        Self {
            lr: S::from_f64(5e-5),
            clip_eps: S::from_f64(0.2),
            gamma: S::from_f64(0.99),
            gae_lambda: S::from_f64(0.95),
            ent_coef: S::from_f64(0.1),
            vf_coef: S::from_f64(0.5),
            rollout_len: 2048,
            minibatch_size: 64,
            epochs_per_update: 10,
            max_grad_norm: S::from_f64(0.5),
            total_timesteps: 2_000_000,
            n_envs: 1,
            phase1_frac: 0.5,
            seed: 0,
            hidden: vec![64, 128, 64],
            advantage_norm: true,
            grad_clip: true,
        }
    }
}

impl<S: Scalar> PpoConfig<S> {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |m: &str| Err(PpoError::InvalidConfig(m.to_string()));
        if !(self.lr > S::zero()) {
            return bad("lr must be positive");
        }
        if !(self.clip_eps > S::zero() && self.clip_eps < S::one()) {
            return bad("clip_eps must lie in (0, 1)");
        }
        if !(self.gamma >= S::zero() && self.gamma < S::one()) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.gae_lambda >= S::zero() && self.gae_lambda <= S::one()) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.ent_coef >= S::zero() && self.vf_coef >= S::zero()) {
            return bad("loss coefficients must be non-negative");
        }
        if self.rollout_len == 0 || self.n_envs == 0 || self.epochs_per_update == 0 {
            return bad("rollout_len, n_envs and epochs_per_update must be positive");
        }
        if self.minibatch_size == 0 || self.minibatch_size > self.rollout_len * self.n_envs {
            return bad("minibatch_size must fit inside one rollout");
        }
        if !(self.max_grad_norm > S::zero()) {
            return bad("max_grad_norm must be positive");
        }
        if self.total_timesteps == 0 {
            return bad("total_timesteps must be positive");
        }
        if !(0.0..=1.0).contains(&self.phase1_frac) {
            return bad("phase1_frac must lie in [0, 1]");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("invalid PPO config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u64),
    #[error("checkpoint dtype is {found}, this build expects {expected}")]
    DtypeMismatch { expected: &'static str, found: String },
    #[error("checkpoint shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient at {path}")]
    NonFiniteGradient { path: String },
    #[error("training diverged at update {update}: non-finite loss")]
    Diverged { update: u64 },
    #[error(transparent)]
    Env(#[from] EnvError),
}
