//! Episodic RL environment over a synthetic trace: one-hot serving cell plus
//! scaled per-cell SINR plus a post-handover flag as the observation, cell
//! selection as the action, and a reward that pays for link quality while
//! fining ping-pongs and link failures.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Trace;
use crate::protocol::{Engine, EventLog, Phase, ProtocolConfig, TickEvents};
use crate::scalar::argmax;
use crate::{Scalar, TICK_MS};

/// Observation: `[bs_onehot | sinr_scaled | pp_flag]`, total length 2N+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StateVector<S: Scalar> {
    pub bs_onehot: Vec<S>,
    pub sinr_scaled: Vec<S>,
    pub pp_flag: S,
}

impl<S: Scalar> StateVector<S> {
    pub fn len(&self) -> usize {
        self.bs_onehot.len() + self.sinr_scaled.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the serving cell in this observation's labeling.
    pub fn serving(&self) -> usize {
        argmax(&self.bs_onehot)
    }

    /// Flat copy in the fixed segment order.
    pub fn to_vec(&self) -> Vec<S> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.bs_onehot);
        v.extend_from_slice(&self.sinr_scaled);
        v.push(self.pp_flag);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct EnvConfig<S: Scalar> {
    /// Reward/penalty magnitude C.
    pub reward_c: S,
    /// Episode horizon in ticks.
    pub max_episode_ticks: u64,
    /// Curriculum phase: 1 ends episodes on link failure only, 2 also on
    /// ping-pong.
    pub phase: u8,
    /// Randomly relabel cells each episode so the policy cannot memorize
    /// geography.
    pub shuffle_bs: bool,
    pub clip_lo_db: S,
    pub clip_hi_db: S,
}

impl<S: Scalar> Default for EnvConfig<S> {
    fn default() -> Self {
        Self {
            reward_c: S::from_f64(0.95),
            max_episode_ticks: 6000,
            phase: 1,
            shuffle_bs: true,
            clip_lo_db: S::from_f64(-10.0),
            clip_hi_db: S::from_f64(10.0),
        }
    }
}

impl<S: Scalar> EnvConfig<S> {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.reward_c > S::zero()) {
            return Err(EnvError::InvalidConfig("reward_c must be positive".into()));
        }
        if self.max_episode_ticks == 0 {
            return Err(EnvError::InvalidConfig("max_episode_ticks must be positive".into()));
        }
        if !(self.phase == 1 || self.phase == 2) {
            return Err(EnvError::InvalidConfig(format!("phase must be 1 or 2, got {}", self.phase)));
        }
        if !(self.clip_lo_db < self.clip_hi_db) {
            return Err(EnvError::InvalidConfig("clip bounds must satisfy lo < hi".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("trace dataset is empty")]
    EmptyDataset,
    #[error("trace {index} has {found} cells, expected {expected}")]
    MixedCellCounts { index: usize, expected: usize, found: usize },
    #[error("trace {index} is empty")]
    EmptyTrace { index: usize },
    #[error("action {action} out of range for {n_bs} cells")]
    ActionOutOfRange { action: usize, n_bs: usize },
    #[error("episode already finished; call reset")]
    EpisodeOver,
    #[error("permutation is not a bijection over {0} cells")]
    BadPermutation(usize),
}

/// Why an episode terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalCause {
    Rlf,
    PingPong,
}

/// Per-step annotations alongside the reward.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub events: TickEvents,
    pub cause: Option<TerminalCause>,
}

#[derive(Debug, Clone)]
pub struct StepResult<S: Scalar> {
    pub next_state: StateVector<S>,
    pub reward: S,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// Scale one SINR reading into `[0, 1]` over the clip window.
fn scale_sinr<S: Scalar>(sinr_db: S, lo: S, hi: S) -> S {
    let clipped = sinr_db.max(lo).min(hi);
    (clipped - lo) / (hi - lo)
}

/// Build the observation from raw per-cell SINR (in observation order),
/// the serving index (same order), and whether the post-handover window is
/// still open.
pub fn encode_state<S: Scalar>(
    sinr_db: &[S],
    serving: usize,
    pp_active: bool,
    cfg: &EnvConfig<S>,
) -> StateVector<S> {
    assert!(serving < sinr_db.len(), "serving index within the cell set");
    let mut bs_onehot = vec![S::zero(); sinr_db.len()];
    bs_onehot[serving] = S::one();
    let sinr_scaled = sinr_db
        .iter()
        .map(|&x| scale_sinr(x, cfg.clip_lo_db, cfg.clip_hi_db))
        .collect();
    StateVector {
        bs_onehot,
        sinr_scaled,
        pp_flag: if pp_active { S::one() } else { S::zero() },
    }
}

/// Reward for the transition that produced `events`, evaluated on the state
/// the action was taken in. `recovering` marks ticks spent re-establishing
/// after a link failure: no serving cell, so the quality term is zero and no
/// bonus is paid.
pub fn compute_reward<S: Scalar>(
    state: &StateVector<S>,
    events: &TickEvents,
    recovering: bool,
    c: S,
) -> S {
    let r_sinr = if recovering {
        S::zero()
    } else {
        let q = state.sinr_scaled[state.serving()];
        let best = state
            .sinr_scaled
            .iter()
            .cloned()
            .fold(S::neg_infinity(), S::max);
        if q >= best {
            q + c
        } else {
            q
        }
    };
    let r_pp = if events.pp { -c } else { S::zero() };
    let r_rlf = if events.rlf {
        -(c + c)
    } else if events.oos {
        -c
    } else {
        S::zero()
    };
    r_sinr + r_pp + r_rlf
}

/// Termination/truncation split for one step.
pub fn check_termination<S: Scalar>(
    events: &TickEvents,
    steps_taken: u64,
    trace_exhausted: bool,
    cfg: &EnvConfig<S>,
) -> (bool, bool) {
    let terminated = events.rlf || (cfg.phase == 2 && events.pp);
    let truncated = steps_taken >= cfg.max_episode_ticks || trace_exhausted;
    (terminated, truncated)
}

/// The environment proper. Cells are presented to the agent through a
/// per-episode permutation (`obs index -> trace column`); the protocol
/// engine and the event log always work in trace columns.
#[derive(Debug, Clone)]
pub struct HandoverEnv<S: Scalar> {
    traces: Arc<[Trace<S>]>,
    protocol: ProtocolConfig<S>,
    cfg: EnvConfig<S>,
    seed: u64,
    trace_set_hash: u64,
    episode: u64,
    // Per-episode state.
    trace_idx: usize,
    /// obs index -> trace column.
    perm: Vec<usize>,
    /// trace column -> obs index.
    inv_perm: Vec<usize>,
    engine: Engine<S>,
    cur_state: StateVector<S>,
    t: usize,
    steps: u64,
    done: bool,
}

impl<S: Scalar> HandoverEnv<S> {
    pub fn new(
        traces: Arc<[Trace<S>]>,
        protocol: ProtocolConfig<S>,
        cfg: EnvConfig<S>,
        seed: u64,
        trace_set_hash: u64,
    ) -> Result<Self, EnvError> {
        cfg.validate()?;
        if traces.is_empty() {
            return Err(EnvError::EmptyDataset);
        }
        let n_bs = traces[0].n_bs();
        for (index, tr) in traces.iter().enumerate() {
            if tr.n_bs() != n_bs {
                return Err(EnvError::MixedCellCounts { index, expected: n_bs, found: tr.n_bs() });
            }
            if tr.n_ticks() == 0 {
                return Err(EnvError::EmptyTrace { index });
            }
        }
        let mut env = Self {
            traces,
            protocol,
            cfg,
            seed,
            trace_set_hash,
            episode: 0,
            trace_idx: 0,
            perm: (0..n_bs).collect(),
            inv_perm: (0..n_bs).collect(),
            engine: Engine::new(n_bs, 0, Default::default(), Default::default()),
            cur_state: StateVector {
                bs_onehot: vec![S::zero(); n_bs],
                sinr_scaled: vec![S::zero(); n_bs],
                pp_flag: S::zero(),
            },
            t: 0,
            steps: 0,
            done: true,
        };
        env.begin_episode(0, (0..n_bs).collect());
        env.done = true; // not live until the caller resets
        Ok(env)
    }

    pub fn n_bs(&self) -> usize {
        self.traces[0].n_bs()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.n_bs() + 1
    }

    pub fn config(&self) -> &EnvConfig<S> {
        &self.cfg
    }

    pub fn trace_idx(&self) -> usize {
        self.trace_idx
    }

    pub fn trace(&self) -> &Trace<S> {
        &self.traces[self.trace_idx]
    }

    /// obs index -> trace column for the current episode.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn engine(&self) -> &Engine<S> {
        &self.engine
    }

    pub fn log(&self) -> &EventLog {
        self.engine.log()
    }

    /// Serving trace column if the link carries traffic this tick.
    pub fn service(&self) -> Option<usize> {
        self.engine.service()
    }

    pub fn current_state(&self) -> &StateVector<S> {
        &self.cur_state
    }

    pub fn episodes_started(&self) -> u64 {
        self.episode
    }

    /// Switch the curriculum phase (1 or 2). Takes effect from the next
    /// termination check, so mid-episode switches are fine.
    pub fn set_phase(&mut self, phase: u8) {
        assert!(phase == 1 || phase == 2, "phase must be 1 or 2");
        self.cfg.phase = phase;
    }

    /// Deterministic per-episode stream: the trace-set content hash, the run
    /// seed, and the episode index fully determine trace choice and cell
    /// relabeling.
    fn episode_rng(&self, episode_index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.trace_set_hash.to_le_bytes());
        key[8..16].copy_from_slice(&self.seed.to_le_bytes());
        key[16..24].copy_from_slice(&episode_index.to_le_bytes());
        key[24..32].copy_from_slice(b"ho-env-0");
        ChaCha8Rng::from_seed(key)
    }

    /// Start the next episode in sequence.
    pub fn reset(&mut self) -> StateVector<S> {
        let episode = self.episode;
        self.episode += 1;
        self.reset_at(episode)
    }

    /// Start the episode with an explicit index (reproduces any episode of a
    /// run without replaying the ones before it).
    pub fn reset_at(&mut self, episode_index: u64) -> StateVector<S> {
        let mut rng = self.episode_rng(episode_index);
        let trace_idx = rng.random_range(0..self.traces.len());
        let mut perm: Vec<usize> = (0..self.n_bs()).collect();
        if self.cfg.shuffle_bs {
            perm.shuffle(&mut rng);
        }
        self.begin_episode(trace_idx, perm);
        self.cur_state.clone()
    }

    /// Start an episode on a chosen trace with a chosen relabeling (identity
    /// if `None`). Used by evaluation, which sweeps traces in order.
    pub fn reset_to(
        &mut self,
        trace_idx: usize,
        perm: Option<Vec<usize>>,
    ) -> Result<StateVector<S>, EnvError> {
        if trace_idx >= self.traces.len() {
            return Err(EnvError::EmptyDataset);
        }
        let n = self.n_bs();
        let perm = perm.unwrap_or_else(|| (0..n).collect());
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(EnvError::BadPermutation(n));
        }
        self.begin_episode(trace_idx, perm);
        Ok(self.cur_state.clone())
    }

    fn begin_episode(&mut self, trace_idx: usize, perm: Vec<usize>) {
        let n = self.n_bs();
        let mut inv = vec![0usize; n];
        for (obs, &col) in perm.iter().enumerate() {
            inv[col] = obs;
        }
        self.trace_idx = trace_idx;
        self.perm = perm;
        self.inv_perm = inv;
        let trace = &self.traces[trace_idx];
        let first_row: Vec<S> = trace.sinr_db.row(0).to_vec();
        let serving = argmax(&first_row);
        self.engine = Engine::new(n, serving, self.protocol.rlf, self.protocol.timing);
        self.t = 0;
        self.steps = 0;
        self.done = false;
        self.cur_state = self.encode_current();
    }

    /// Observation for trace row `self.t` under the episode permutation.
    fn encode_current(&self) -> StateVector<S> {
        let trace = &self.traces[self.trace_idx];
        let row = trace.sinr_db.row(self.t.min(trace.n_ticks() - 1));
        let sinr_obs: Vec<S> = self.perm.iter().map(|&col| row[col]).collect();
        let serving_obs = self.inv_perm[self.engine.state().serving_bs];
        let pp_active = self
            .engine
            .state()
            .last_ho_complete_t
            .is_some_and(|t0| (self.t as u64 - t0) * TICK_MS < self.protocol.timing.mts_ms);
        encode_state(&sinr_obs, serving_obs, pp_active, &self.cfg)
    }

    /// Advance one tick. The action names a cell in observation order;
    /// during execution and recovery it is ignored.
    pub fn step(&mut self, action: usize) -> Result<StepResult<S>, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let n = self.n_bs();
        if action >= n {
            return Err(EnvError::ActionOutOfRange { action, n_bs: n });
        }
        let recovering = matches!(self.engine.state().phase, Phase::Recovering { .. });
        let executing = matches!(self.engine.state().phase, Phase::Executing { .. });
        let desired = if recovering || executing {
            self.engine.state().serving_bs
        } else {
            self.perm[action]
        };
        let trace = &self.traces[self.trace_idx];
        let row: Vec<S> = trace.sinr_db.row(self.t).to_vec();
        let events = self.engine.step(desired, &row);

        let reward = compute_reward(&self.cur_state, &events, recovering, self.cfg.reward_c);

        self.t += 1;
        self.steps += 1;
        let exhausted = self.t >= self.traces[self.trace_idx].n_ticks();
        let (terminated, truncated) = check_termination(&events, self.steps, exhausted, &self.cfg);
        self.done = terminated || truncated;

        let next_state = self.encode_current();
        self.cur_state = next_state.clone();
        let cause = if events.rlf {
            Some(TerminalCause::Rlf)
        } else if terminated && events.pp {
            Some(TerminalCause::PingPong)
        } else {
            None
        };
        Ok(StepResult {
            next_state,
            reward,
            terminated,
            truncated,
            info: StepInfo { events, cause },
        })
    }
}
