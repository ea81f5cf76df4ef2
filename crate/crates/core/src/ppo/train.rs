//! The training driver: alternate rollout collection and clipped-surrogate
//! optimization, with the two-phase curriculum switch and a CSV log of every
//! update.

use std::collections::VecDeque;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{clip_global_norm, AdamConfig, AdamState};
use super::agent::Agent;
use super::buffer::RolloutBuffer;
use super::loss::{policy_loss_and_grad, value_loss_and_grad};
use super::mlp::{GradVisitor, Layer};
use super::{PpoConfig, PpoError};
use crate::env::{EnvError, HandoverEnv};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogRow {
    pub update: u64,
    pub timesteps: u64,
    /// Mean return over the last (up to) 100 completed episodes; NaN until
    /// the first episode finishes.
    pub mean_ep_reward: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub explained_variance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "update,timesteps,mean_ep_reward,policy_loss,value_loss,entropy,explained_variance\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.update,
                r.timesteps,
                r.mean_ep_reward,
                r.policy_loss,
                r.value_loss,
                r.entropy,
                r.explained_variance
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S: Scalar> {
    pub agent: Agent<S>,
    /// Snapshot taken when the curriculum switched to phase 2 (absent if the
    /// whole run stayed in phase 1).
    pub phase1_agent: Option<Agent<S>>,
    pub adam: AdamState<S>,
    pub rng: ChaCha8Rng,
    pub log: TrainLog,
    pub timesteps: u64,
}

/// Gradient pair mirroring [`Agent`]'s visitation order.
struct AgentGrads<S: Scalar> {
    actor: Vec<Layer<S>>,
    critic: Vec<Layer<S>>,
}

impl<S: Scalar> GradVisitor<S> for AgentGrads<S> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[S])) {
        self.actor.visit(&mut |name, s| f(&format!("actor/{name}"), s));
        self.critic.visit(&mut |name, s| f(&format!("critic/{name}"), s));
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [S])) {
        self.actor.visit_mut(&mut |name, s| f(&format!("actor/{name}"), s));
        self.critic.visit_mut(&mut |name, s| f(&format!("critic/{name}"), s));
    }
}

fn variance(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64
}

/// Optimizer and sampler state carried across a stop/restart boundary.
#[derive(Debug, Clone)]
pub struct ResumeState<S: Scalar> {
    pub agent: Agent<S>,
    pub adam: AdamState<S>,
    pub rng: ChaCha8Rng,
    pub timesteps: u64,
    /// Update counter the continued log should start after.
    pub update: u64,
}

/// Read-only snapshot handed to the per-update observer; everything a
/// checkpoint needs, borrowed for the duration of the call.
pub struct UpdateView<'a, S: Scalar> {
    pub agent: &'a Agent<S>,
    pub adam: &'a AdamState<S>,
    pub rng: &'a ChaCha8Rng,
    pub timesteps: u64,
    pub update: u64,
    pub row: &'a TrainLogRow,
}

/// Run PPO over environments produced by `make_env(i)` for i in 0..n_envs.
/// The factory should give each instance its own seed.
pub fn train<S: Scalar>(
    cfg: &PpoConfig<S>,
    make_env: impl FnMut(usize) -> Result<HandoverEnv<S>, EnvError>,
) -> Result<TrainOutcome<S>, PpoError> {
    train_with(cfg, make_env, None, |_| Ok(()))
}

/// [`train`] with the full harness: optionally continue from `resume`, and
/// observe every completed update (periodic checkpoints, live logging). An
/// error from the observer aborts the run.
///
/// A resumed run rebuilds its environments from scratch, so its episode
/// sequence restarts even though the optimizer state carries over.
pub fn train_with<S: Scalar>(
    cfg: &PpoConfig<S>,
    mut make_env: impl FnMut(usize) -> Result<HandoverEnv<S>, EnvError>,
    resume: Option<ResumeState<S>>,
    mut on_update: impl FnMut(&UpdateView<'_, S>) -> Result<(), PpoError>,
) -> Result<TrainOutcome<S>, PpoError> {
    cfg.validate()?;
    let mut envs: Vec<HandoverEnv<S>> = (0..cfg.n_envs)
        .map(&mut make_env)
        .collect::<Result<_, _>>()?;
    let obs_dim = envs[0].state_dim();
    let n_actions = envs[0].n_bs();
    for e in &envs {
        if e.state_dim() != obs_dim || e.n_bs() != n_actions {
            return Err(PpoError::InvalidConfig(
                "all environments must share one observation layout".into(),
            ));
        }
    }

    let (mut agent, mut adam, mut rng, mut timesteps, mut update) = match resume {
        Some(r) => {
            if r.agent.obs_dim != obs_dim || r.agent.n_actions != n_actions {
                return Err(PpoError::ShapeMismatch(format!(
                    "resumed agent is {}x{} but the environments need {obs_dim}x{n_actions}",
                    r.agent.obs_dim, r.agent.n_actions
                )));
            }
            (r.agent, r.adam, r.rng, r.timesteps, r.update)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let agent = Agent::init(obs_dim, n_actions, &cfg.hidden, &mut rng);
            let adam = AdamState::new(&agent, AdamConfig::default());
            (agent, adam, rng, 0, 0)
        }
    };

    let switch_at = (cfg.phase1_frac * cfg.total_timesteps as f64).round() as u64;
    let mut phase = if timesteps >= switch_at { 2 } else { 1 };
    let mut phase1_agent = None;
    for env in &mut envs {
        env.set_phase(phase);
    }
    if phase == 2 && timesteps == 0 {
        // The whole run is phase 2; the "phase 1 result" is the initial net.
        phase1_agent = Some(agent.clone());
    }

    let mut cur: Vec<Vec<S>> = envs.iter_mut().map(|e| e.reset().to_vec()).collect();
    let mut running_return = vec![0.0f64; cfg.n_envs];
    let mut ep_returns: VecDeque<f64> = VecDeque::with_capacity(100);

    let mut log = TrainLog::default();

    while timesteps < cfg.total_timesteps {
        if phase == 1 && timesteps >= switch_at {
            phase = 2;
            for env in &mut envs {
                env.set_phase(2);
            }
            phase1_agent = Some(agent.clone());
        }

        // Rollout: each environment contributes one contiguous segment.
        let mut buffer = RolloutBuffer::new(cfg.rollout_len * cfg.n_envs, obs_dim);
        let mut segments = Vec::with_capacity(cfg.n_envs);
        for e in 0..cfg.n_envs {
            let start = buffer.len();
            for _ in 0..cfg.rollout_len {
                let state = cur[e].clone();
                let (action, logp, value) = agent.act_sample(&state, &mut rng);
                let step = envs[e].step(action)?;
                let done = step.terminated || step.truncated;
                buffer.push(&state, action, step.reward, done, value, logp);
                running_return[e] += step.reward.to_f64();
                if done {
                    if ep_returns.len() == 100 {
                        ep_returns.pop_front();
                    }
                    ep_returns.push_back(running_return[e]);
                    running_return[e] = 0.0;
                    cur[e] = envs[e].reset().to_vec();
                } else {
                    cur[e] = step.next_state.to_vec();
                }
                timesteps += 1;
            }
            // If the segment ended mid-episode this bootstraps the tail;
            // after a terminal step the done flag nullifies it anyway.
            let bootstrap = agent.value_of(&cur[e]);
            segments.push((start, cfg.rollout_len, bootstrap));
        }
        buffer.compute_advantages(&segments, cfg.gamma, cfg.gae_lambda);

        let ev = {
            let var_t = variance(buffer.targets.iter().map(|&t| t.to_f64()));
            if var_t > 0.0 {
                let resid = buffer
                    .targets
                    .iter()
                    .zip(&buffer.values)
                    .map(|(&t, &v)| t.to_f64() - v.to_f64());
                1.0 - variance(resid) / var_t
            } else {
                f64::NAN
            }
        };
        if cfg.advantage_norm {
            buffer.normalize_advantages();
        }

        // Optimization epochs over shuffled minibatches.
        let total = buffer.len();
        let mut indices: Vec<usize> = (0..total).collect();
        let mut pol_sum = 0.0f64;
        let mut val_sum = 0.0f64;
        let mut ent_sum = 0.0f64;
        let mut n_samples = 0usize;
        for _ in 0..cfg.epochs_per_update {
            indices.shuffle(&mut rng);
            for chunk in indices.chunks(cfg.minibatch_size) {
                let b = chunk.len();
                let mut flat = Vec::with_capacity(b * obs_dim);
                for &i in chunk {
                    flat.extend(buffer.states.row(i).iter().cloned());
                }
                let states = Array2::from_shape_vec((b, obs_dim), flat).expect("gathered batch");
                let actions: Vec<usize> = chunk.iter().map(|&i| buffer.actions[i]).collect();
                let logp_old: Vec<S> = chunk.iter().map(|&i| buffer.logps[i]).collect();
                let advs: Vec<S> = chunk.iter().map(|&i| buffer.advantages[i]).collect();
                let targets: Vec<S> = chunk.iter().map(|&i| buffer.targets[i]).collect();

                let (logits, actor_cache) = agent.actor.forward_cached(&states);
                let pol = policy_loss_and_grad(
                    &logits,
                    &actions,
                    &logp_old,
                    &advs,
                    cfg.clip_eps,
                    cfg.ent_coef,
                );
                let actor_grads = agent.actor.backward(&actor_cache, &pol.dlogits);

                let (values, critic_cache) = agent.critic.forward_cached(&states);
                let (vloss, dvalues) = value_loss_and_grad(&values, &targets, cfg.vf_coef);
                let critic_grads = agent.critic.backward(&critic_cache, &dvalues);

                let total_loss =
                    pol.loss + cfg.vf_coef * vloss - cfg.ent_coef * pol.entropy;
                if !total_loss.is_finite() {
                    return Err(PpoError::Diverged { update });
                }

                let mut grads = AgentGrads { actor: actor_grads, critic: critic_grads };
                if cfg.grad_clip {
                    clip_global_norm(&mut grads, cfg.max_grad_norm);
                }
                adam.apply(&mut agent, &grads, cfg.lr)?;

                pol_sum += pol.loss.to_f64() * b as f64;
                val_sum += vloss.to_f64() * b as f64;
                ent_sum += pol.entropy.to_f64() * b as f64;
                n_samples += b;
            }
        }

        update += 1;
        let mean_ep = if ep_returns.is_empty() {
            f64::NAN
        } else {
            ep_returns.iter().sum::<f64>() / ep_returns.len() as f64
        };
        log.rows.push(TrainLogRow {
            update,
            timesteps,
            mean_ep_reward: mean_ep,
            policy_loss: pol_sum / n_samples as f64,
            value_loss: val_sum / n_samples as f64,
            entropy: ent_sum / n_samples as f64,
            explained_variance: ev,
        });
        on_update(&UpdateView {
            agent: &agent,
            adam: &adam,
            rng: &rng,
            timesteps,
            update,
            row: log.rows.last().expect("row just pushed"),
        })?;
    }

    Ok(TrainOutcome { agent, phase1_agent, adam, rng, log, timesteps })
}
