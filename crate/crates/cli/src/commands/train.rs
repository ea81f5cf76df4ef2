//! `train`: fit the handover agent on a trace set.
//!
//! The training loop itself lives in the library; this command wires it to
//! the filesystem. The log is appended row by row and periodic checkpoints
//! are written mid-run, so a crash or divergence loses at most one update
//! interval of progress. Resuming from a checkpoint continues the timestep
//! and update counters where they left off.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hosim_core::channel::Trace;
use hosim_core::env::HandoverEnv;
use hosim_core::ppo::{
    load_checkpoint, save_checkpoint, train_with, AdamConfig, AdamState, Checkpoint, PpoError,
    ResumeState, TrainLogRow, UpdateView, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
use hosim_core::{Real, Scalar};

use crate::commands::{ensure_dir, file_name, load_trace_set, write_run_manifest};
use crate::config::RunConfig;
use crate::CliError;

fn log_line(r: &TrainLogRow) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        r.update, r.timesteps, r.mean_ep_reward, r.policy_loss, r.value_loss, r.entropy,
        r.explained_variance
    )
}

const LOG_HEADER: &str =
    "update,timesteps,mean_ep_reward,policy_loss,value_loss,entropy,explained_variance\n";

fn checkpoint_at(view: &UpdateView<'_, Real>, cfg: &hosim_core::ppo::PpoConfig<Real>) -> Checkpoint<Real> {
    Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        dtype: Real::DTYPE.into(),
        timesteps: view.timesteps,
        agent: view.agent.clone(),
        adam: view.adam.clone(),
        config: cfg.clone(),
        rng: view.rng.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    mut cfg: RunConfig,
    out: &Path,
    traces_dir: &Path,
    steps: Option<u64>,
    phase_split: Option<f64>,
    checkpoint_every: u64,
    checkpoint_dir: Option<PathBuf>,
    resume: Option<PathBuf>,
    verbose: bool,
) -> Result<(), CliError> {
    if let Some(s) = steps {
        cfg.ppo.total_timesteps = s;
    }
    if let Some(f) = phase_split {
        cfg.ppo.phase1_frac = f;
    }
    // One master seed drives the whole pipeline; the [ppo] seed key is
    // deliberately shadowed so a config file cannot silently detach the
    // agent stream from the run seed.
    cfg.ppo.seed = cfg.seed;
    cfg.validate()?;

    let (traces, manifest) = load_trace_set(traces_dir)?;
    let input_sha = manifest.combined_sha256();
    let set_hash = manifest.set_hash_u64();
    ensure_dir(out)?;
    let ckpt_dir = checkpoint_dir.unwrap_or_else(|| out.to_path_buf());
    ensure_dir(&ckpt_dir)?;

    // Resuming: the stored architecture must match the effective config,
    // otherwise the optimizer state would be reinterpreted over different
    // shapes. The update counter is reconstructed from the timestep count.
    let steps_per_update = (cfg.ppo.rollout_len * cfg.ppo.n_envs) as u64;
    let resume_state = match &resume {
        None => None,
        Some(path) => {
            let ckpt = load_checkpoint::<Real>(path)?;
            if ckpt.config.hidden != cfg.ppo.hidden {
                return Err(CliError::Incompatible(format!(
                    "checkpoint architecture {:?} does not match configured {:?}",
                    ckpt.config.hidden, cfg.ppo.hidden
                )));
            }
            Some(ResumeState {
                agent: ckpt.agent,
                adam: ckpt.adam,
                rng: ckpt.rng,
                timesteps: ckpt.timesteps,
                update: ckpt.timesteps / steps_per_update,
            })
        }
    };
    let resuming = resume_state.is_some();

    let shared: Arc<[Trace<Real>]> = traces.into();
    let protocol = cfg.protocol();
    let env_cfg = cfg.env;
    let seed = cfg.seed;
    let make_env = |i: usize| -> Result<HandoverEnv<Real>, hosim_core::env::EnvError> {
        HandoverEnv::new(
            shared.clone(),
            protocol,
            env_cfg,
            seed.wrapping_add(1 + i as u64),
            set_hash,
        )
    };

    // The log survives crashes: header once, then one row per update as it
    // happens. A resumed run appends, keeping the timestep column monotone.
    let log_path = out.join("train_log.csv");
    let fresh_log = !(resuming && log_path.exists());
    let mut log_file = OpenOptions::new()
        .create(true)
        .append(true)
        .truncate(false)
        .open(&log_path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", log_path.display())))?;
    if fresh_log {
        log_file
            .set_len(0)
            .and_then(|()| log_file.write_all(LOG_HEADER.as_bytes()))
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", log_path.display())))?;
    }

    let mut periodic: Vec<String> = Vec::new();
    let ppo_cfg = cfg.ppo.clone();
    let observe = |view: &UpdateView<'_, Real>| -> Result<(), PpoError> {
        log_file.write_all(log_line(view.row).as_bytes())?;
        log_file.flush()?;
        if checkpoint_every > 0 && view.update % checkpoint_every == 0 {
            let name = format!("ckpt_{:010}.json", view.timesteps);
            save_checkpoint(&ckpt_dir.join(&name), &checkpoint_at(view, &ppo_cfg))?;
            periodic.push(name);
        }
        if verbose {
            eprintln!(
                "update {} ({} steps): mean episode reward {:.3}",
                view.update, view.timesteps, view.row.mean_ep_reward
            );
        }
        Ok(())
    };

    let outcome = match train_with(&cfg.ppo, make_env, resume_state, observe) {
        Ok(outcome) => outcome,
        Err(e @ PpoError::Diverged { .. }) => {
            return Err(CliError::Runtime(format!(
                "{e}; train_log.csv and periodic checkpoints up to the failure are retained in {}",
                ckpt_dir.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };

    let final_ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        dtype: Real::DTYPE.into(),
        timesteps: outcome.timesteps,
        agent: outcome.agent,
        adam: outcome.adam,
        config: cfg.ppo.clone(),
        rng: outcome.rng,
    };
    let final_path = ckpt_dir.join("ckpt_final.json");
    save_checkpoint(&final_path, &final_ckpt)?;

    let mut outputs = vec!["train_log.csv".into(), file_name(&final_path)];
    outputs.extend(periodic);

    // The agent as it stood when the curriculum switched phases, evaluable
    // on its own. Optimizer state is not carried for this snapshot.
    if let Some(agent) = outcome.phase1_agent {
        let adam = AdamState::new(&agent, AdamConfig::default());
        let snapshot = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dtype: Real::DTYPE.into(),
            timesteps: (cfg.ppo.phase1_frac * cfg.ppo.total_timesteps as f64).round() as u64,
            agent,
            adam,
            config: cfg.ppo.clone(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        };
        let path = ckpt_dir.join("ckpt_phase1.json");
        save_checkpoint(&path, &snapshot)?;
        outputs.push(file_name(&path));
    }

    write_run_manifest(out, "train", cfg.seed, Some(input_sha), cfg.to_json(), outputs)?;

    let last = outcome.log.rows.last();
    println!(
        "trained {} steps over {} updates; final checkpoint {}{}",
        outcome.timesteps,
        last.map(|r| r.update).unwrap_or(0),
        final_path.display(),
        last.map(|r| format!("; last mean episode reward {:.3}", r.mean_ep_reward))
            .unwrap_or_default()
    );
    Ok(())
}
