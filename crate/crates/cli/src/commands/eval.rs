//! `eval`: replay a trained checkpoint over a trace set.
//!
//! Produces the same report bundle as `run-baseline`, so the two output
//! directories can be handed straight to `compare`. The checkpoint digest
//! is recorded alongside the trace manifest digest: an evaluation names
//! both of its inputs exactly.

use std::path::Path;

use hosim_core::manifest::sha256_hex;
use hosim_core::ppo::load_checkpoint;
use hosim_core::protocol::EventKind;
use hosim_core::runner::run_agent_set;
use hosim_core::Real;

use crate::commands::{ensure_dir, load_trace_set, write_eval_bundle, write_run_manifest};
use crate::config::RunConfig;
use crate::CliError;

pub fn run(
    cfg: RunConfig,
    out: &Path,
    checkpoint: &Path,
    traces_dir: &Path,
    verbose: bool,
) -> Result<(), CliError> {
    cfg.validate()?;
    let ckpt = load_checkpoint::<Real>(checkpoint)?;
    let ckpt_bytes = std::fs::read(checkpoint)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", checkpoint.display())))?;
    let (traces, manifest) = load_trace_set(traces_dir)?;
    ensure_dir(out)?;
    let files: Vec<String> = manifest.entries.iter().map(|e| e.file.clone()).collect();

    if verbose {
        eprintln!(
            "evaluating {} ({} steps) on {} traces",
            checkpoint.display(),
            ckpt.timesteps,
            traces.len()
        );
    }
    let records = run_agent_set(&traces, &ckpt.agent, &cfg.protocol(), &cfg.env)?;
    let outputs = write_eval_bundle(out, &traces, &files, &records, &cfg.metrics)?;

    let mut provenance = cfg.to_json();
    provenance["checkpoint"] = serde_json::json!({
        "file": checkpoint.display().to_string(),
        "sha256": sha256_hex(&ckpt_bytes),
        "timesteps": ckpt.timesteps,
    });
    write_run_manifest(
        out,
        "eval",
        cfg.seed,
        Some(manifest.combined_sha256()),
        provenance,
        outputs,
    )?;

    println!(
        "agent evaluated on {} traces ({} handover commands) -> {}",
        traces.len(),
        records.iter().map(|r| r.log.count(EventKind::HoCmd)).sum::<usize>(),
        out.display()
    );
    Ok(())
}
