//! `run-baseline`: evaluate the standards handover over a trace set.
//!
//! The default mode sweeps the configured offset/time-to-trigger grid,
//! reports every combination in `sweep.csv`, and evaluates the one with
//! the best mean per-trace rate ratio. Forcing `--off-db`/`--ttt-ms`
//! skips the sweep and uses the given pair directly.

use std::path::Path;

use hosim_core::runner::{best_sweep_index, run_baseline_set, sweep_baseline};

use crate::commands::{ensure_dir, load_trace_set, write_eval_bundle, write_run_manifest};
use crate::config::RunConfig;
use crate::CliError;

pub fn run(
    mut cfg: RunConfig,
    out: &Path,
    traces_dir: &Path,
    off_db: Option<f64>,
    ttt_ms: Option<u64>,
    verbose: bool,
) -> Result<(), CliError> {
    cfg.validate()?;
    let (traces, manifest) = load_trace_set(traces_dir)?;
    ensure_dir(out)?;
    let files: Vec<String> = manifest.entries.iter().map(|e| e.file.clone()).collect();

    let mut outputs = Vec::new();
    let (chosen_off, chosen_ttt) = match (off_db, ttt_ms) {
        (Some(off), Some(ttt)) => (off, ttt),
        (None, None) => {
            let points = sweep_baseline(
                &traces,
                &cfg.protocol(),
                &cfg.filter,
                &cfg.sweep.offs_db,
                &cfg.sweep.ttts_ms,
                &cfg.metrics,
            )?;
            let best = best_sweep_index(&points);
            let mut sweep = String::from("off_db,ttt_ms,mean_gamma,pooled_gamma,hof_count,pp_count,chosen\n");
            for (i, p) in points.iter().enumerate() {
                sweep.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.off_db,
                    p.ttt_ms,
                    p.mean_gamma,
                    p.report.gamma_r,
                    p.report.hof_count,
                    p.report.pp_count,
                    (i == best) as u8,
                ));
            }
            crate::commands::write_text(&out.join("sweep.csv"), &sweep)?;
            outputs.push("sweep.csv".into());
            if verbose {
                eprintln!(
                    "sweep: best off={} dB ttt={} ms (mean rate ratio {})",
                    points[best].off_db, points[best].ttt_ms, points[best].mean_gamma
                );
            }
            (points[best].off_db, points[best].ttt_ms)
        }
        _ => {
            return Err(CliError::Config(
                "--off-db and --ttt-ms must be given together".into(),
            ))
        }
    };

    // The effective trigger pair becomes part of the recorded config.
    cfg.a3.off_db = chosen_off;
    cfg.a3.ttt_ms = chosen_ttt;
    cfg.validate()?;

    let records = run_baseline_set(&traces, &cfg.protocol(), &cfg.filter);
    outputs.extend(write_eval_bundle(out, &traces, &files, &records, &cfg.metrics)?);

    write_run_manifest(
        out,
        "run-baseline",
        cfg.seed,
        Some(manifest.combined_sha256()),
        cfg.to_json(),
        outputs,
    )?;

    println!(
        "baseline evaluated on {} traces with off={} dB ttt={} ms -> {}",
        traces.len(),
        chosen_off,
        chosen_ttt,
        out.display()
    );
    Ok(())
}
