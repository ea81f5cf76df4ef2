//! `gen-traces`: synthesize a reproducible trace set.
//!
//! One layout is shared by the whole set; every per-trace seed is drawn
//! from a single master stream, so the dataset is a pure function of the
//! config plus seed. Layer-1 filtering is applied before writing — traces
//! on disk are what the protocol stack consumes.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hosim_core::channel::{
    generate_layout, generate_path, l1_filter, synthesize_trace, write_trace, Area,
};
use hosim_core::manifest::TraceManifest;
use hosim_core::Real;

use crate::commands::{ensure_dir, write_run_manifest};
use crate::config::RunConfig;
use crate::CliError;

pub fn run(
    mut cfg: RunConfig,
    out: &Path,
    count: Option<usize>,
    speeds: Vec<f64>,
    duration_s: Option<f64>,
    verbose: bool,
) -> Result<(), CliError> {
    if let Some(c) = count {
        cfg.mobility.count = c;
    }
    if !speeds.is_empty() {
        let mut speeds = speeds;
        speeds.sort_by(|a, b| a.partial_cmp(b).expect("finite speeds"));
        cfg.mobility.speeds_kmh = speeds;
    }
    if let Some(d) = duration_s {
        cfg.mobility.duration_s = d;
    }
    cfg.validate()?;
    if cfg.mobility.count == 0 {
        return Err(CliError::Config("mobility: trace count must be positive".into()));
    }
    ensure_dir(out)?;

    let area = Area::<Real>::new(cfg.layout.area_w_m, cfg.layout.area_h_m);
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layout = generate_layout(cfg.layout.n_bs, area, master.next_u64())?;

    let mut named = Vec::new();
    let mut ue_id = 0u32;
    for &speed in &cfg.mobility.speeds_kmh {
        for i in 0..cfg.mobility.count {
            let path_seed = master.next_u64();
            let synth_seed = master.next_u64();
            let path = generate_path(area, speed, cfg.mobility.duration_s, path_seed)?;
            let raw = synthesize_trace(&layout, &path, &cfg.radio, synth_seed)?;
            let mut trace = l1_filter(&raw, &cfg.filter)?;
            trace.ue_id = ue_id;
            ue_id += 1;
            let file = format!("trace-{speed:03}kmh-{i:03}.trace");
            write_trace(&trace, &out.join(&file))?;
            if verbose {
                eprintln!("wrote {file}");
            }
            named.push((file, trace));
        }
    }

    let refs: Vec<(String, &_)> = named.iter().map(|(f, t)| (f.clone(), t)).collect();
    let manifest = TraceManifest::for_traces(&refs);
    manifest.write(&out.join("manifest.json"))?;

    let mut outputs: Vec<String> = named.iter().map(|(f, _)| f.clone()).collect();
    outputs.push("manifest.json".into());
    write_run_manifest(
        out,
        "gen-traces",
        cfg.seed,
        Some(manifest.combined_sha256()),
        cfg.to_json(),
        outputs,
    )?;

    println!(
        "wrote {} traces ({} speeds x {}) to {}",
        named.len(),
        cfg.mobility.speeds_kmh.len(),
        cfg.mobility.count,
        out.display()
    );
    Ok(())
}
