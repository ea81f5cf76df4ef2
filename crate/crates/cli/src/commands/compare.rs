//! `compare`: join a baseline and an agent evaluation.
//!
//! Both inputs must have been produced from the identical trace set — the
//! manifest digests recorded in their `run.json` files are required to
//! match, so a comparison can never silently mix datasets. Outputs a
//! per-speed side-by-side table, both SINR-at-handover distributions, and
//! the outage probability at the moment the handover command is sent.

use std::path::Path;

use hosim_core::manifest::RunManifest;
use hosim_core::Real;

use crate::commands::{ensure_dir, read_text, write_run_manifest, write_text, CsvTable, ecdf_prob_at, parse_f64};
use crate::config::RunConfig;
use crate::CliError;

fn input_digest(dir: &Path, manifest: &RunManifest) -> Result<String, CliError> {
    manifest.input_manifest_sha256.clone().ok_or_else(|| {
        CliError::Incompatible(format!(
            "{}/run.json records no input trace manifest (command {:?})",
            dir.display(),
            manifest.command
        ))
    })
}

pub fn run(cfg: RunConfig, out: &Path, baseline: &Path, agent: &Path) -> Result<(), CliError> {
    cfg.validate()?;
    let base_run = RunManifest::read(&baseline.join("run.json"))?;
    let agent_run = RunManifest::read(&agent.join("run.json"))?;
    let base_sha = input_digest(baseline, &base_run)?;
    let agent_sha = input_digest(agent, &agent_run)?;
    if base_sha != agent_sha {
        return Err(CliError::Incompatible(format!(
            "trace sets differ: baseline evaluated {base_sha}, agent evaluated {agent_sha}"
        )));
    }
    ensure_dir(out)?;

    // Per-speed side-by-side table, joined on the speed column.
    let base_csv = read_text(&baseline.join("reports.csv"))?;
    let agent_csv = read_text(&agent.join("reports.csv"))?;
    let base_table = CsvTable::parse(&base_csv, &baseline.join("reports.csv"))?;
    let agent_table = CsvTable::parse(&agent_csv, &agent.join("reports.csv"))?;
    let pick = |table: &CsvTable, path: &Path| -> Result<Vec<(f64, Vec<String>)>, CliError> {
        let si = table.column("speed_kmh", path)?;
        let cols = ["gamma_r", "hof_prob", "pp_prob", "ho_count", "rlf_count"]
            .iter()
            .map(|c| table.column(c, path))
            .collect::<Result<Vec<_>, _>>()?;
        table
            .rows
            .iter()
            .map(|row| {
                let speed = parse_f64(&row[si], "reports speed_kmh")?;
                Ok((speed, cols.iter().map(|&i| row[i].clone()).collect()))
            })
            .collect()
    };
    let base_rows = pick(&base_table, &baseline.join("reports.csv"))?;
    let agent_rows = pick(&agent_table, &agent.join("reports.csv"))?;

    let mut comparison = String::from(
        "speed_kmh,gamma_r_baseline,gamma_r_agent,hof_prob_baseline,hof_prob_agent,pp_prob_baseline,pp_prob_agent,ho_baseline,ho_agent,rlf_baseline,rlf_agent\n",
    );
    for (speed, b) in &base_rows {
        let Some((_, a)) = agent_rows.iter().find(|(s, _)| s == speed) else {
            return Err(CliError::Incompatible(format!(
                "agent report has no speed class {speed} km/h"
            )));
        };
        comparison.push_str(&format!(
            "{speed},{},{},{},{},{},{},{},{},{},{}\n",
            b[0], a[0], b[1], a[1], b[2], a[2], b[3], a[3], b[4], a[4]
        ));
    }
    if let Some((speed, _)) = agent_rows.iter().find(|(s, _)| !base_rows.iter().any(|(b, _)| b == s)) {
        return Err(CliError::Incompatible(format!(
            "baseline report has no speed class {speed} km/h"
        )));
    }
    write_text(&out.join("comparison.csv"), &comparison)?;

    // SINR distributions at handover, carried over under protocol-tagged
    // names, plus the headline outage probability at command time.
    let mut outputs = vec!["comparison.csv".into(), "qout_at_ho.csv".into()];
    let mut start_tables = Vec::new();
    for (dir, tag) in [(baseline, "baseline"), (agent, "agent")] {
        for kind in ["start", "end"] {
            let src = dir.join(format!("ecdf_{kind}.csv"));
            let text = read_text(&src)?;
            if kind == "start" {
                start_tables.push((CsvTable::parse(&text, &src)?, src.clone()));
            }
            let name = format!("ecdf_{tag}_{kind}.csv");
            write_text(&out.join(&name), &text)?;
            outputs.push(name);
        }
    }
    let q_out = cfg.rlf.q_out_db;
    let (p_base, n_base) = ecdf_prob_at(&start_tables[0].0, q_out, &start_tables[0].1)?;
    let (p_agent, n_agent) = ecdf_prob_at(&start_tables[1].0, q_out, &start_tables[1].1)?;
    let reduction = if p_base > 0.0 {
        format!("{}", (p_base - p_agent) / p_base)
    } else {
        String::new()
    };
    let qout = format!(
        "q_out_db,p_baseline,p_agent,relative_reduction,n_baseline,n_agent\n{q_out},{p_base},{p_agent},{reduction},{n_base},{n_agent}\n"
    );
    write_text(&out.join("qout_at_ho.csv"), &qout)?;

    let provenance = serde_json::json!({
        "baseline_dir": baseline.display().to_string(),
        "agent_dir": agent.display().to_string(),
        "baseline_command": base_run.command,
        "agent_command": agent_run.command,
    });
    write_run_manifest(out, "compare", cfg.seed, Some(base_sha), provenance, outputs)?;

    // A human-readable echo of the joined table.
    println!("speed  gamma_r base/agent   hof base/agent   pp base/agent");
    for (speed, b) in &base_rows {
        let a = &agent_rows.iter().find(|(s, _)| s == speed).expect("joined above").1;
        println!(
            "{speed:>5}  {:>9}/{:<9}  {:>6}/{:<6}  {:>6}/{:<6}",
            trim(&b[0]),
            trim(&a[0]),
            trim(&b[1]),
            trim(&a[1]),
            trim(&b[2]),
            trim(&a[2])
        );
    }
    println!("P(SINR <= {q_out} dB) at handover command: baseline {p_base:.4}, agent {p_agent:.4}");
    Ok(())
}

/// Shortens a csv float field for terminal display; empty fields (an
/// undefined probability) render as a dash.
fn trim(field: &str) -> String {
    match field.parse::<Real>() {
        Ok(v) => format!("{v:.4}"),
        Err(_) if field.is_empty() => "-".into(),
        Err(_) => field.to_string(),
    }
}
