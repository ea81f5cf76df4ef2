//! Subcommand implementations and the file-handling helpers they share.

pub mod compare;
pub mod eval;
pub mod gen_traces;
pub mod run_baseline;
pub mod train;

use std::path::Path;

use hosim_core::channel::Trace;
use hosim_core::manifest::{load_traces, RunManifest, TraceManifest};
use hosim_core::metrics::{sinr_ecdf_at_ho, RateConfig};
use hosim_core::runner::{pooled_report, RunRecord};
use hosim_core::{Real, Scalar};

use crate::CliError;

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Loads every `.trace` under `dir` together with the manifest re-derived
/// from the bytes on disk. An empty set is an error: every consumer needs
/// at least one trace.
pub fn load_trace_set(dir: &Path) -> Result<(Vec<Trace<Real>>, TraceManifest), CliError> {
    let (traces, manifest) = load_traces::<Real>(dir).map_err(|e| match e {
        hosim_core::manifest::ManifestError::Io(io) => {
            CliError::Io(format!("{}: {io}", dir.display()))
        }
        other => other.into(),
    })?;
    if traces.is_empty() {
        return Err(CliError::Io(format!("no .trace files in {}", dir.display())));
    }
    Ok((traces, manifest))
}

/// Trace indices grouped by speed class, ascending.
pub fn group_by_speed(traces: &[Trace<Real>]) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, tr) in traces.iter().enumerate() {
        let s = tr.meta.speed_kmh;
        match groups.iter_mut().find(|(g, _)| *g == s) {
            Some((_, idx)) => idx.push(i),
            None => groups.push((s, vec![i])),
        }
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("speeds are finite"));
    groups
}

/// Writes the standard evaluation bundle shared by `run-baseline` and
/// `eval`: a per-speed pooled report, a per-trace report, and the SINR
/// distributions at handover command and completion pooled over the whole
/// set. Returns the file names written.
pub fn write_eval_bundle(
    out: &Path,
    traces: &[Trace<Real>],
    files: &[String],
    records: &[RunRecord],
    rate: &RateConfig<Real>,
) -> Result<Vec<String>, CliError> {
    let mut reports = String::from("speed_kmh,gamma_r,avg_rate,max_rate,ho_count,ho_attempts,hof_count,pp_count,rlf_count,hof_prob,pp_prob\n");
    for (_, idx) in group_by_speed(traces) {
        let runs: Vec<_> = idx.iter().map(|&i| (&traces[i], &records[i])).collect();
        let report = pooled_report(&runs, rate)?;
        reports.push_str(&report.csv_row());
        reports.push('\n');
    }

    let mut per_trace = String::from("file,speed_kmh,gamma_r,avg_rate,max_rate,ho_count,ho_attempts,hof_count,pp_count,rlf_count,hof_prob,pp_prob\n");
    for ((trace, record), file) in traces.iter().zip(records).zip(files) {
        let report = pooled_report(&[(trace, record)], rate)?;
        // csv_row leads with the speed; prefix the identifying file column.
        per_trace.push_str(&format!("{file},{}\n", report.csv_row()));
    }

    let runs: Vec<_> = traces.iter().zip(records).map(|(t, r)| (&r.log, t)).collect();
    let (start, end) = sinr_ecdf_at_ho(&runs);

    write_text(&out.join("reports.csv"), &reports)?;
    write_text(&out.join("per_trace.csv"), &per_trace)?;
    write_text(&out.join("ecdf_start.csv"), &start.to_csv())?;
    write_text(&out.join("ecdf_end.csv"), &end.to_csv())?;
    Ok(vec![
        "reports.csv".into(),
        "per_trace.csv".into(),
        "ecdf_start.csv".into(),
        "ecdf_end.csv".into(),
    ])
}

/// Writes `run.json`, the provenance record every command leaves behind.
pub fn write_run_manifest(
    out: &Path,
    command: &str,
    seed: u64,
    input_manifest_sha256: Option<String>,
    config: serde_json::Value,
    mut outputs: Vec<String>,
) -> Result<(), CliError> {
    outputs.sort();
    let manifest = RunManifest {
        command: command.to_string(),
        seed,
        input_manifest_sha256,
        config,
        outputs,
    };
    manifest.write(&out.join("run.json"))?;
    Ok(())
}

// --- tiny CSV helpers (our own writers never quote or escape) --------------

pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| CliError::Incompatible(format!("{}: empty csv", path.display())))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| l.split(',').map(str::to_string).collect())
            .collect();
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str, path: &Path) -> Result<usize, CliError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Incompatible(format!("{}: missing column {name:?}", path.display()))
        })
    }
}

pub fn parse_f64(field: &str, context: &str) -> Result<f64, CliError> {
    field
        .parse::<f64>()
        .map_err(|_| CliError::Incompatible(format!("{context}: not a number: {field:?}")))
}

/// The empirical `P(X <= x)` recovered from an ECDF csv written by
/// [`hosim_core::metrics::Ecdf::to_csv`], plus the sample count.
pub fn ecdf_prob_at(csv: &CsvTable, x: Real, path: &Path) -> Result<(f64, usize), CliError> {
    let xi = csv.column("sinr_db", path)?;
    let pi = csv.column("cum_prob", path)?;
    let mut prob = 0.0;
    for row in &csv.rows {
        let sinr = parse_f64(&row[xi], "ecdf sinr_db")?;
        if Real::from_f64(sinr) <= x {
            prob = parse_f64(&row[pi], "ecdf cum_prob")?;
        }
    }
    Ok((prob, csv.rows.len()))
}

/// `path` relative to its output directory, for `run.json` output lists.
pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
