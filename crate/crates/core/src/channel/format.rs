//! Trace file format: a one-line JSON header followed by a CSV body.
//!
//! The body carries one row per tick with columns
//! `t_s,ue_id,rsrp_dbm_0..N-1,sinr_db_0..N-1`. Floats are written in the
//! shortest form that parses back to the identical bit pattern, so a
//! write/read round trip reproduces the trace exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Trace, TraceMeta};
use crate::Scalar;

/// Format tag expected in the header line.
pub const TRACE_FORMAT: &str = "hosim-trace";

/// Highest header version this reader understands.
pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace header: {0}")]
    MalformedHeader(String),
    #[error("unsupported trace format version {0} (reader supports up to {TRACE_FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("trace dtype is {found} but {expected} was requested")]
    DtypeMismatch { expected: &'static str, found: String },
    #[error("trace shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed trace body at line {line}: {reason}")]
    MalformedBody { line: usize, reason: String },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct Header<S: Scalar> {
    format: String,
    version: u32,
    dtype: String,
    ue_id: u32,
    n_bs: usize,
    n_ticks: usize,
    tick_s: f64,
    seed: u64,
    meta: TraceMeta<S>,
}

fn column_line(n_bs: usize) -> String {
    let mut s = String::from("t_s,ue_id");
    for i in 0..n_bs {
        let _ = write!(s, ",rsrp_dbm_{i}");
    }
    for i in 0..n_bs {
        let _ = write!(s, ",sinr_db_{i}");
    }
    s
}

/// Serializes a trace to `path`.
pub fn write_trace<S: Scalar>(trace: &Trace<S>, path: &Path) -> Result<(), TraceError> {
    fs::write(path, trace_to_string(trace))?;
    Ok(())
}

/// Renders a trace in the file format; exposed so callers can hash trace
/// content without touching the filesystem.
pub fn trace_to_string<S: Scalar>(trace: &Trace<S>) -> String {
    let header = Header {
        format: TRACE_FORMAT.to_string(),
        version: TRACE_FORMAT_VERSION,
        dtype: S::DTYPE.to_string(),
        ue_id: trace.ue_id,
        n_bs: trace.n_bs(),
        n_ticks: trace.n_ticks(),
        tick_s: trace.tick_s,
        seed: trace.seed,
        meta: trace.meta.clone(),
    };
    let mut out = serde_json::to_string(&header).expect("trace header serializes");
    out.push('\n');
    out.push_str(&column_line(trace.n_bs()));
    out.push('\n');
    for t in 0..trace.n_ticks() {
        let _ = write!(out, "{},{}", t as f64 * trace.tick_s, trace.ue_id);
        for i in 0..trace.n_bs() {
            let _ = write!(out, ",{}", trace.rsrp_dbm[[t, i]]);
        }
        for i in 0..trace.n_bs() {
            let _ = write!(out, ",{}", trace.sinr_db[[t, i]]);
        }
        out.push('\n');
    }
    out
}

/// Reads a trace back from `path`, verifying format tag, version, dtype,
/// and the advertised shape.
pub fn read_trace<S: Scalar>(path: &Path) -> Result<Trace<S>, TraceError> {
    trace_from_str(&fs::read_to_string(path)?)
}

/// Parses a trace from its file-format text.
pub fn trace_from_str<S: Scalar>(text: &str) -> Result<Trace<S>, TraceError> {
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| TraceError::MalformedHeader("missing header line".into()))?;

    // Check the format tag and version before insisting on the full header
    // schema, so a newer writer's file fails with the version error rather
    // than a confusing field error.
    let probe: serde_json::Value = serde_json::from_str(header_line)
        .map_err(|e| TraceError::MalformedHeader(e.to_string()))?;
    match probe.get("format").and_then(|v| v.as_str()) {
        Some(TRACE_FORMAT) => {}
        Some(other) => {
            return Err(TraceError::MalformedHeader(format!(
                "format tag is {other:?}, expected {TRACE_FORMAT:?}"
            )))
        }
        None => {
            return Err(TraceError::MalformedHeader(
                "missing or non-string format tag".into(),
            ))
        }
    }
    let version = probe
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| TraceError::MalformedHeader("missing or non-integer version".into()))?;
    if version != u64::from(TRACE_FORMAT_VERSION) {
        return Err(TraceError::UnsupportedVersion(version));
    }

    let header: Header<S> = serde_json::from_value(probe)
        .map_err(|e| TraceError::MalformedHeader(e.to_string()))?;
    if header.dtype != S::DTYPE {
        return Err(TraceError::DtypeMismatch {
            expected: S::DTYPE,
            found: header.dtype,
        });
    }

    match lines.next() {
        Some(cols) if cols == column_line(header.n_bs) => {}
        Some(cols) => {
            return Err(TraceError::MalformedHeader(format!(
                "unexpected column line {cols:?}"
            )))
        }
        None => return Err(TraceError::ShapeMismatch("body is missing".into())),
    }

    let n_bs = header.n_bs;
    let mut rsrp = Vec::with_capacity(header.n_ticks * n_bs);
    let mut sinr = Vec::with_capacity(header.n_ticks * n_bs);
    let mut rows = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 3;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + 2 * n_bs {
            return Err(TraceError::ShapeMismatch(format!(
                "line {line_no} has {} fields, expected {}",
                fields.len(),
                2 + 2 * n_bs
            )));
        }
        fields[0].parse::<f64>().map_err(|_| TraceError::MalformedBody {
            line: line_no,
            reason: format!("bad timestamp {:?}", fields[0]),
        })?;
        let ue: u32 = fields[1].parse().map_err(|_| TraceError::MalformedBody {
            line: line_no,
            reason: format!("bad ue_id {:?}", fields[1]),
        })?;
        if ue != header.ue_id {
            return Err(TraceError::MalformedBody {
                line: line_no,
                reason: format!("row ue_id {ue} does not match header {}", header.ue_id),
            });
        }
        for (k, field) in fields[2..].iter().enumerate() {
            let v = S::parse(field).ok_or_else(|| TraceError::MalformedBody {
                line: line_no,
                reason: format!("bad sample {field:?}"),
            })?;
            if k < n_bs {
                rsrp.push(v);
            } else {
                sinr.push(v);
            }
        }
        rows += 1;
    }
    if rows != header.n_ticks {
        return Err(TraceError::ShapeMismatch(format!(
            "body has {rows} rows, header advertises {}",
            header.n_ticks
        )));
    }

    let shape = (header.n_ticks, n_bs);
    Ok(Trace {
        ue_id: header.ue_id,
        tick_s: header.tick_s,
        rsrp_dbm: Array2::from_shape_vec(shape, rsrp).expect("row count checked"),
        sinr_db: Array2::from_shape_vec(shape, sinr).expect("row count checked"),
        seed: header.seed,
        meta: header.meta,
    })
}
