//! Ordered event records describing one connection's history.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Kinds of protocol events, in the vocabulary used by the event CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    HoPrepStart,
    HoAbort,
    HoCmd,
    HoComplete,
    PingPong,
    Oos,
    Rlf,
    Hof,
    Recovered,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::HoPrepStart => "HO_PREP_START",
            EventKind::HoAbort => "HO_ABORT",
            EventKind::HoCmd => "HO_CMD",
            EventKind::HoComplete => "HO_COMPLETE",
            EventKind::PingPong => "PP",
            EventKind::Oos => "OOS",
            EventKind::Rlf => "RLF",
            EventKind::Hof => "HOF",
            EventKind::Recovered => "RECOVERED",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One event: what happened, when, and between which cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub tick: u64,
    pub kind: EventKind,
    /// Serving cell at the moment of the event (the new cell for
    /// completion, ping-pong, and recovery records).
    pub serving: usize,
    /// Other cell involved, where one exists (preparation target, handover
    /// destination, and so on).
    pub target: Option<usize>,
}

/// Append-only log of everything a connection did.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, tick: u64, kind: EventKind, serving: usize, target: Option<usize>) {
        self.records.push(EventRecord { tick, kind, serving, target });
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn iter_kind(&self, kind: EventKind) -> impl Iterator<Item = &EventRecord> {
        self.records.iter().filter(move |r| r.kind == kind)
    }

    pub fn extend(&mut self, other: &EventLog) {
        self.records.extend_from_slice(&other.records);
    }

    /// Renders the log as CSV with columns `tick,kind,serving,target`. The
    /// target column is empty for events without a second cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tick,kind,serving,target\n");
        for r in &self.records {
            out.push_str(&r.tick.to_string());
            out.push(',');
            out.push_str(r.kind.as_str());
            out.push(',');
            out.push_str(&r.serving.to_string());
            out.push(',');
            if let Some(t) = r.target {
                out.push_str(&t.to_string());
            }
            out.push('\n');
        }
        out
    }
}
