//! Handover protocol machinery shared by the baseline and the learned
//! policy: Event A3 conditions, the connection-state engine (preparation,
//! execution, radio link failure, ping-pong detection), and the
//! standards-style baseline controller.

mod a3;
mod baseline;
mod engine;
mod events;

pub use a3::{a3_entering, a3_leaving};
pub use baseline::{baseline_step, BaselineController};
pub use engine::{detect_pp, ConnectionState, Engine, Phase, TickEvents, T310};
pub use events::{EventKind, EventLog, EventRecord};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Event A3 trigger parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct A3Config<S: Scalar> {
    /// Hysteresis, in dB.
    pub hys_db: S,
    /// Global A3 offset, in dB.
    pub off_db: S,
    /// Neighbor measurement offset, in dB.
    pub off_n_db: S,
    /// Neighbor cell-individual offset, in dB.
    pub off_cn_db: S,
    /// Serving measurement offset, in dB.
    pub off_p_db: S,
    /// Serving cell-individual offset, in dB.
    pub off_cp_db: S,
    /// Time-to-trigger, in ms.
    pub ttt_ms: u64,
}

impl<S: Scalar> Default for A3Config<S> {
    fn default() -> Self {
        Self {
            hys_db: S::from_f64(1.0),
            off_db: S::from_f64(1.0),
            off_n_db: S::zero(),
            off_cn_db: S::zero(),
            off_p_db: S::zero(),
            off_cp_db: S::zero(),
            ttt_ms: 80,
        }
    }
}

impl<S: Scalar> A3Config<S> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.hys_db >= S::zero()) {
            return Err(format!("hysteresis must be nonnegative, got {}", self.hys_db));
        }
        if self.ttt_ms == 0 || self.ttt_ms % crate::TICK_MS != 0 {
            return Err(format!(
                "time-to-trigger must be a positive multiple of {} ms, got {}",
                crate::TICK_MS,
                self.ttt_ms
            ));
        }
        let offsets = [
            self.off_db,
            self.off_n_db,
            self.off_cn_db,
            self.off_p_db,
            self.off_cp_db,
        ];
        if offsets.iter().any(|o| !o.is_finite()) {
            return Err("all offsets must be finite".into());
        }
        Ok(())
    }
}

/// Radio-link-failure detection parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct RlfConfig<S: Scalar> {
    /// In-sync SINR threshold, in dB.
    pub q_in_db: S,
    /// Out-of-sync SINR threshold, in dB.
    pub q_out_db: S,
    /// Failure timer duration, in ms.
    pub t310_ms: u64,
    /// Consecutive out-of-sync indicators needed to start the timer.
    pub n310: u32,
    /// Consecutive in-sync indicators needed to stop it.
    pub n311: u32,
    /// Cell re-establishment time after a declared failure, in ms.
    pub recovery_ms: u64,
}

impl<S: Scalar> Default for RlfConfig<S> {
    fn default() -> Self {
        Self {
            q_in_db: S::from_f64(-6.0),
            q_out_db: S::from_f64(-8.0),
            t310_ms: 1000,
            n310: 10,
            n311: 3,
            recovery_ms: 200,
        }
    }
}

impl<S: Scalar> RlfConfig<S> {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.q_out_db < self.q_in_db) {
            return Err(format!(
                "q_out ({}) must lie below q_in ({})",
                self.q_out_db, self.q_in_db
            ));
        }
        for (name, v) in [
            ("t310_ms", self.t310_ms),
            ("recovery_ms", self.recovery_ms),
        ] {
            if v == 0 || v % crate::TICK_MS != 0 {
                return Err(format!(
                    "{name} must be a positive multiple of {} ms, got {v}",
                    crate::TICK_MS
                ));
            }
        }
        if self.n310 == 0 || self.n311 == 0 {
            return Err("n310 and n311 must be positive".into());
        }
        Ok(())
    }
}

/// Handover phase durations and the ping-pong window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoTiming {
    /// Preparation time, in ms.
    pub prep_ms: u64,
    /// Execution time, in ms.
    pub exec_ms: u64,
    /// Minimum time of stay defining a ping-pong, in ms.
    pub mts_ms: u64,
}

impl Default for HoTiming {
    fn default() -> Self {
        Self { prep_ms: 50, exec_ms: 40, mts_ms: 1000 }
    }
}

impl HoTiming {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("prep_ms", self.prep_ms),
            ("exec_ms", self.exec_ms),
            ("mts_ms", self.mts_ms),
        ] {
            if v == 0 || v % crate::TICK_MS != 0 {
                return Err(format!(
                    "{name} must be a positive multiple of {} ms, got {v}",
                    crate::TICK_MS
                ));
            }
        }
        Ok(())
    }
}

/// All protocol parameters as one config-file section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct ProtocolConfig<S: Scalar> {
    pub a3: A3Config<S>,
    pub rlf: RlfConfig<S>,
    pub timing: HoTiming,
}

impl<S: Scalar> ProtocolConfig<S> {
    pub fn validate(&self) -> Result<(), String> {
        self.a3.validate()?;
        self.rlf.validate()?;
        self.timing.validate()
    }
}
