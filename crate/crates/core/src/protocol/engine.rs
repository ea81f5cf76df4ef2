//! The connection-state engine: one instance tracks a single UE's serving
//! cell through handover preparation/execution, radio-link-failure
//! detection, recovery, and ping-pong bookkeeping.
//!
//! The engine is controller-agnostic: each tick it is told which cell the
//! controller currently wants (`desired`) plus the per-cell SINR, and it
//! advances all timers. The A3 baseline and the learned policy differ only
//! in how they produce `desired`.

use serde::{Deserialize, Serialize};

use super::{EventKind, EventLog, HoTiming, RlfConfig};
use crate::scalar::argmax;
use crate::{Scalar, TICK_MS};

/// Connection phase. At most one handover is in flight at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Connected,
    Preparing { target: usize, elapsed_ms: u64 },
    Executing { target: usize, elapsed_ms: u64 },
    Recovering { elapsed_ms: u64 },
}

/// Radio-link-failure timer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum T310 {
    Off,
    Running { elapsed_ms: u64 },
}

/// Everything the protocol remembers about one connection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionState {
    pub serving_bs: usize,
    pub phase: Phase,
    pub t310: T310,
    /// Consecutive out-of-sync indicators, saturating at N310.
    pub oos_count: u32,
    /// Consecutive in-sync indicators, saturating at N311.
    pub is_count: u32,
    /// Tick of the most recent completed handover.
    pub last_ho_complete_t: Option<u64>,
    /// Cell served before the most recent completed handover.
    pub prev_bs: Option<usize>,
}

impl ConnectionState {
    pub fn new(serving_bs: usize) -> Self {
        Self {
            serving_bs,
            phase: Phase::Connected,
            t310: T310::Off,
            oos_count: 0,
            is_count: 0,
            last_ho_complete_t: None,
            prev_bs: None,
        }
    }
}

/// Ping-pong test at a handover completion: the connection has returned to
/// the cell it left in the previous handover, within the minimum time of
/// stay. Call with `serving_bs` already switched to the new cell.
pub fn detect_pp(state: &ConnectionState, tick: u64, timing: &HoTiming) -> bool {
    match (state.prev_bs, state.last_ho_complete_t) {
        (Some(prev), Some(t0)) => {
            state.serving_bs == prev && (tick - t0) * TICK_MS < timing.mts_ms
        }
        _ => false,
    }
}

/// What happened during one engine tick, as flags for reward shaping and
/// termination checks. The full history lands in the [`EventLog`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TickEvents {
    pub prep_start: bool,
    pub abort: bool,
    pub cmd: bool,
    pub complete: bool,
    pub pp: bool,
    pub oos: bool,
    pub rlf: bool,
    pub hof: bool,
    pub recovered: bool,
}

/// Per-tick connection engine over `n_bs` cells.
#[derive(Debug, Clone)]
pub struct Engine<S: Scalar> {
    state: ConnectionState,
    rlf: RlfConfig<S>,
    timing: HoTiming,
    n_bs: usize,
    tick: u64,
    log: EventLog,
}

impl<S: Scalar> Engine<S> {
    pub fn new(n_bs: usize, serving_bs: usize, rlf: RlfConfig<S>, timing: HoTiming) -> Self {
        assert!(serving_bs < n_bs, "serving cell out of range");
        Self {
            state: ConnectionState::new(serving_bs),
            rlf,
            timing,
            n_bs,
            tick: 0,
            log: EventLog::default(),
        }
    }

    pub fn state(&self) -> &ConnectionState {
        &self.state
    }

    pub fn n_bs(&self) -> usize {
        self.n_bs
    }

    /// Tick index the next `step` call will run as.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    pub fn into_log(self) -> EventLog {
        self.log
    }

    /// The cell currently delivering service, if any. During execution and
    /// recovery the UE has no downlink.
    pub fn service(&self) -> Option<usize> {
        match self.state.phase {
            Phase::Connected | Phase::Preparing { .. } => Some(self.state.serving_bs),
            Phase::Executing { .. } | Phase::Recovering { .. } => None,
        }
    }

    fn emit(&mut self, ev: EventKind, serving: usize, target: Option<usize>) {
        let tick = self.tick;
        self.log.push(tick, ev, serving, target);
    }

    fn clear_rlf(&mut self) {
        self.state.t310 = T310::Off;
        self.state.oos_count = 0;
        self.state.is_count = 0;
    }

    /// Advances the connection by one tick.
    ///
    /// `desired` is the cell the controller wants to be connected to this
    /// tick: the serving cell means "stay" (and cancels an in-flight
    /// preparation), the current preparation target means "carry on", and
    /// any other cell aborts whatever is in flight and starts a fresh
    /// preparation. During execution and recovery `desired` is ignored.
    ///
    /// `sinr_db` holds this tick's per-cell SINR; the serving entry feeds
    /// the failure monitor and the whole row picks the re-establishment
    /// cell after recovery.
    pub fn step(&mut self, desired: usize, sinr_db: &[S]) -> TickEvents {
        assert_eq!(sinr_db.len(), self.n_bs, "SINR row length mismatch");
        assert!(desired < self.n_bs, "desired cell out of range");
        let mut ev = TickEvents::default();

        // Recovery runs to completion on its own clock, then reconnects to
        // the momentarily strongest cell.
        if let Phase::Recovering { elapsed_ms } = self.state.phase {
            let elapsed = elapsed_ms + TICK_MS;
            if elapsed >= self.rlf.recovery_ms {
                let best = argmax(sinr_db);
                self.state.serving_bs = best;
                self.state.phase = Phase::Connected;
                self.clear_rlf();
                ev.recovered = true;
                self.emit(EventKind::Recovered, best, None);
            } else {
                self.state.phase = Phase::Recovering { elapsed_ms: elapsed };
            }
            self.tick += 1;
            return ev;
        }

        // Failure monitor. Suspended while executing: the UE is detached
        // from its old cell and not yet synchronized to the target.
        if !matches!(self.state.phase, Phase::Executing { .. }) {
            let serving_sinr = sinr_db[self.state.serving_bs];
            if serving_sinr < self.rlf.q_out_db {
                self.state.oos_count = (self.state.oos_count + 1).min(self.rlf.n310);
                self.state.is_count = 0;
                ev.oos = true;
                let serving = self.state.serving_bs;
                self.emit(EventKind::Oos, serving, None);
            } else if serving_sinr > self.rlf.q_in_db {
                self.state.is_count = (self.state.is_count + 1).min(self.rlf.n311);
                self.state.oos_count = 0;
            } else {
                // Inside the hysteresis band neither run is consecutive.
                self.state.oos_count = 0;
                self.state.is_count = 0;
            }

            match self.state.t310 {
                T310::Off => {
                    if self.state.oos_count >= self.rlf.n310 {
                        self.state.t310 = T310::Running { elapsed_ms: 0 };
                        self.state.oos_count = 0;
                    }
                }
                T310::Running { elapsed_ms } => {
                    if self.state.is_count >= self.rlf.n311 {
                        self.state.t310 = T310::Off;
                        self.state.is_count = 0;
                    } else {
                        let elapsed = elapsed_ms + TICK_MS;
                        if elapsed >= self.rlf.t310_ms {
                            // Timer expiry: a failure during preparation
                            // additionally counts as a handover failure.
                            let serving = self.state.serving_bs;
                            if let Phase::Preparing { target, .. } = self.state.phase {
                                ev.hof = true;
                                self.emit(EventKind::Hof, serving, Some(target));
                            }
                            ev.rlf = true;
                            self.emit(EventKind::Rlf, serving, None);
                            self.state.phase = Phase::Recovering { elapsed_ms: 0 };
                            self.clear_rlf();
                            self.tick += 1;
                            return ev;
                        }
                        self.state.t310 = T310::Running { elapsed_ms: elapsed };
                    }
                }
            }
        }

        // Handover lifecycle.
        match self.state.phase {
            Phase::Executing { target, elapsed_ms } => {
                let elapsed = elapsed_ms + TICK_MS;
                if elapsed >= self.timing.exec_ms {
                    let old = self.state.serving_bs;
                    self.state.serving_bs = target;
                    ev.complete = true;
                    self.emit(EventKind::HoComplete, target, Some(target));
                    if detect_pp(&self.state, self.tick, &self.timing) {
                        ev.pp = true;
                        self.emit(EventKind::PingPong, target, None);
                    }
                    self.state.prev_bs = Some(old);
                    self.state.last_ho_complete_t = Some(self.tick);
                    self.state.phase = Phase::Connected;
                    // Monitoring restarts clean on the new cell.
                    self.clear_rlf();
                } else {
                    self.state.phase = Phase::Executing { target, elapsed_ms: elapsed };
                }
            }
            Phase::Preparing { target, elapsed_ms } => {
                if desired == target {
                    let elapsed = elapsed_ms + TICK_MS;
                    if elapsed >= self.timing.prep_ms {
                        let serving = self.state.serving_bs;
                        ev.cmd = true;
                        self.emit(EventKind::HoCmd, serving, Some(target));
                        if matches!(self.state.t310, T310::Running { .. }) {
                            // Command while the failure timer runs: the
                            // handover fails and the link drops.
                            ev.hof = true;
                            ev.rlf = true;
                            self.emit(EventKind::Hof, serving, Some(target));
                            self.emit(EventKind::Rlf, serving, None);
                            self.state.phase = Phase::Recovering { elapsed_ms: 0 };
                            self.clear_rlf();
                        } else {
                            self.state.phase = Phase::Executing { target, elapsed_ms: 0 };
                        }
                    } else {
                        self.state.phase = Phase::Preparing { target, elapsed_ms: elapsed };
                    }
                } else {
                    let serving = self.state.serving_bs;
                    ev.abort = true;
                    self.emit(EventKind::HoAbort, serving, Some(target));
                    if desired == serving {
                        self.state.phase = Phase::Connected;
                    } else {
                        ev.prep_start = true;
                        self.emit(EventKind::HoPrepStart, serving, Some(desired));
                        self.state.phase = Phase::Preparing { target: desired, elapsed_ms: 0 };
                    }
                }
            }
            Phase::Connected => {
                if desired != self.state.serving_bs {
                    let serving = self.state.serving_bs;
                    ev.prep_start = true;
                    self.emit(EventKind::HoPrepStart, serving, Some(desired));
                    self.state.phase = Phase::Preparing { target: desired, elapsed_ms: 0 };
                }
            }
            Phase::Recovering { .. } => unreachable!("recovery handled above"),
        }

        self.tick += 1;
        ev
    }
}
