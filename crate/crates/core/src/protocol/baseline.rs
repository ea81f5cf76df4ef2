//! The standards-style Event A3 controller.
//!
//! Per tick it reads the L3-filtered RSRP of every cell, runs the A3
//! entering condition for each neighbor against the serving cell, and keeps
//! a time-to-trigger accumulator per neighbor. Once a neighbor has
//! satisfied the condition for the full time-to-trigger, the controller
//! requests a handover toward the strongest qualifying neighbor. During
//! preparation it only watches the leaving condition, aborting when the
//! target falls back out.

use super::{a3_entering, a3_leaving, A3Config, ConnectionState, Engine, Phase, TickEvents};
use crate::{Scalar, TICK_MS};

#[derive(Debug, Clone)]
pub struct BaselineController<S: Scalar> {
    a3: A3Config<S>,
    ttt_elapsed_ms: Vec<u64>,
}

impl<S: Scalar> BaselineController<S> {
    pub fn new(a3: A3Config<S>, n_bs: usize) -> Self {
        Self { a3, ttt_elapsed_ms: vec![0; n_bs] }
    }

    pub fn config(&self) -> &A3Config<S> {
        &self.a3
    }

    pub fn reset(&mut self) {
        self.ttt_elapsed_ms.fill(0);
    }

    /// Picks this tick's desired cell from the current connection state and
    /// the per-cell L3 RSRP. Also advances the time-to-trigger bookkeeping,
    /// so call it exactly once per tick.
    pub fn desired(&mut self, state: &ConnectionState, rsrp_l3_dbm: &[S]) -> usize {
        assert_eq!(rsrp_l3_dbm.len(), self.ttt_elapsed_ms.len());
        let serving = state.serving_bs;

        // No measurements drive decisions while detached; accumulated
        // trigger state would refer to a stale serving cell anyway.
        if matches!(state.phase, Phase::Executing { .. } | Phase::Recovering { .. }) {
            self.reset();
            return serving;
        }

        let m_p = rsrp_l3_dbm[serving];
        let mut best: Option<usize> = None;
        for n in 0..rsrp_l3_dbm.len() {
            if n == serving {
                self.ttt_elapsed_ms[n] = 0;
                continue;
            }
            if a3_entering(rsrp_l3_dbm[n], m_p, &self.a3) {
                if self.ttt_elapsed_ms[n] >= self.a3.ttt_ms {
                    // Qualified: strongest neighbor wins, lowest index on ties.
                    if best.is_none_or(|b| rsrp_l3_dbm[n] > rsrp_l3_dbm[b]) {
                        best = Some(n);
                    }
                } else {
                    self.ttt_elapsed_ms[n] += TICK_MS;
                }
            } else {
                self.ttt_elapsed_ms[n] = 0;
            }
        }

        match state.phase {
            Phase::Preparing { target, .. } => {
                if a3_leaving(rsrp_l3_dbm[target], m_p, &self.a3) {
                    serving // abort
                } else {
                    target // hold course; no preemption by other neighbors
                }
            }
            _ => best.unwrap_or(serving),
        }
    }
}

/// One tick of the full 3GPP-style baseline: controller decision plus
/// engine advance.
pub fn baseline_step<S: Scalar>(
    engine: &mut Engine<S>,
    controller: &mut BaselineController<S>,
    rsrp_l3_dbm: &[S],
    sinr_db: &[S],
) -> TickEvents {
    let desired = controller.desired(engine.state(), rsrp_l3_dbm);
    engine.step(desired, sinr_db)
}
