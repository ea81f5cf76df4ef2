//! Whole-trace evaluation drivers.
//!
//! These run a controller over a complete trace — no episode boundaries, no
//! termination on failures — and return the serving timeline plus the event
//! log, which is everything the metrics need. Three controllers are covered:
//! the Event A3 baseline, a greedy agent, and the clairvoyant
//! strongest-cell oracle that upper-bounds the achievable rate.

use rayon::prelude::*;

use crate::channel::{l3_filter_matrix, FilterConfig, Trace};
use crate::metrics::{
    average_rate, max_rate, probabilities_from_counts, EvalReport, EventCounts,
    MetricsError, RateConfig, ServingTimeline,
};
use crate::ppo::{Agent, PpoError};
use crate::protocol::{
    baseline_step, BaselineController, Engine, EventLog, Phase, ProtocolConfig,
};
use crate::scalar::argmax;
use crate::{env::EnvConfig, Scalar, TICK_MS};

/// One controller's pass over one trace.
#[derive(Debug, Clone)]
pub struct RunRecord {
    /// Serving cell per tick, after that tick's protocol processing; `None`
    /// while the radio is detached (handover execution, failure recovery).
    pub timeline: ServingTimeline,
    pub log: EventLog,
}

fn initial_serving<S: Scalar>(trace: &Trace<S>) -> usize {
    argmax(&trace.sinr_db.row(0).to_vec())
}

/// Runs the Event A3 baseline over a full trace. The controller reads
/// L3-filtered RSRP; the failure monitor reads the trace's SINR as stored.
pub fn run_baseline<S: Scalar>(
    trace: &Trace<S>,
    protocol: &ProtocolConfig<S>,
    filter: &FilterConfig,
) -> RunRecord {
    let n_bs = trace.n_bs();
    let rsrp_l3 = l3_filter_matrix(&trace.rsrp_dbm, filter);
    let mut engine = Engine::new(n_bs, initial_serving(trace), protocol.rlf, protocol.timing);
    let mut controller = BaselineController::new(protocol.a3, n_bs);
    let mut timeline = Vec::with_capacity(trace.n_ticks());
    for t in 0..trace.n_ticks() {
        let rsrp_row = rsrp_l3.row(t).to_vec();
        let sinr_row = trace.sinr_db.row(t).to_vec();
        baseline_step(&mut engine, &mut controller, &rsrp_row, &sinr_row);
        timeline.push(engine.service());
    }
    RunRecord { timeline, log: engine.into_log() }
}

/// Runs a greedy agent over a full trace, mirroring the training-time state
/// encoding but with no cell shuffling and no episode termination: failures
/// play out through recovery and the walk continues to the end.
pub fn run_agent<S: Scalar>(
    trace: &Trace<S>,
    agent: &Agent<S>,
    protocol: &ProtocolConfig<S>,
    env_cfg: &EnvConfig<S>,
) -> Result<RunRecord, PpoError> {
    let n_bs = trace.n_bs();
    let want_obs = 2 * n_bs + 1;
    if agent.obs_dim != want_obs || agent.n_actions != n_bs {
        return Err(PpoError::ShapeMismatch(format!(
            "agent built for {} observations / {} actions cannot run on {n_bs}-cell traces \
             ({want_obs} observations)",
            agent.obs_dim,
            agent.n_actions,
        )));
    }
    let mut engine = Engine::new(n_bs, initial_serving(trace), protocol.rlf, protocol.timing);
    let mut timeline = Vec::with_capacity(trace.n_ticks());
    for t in 0..trace.n_ticks() {
        let sinr_row = trace.sinr_db.row(t).to_vec();
        let serving = engine.state().serving_bs;
        let desired = if matches!(
            engine.state().phase,
            Phase::Executing { .. } | Phase::Recovering { .. }
        ) {
            serving
        } else {
            let pp_active = engine
                .state()
                .last_ho_complete_t
                .is_some_and(|t0| (t as u64 - t0) * TICK_MS < protocol.timing.mts_ms);
            let state = crate::env::encode_state(&sinr_row, serving, pp_active, env_cfg);
            agent.act_greedy(&state.to_vec())
        };
        engine.step(desired, &sinr_row);
        timeline.push(engine.service());
    }
    Ok(RunRecord { timeline, log: engine.into_log() })
}

/// The idealized reference policy: always served by the momentarily
/// strongest cell, with no handover machinery in the way. Its timeline
/// realizes the per-tick maximum rate by construction.
pub fn oracle_timeline<S: Scalar>(trace: &Trace<S>) -> ServingTimeline {
    (0..trace.n_ticks())
        .map(|t| Some(argmax(&trace.sinr_db.row(t).to_vec())))
        .collect()
}

/// Scores one run: pooled rate ratio plus the event statistics.
pub fn report_for_run<S: Scalar>(
    trace: &Trace<S>,
    run: &RunRecord,
    rate: &RateConfig<S>,
) -> Result<EvalReport<S>, MetricsError> {
    pooled_report(&[(trace, run)], rate)
}

/// Pools several runs into one report: rates are tick-weighted across the
/// whole set (so Γ_R is total achieved over total achievable), event counts
/// are summed before the probabilities are formed.
pub fn pooled_report<S: Scalar>(
    runs: &[(&Trace<S>, &RunRecord)],
    rate: &RateConfig<S>,
) -> Result<EvalReport<S>, MetricsError> {
    assert!(!runs.is_empty(), "cannot pool zero runs");
    let mut achieved = S::zero();
    let mut achievable = S::zero();
    let mut ticks = S::zero();
    let mut counts = EventCounts::default();
    let mut seeds = Vec::with_capacity(runs.len());
    for (trace, run) in runs {
        let t = S::from_usize(trace.n_ticks());
        achieved += average_rate(trace, &run.timeline, rate)? * t;
        achievable += max_rate(trace, rate) * t;
        ticks += t;
        counts.merge(&EventCounts::from_log(&run.log));
        seeds.push(trace.seed);
    }
    let avg = achieved / ticks;
    let max = achievable / ticks;
    let gamma_r = crate::metrics::gamma_r(avg, max)?;
    let (hof_prob, pp_prob) = probabilities_from_counts(&counts);
    Ok(EvalReport {
        speed_kmh: runs[0].0.meta.speed_kmh,
        seeds,
        gamma_r,
        avg_rate: avg,
        max_rate: max,
        ho_count: counts.completes,
        ho_attempts: counts.attempts(),
        hof_count: counts.hofs,
        pp_count: counts.pps,
        rlf_count: counts.rlfs,
        hof_prob,
        pp_prob,
    })
}

/// Runs the baseline over every trace in parallel, preserving trace order.
pub fn run_baseline_set<S: Scalar>(
    traces: &[Trace<S>],
    protocol: &ProtocolConfig<S>,
    filter: &FilterConfig,
) -> Vec<RunRecord> {
    traces
        .par_iter()
        .map(|t| run_baseline(t, protocol, filter))
        .collect()
}

/// Runs the greedy agent over every trace in parallel, preserving order.
pub fn run_agent_set<S: Scalar>(
    traces: &[Trace<S>],
    agent: &Agent<S>,
    protocol: &ProtocolConfig<S>,
    env_cfg: &EnvConfig<S>,
) -> Result<Vec<RunRecord>, PpoError> {
    traces
        .par_iter()
        .map(|t| run_agent(t, agent, protocol, env_cfg))
        .collect()
}

/// One grid point of the baseline tuning sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint<S: Scalar> {
    pub off_db: S,
    pub ttt_ms: u64,
    /// Mean of the per-trace rate ratios, the sweep's selection criterion.
    pub mean_gamma: S,
    pub report: EvalReport<S>,
}

/// Evaluates every (offset, time-to-trigger) combination over the trace set.
/// Points come back in grid order: offsets outer, triggers inner.
pub fn sweep_baseline<S: Scalar>(
    traces: &[Trace<S>],
    protocol: &ProtocolConfig<S>,
    filter: &FilterConfig,
    offs_db: &[S],
    ttts_ms: &[u64],
    rate: &RateConfig<S>,
) -> Result<Vec<SweepPoint<S>>, MetricsError> {
    let mut points = Vec::with_capacity(offs_db.len() * ttts_ms.len());
    for &off_db in offs_db {
        for &ttt_ms in ttts_ms {
            let mut combo = *protocol;
            combo.a3.off_db = off_db;
            combo.a3.ttt_ms = ttt_ms;
            let runs = run_baseline_set(traces, &combo, filter);
            let mut gamma_sum = S::zero();
            for (trace, run) in traces.iter().zip(&runs) {
                gamma_sum += report_for_run(trace, run, rate)?.gamma_r;
            }
            let paired: Vec<_> = traces.iter().zip(&runs).collect();
            points.push(SweepPoint {
                off_db,
                ttt_ms,
                mean_gamma: gamma_sum / S::from_usize(traces.len()),
                report: pooled_report(&paired, rate)?,
            });
        }
    }
    Ok(points)
}

/// The sweep winner: highest mean rate ratio, earliest grid point on ties.
pub fn best_sweep_index<S: Scalar>(points: &[SweepPoint<S>]) -> usize {
    assert!(!points.is_empty(), "sweep produced no points");
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        if p.mean_gamma > points[best].mean_gamma {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{RadioConfig, TraceMeta};
    use crate::metrics::gamma_r;
    use crate::protocol::EventKind;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace_from_sinr(sinr: Array2<f64>, speed_kmh: f64, seed: u64) -> Trace<f64> {
        let n_ticks = sinr.nrows();
        Trace {
            ue_id: 0,
            tick_s: crate::TICK_S,
            rsrp_dbm: sinr.clone(),
            sinr_db: sinr,
            seed,
            meta: TraceMeta {
                n_bs: 2,
                speed_kmh,
                duration_s: n_ticks as f64 * crate::TICK_S,
                radio: RadioConfig::default(),
                l1_window: None,
            },
        }
    }

    /// Cell 0 fades, cell 1 rises, crossing at the midpoint.
    fn crossing(n_ticks: usize) -> Trace<f64> {
        let rows: Vec<f64> = (0..n_ticks)
            .flat_map(|t| {
                let x = t as f64 / n_ticks as f64;
                vec![9.0 - 14.0 * x, -5.0 + 14.0 * x]
            })
            .collect();
        trace_from_sinr(Array2::from_shape_vec((n_ticks, 2), rows).unwrap(), 30.0, 7)
    }

    fn fresh_agent(n_bs: usize) -> Agent<f64> {
        Agent::init(2 * n_bs + 1, n_bs, &[8, 8], &mut ChaCha8Rng::seed_from_u64(5))
    }


    #[test]
    fn baseline_timeline_has_exactly_one_detach_per_completion() {
        let trace = crossing(400);
        let run = run_baseline(&trace, &ProtocolConfig::default(), &FilterConfig::default());
        assert_eq!(run.timeline.len(), 400);
        assert_eq!(run.timeline[0], Some(0), "starts on the strongest cell");
        let completes = run.log.count(EventKind::HoComplete);
        assert_eq!(completes, 1, "one crossing, one handover");
        let detached = run.timeline.iter().filter(|s| s.is_none()).count();
        // 40 ms execution at 10 ms ticks.
        assert_eq!(detached, 4);
        assert_eq!(*run.timeline.last().unwrap(), Some(1));
    }

    #[test]
    fn agent_runner_rejects_mismatched_shapes() {
        let trace = crossing(50);
        let agent = fresh_agent(3);
        let err = run_agent(
            &trace,
            &agent,
            &ProtocolConfig::default(),
            &EnvConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PpoError::ShapeMismatch(_)));
    }

    #[test]
    fn agent_runner_is_deterministic_and_full_length() {
        let trace = crossing(300);
        let agent = fresh_agent(2);
        let protocol = ProtocolConfig::default();
        let cfg = EnvConfig::default();
        let a = run_agent(&trace, &agent, &protocol, &cfg).unwrap();
        let b = run_agent(&trace, &agent, &protocol, &cfg).unwrap();
        assert_eq!(a.timeline, b.timeline);
        assert_eq!(a.log.records, b.log.records);
        assert_eq!(a.timeline.len(), 300);
        assert!(a.timeline.iter().flatten().all(|&s| s < 2));
    }

    #[test]
    fn agent_runner_survives_a_radio_link_failure() {
        // Both cells sit far below Q_out for the whole walk. With a policy
        // that holds the serving cell, the failure timer must expire and the
        // run must keep going through recovery, over and over, to the end.
        let n = 1600;
        let rows: Vec<f64> = (0..n).flat_map(|_| vec![-30.0, -31.0]).collect();
        let trace = trace_from_sinr(Array2::from_shape_vec((n, 2), rows).unwrap(), 30.0, 3);
        let agent = Agent::init(5, 2, &[8, 8], &mut ChaCha8Rng::seed_from_u64(1));
        // This seed's untrained policy happens to keep cell 0 in both
        // ping-pong flag states; the scenario depends on it, so pin it down.
        assert_eq!(agent.act_greedy(&[1.0, 0.0, 0.0, 0.0, 0.0]), 0);
        assert_eq!(agent.act_greedy(&[1.0, 0.0, 0.0, 0.0, 1.0]), 0);
        let run =
            run_agent(&trace, &agent, &ProtocolConfig::default(), &EnvConfig::default()).unwrap();
        assert_eq!(run.timeline.len(), n);
        assert!(run.log.count(EventKind::Rlf) >= 2, "collapse must fail the link repeatedly");
        assert!(run.log.count(EventKind::Recovered) >= 1, "and recovery must finish");
        assert_eq!(run.log.count(EventKind::HoCmd), 0, "the policy never moved");
        // Every failure detaches for exactly the 200 ms re-establishment.
        let detached = run.timeline.iter().filter(|s| s.is_none()).count();
        assert_eq!(detached, run.log.count(EventKind::Rlf) * 20);
    }

    #[test]
    fn oracle_achieves_the_rate_ceiling() {
        let trace = crossing(250);
        let rate = RateConfig::default();
        let timeline = oracle_timeline(&trace);
        let avg = average_rate(&trace, &timeline, &rate).unwrap();
        let max = max_rate(&trace, &rate);
        assert_eq!(gamma_r(avg, max).unwrap(), 1.0);
    }

    #[test]
    fn pooling_matches_hand_aggregation() {
        let t1 = crossing(200);
        let t2 = crossing(300);
        let protocol = ProtocolConfig::default();
        let filter = FilterConfig::default();
        let rate = RateConfig::default();
        let r1 = run_baseline(&t1, &protocol, &filter);
        let r2 = run_baseline(&t2, &protocol, &filter);
        let pooled = pooled_report(&[(&t1, &r1), (&t2, &r2)], &rate).unwrap();

        let a1 = average_rate(&t1, &r1.timeline, &rate).unwrap();
        let a2 = average_rate(&t2, &r2.timeline, &rate).unwrap();
        let m1 = max_rate(&t1, &rate);
        let m2 = max_rate(&t2, &rate);
        let want_avg = (a1 * 200.0 + a2 * 300.0) / 500.0;
        let want_max = (m1 * 200.0 + m2 * 300.0) / 500.0;
        assert!((pooled.avg_rate - want_avg).abs() < 1e-9);
        assert!((pooled.max_rate - want_max).abs() < 1e-9);
        assert!((pooled.gamma_r - want_avg / want_max).abs() < 1e-12);
        assert_eq!(pooled.seeds, vec![7, 7]);
        let solo = report_for_run(&t1, &r1, &rate).unwrap();
        assert_eq!(solo.ho_count, 1);
    }

    #[test]
    fn sweep_covers_the_grid_in_order_and_picks_the_best() {
        let traces = vec![crossing(300), crossing(280)];
        let points = sweep_baseline(
            &traces,
            &ProtocolConfig::default(),
            &FilterConfig::default(),
            &[0.0, 1.0, 2.0],
            &[40, 80, 160],
            &RateConfig::default(),
        )
        .unwrap();
        assert_eq!(points.len(), 9);
        assert_eq!((points[0].off_db, points[0].ttt_ms), (0.0, 40));
        assert_eq!((points[1].off_db, points[1].ttt_ms), (0.0, 80));
        assert_eq!((points[8].off_db, points[8].ttt_ms), (2.0, 160));
        let best = best_sweep_index(&points);
        for p in &points {
            assert!(points[best].mean_gamma >= p.mean_gamma);
        }
        // On this clean crossing the quickest trigger reacts earliest and
        // wastes the fewest ticks on the fading cell.
        assert_eq!(points[best].ttt_ms, 40);
    }
}
