//! Evaluation quantities: Shannon-rate averages, the relative rate, failure
//! and ping-pong probabilities, and SINR distributions around handovers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::Trace;
use crate::protocol::{EventKind, EventLog};
use crate::scalar::db_to_linear;
use crate::Scalar;

/// Bandwidth and sampling parameters for rate computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct RateConfig<S: Scalar> {
    /// Channel bandwidth in Hz. The relative rate is invariant to it.
    pub bandwidth_hz: S,
    /// Sample interval in seconds.
    pub tick_s: f64,
}

impl<S: Scalar> Default for RateConfig<S> {
    fn default() -> Self {
        Self { bandwidth_hz: S::from_f64(10.0e6), tick_s: crate::TICK_S }
    }
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("serving timeline has {found} ticks, trace has {expected}")]
    TimelineMismatch { expected: usize, found: usize },
    #[error("idealized maximum rate is zero; relative rate undefined")]
    ZeroMaxRate,
}

/// Which cell served the UE at each tick; `None` marks ticks without
/// service (handover execution, failure recovery).
pub type ServingTimeline = Vec<Option<usize>>;

fn shannon_rate<S: Scalar>(sinr_db: S, bandwidth_hz: S) -> S {
    bandwidth_hz * (S::one() + db_to_linear(sinr_db)).log2()
}

/// Time-averaged achieved rate over a trace, given who served each tick.
/// Ticks without service contribute zero.
pub fn average_rate<S: Scalar>(
    trace: &Trace<S>,
    timeline: &[Option<usize>],
    cfg: &RateConfig<S>,
) -> Result<S, MetricsError> {
    if timeline.len() != trace.n_ticks() {
        return Err(MetricsError::TimelineMismatch {
            expected: trace.n_ticks(),
            found: timeline.len(),
        });
    }
    let mut sum = S::zero();
    for (t, serving) in timeline.iter().enumerate() {
        if let Some(b) = serving {
            sum += shannon_rate(trace.sinr_db[[t, *b]], cfg.bandwidth_hz);
        }
    }
    Ok(sum / S::from_usize(timeline.len().max(1)))
}

/// Idealized rate: every tick served by the momentarily best cell with no
/// handover cost.
pub fn max_rate<S: Scalar>(trace: &Trace<S>, cfg: &RateConfig<S>) -> S {
    let t_len = trace.n_ticks();
    let mut sum = S::zero();
    for t in 0..t_len {
        let mut best = S::neg_infinity();
        for b in 0..trace.n_bs() {
            let r = shannon_rate(trace.sinr_db[[t, b]], cfg.bandwidth_hz);
            if r > best {
                best = r;
            }
        }
        sum += best;
    }
    sum / S::from_usize(t_len.max(1))
}

/// Relative average rate `avg / max`.
pub fn gamma_r<S: Scalar>(avg_rate: S, max_rate: S) -> Result<S, MetricsError> {
    if !(max_rate > S::zero()) {
        return Err(MetricsError::ZeroMaxRate);
    }
    Ok(avg_rate / max_rate)
}

/// Event totals pooled over any number of runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub prep_starts: usize,
    pub aborts: usize,
    pub cmds: usize,
    pub completes: usize,
    pub pps: usize,
    pub rlfs: usize,
    pub hofs: usize,
    /// Failures declared during preparation, before any command was sent.
    pub hofs_before_cmd: usize,
    pub recovered: usize,
}

impl EventCounts {
    pub fn from_log(log: &EventLog) -> Self {
        let mut c = Self::default();
        for r in &log.records {
            match r.kind {
                EventKind::HoPrepStart => c.prep_starts += 1,
                EventKind::HoAbort => c.aborts += 1,
                EventKind::HoCmd => c.cmds += 1,
                EventKind::HoComplete => c.completes += 1,
                EventKind::PingPong => c.pps += 1,
                EventKind::Rlf => c.rlfs += 1,
                EventKind::Hof => {
                    c.hofs += 1;
                    // A failure at command time shares its tick with the
                    // command record; a preparation-phase failure does not.
                    let coincident = log
                        .records
                        .iter()
                        .any(|o| o.kind == EventKind::HoCmd && o.tick == r.tick);
                    if !coincident {
                        c.hofs_before_cmd += 1;
                    }
                }
                EventKind::Recovered => c.recovered += 1,
                EventKind::Oos => {}
            }
        }
        c
    }

    pub fn merge(&mut self, other: &Self) {
        self.prep_starts += other.prep_starts;
        self.aborts += other.aborts;
        self.cmds += other.cmds;
        self.completes += other.completes;
        self.pps += other.pps;
        self.rlfs += other.rlfs;
        self.hofs += other.hofs;
        self.hofs_before_cmd += other.hofs_before_cmd;
        self.recovered += other.recovered;
    }

    /// Attempted handovers: every command, plus preparations that failed
    /// before one could be sent.
    pub fn attempts(&self) -> usize {
        self.cmds + self.hofs_before_cmd
    }
}

/// Pooled failure and ping-pong probabilities. Denominator-less cases come
/// back as `None` rather than fake zeros.
pub fn event_probabilities<S: Scalar>(logs: &[EventLog]) -> (Option<S>, Option<S>) {
    let mut counts = EventCounts::default();
    for log in logs {
        counts.merge(&EventCounts::from_log(log));
    }
    probabilities_from_counts(&counts)
}

pub fn probabilities_from_counts<S: Scalar>(counts: &EventCounts) -> (Option<S>, Option<S>) {
    let hof = if counts.attempts() > 0 {
        Some(S::from_usize(counts.hofs) / S::from_usize(counts.attempts()))
    } else {
        None
    };
    let pp = if counts.completes > 0 {
        Some(S::from_usize(counts.pps) / S::from_usize(counts.completes))
    } else {
        None
    };
    (hof, pp)
}

/// Empirical CDF over a sorted sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Ecdf<S: Scalar> {
    samples: Vec<S>,
}

impl<S: Scalar> Ecdf<S> {
    pub fn new(mut samples: Vec<S>) -> Self {
        samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    /// `P(X <= x)`, right-continuous, by binary search. Zero on an empty
    /// sample set.
    pub fn eval(&self, x: S) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let count = self.samples.partition_point(|s| *s <= x);
        count as f64 / self.samples.len() as f64
    }

    /// Two-column CSV `sinr_db,cum_prob` with one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sinr_db,cum_prob\n");
        let n = self.samples.len();
        for (i, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{},{}\n", s, (i + 1) as f64 / n as f64));
        }
        out
    }
}

/// Collects serving-cell SINR at each handover command and target-cell SINR
/// at each completion, pooled over paired (log, trace) runs.
pub fn sinr_ecdf_at_ho<S: Scalar>(runs: &[(&EventLog, &Trace<S>)]) -> (Ecdf<S>, Ecdf<S>) {
    let mut start = Vec::new();
    let mut end = Vec::new();
    for (log, trace) in runs {
        for r in &log.records {
            let t = r.tick as usize;
            match r.kind {
                EventKind::HoCmd => start.push(trace.sinr_db[[t, r.serving]]),
                EventKind::HoComplete => {
                    let target = r.target.expect("completion carries its target");
                    end.push(trace.sinr_db[[t, target]]);
                }
                _ => {}
            }
        }
    }
    (Ecdf::new(start), Ecdf::new(end))
}

/// Everything the evaluation pipeline reports for one protocol at one
/// operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EvalReport<S: Scalar> {
    pub speed_kmh: f64,
    pub seeds: Vec<u64>,
    pub gamma_r: S,
    pub avg_rate: S,
    pub max_rate: S,
    /// Completed handovers.
    pub ho_count: usize,
    /// Attempted handovers (commands plus pre-command failures).
    pub ho_attempts: usize,
    pub hof_count: usize,
    pub pp_count: usize,
    pub rlf_count: usize,
    pub hof_prob: Option<S>,
    pub pp_prob: Option<S>,
}

impl<S: Scalar> EvalReport<S> {
    pub fn csv_header() -> &'static str {
        "speed_kmh,gamma_r,avg_rate,max_rate,ho_count,ho_attempts,hof_count,pp_count,rlf_count,hof_prob,pp_prob"
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: &Option<S>| v.map(|p| p.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.speed_kmh,
            self.gamma_r,
            self.avg_rate,
            self.max_rate,
            self.ho_count,
            self.ho_attempts,
            self.hof_count,
            self.pp_count,
            self.rlf_count,
            opt(&self.hof_prob),
            opt(&self.pp_prob),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{RadioConfig, TraceMeta};
    use ndarray::Array2;

    fn trace_from_sinr(rows: Vec<Vec<f64>>) -> Trace<f64> {
        let t = rows.len();
        let n = rows[0].len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let sinr = Array2::from_shape_vec((t, n), flat).unwrap();
        Trace {
            ue_id: 0,
            tick_s: crate::TICK_S,
            rsrp_dbm: sinr.clone(),
            sinr_db: sinr,
            seed: 0,
            meta: TraceMeta {
                n_bs: n,
                speed_kmh: 30.0,
                duration_s: t as f64 * crate::TICK_S,
                radio: RadioConfig::default(),
                l1_window: None,
            },
        }
    }

    #[test]
    fn constant_zero_db_all_served_gives_bandwidth() {
        // log2(1 + 1) = 1, so the average rate is exactly B.
        let trace = trace_from_sinr(vec![vec![0.0]; 50]);
        let cfg = RateConfig { bandwidth_hz: 10.0e6, tick_s: crate::TICK_S };
        let timeline = vec![Some(0); 50];
        let avg = average_rate(&trace, &timeline, &cfg).unwrap();
        assert!((avg - 10.0e6).abs() < 1e-3);
    }

    #[test]
    fn no_service_everywhere_gives_zero() {
        let trace = trace_from_sinr(vec![vec![5.0, 3.0]; 20]);
        let cfg = RateConfig::default();
        let timeline = vec![None; 20];
        let avg = average_rate(&trace, &timeline, &cfg).unwrap();
        assert_eq!(avg, 0.0);
    }

    #[test]
    fn ten_tick_mixed_timeline_matches_hand_sum() {
        let sinr = vec![
            vec![0.0, 10.0],
            vec![10.0, -10.0],
            vec![0.0, 0.0],
            vec![-10.0, 10.0],
            vec![10.0, 10.0],
            vec![0.0, -10.0],
            vec![-10.0, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 10.0],
            vec![-10.0, -10.0],
        ];
        let timeline = vec![
            Some(0),
            Some(0),
            None,
            Some(1),
            Some(1),
            None,
            Some(0),
            Some(1),
            Some(1),
            Some(0),
        ];
        // Served linear SINRs: 1, 10, -, 10, 10, -, 0.1, 1, 10, 0.1.
        let served = [1.0, 10.0, 10.0, 10.0, 0.1, 1.0, 10.0, 0.1];
        let expected: f64 = served.iter().map(|l: &f64| (1.0 + l).log2()).sum::<f64>() / 10.0;
        let trace = trace_from_sinr(sinr);
        let cfg = RateConfig { bandwidth_hz: 1.0, tick_s: crate::TICK_S };
        let avg = average_rate(&trace, &timeline, &cfg).unwrap();
        assert!((avg - expected).abs() < 1e-12, "avg {avg} expected {expected}");
    }

    #[test]
    fn max_rate_takes_per_tick_maximum() {
        let trace = trace_from_sinr(vec![vec![0.0, 10.0], vec![10.0, 0.0], vec![-10.0, 0.0]]);
        let cfg = RateConfig { bandwidth_hz: 1.0, tick_s: crate::TICK_S };
        let expected = ((1.0f64 + 10.0).log2() * 2.0 + (1.0f64 + 1.0).log2()) / 3.0;
        assert!((max_rate(&trace, &cfg) - expected).abs() < 1e-12);
    }

    #[test]
    fn timeline_length_mismatch_is_an_error() {
        let trace = trace_from_sinr(vec![vec![0.0]; 5]);
        let err = average_rate(&trace, &[Some(0); 4], &RateConfig::default()).unwrap_err();
        assert!(matches!(err, MetricsError::TimelineMismatch { expected: 5, found: 4 }));
    }

    #[test]
    fn argmax_timeline_reaches_gamma_one_exactly() {
        let trace = trace_from_sinr(vec![
            vec![3.0, 7.0, 1.0],
            vec![8.0, 2.0, 5.0],
            vec![-1.0, -2.0, 4.0],
            vec![0.0, 0.0, -3.0],
        ]);
        let cfg = RateConfig::default();
        let timeline: Vec<Option<usize>> = (0..trace.n_ticks())
            .map(|t| {
                let row: Vec<f64> = trace.sinr_db.row(t).to_vec();
                Some(crate::scalar::argmax(&row))
            })
            .collect();
        let avg = average_rate(&trace, &timeline, &cfg).unwrap();
        let max = max_rate(&trace, &cfg);
        let g = gamma_r(avg, max).unwrap();
        assert_eq!(g, 1.0, "identical per-tick terms must divide to exactly 1");
    }

    #[test]
    fn gamma_is_invariant_to_bandwidth_doubling_and_permutation() {
        let trace = trace_from_sinr(vec![
            vec![3.0, 7.0],
            vec![8.0, 2.0],
            vec![-1.0, -2.0],
        ]);
        let timeline = vec![Some(1), Some(0), Some(1)];
        let cfg1 = RateConfig { bandwidth_hz: 10.0e6, tick_s: crate::TICK_S };
        let cfg2 = RateConfig { bandwidth_hz: 20.0e6, tick_s: crate::TICK_S };
        let g1 = gamma_r(
            average_rate(&trace, &timeline, &cfg1).unwrap(),
            max_rate(&trace, &cfg1),
        )
        .unwrap();
        let g2 = gamma_r(
            average_rate(&trace, &timeline, &cfg2).unwrap(),
            max_rate(&trace, &cfg2),
        )
        .unwrap();
        assert_eq!(g1, g2);

        // Swap the two stations everywhere; the ratio must not move.
        let swapped = trace_from_sinr(vec![
            vec![7.0, 3.0],
            vec![2.0, 8.0],
            vec![-2.0, -1.0],
        ]);
        let timeline_swapped = vec![Some(0), Some(1), Some(0)];
        let g3 = gamma_r(
            average_rate(&swapped, &timeline_swapped, &cfg1).unwrap(),
            max_rate(&swapped, &cfg1),
        )
        .unwrap();
        assert_eq!(g1, g3);
    }

    #[test]
    fn zero_max_rate_is_an_error() {
        assert!(matches!(gamma_r(0.0, 0.0), Err(MetricsError::ZeroMaxRate)));
    }

    fn synthetic_log(cmds: usize, completes: usize, pps: usize, hofs_at_cmd: usize) -> EventLog {
        let mut log = EventLog::default();
        let mut tick = 0;
        for i in 0..cmds {
            log.push(tick, EventKind::HoCmd, 0, Some(1));
            if i < hofs_at_cmd {
                log.push(tick, EventKind::Hof, 0, Some(1));
                log.push(tick, EventKind::Rlf, 0, None);
            }
            tick += 200;
        }
        for i in 0..completes {
            log.push(tick, EventKind::HoComplete, 1, Some(1));
            if i < pps {
                log.push(tick, EventKind::PingPong, 1, None);
            }
            tick += 200;
        }
        log
    }

    #[test]
    fn probability_counting_oracle() {
        // 102 commands, 2 of them failing, 100 completions, 45 ping-pongs.
        let log = synthetic_log(102, 100, 45, 2);
        let (hof, pp) = event_probabilities::<f64>(&[log]);
        assert!((hof.unwrap() - 2.0 / 102.0).abs() < 1e-15);
        assert!((pp.unwrap() - 45.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn pre_command_failures_enter_the_denominator() {
        let mut log = synthetic_log(10, 10, 0, 0);
        // Two preparation-phase failures with no command on their ticks.
        log.push(5000, EventKind::Hof, 0, Some(1));
        log.push(5000, EventKind::Rlf, 0, None);
        log.push(6000, EventKind::Hof, 0, Some(1));
        log.push(6000, EventKind::Rlf, 0, None);
        let counts = EventCounts::from_log(&log);
        assert_eq!(counts.attempts(), 12);
        assert_eq!(counts.hofs, 2);
        let (hof, _) = probabilities_from_counts::<f64>(&counts);
        assert!((hof.unwrap() - 2.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn empty_logs_give_absent_probabilities() {
        let (hof, pp) = event_probabilities::<f64>(&[EventLog::default()]);
        assert!(hof.is_none() && pp.is_none());
    }

    #[test]
    fn all_ping_pong_saturates() {
        let log = synthetic_log(5, 5, 5, 0);
        let (_, pp) = event_probabilities::<f64>(&[log]);
        assert_eq!(pp.unwrap(), 1.0);
    }

    #[test]
    fn pooling_is_commutative_and_additive() {
        let a = synthetic_log(10, 8, 3, 1);
        let b = synthetic_log(4, 4, 2, 1);
        let (h1, p1) = event_probabilities::<f64>(&[a.clone(), b.clone()]);
        let (h2, p2) = event_probabilities::<f64>(&[b, a]);
        assert_eq!(h1, h2);
        assert_eq!(p1, p2);
        assert!((h1.unwrap() - 2.0 / 14.0).abs() < 1e-15);
        assert!((p1.unwrap() - 5.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn single_sample_ecdf() {
        let e = Ecdf::new(vec![-7.0]);
        assert_eq!(e.eval(-8.0), 0.0);
        assert_eq!(e.eval(-7.0), 1.0);
        assert_eq!(e.eval(-6.0), 1.0);
    }

    #[test]
    fn ecdf_is_a_right_continuous_step_from_zero_to_one() {
        let e = Ecdf::new(vec![1.0, -3.0, 2.0, 1.0]);
        assert_eq!(e.samples(), &[-3.0, 1.0, 1.0, 2.0]);
        assert_eq!(e.eval(-3.1), 0.0);
        assert_eq!(e.eval(-3.0), 0.25);
        assert_eq!(e.eval(0.99), 0.25);
        assert_eq!(e.eval(1.0), 0.75);
        assert_eq!(e.eval(2.0), 1.0);
        assert_eq!(e.eval(99.0), 1.0);
        let mut prev = 0.0;
        for x in -40..40 {
            let p = e.eval(x as f64 / 10.0);
            assert!(p >= prev, "non-monotone at {x}");
            prev = p;
        }
    }

    #[test]
    fn pooled_ecdf_equals_concatenation() {
        let t1 = trace_from_sinr(vec![vec![-7.0, 1.0]; 30]);
        let t2 = trace_from_sinr(vec![vec![3.0, -2.0]; 30]);
        let mut l1 = EventLog::default();
        l1.push(10, EventKind::HoCmd, 0, Some(1));
        l1.push(19, EventKind::HoComplete, 1, Some(1));
        let mut l2 = EventLog::default();
        l2.push(5, EventKind::HoCmd, 1, Some(0));
        l2.push(14, EventKind::HoComplete, 0, Some(0));
        let (start, end) = sinr_ecdf_at_ho(&[(&l1, &t1), (&l2, &t2)]);
        assert_eq!(start.samples(), &[-7.0, -2.0]);
        assert_eq!(end.samples(), &[1.0, 3.0]);
        // Same data, one run at a time, then concatenated by hand.
        let (s1, _) = sinr_ecdf_at_ho(&[(&l1, &t1)]);
        let (s2, _) = sinr_ecdf_at_ho(&[(&l2, &t2)]);
        let mut both: Vec<f64> = s1.samples().iter().chain(s2.samples()).copied().collect();
        both.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(start.samples(), both.as_slice());
    }

    #[test]
    fn ecdf_csv_layout() {
        let e = Ecdf::new(vec![2.0, -1.0]);
        let csv = e.to_csv();
        assert_eq!(csv, "sinr_db,cum_prob\n-1,0.5\n2,1\n");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn achieved_never_beats_idealized(
                n_bs in 1usize..5,
                rows in proptest::collection::vec(
                    proptest::collection::vec(-20.0f64..20.0, 4),
                    2..24,
                ),
                picks in proptest::collection::vec(proptest::option::of(0usize..4), 2..24),
            ) {
                let t = rows.len().min(picks.len());
                let rows: Vec<Vec<f64>> =
                    rows[..t].iter().map(|r| r[..n_bs].to_vec()).collect();
                let timeline: Vec<Option<usize>> =
                    picks[..t].iter().map(|p| p.map(|i| i % n_bs)).collect();
                let trace = trace_from_sinr(rows);
                let cfg = RateConfig::default();
                let avg = average_rate(&trace, &timeline, &cfg).unwrap();
                let max = max_rate(&trace, &cfg);
                prop_assert!(avg <= max * (1.0 + 1e-12));
                let g = gamma_r(avg, max).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
            }

            #[test]
            fn ecdf_monotone_and_bounded(
                samples in proptest::collection::vec(-30.0f64..30.0, 1..50),
                probes in proptest::collection::vec(-40.0f64..40.0, 1..20),
            ) {
                let e = Ecdf::new(samples.clone());
                let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(e.eval(lo - 1.0), 0.0);
                prop_assert_eq!(e.eval(hi), 1.0);
                let mut sorted = probes.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut prev = 0.0;
                for x in sorted {
                    let p = e.eval(x);
                    prop_assert!(p >= prev);
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn report_csv_row_handles_absent_probabilities() {
        let report = EvalReport::<f64> {
            speed_kmh: 30.0,
            seeds: vec![1, 2],
            gamma_r: 0.97,
            avg_rate: 1.0e7,
            max_rate: 1.03e7,
            ho_count: 0,
            ho_attempts: 0,
            hof_count: 0,
            pp_count: 0,
            rlf_count: 0,
            hof_prob: None,
            pp_prob: None,
        };
        let row = report.csv_row();
        assert!(row.ends_with(",,"), "absent probabilities serialize empty: {row}");
        assert_eq!(
            row.split(',').count(),
            EvalReport::<f64>::csv_header().split(',').count()
        );
    }
}
