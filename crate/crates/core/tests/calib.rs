//! Temporary calibration harness (deleted before finalizing).

use std::sync::Arc;

use hosim_core::channel::{
    synthesize_trace, BsLayout, MobilityPath, RadioConfig, Trace, DEFAULT_TX_POWER_DBM,
};
use hosim_core::env::{EnvConfig, HandoverEnv};
use hosim_core::metrics::RateConfig;
use hosim_core::ppo::{train, PpoConfig};
use hosim_core::protocol::{EventKind, ProtocolConfig};
use hosim_core::runner::{pooled_report, run_agent};
use hosim_core::Real;

fn toy_layout() -> BsLayout<Real> {
    BsLayout {
        positions: vec![[450.0, 0.0], [550.0, 0.0]],
        tx_power_dbm: vec![DEFAULT_TX_POWER_DBM; 2],
    }
}

fn toy_radio() -> RadioConfig<Real> {
    RadioConfig { shadow_sigma_db: 0.0, ..RadioConfig::default() }
}

fn toy_trace(i: usize) -> Trace<Real> {
    let y = -25.0 + 10.0 * (i % 6) as f64;
    let x0 = 440.0 + 2.25 * (i % 15) as f64;
    let x1 = x0 + 75.0;
    let (from, to) = if i % 2 == 0 { ((x0, y), (x1, y)) } else { ((x1, y), (x0, y)) };
    let path = MobilityPath::straight(from, to, 300, 90.0);
    synthesize_trace(&toy_layout(), &path, &toy_radio(), 1000 + i as u64).unwrap()
}

/// First tick where the strongest cell differs from tick 0's.
fn crossing_tick(trace: &Trace<Real>) -> usize {
    let row = |t: usize| trace.sinr_db.row(t).to_vec();
    let first = hosim_core::scalar::argmax(&row(0));
    for t in 0..trace.n_ticks() {
        if hosim_core::scalar::argmax(&row(t)) != first {
            return t;
        }
    }
    panic!("no crossing");
}

fn run_toy(tag: &str, env_cfg: EnvConfig<Real>, ppo: PpoConfig<Real>, chatty: bool) {
    let all: Vec<Trace<Real>> = (0..64).map(toy_trace).collect();
    let (train_set, held_out) = all.split_at(48);
    let shared: Arc<[Trace<Real>]> = train_set.to_vec().into();
    let protocol = ProtocolConfig::<Real>::default();

    let t0 = std::time::Instant::now();
    let outcome = train(&ppo, |i| {
        HandoverEnv::new(shared.clone(), protocol, env_cfg, 900 + i as u64, 1)
    })
    .unwrap();
    let dt = t0.elapsed();

    let mut ok = 0usize;
    let mut runs = Vec::new();
    for (i, trace) in held_out.iter().enumerate() {
        let record = run_agent(trace, &outcome.agent, &protocol, &env_cfg).unwrap();
        let cross = crossing_tick(trace) as i64;
        let completions: Vec<i64> = record
            .log
            .iter_kind(EventKind::HoComplete)
            .map(|r| r.tick as i64)
            .collect();
        let offsets: Vec<i64> = completions.iter().map(|c| c - cross).collect();
        let hit = completions.len() == 1 && offsets[0].abs() <= 10;
        ok += hit as usize;
        if chatty {
            println!("  trace {i} cross={cross} offsets={offsets:?} hit={hit}");
        }
        runs.push(record);
    }
    let paired: Vec<_> = held_out.iter().zip(&runs).map(|(t, r)| (t, r)).collect();
    let report = pooled_report(&paired, &RateConfig::default()).unwrap();
    let last = outcome.log.rows.last().unwrap();
    println!(
        "{tag}: {}/{} hits, gamma={:.4}, last_mean_ep_reward={:.1}, entropy={:.3}, {dt:?}",
        ok,
        held_out.len(),
        report.gamma_r,
        last.mean_ep_reward,
        last.entropy
    );
}

#[test]
#[ignore]
fn toy_calibration() {
    let base_env = EnvConfig::<Real>::default();
    let c2_env = EnvConfig::<Real> { reward_c: 2.0, ..base_env };
    let base_ppo = PpoConfig::<Real> {
        total_timesteps: 200_000,
        hidden: vec![16, 16],
        lr: 2e-3,
        gamma: 0.9,
        ent_coef: 0.001,
        advantage_norm: false,
        epochs_per_update: 20,
        n_envs: 4,
        seed: 0,
        ..PpoConfig::default()
    };
    for seed in [0u64, 1, 2, 3, 4, 5, 7, 9, 11, 42] {
        run_toy(&format!("final s{seed}"), c2_env, PpoConfig { seed, ..base_ppo.clone() }, false);
    }
}

const SPEEDS: [f64; 4] = [30.0, 50.0, 70.0, 90.0];

fn trend_layout() -> BsLayout<Real> {
    hosim_core::channel::generate_layout(
        7,
        hosim_core::channel::Area { width_m: 1300.0, height_m: 700.0 },
        424242,
    )
    .unwrap()
}

fn trend_traces(
    radio: &RadioConfig<Real>,
    per_speed: usize,
    duration_s: f64,
    seed0: u64,
) -> Vec<Trace<Real>> {
    let layout = trend_layout();
    let area = hosim_core::channel::Area { width_m: 1300.0, height_m: 700.0 };
    let filter = hosim_core::channel::FilterConfig::default();
    let mut out = Vec::new();
    let mut k = 0u64;
    for &speed in &SPEEDS {
        for _ in 0..per_speed {
            let path =
                hosim_core::channel::generate_path(area, speed, duration_s, seed0 + 7919 * k)
                    .unwrap();
            let t = synthesize_trace(&layout, &path, radio, seed0 + 104729 * k + 1).unwrap();
            out.push(hosim_core::channel::l1_filter(&t, &filter).unwrap());
            k += 1;
        }
    }
    out
}

fn speed_of(t: &Trace<Real>) -> f64 {
    t.meta.speed_kmh
}

fn baseline_table(tag: &str, radio: &RadioConfig<Real>, per_speed: usize) {
    use hosim_core::runner::{best_sweep_index, run_baseline_set, sweep_baseline};
    let traces = trend_traces(radio, per_speed, 60.0, 5000);
    let protocol = ProtocolConfig::<Real>::default();
    let filter = hosim_core::channel::FilterConfig::default();
    let rate = RateConfig::default();
    let offs = [0.0, 1.0, 2.0];
    let ttts = [40u64, 80, 160];
    for &speed in &SPEEDS {
        let subset: Vec<Trace<Real>> =
            traces.iter().filter(|t| speed_of(t) == speed).cloned().collect();
        let points = sweep_baseline(&subset, &protocol, &filter, &offs, &ttts, &rate).unwrap();
        let best = &points[best_sweep_index(&points)];
        let r = &best.report;
        println!(
            "{tag} v={speed} off={} ttt={} gamma={:.4} ho={} hof={} pp={} rlf={} hof_p={:?}",
            best.off_db,
            best.ttt_ms,
            r.gamma_r,
            r.ho_count,
            r.hof_count,
            r.pp_count,
            r.rlf_count,
            r.hof_prob
        );
        let _ = run_baseline_set(&subset, &protocol, &filter);
    }
}

#[test]
#[ignore]
fn trend_baseline() {
    baseline_table(
        "s8d50",
        &RadioConfig { shadow_sigma_db: 8.0, ..RadioConfig::default() },
        15,
    );
    baseline_table(
        "s9d50",
        &RadioConfig { shadow_sigma_db: 9.0, ..RadioConfig::default() },
        15,
    );
    baseline_table(
        "s8d35",
        &RadioConfig { shadow_sigma_db: 8.0, decorr_m: 35.0, ..RadioConfig::default() },
        15,
    );
    baseline_table(
        "s9d35",
        &RadioConfig { shadow_sigma_db: 9.0, decorr_m: 35.0, ..RadioConfig::default() },
        15,
    );
}

fn trend_radio() -> RadioConfig<Real> {
    RadioConfig { decorr_m: 35.0, shadow_sigma_db: 9.0, ..RadioConfig::default() }
}

fn trend_train_probe(tag: &str, ppo: PpoConfig<Real>, env_cfg: EnvConfig<Real>) {
    use hosim_core::metrics::sinr_ecdf_at_ho;
    use hosim_core::runner::{best_sweep_index, run_agent_set, run_baseline_set, sweep_baseline};

    let radio = trend_radio();
    let train_set = trend_traces(&radio, 25, 20.0, 9000);
    let eval_set = trend_traces(&radio, 15, 60.0, 5000);
    let protocol = ProtocolConfig::<Real>::default();
    let filter = hosim_core::channel::FilterConfig::default();
    let rate = RateConfig::default();
    let offs = [0.0, 1.0, 2.0];
    let ttts = [40u64, 80, 160];

    let shared: Arc<[Trace<Real>]> = train_set.into();
    let t0 = std::time::Instant::now();
    let outcome = train(&ppo, |i| {
        HandoverEnv::new(shared.clone(), protocol, env_cfg, 31000 + i as u64, 1)
    })
    .unwrap();
    println!("{tag}: trained in {:?}", t0.elapsed());
    let rows = &outcome.log.rows;
    for r in rows.iter().step_by((rows.len() / 8).max(1)).chain(rows.last()) {
        println!(
            "{tag} log: upd={} ts={} ep_rew={:.1} ent={:.3} pl={:.4} vl={:.1} ev={:.3}",
            r.update, r.timesteps, r.mean_ep_reward, r.entropy,
            r.policy_loss, r.value_loss, r.explained_variance
        );
    }

    let mut base_logs: Vec<(hosim_core::protocol::EventLog, usize)> = Vec::new();
    for &speed in &SPEEDS {
        let idx: Vec<usize> = (0..eval_set.len())
            .filter(|&i| speed_of(&eval_set[i]) == speed)
            .collect();
        let subset: Vec<Trace<Real>> = idx.iter().map(|&i| eval_set[i].clone()).collect();
        let points = sweep_baseline(&subset, &protocol, &filter, &offs, &ttts, &rate).unwrap();
        let best = &points[best_sweep_index(&points)];
        let mut tuned = protocol;
        tuned.a3.off_db = best.off_db;
        tuned.a3.ttt_ms = best.ttt_ms;
        let runs = run_baseline_set(&subset, &tuned, &filter);
        let paired: Vec<_> = subset.iter().zip(&runs).collect();
        let rb = hosim_core::runner::pooled_report(&paired, &rate).unwrap();

        let agent_runs = run_agent_set(&subset, &outcome.agent, &protocol, &env_cfg).unwrap();
        let pa: Vec<_> = subset.iter().zip(&agent_runs).collect();
        let ra = hosim_core::runner::pooled_report(&pa, &rate).unwrap();
        println!(
            "{tag} v={speed}: base off={} ttt={} g={:.4} hof_p={:.4} pp={} | agent g={:.4} hof_p={:.4} pp={} ho={}",
            best.off_db,
            best.ttt_ms,
            rb.gamma_r,
            rb.hof_prob.unwrap_or(f64::NAN),
            rb.pp_count,
            ra.gamma_r,
            ra.hof_prob.unwrap_or(f64::NAN),
            ra.pp_count,
            ra.ho_count,
        );
        for (t, r) in subset.iter().zip(&runs) {
            let _ = (t, r);
        }
        // stash logs for pooled ECDF across speeds
        for r in runs {
            base_logs.push((r.log, idx[base_logs.len() % idx.len()]));
        }
    }

    // pooled ECDF over the whole eval set, baseline tuned per its own speed is
    // awkward here; reuse default protocol for a quick comparison instead.
    let base_all = run_baseline_set(&eval_set, &protocol, &filter);
    let agent_all = run_agent_set(&eval_set, &outcome.agent, &protocol, &env_cfg).unwrap();
    let pb: Vec<_> = base_all.iter().zip(&eval_set).map(|(r, t)| (&r.log, t)).collect();
    let pa: Vec<_> = agent_all.iter().zip(&eval_set).map(|(r, t)| (&r.log, t)).collect();
    let (eb, _) = sinr_ecdf_at_ho(&pb);
    let (ea, _) = sinr_ecdf_at_ho(&pa);
    let q_out = -8.0;
    println!(
        "{tag} ECDF at HO_CMD: base P(<=Qout)={:.4} (n={}), agent P(<=Qout)={:.4} (n={})",
        eb.eval(q_out),
        eb.samples().len(),
        ea.eval(q_out),
        ea.samples().len()
    );
}

#[test]
#[ignore]
fn trend_train() {
    let env_cfg = EnvConfig::<Real>::default();
    let ppo = PpoConfig::<Real> {
        total_timesteps: 1_000_000,
        lr: 3e-4,
        gamma: 0.99,
        ent_coef: 0.003,
        advantage_norm: false,
        n_envs: 4,
        seed: 7,
        ..PpoConfig::default()
    };
    trend_train_probe("t2", ppo.clone(), env_cfg);
    trend_train_probe(
        "t3-g.95",
        PpoConfig { gamma: 0.95, ..ppo },
        env_cfg,
    );
}
