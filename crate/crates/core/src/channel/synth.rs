//! Per-tick RSRP/SINR synthesis over a layout and a mobility path.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BsLayout, ChannelError, MobilityPath, RadioConfig};
use crate::scalar::{db_to_linear, linear_to_db};
use crate::Scalar;

/// Free-space pathloss at a 1 m reference distance, in dB.
pub fn friis_reference_loss_db<S: Scalar>(carrier_hz: S) -> S {
    let c = S::from_f64(299_792_458.0);
    let four_pi = S::from_f64(4.0 * std::f64::consts::PI);
    S::from_f64(20.0) * (four_pi * carrier_hz / c).log10()
}

/// Log-distance pathloss, with the distance clamped below at 1 m.
pub fn pathloss_db<S: Scalar>(radio: &RadioConfig<S>, distance_m: S) -> S {
    let d = distance_m.max(S::one());
    radio.ref_loss_db + S::from_f64(10.0) * radio.pathloss_exp * d.log10()
}

/// Per-station SINR in dB from one tick of per-station RSRP in dBm.
///
/// Every other station contributes interference at full received power;
/// the noise floor is added in linear scale.
pub fn sinr_db_from_rsrp<S: Scalar>(rsrp_dbm: &[S], noise_dbm: S) -> Vec<S> {
    let lin: Vec<S> = rsrp_dbm.iter().map(|&p| db_to_linear(p)).collect();
    let total: S = lin.iter().copied().sum();
    let noise = db_to_linear(noise_dbm);
    lin.iter()
        .map(|&s| linear_to_db(s / (total - s + noise)))
        .collect()
}

/// Generation parameters recorded alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct TraceMeta<S: Scalar> {
    pub n_bs: usize,
    pub speed_kmh: f64,
    pub duration_s: f64,
    pub radio: RadioConfig<S>,
    /// Moving-average window already applied to the samples, if any.
    pub l1_window: Option<usize>,
}

/// Per-tick, per-station RSRP and SINR samples for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<S: Scalar> {
    pub ue_id: u32,
    /// Sample interval in seconds.
    pub tick_s: f64,
    /// RSRP in dBm, shape `[ticks, stations]`.
    pub rsrp_dbm: Array2<S>,
    /// SINR in dB, same shape.
    pub sinr_db: Array2<S>,
    pub seed: u64,
    pub meta: TraceMeta<S>,
}

impl<S: Scalar> Trace<S> {
    pub fn n_ticks(&self) -> usize {
        self.rsrp_dbm.nrows()
    }

    pub fn n_bs(&self) -> usize {
        self.rsrp_dbm.ncols()
    }
}

/// Synthesizes a raw trace: log-distance pathloss plus Gudmundson shadowing,
/// then SINR against the combined interference and noise.
///
/// The shadowing process for station `i` evolves with the distance the user
/// travels per tick: `s_t = rho * s_(t-1) + sigma * sqrt(1 - rho^2) * w_t`
/// with `rho = exp(-step / decorr)`, which gives samples a spatial
/// correlation of `exp(-d / decorr)` at lag distance `d`. Deterministic for
/// a fixed seed; a zero sigma yields pure pathloss.
pub fn synthesize_trace<S: Scalar>(
    layout: &BsLayout<S>,
    path: &MobilityPath<S>,
    radio: &RadioConfig<S>,
    seed: u64,
) -> Result<Trace<S>, ChannelError> {
    radio.validate()?;
    if layout.positions.is_empty() {
        return Err(ChannelError::InvalidConfig("layout has no stations".into()));
    }
    if layout.tx_power_dbm.len() != layout.positions.len() {
        return Err(ChannelError::InvalidConfig(
            "one transmit power per station required".into(),
        ));
    }
    if path.waypoints.is_empty() {
        return Err(ChannelError::InvalidConfig("path has no waypoints".into()));
    }

    let n_ticks = path.len_ticks();
    let n_bs = layout.n_bs();
    let mut rsrp = Array2::<S>::zeros((n_ticks, n_bs));
    let mut sinr = Array2::<S>::zeros((n_ticks, n_bs));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> S {
        let w: f64 = rng.sample(StandardNormal);
        S::from_f64(w)
    };

    let sigma = radio.shadow_sigma_db;
    let mut shadow = vec![S::zero(); n_bs];
    let mut row = vec![S::zero(); n_bs];
    for t in 0..n_ticks {
        if t == 0 {
            for s in shadow.iter_mut() {
                *s = sigma * draw(&mut rng);
            }
        } else {
            let rho = (-(path.step_m(t) / radio.decorr_m)).exp();
            let innovation = sigma * (S::one() - rho * rho).sqrt();
            for s in shadow.iter_mut() {
                *s = rho * *s + innovation * draw(&mut rng);
            }
        }

        let (x, y) = path.position(t);
        for i in 0..n_bs {
            let d = layout.distance_m(i, x, y);
            row[i] = layout.tx_power_dbm[i] - pathloss_db(radio, d) - shadow[i];
            rsrp[[t, i]] = row[i];
        }
        for (i, v) in sinr_db_from_rsrp(&row, radio.noise_dbm).into_iter().enumerate() {
            sinr[[t, i]] = v;
        }
    }

    Ok(Trace {
        ue_id: 0,
        tick_s: path.tick_s,
        rsrp_dbm: rsrp,
        sinr_db: sinr,
        seed,
        meta: TraceMeta {
            n_bs,
            speed_kmh: path.speed_kmh,
            duration_s: n_ticks as f64 * path.tick_s,
            radio: *radio,
            l1_window: None,
        },
    })
}
