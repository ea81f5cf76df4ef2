//! Random-waypoint mobility sampled on the simulation tick grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Area, ChannelError};
use crate::{Scalar, TICK_S};

/// One position sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Waypoint<S: Scalar> {
    pub t_s: f64,
    pub x_m: S,
    pub y_m: S,
}

/// A tick-sampled trajectory through the simulation area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MobilityPath<S: Scalar> {
    pub waypoints: Vec<Waypoint<S>>,
    /// Nominal speed class in km/h.
    pub speed_kmh: f64,
    /// Sample interval in seconds.
    pub tick_s: f64,
}

impl<S: Scalar> MobilityPath<S> {
    pub fn len_ticks(&self) -> usize {
        self.waypoints.len()
    }

    pub fn position(&self, tick: usize) -> (S, S) {
        let w = &self.waypoints[tick];
        (w.x_m, w.y_m)
    }

    /// Displacement between tick `t-1` and `t`, zero at the first tick.
    pub fn step_m(&self, tick: usize) -> S {
        if tick == 0 {
            return S::zero();
        }
        let a = &self.waypoints[tick - 1];
        let b = &self.waypoints[tick];
        let (dx, dy) = (b.x_m - a.x_m, b.y_m - a.y_m);
        (dx * dx + dy * dy).sqrt()
    }

    /// Builds a straight constant-speed path between two points, mostly
    /// useful for controlled scenarios and tests. The end point is reached
    /// at the last tick; `n_ticks` positions are emitted.
    pub fn straight(from: (S, S), to: (S, S), n_ticks: usize, speed_kmh: f64) -> Self {
        assert!(n_ticks >= 2, "straight path needs at least 2 ticks");
        let mut waypoints = Vec::with_capacity(n_ticks);
        let denom = S::from_usize(n_ticks - 1);
        for i in 0..n_ticks {
            let f = S::from_usize(i) / denom;
            waypoints.push(Waypoint {
                t_s: i as f64 * TICK_S,
                x_m: from.0 + (to.0 - from.0) * f,
                y_m: from.1 + (to.1 - from.1) * f,
            });
        }
        Self { waypoints, speed_kmh, tick_s: TICK_S }
    }
}

/// Generates a random-waypoint path: the user walks toward a uniformly
/// random target, picks a fresh target on arrival, and repeats. Each tick
/// moves `speed * tick_s` meters scaled by a uniform jitter in [0.8, 1.2],
/// so no single step exceeds 1.2x the nominal per-tick displacement.
pub fn generate_path<S: Scalar>(
    area: Area<S>,
    speed_kmh: f64,
    duration_s: f64,
    seed: u64,
) -> Result<MobilityPath<S>, ChannelError> {
    if !(1.0..=120.0).contains(&speed_kmh) {
        return Err(ChannelError::InvalidConfig(format!(
            "speed must be in [1, 120] km/h, got {speed_kmh}"
        )));
    }
    if !(duration_s > 0.0) {
        return Err(ChannelError::InvalidConfig(format!(
            "duration must be positive, got {duration_s} s"
        )));
    }
    if area.is_empty() {
        return Err(ChannelError::InvalidConfig("area is empty".into()));
    }

    let n_ticks = (duration_s / TICK_S).round() as usize;
    let w = area.width_m.to_f64();
    let h = area.height_m.to_f64();
    let step_nominal = speed_kmh / 3.6 * TICK_S;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rand_point = |rng: &mut ChaCha8Rng| -> (f64, f64) {
        (rng.random_range(0.0..w), rng.random_range(0.0..h))
    };

    let (mut x, mut y) = rand_point(&mut rng);
    let (mut tx, mut ty) = rand_point(&mut rng);
    let mut waypoints = Vec::with_capacity(n_ticks);
    for i in 0..n_ticks {
        waypoints.push(Waypoint {
            t_s: i as f64 * TICK_S,
            x_m: S::from_f64(x),
            y_m: S::from_f64(y),
        });
        let jitter = rng.random_range(0.8..1.2);
        let mut step = step_nominal * jitter;
        // A step may pass through the current target; walk the remainder
        // toward the next one so speed is not lost at turns.
        loop {
            let (dx, dy) = (tx - x, ty - y);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist > step {
                x += dx / dist * step;
                y += dy / dist * step;
                break;
            }
            x = tx;
            y = ty;
            step -= dist;
            let next = rand_point(&mut rng);
            tx = next.0;
            ty = next.1;
            if step <= 0.0 {
                break;
            }
        }
    }

    Ok(MobilityPath { waypoints, speed_kmh, tick_s: TICK_S })
}
