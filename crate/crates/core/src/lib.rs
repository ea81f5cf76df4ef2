//! Discrete-time simulation of cellular handover in a multi-cell network.
//!
//! The crate synthesizes radio traces (path loss plus spatially correlated
//! shadow fading) for a user moving through a field of base stations, runs a
//! standards-style Event A3 handover baseline over those traces, and trains a
//! PPO agent that picks the serving cell directly from filtered signal
//! quality. Evaluation utilities score both controllers on normalized data
//! rate, handover failure probability, and ping-pong probability.
//!
//! Everything is deterministic given a seed: trace synthesis, training and
//! evaluation all derive their randomness from counter-mode generators keyed
//! by explicit seeds, so identical inputs reproduce identical outputs byte
//! for byte.
//!
//! Signal math is generic over the scalar width via [`Scalar`]; the type
//! aliases below fix the default used throughout the command-line tools.

pub mod channel;
pub mod env;
pub mod manifest;
pub mod metrics;
pub mod ppo;
pub mod protocol;
pub mod runner;
pub mod scalar;

pub use scalar::Scalar;

/// Default scalar width for the simulation pipeline.
pub type Real = f64;

/// Radio trace over [`Real`].
pub type Trace = channel::Trace<Real>;
/// Channel generator configuration over [`Real`].
pub type ChannelConfig = channel::ChannelConfig<Real>;
/// RL environment over [`Real`].
pub type HandoverEnv = env::HandoverEnv<Real>;
/// Actor-critic agent over [`Real`].
pub type Agent = ppo::Agent<Real>;

/// Simulation tick length in seconds (10 ms sampling).
pub const TICK_S: f64 = 0.010;

/// Milliseconds per simulation tick.
pub const TICK_MS: u64 = 10;

/// Converts a duration in milliseconds to a whole number of ticks.
///
/// Durations in this crate (time-to-trigger, timers, preparation and
/// execution delays) are all multiples of the tick length.
pub fn ms_to_ticks(ms: u64) -> u64 {
    assert!(
        ms % TICK_MS == 0,
        "duration {ms} ms is not a multiple of the {TICK_MS} ms tick"
    );
    ms / TICK_MS
}
