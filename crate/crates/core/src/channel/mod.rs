//! Synthetic radio channel: base-station layout, user mobility, per-tick
//! RSRP/SINR synthesis, measurement filtering, and the trace file format.
//!
//! The generator is a deliberately simple stand-in for a full system-level
//! simulator. It keeps the parts that matter for handover decisions: smooth
//! pathloss crossovers between neighbouring cells and spatially correlated
//! shadow fades that can sink the serving cell while a neighbour stays up.

mod filter;
mod format;
mod layout;
mod mobility;
mod synth;

pub use filter::{l1_filter, l3_coefficient, l3_filter, l3_filter_matrix};
pub use format::{read_trace, trace_from_str, trace_to_string, write_trace, TraceError, TRACE_FORMAT, TRACE_FORMAT_VERSION};
pub use layout::{generate_layout, BsLayout, DEFAULT_TX_POWER_DBM, MIN_BS_SPACING_M};
pub use mobility::{generate_path, MobilityPath, Waypoint};
pub use synth::{friis_reference_loss_db, pathloss_db, sinr_db_from_rsrp, synthesize_trace, Trace, TraceMeta};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

/// Rectangular simulation area, origin at the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Area<S: Scalar> {
    pub width_m: S,
    pub height_m: S,
}

impl<S: Scalar> Area<S> {
    pub fn new(width_m: S, height_m: S) -> Self {
        Self { width_m, height_m }
    }

    pub fn is_empty(&self) -> bool {
        self.width_m <= S::zero() || self.height_m <= S::zero()
    }

    /// Clamps a point into the area.
    pub fn clamp(&self, x: S, y: S) -> (S, S) {
        (
            x.max(S::zero()).min(self.width_m),
            y.max(S::zero()).min(self.height_m),
        )
    }
}

/// Radio propagation parameters for trace synthesis.
///
/// Pathloss follows the log-distance model anchored at a 1 m free-space
/// reference; shadowing is a Gudmundson process (exponentially decorrelating
/// with travelled distance). Defaults model a 2.1 GHz macro deployment with
/// a 10 MHz noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct RadioConfig<S: Scalar> {
    /// Log-distance pathloss exponent.
    pub pathloss_exp: S,
    /// Pathloss at the 1 m reference distance, in dB.
    pub ref_loss_db: S,
    /// Shadow fading standard deviation, in dB.
    pub shadow_sigma_db: S,
    /// Shadowing decorrelation distance, in meters.
    pub decorr_m: S,
    /// Thermal noise floor, in dBm.
    pub noise_dbm: S,
}

impl<S: Scalar> Default for RadioConfig<S> {
    fn default() -> Self {
        Self {
            pathloss_exp: S::from_f64(3.5),
            ref_loss_db: friis_reference_loss_db(S::from_f64(2.1e9)),
            shadow_sigma_db: S::from_f64(6.0),
            decorr_m: S::from_f64(50.0),
            noise_dbm: S::from_f64(-104.0),
        }
    }
}

impl<S: Scalar> RadioConfig<S> {
    /// Checks the preconditions for trace synthesis.
    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.pathloss_exp > S::from_f64(2.0)) {
            return Err(ChannelError::InvalidConfig(format!(
                "pathloss exponent must exceed 2, got {}",
                self.pathloss_exp
            )));
        }
        if !(self.shadow_sigma_db >= S::zero()) {
            return Err(ChannelError::InvalidConfig(format!(
                "shadowing sigma must be nonnegative, got {}",
                self.shadow_sigma_db
            )));
        }
        if !(self.decorr_m > S::zero()) {
            return Err(ChannelError::InvalidConfig(format!(
                "decorrelation distance must be positive, got {}",
                self.decorr_m
            )));
        }
        if !self.noise_dbm.is_finite() || !self.ref_loss_db.is_finite() {
            return Err(ChannelError::InvalidConfig(
                "noise floor and reference loss must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Measurement filtering parameters.
///
/// Layer 1 is a causal moving average over `l1_window` ticks; layer 3 is the
/// standard first-order IIR with coefficient `a = 1/2^(l3_k/4)`. Both run in
/// the dB domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub l1_window: usize,
    pub l3_k: u32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { l1_window: 5, l3_k: 4 }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.l1_window < 1 {
            return Err(ChannelError::InvalidConfig(
                "l1_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Full generator configuration for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct ChannelConfig<S: Scalar> {
    pub n_bs: usize,
    pub area: Area<S>,
    pub radio: RadioConfig<S>,
    pub filter: FilterConfig,
}

impl<S: Scalar> Default for ChannelConfig<S> {
    fn default() -> Self {
        Self {
            n_bs: 7,
            area: Area::new(S::from_f64(1300.0), S::from_f64(700.0)),
            radio: RadioConfig::default(),
            filter: FilterConfig::default(),
        }
    }
}

/// Errors from layout generation, mobility, and synthesis.
#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("area {width_m} m x {height_m} m cannot hold {n_bs} stations at {spacing_m} m spacing")]
    AreaTooSmall {
        n_bs: usize,
        width_m: f64,
        height_m: f64,
        spacing_m: f64,
    },
    #[error("station placement did not converge after {attempts} attempts")]
    PlacementExhausted { attempts: usize },
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),
}
