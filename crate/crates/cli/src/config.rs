//! Run configuration: one TOML file drives every subcommand.
//!
//! Precedence is flag > file > default. Every section maps onto the config
//! struct of the library module it feeds, so the file format and the
//! library validation rules cannot drift apart. Unknown keys anywhere in
//! the file are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use hosim_core::channel::{FilterConfig, RadioConfig};
use hosim_core::env::EnvConfig;
use hosim_core::metrics::RateConfig;
use hosim_core::ppo::PpoConfig;
use hosim_core::protocol::{A3Config, HoTiming, ProtocolConfig, RlfConfig};
use hosim_core::Real;

use crate::CliError;

/// Cell layout synthesis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutSection {
    pub n_bs: usize,
    pub area_w_m: f64,
    pub area_h_m: f64,
}

impl Default for LayoutSection {
    fn default() -> Self {
        Self { n_bs: 7, area_w_m: 1300.0, area_h_m: 700.0 }
    }
}

/// User mobility classes for trace generation: `count` traces per speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilitySection {
    pub speeds_kmh: Vec<f64>,
    pub duration_s: f64,
    pub count: usize,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self { speeds_kmh: vec![30.0, 50.0, 70.0, 90.0], duration_s: 60.0, count: 10 }
    }
}

/// Baseline trigger grid swept by `run-baseline` when no explicit
/// offset/time-to-trigger pair is forced on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub offs_db: Vec<f64>,
    pub ttts_ms: Vec<u64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { offs_db: vec![0.0, 1.0, 2.0], ttts_ms: vec![40, 80, 160] }
    }
}

/// Output locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: String,
}

impl Default for IoSection {
    fn default() -> Self {
        Self { out_dir: "out".into() }
    }
}

/// The complete run configuration.
///
/// `seed` is the single source of randomness: trace generation derives
/// layout/path/fading streams from it, and training copies it into
/// [`PpoConfig::seed`] so a config file plus a command line is always
/// enough to reproduce a run byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub layout: LayoutSection,
    pub radio: RadioConfig<Real>,
    pub mobility: MobilitySection,
    pub filter: FilterConfig,
    pub a3: A3Config<Real>,
    pub rlf: RlfConfig<Real>,
    pub timing: HoTiming,
    pub sweep: SweepSection,
    pub env: EnvConfig<Real>,
    pub ppo: PpoConfig<Real>,
    pub metrics: RateConfig<Real>,
    pub io: IoSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            layout: LayoutSection::default(),
            radio: RadioConfig::default(),
            mobility: MobilitySection::default(),
            filter: FilterConfig::default(),
            a3: A3Config::default(),
            rlf: RlfConfig::default(),
            timing: HoTiming::default(),
            sweep: SweepSection::default(),
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            metrics: RateConfig::default(),
            io: IoSection::default(),
        }
    }
}

impl RunConfig {
    /// Loads a TOML file, or the built-in defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Cross-checks every section. Called once after flag overrides are
    /// applied, so errors name the effective values.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.layout.n_bs < 2 {
            return bad(format!("layout: need at least 2 stations, got {}", self.layout.n_bs));
        }
        if !(self.layout.area_w_m > 0.0) || !(self.layout.area_h_m > 0.0) {
            return bad(format!(
                "layout: area must be positive, got {} x {} m",
                self.layout.area_w_m, self.layout.area_h_m
            ));
        }
        self.radio.validate().map_err(|e| CliError::Config(format!("radio: {e}")))?;
        if self.mobility.speeds_kmh.is_empty() {
            return bad("mobility: at least one speed class is required".into());
        }
        for &s in &self.mobility.speeds_kmh {
            if !(1.0..=120.0).contains(&s) {
                return bad(format!("mobility: speed must be in [1, 120] km/h, got {s}"));
            }
        }
        for window in self.mobility.speeds_kmh.windows(2) {
            if window[1] <= window[0] {
                return bad(format!(
                    "mobility: speeds must be strictly increasing, got {} after {}",
                    window[1], window[0]
                ));
            }
        }
        if !(self.mobility.duration_s > 0.0) {
            return bad(format!(
                "mobility: duration must be positive, got {} s",
                self.mobility.duration_s
            ));
        }
        self.filter.validate().map_err(|e| CliError::Config(format!("filter: {e}")))?;
        self.protocol().validate().map_err(|e| CliError::Config(format!("protocol: {e}")))?;
        if self.sweep.offs_db.is_empty() || self.sweep.ttts_ms.is_empty() {
            return bad("sweep: the offset and time-to-trigger grids must be non-empty".into());
        }
        self.env.validate().map_err(|e| CliError::Config(format!("env: {e}")))?;
        self.ppo.validate().map_err(|e| CliError::Config(format!("ppo: {e}")))?;
        if !(self.metrics.bandwidth_hz > 0.0) || !(self.metrics.tick_s > 0.0) {
            return bad("metrics: bandwidth and tick must be positive".into());
        }
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolConfig<Real> {
        ProtocolConfig { a3: self.a3, rlf: self.rlf, timing: self.timing }
    }

    /// Snapshot of the effective configuration for run manifests.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults_elsewhere() {
        let cfg: RunConfig = toml::from_str(
            "seed = 7\n\n[a3]\nttt_ms = 80\n\n[mobility]\nspeeds_kmh = [50.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.a3.ttt_ms, 80);
        assert_eq!(cfg.a3.hys_db, 1.0, "untouched keys fall back to defaults");
        assert_eq!(cfg.mobility.speeds_kmh, vec![50.0]);
        assert_eq!(cfg.mobility.count, 10);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("sed = 7\n").unwrap_err();
        assert!(err.to_string().contains("sed"), "error should name the bad key: {err}");
        let err = toml::from_str::<RunConfig>("[a3]\nhysteresis = 2.0\n").unwrap_err();
        assert!(err.to_string().contains("hysteresis"), "{err}");
    }

    #[test]
    fn out_of_range_speed_fails_validation() {
        let mut cfg = RunConfig::default();
        cfg.mobility.speeds_kmh = vec![200.0];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("200"), "{err}");
    }

    #[test]
    fn validation_spans_every_section() {
        let mut cfg = RunConfig::default();
        cfg.a3.ttt_ms = 45; // not a tick multiple
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.ppo.minibatch_size = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.layout.n_bs = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_roundtrips_through_json_snapshot() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_value(cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }
}
