//! Base-station placement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Area, ChannelError};
use crate::Scalar;

/// Minimum allowed distance between any two base stations, in meters.
pub const MIN_BS_SPACING_M: f64 = 100.0;

/// Transmit power assigned to generated stations, in dBm.
pub const DEFAULT_TX_POWER_DBM: f64 = 46.0;

/// Positions and transmit powers of the deployed base stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BsLayout<S: Scalar> {
    /// Station coordinates in meters.
    pub positions: Vec<[S; 2]>,
    /// Per-station transmit power in dBm.
    pub tx_power_dbm: Vec<S>,
}

impl<S: Scalar> BsLayout<S> {
    pub fn n_bs(&self) -> usize {
        self.positions.len()
    }

    /// Distance from a point to station `i`, clamped below at 1 m so the
    /// pathloss reference distance is never undershot.
    pub fn distance_m(&self, i: usize, x: S, y: S) -> S {
        let [bx, by] = self.positions[i];
        let (dx, dy) = (x - bx, y - by);
        (dx * dx + dy * dy).sqrt().max(S::one())
    }

    /// Checks pairwise spacing and transmit-power sanity.
    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.n_bs() < 2 {
            return Err(ChannelError::InvalidConfig(
                "layout needs at least 2 stations".into(),
            ));
        }
        if self.tx_power_dbm.len() != self.n_bs() {
            return Err(ChannelError::InvalidConfig(
                "one transmit power per station required".into(),
            ));
        }
        if self.tx_power_dbm.iter().any(|p| !p.is_finite()) {
            return Err(ChannelError::InvalidConfig(
                "transmit power must be finite".into(),
            ));
        }
        for i in 0..self.n_bs() {
            for j in (i + 1)..self.n_bs() {
                let [xi, yi] = self.positions[i];
                let [xj, yj] = self.positions[j];
                let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
                if d.to_f64() < MIN_BS_SPACING_M {
                    return Err(ChannelError::InvalidConfig(format!(
                        "stations {i} and {j} are {d} m apart, below the {MIN_BS_SPACING_M} m minimum"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Places `n_bs` stations uniformly at random with a minimum mutual spacing
/// of [`MIN_BS_SPACING_M`], by rejection sampling.
///
/// Fails early when a disc-packing bound shows the area cannot fit that many
/// stations at the required spacing, and late if rejection sampling runs out
/// of attempts on a feasible-looking but tight area.
pub fn generate_layout<S: Scalar>(
    n_bs: usize,
    area: Area<S>,
    seed: u64,
) -> Result<BsLayout<S>, ChannelError> {
    if n_bs < 2 {
        return Err(ChannelError::InvalidConfig(format!(
            "need at least 2 stations, got {n_bs}"
        )));
    }
    if area.is_empty() {
        return Err(ChannelError::InvalidConfig("area is empty".into()));
    }

    let w = area.width_m.to_f64();
    let h = area.height_m.to_f64();
    let r = MIN_BS_SPACING_M / 2.0;
    // Spacing-r discs around each station are disjoint and live in the area
    // grown by r on every side; if their total footprint exceeds that region
    // no placement exists.
    let packing_capacity = (w + MIN_BS_SPACING_M) * (h + MIN_BS_SPACING_M);
    if n_bs as f64 * std::f64::consts::PI * r * r > packing_capacity {
        return Err(ChannelError::AreaTooSmall {
            n_bs,
            width_m: w,
            height_m: h,
            spacing_m: MIN_BS_SPACING_M,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 10_000 * n_bs;
    let mut positions: Vec<[S; 2]> = Vec::with_capacity(n_bs);
    let mut attempts = 0;
    while positions.len() < n_bs {
        if attempts >= max_attempts {
            return Err(ChannelError::PlacementExhausted { attempts });
        }
        attempts += 1;
        let x = rng.random_range(0.0..w);
        let y = rng.random_range(0.0..h);
        let ok = positions.iter().all(|p| {
            let (dx, dy) = (p[0].to_f64() - x, p[1].to_f64() - y);
            dx * dx + dy * dy >= MIN_BS_SPACING_M * MIN_BS_SPACING_M
        });
        if ok {
            positions.push([S::from_f64(x), S::from_f64(y)]);
        }
    }

    Ok(BsLayout {
        positions,
        tx_power_dbm: vec![S::from_f64(DEFAULT_TX_POWER_DBM); n_bs],
    })
}
