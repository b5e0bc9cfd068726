use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::{AnchorSet, Position, Range, RangeSet};
use super::{LocatorError, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Forward-model ranges from `truth` to every anchor with additive Gaussian
/// noise, clamped at zero. `noise_sigma == 0` draws nothing from `rng`.
pub fn simulate_ranges<R: Rng + ?Sized>(
    truth: &Position,
    anchors: &AnchorSet,
    noise_sigma: f64,
    timestamp: f64,
    rng: &mut R,
) -> Result<RangeSet> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(LocatorError::InvalidParameter(format!("noise sigma {noise_sigma}")));
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|e| LocatorError::InvalidParameter(e.to_string()))?;
    let ranges = anchors
        .anchors
        .iter()
        .map(|a| {
            let mut r = truth.distance(&a.position);
            if noise_sigma > 0.0 {
                r += noise.sample(rng);
            }
            Range { anchor_id: a.id.clone(), range: r.max(0.0), timestamp }
        })
        .collect();
    Ok(RangeSet { ranges })
}

/// Durations of one double-sided two-way ranging exchange, expressed in true
/// time. The initiator (tag) measures `t_round1` and `t_reply2`; the responder
/// (anchor) measures `t_reply1` and `t_round2`. Each side's clock runs fast by
/// its drift (dimensionless, e.g. `20e-6` for 20 ppm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TwrExchange {
    pub t_round1: f64,
    pub t_reply1: f64,
    pub t_round2: f64,
    pub t_reply2: f64,
    #[serde(default)]
    pub clock_drift_tag: f64,
    #[serde(default)]
    pub clock_drift_anchor: f64,
}

impl TwrExchange {
    /// Ideal exchange for time of flight `tof` with the given reply delays.
    pub fn ideal(tof: f64, reply1: f64, reply2: f64) -> Self {
        TwrExchange {
            t_round1: 2.0 * tof + reply1,
            t_reply1: reply1,
            t_round2: 2.0 * tof + reply2,
            t_reply2: reply2,
            clock_drift_tag: 0.0,
            clock_drift_anchor: 0.0,
        }
    }

    pub fn with_drift(mut self, tag: f64, anchor: f64) -> Self {
        self.clock_drift_tag = tag;
        self.clock_drift_anchor = anchor;
        self
    }

    /// Durations as read off each device's local clock.
    pub fn measured(&self) -> [f64; 4] {
        let tag = 1.0 + self.clock_drift_tag;
        let anchor = 1.0 + self.clock_drift_anchor;
        [self.t_round1 * tag, self.t_reply1 * anchor, self.t_round2 * anchor, self.t_reply2 * tag]
    }

    pub fn range(&self) -> Result<f64> {
        Ok(ds_twr_time_of_flight(self)? * SPEED_OF_LIGHT)
    }
}

/// Asymmetric DS-TWR time of flight:
/// `(Tround1 * Tround2 - Treply1 * Treply2) / (Tround1 + Tround2 + Treply1 + Treply2)`.
pub fn ds_twr_time_of_flight(ex: &TwrExchange) -> Result<f64> {
    let raw = [ex.t_round1, ex.t_reply1, ex.t_round2, ex.t_reply2];
    if raw.iter().any(|t| !t.is_finite() || *t <= 0.0) {
        return Err(LocatorError::DegenerateExchange("all durations must be positive".into()));
    }
    if ex.t_round1 < ex.t_reply1 || ex.t_round2 < ex.t_reply2 {
        return Err(LocatorError::DegenerateExchange("round trip shorter than reply delay".into()));
    }
    let [round1, reply1, round2, reply2] = ex.measured();
    let denom = round1 + round2 + reply1 + reply2;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(LocatorError::DegenerateExchange(format!("denominator {denom}")));
    }
    // The two products are ~1e-6 s^2 while their difference is ~1e-11 s^2;
    // an error-free product keeps the difference accurate to a few ulps.
    let p = reply1 * reply2;
    let p_err = reply1.mul_add(reply2, -p);
    let numer = round1.mul_add(round2, -p) - p_err;
    Ok(numer / denom)
}
