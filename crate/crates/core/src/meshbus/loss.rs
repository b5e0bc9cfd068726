use serde::{Deserialize, Serialize};

use super::MeshError;

/// Broker-side message loss: each publish is dropped with probability
/// `p0 * active / max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LossModel {
    pub base_probability: f64,
    pub active_devices: u32,
    pub max_devices: u32,
    #[serde(default)]
    pub seed: u64,
}

impl LossModel {
    pub fn new(base_probability: f64, active_devices: u32, max_devices: u32, seed: u64) -> Result<Self, MeshError> {
        let m = LossModel { base_probability, active_devices, max_devices, seed };
        m.validate()?;
        Ok(m)
    }

    pub fn lossless() -> Self {
        LossModel { base_probability: 0.0, active_devices: 0, max_devices: 1, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !(0.0..=1.0).contains(&self.base_probability) {
            return Err(MeshError::InvalidLossModel(format!("p0 = {}", self.base_probability)));
        }
        if self.max_devices == 0 || self.active_devices > self.max_devices {
            return Err(MeshError::InvalidLossModel(format!(
                "{} active of {} devices",
                self.active_devices, self.max_devices
            )));
        }
        Ok(())
    }

    pub fn drop_probability(&self) -> f64 {
        (self.base_probability * f64::from(self.active_devices) / f64::from(self.max_devices)).clamp(0.0, 1.0)
    }

    /// Whether the `nth` publish on `topic` is lost. The draw depends only on
    /// seed, topic and ordinal, so for a fixed seed a lower drop probability
    /// never loses a frame that a higher one would deliver.
    pub fn drops(&self, topic: &str, nth: u64) -> bool {
        let p = self.drop_probability();
        p > 0.0 && keyed_unit(self.seed, topic, nth) < p
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Uniform draw in [0, 1) keyed by (seed, topic, n).
pub fn keyed_unit(seed: u64, topic: &str, n: u64) -> f64 {
    let h = splitmix64(splitmix64(seed ^ fnv1a(topic)) ^ n);
    (h >> 11) as f64 / (1u64 << 53) as f64
}
