use std::collections::BTreeMap;

use serde_json::json;

use super::mode::Mode;
use crate::habitat::DeviceSpec;
use crate::meshbus::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    essential: bool,
    active: bool,
}

/// Activation state of every device in the home. Essential devices are
/// always active.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceRegistry {
    devices: BTreeMap<String, Entry>,
}

impl DeviceRegistry {
    pub fn from_specs(specs: &[DeviceSpec]) -> Self {
        DeviceRegistry {
            devices: specs.iter().map(|d| (d.id.clone(), Entry { essential: d.essential, active: true })).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn active_count(&self) -> u32 {
        self.devices.values().filter(|e| e.active).count() as u32
    }

    pub fn is_active(&self, id: &str) -> Option<bool> {
        self.devices.get(id).map(|e| e.active)
    }

    /// Retained activation frames for every device.
    pub fn state_frames(&self) -> Vec<Frame> {
        self.devices.iter().map(|(id, e)| device_frame(id, e.active)).collect()
    }
}

fn device_frame(id: &str, active: bool) -> Frame {
    Frame::retained(format!("sys/device/{id}/active"), json!(active))
}

/// Semi-automated operation switches off every non-essential device;
/// automated operation switches everything on. Returns one retained frame per
/// device whose state changed.
pub fn apply_registry_mode(registry: &mut DeviceRegistry, mode: Mode) -> Vec<Frame> {
    let mut out = Vec::new();
    for (id, e) in registry.devices.iter_mut() {
        let want = e.essential || mode == Mode::Automated;
        if e.active != want {
            e.active = want;
            out.push(device_frame(id, want));
        }
    }
    out
}
