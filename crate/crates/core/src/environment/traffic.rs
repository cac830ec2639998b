use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-slot packet-size law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TrafficModel {
    /// Every user sends `bits` every slot.
    Static { bits: u32 },
    /// Each user draws a size uniformly from `min_bits..=max_bits` every slot.
    Bursty { min_bits: u32, max_bits: u32 },
}

impl TrafficModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TrafficModel::Static { bits } if bits >= 1 => Ok(()),
            TrafficModel::Bursty { min_bits, max_bits } if min_bits >= 1 && min_bits <= max_bits => Ok(()),
            other => Err(Error::Config(format!("invalid traffic model {other:?}"))),
        }
    }

    /// `(D_lo, D_hi)` as reported in metrics; equal for static traffic.
    pub fn bounds(&self) -> (u32, u32) {
        match *self {
            TrafficModel::Static { bits } => (bits, bits),
            TrafficModel::Bursty { min_bits, max_bits } => (min_bits, max_bits),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            TrafficModel::Static { .. } => "static",
            TrafficModel::Bursty { .. } => "bursty",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            TrafficModel::Static { bits } => bits,
            TrafficModel::Bursty { min_bits, max_bits } => rng.gen_range(min_bits..=max_bits),
        }
    }
}

/// Validating wrapper around [`TrafficModel::sample`].
pub fn sample_packet_size<R: Rng + ?Sized>(traffic: &TrafficModel, rng: &mut R) -> Result<u32> {
    traffic.validate()?;
    Ok(traffic.sample(rng))
}

/// The eight bursty presets `(20, 30)`, `(20, 40)`, ..., `(20, 100)` bits.
pub fn bursty_presets() -> Vec<(String, TrafficModel)> {
    (3..=10)
        .map(|k| {
            let hi = 10 * k;
            (format!("d20-{hi}"), TrafficModel::Bursty { min_bits: 20, max_bits: hi })
        })
        .collect()
}

pub fn preset(name: &str) -> Option<TrafficModel> {
    bursty_presets().into_iter().find(|(n, _)| n == name).map(|(_, t)| t)
}
