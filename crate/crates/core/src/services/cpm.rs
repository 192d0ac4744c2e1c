use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub const CPM_HEADER_BYTES: u32 = 35;
pub const CPM_OBJECT_BYTES: u32 = 60;
pub const CPM_INTERVAL_S: f64 = 0.1;

/// Value of information of an object at `distance`, linear from 1 at the
/// sensor down to 0 at `d_max`.
pub fn voi(distance: f64, d_max: f64) -> f64 {
    (1.0 - distance / d_max).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorQuality {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorProfile {
    pub quality: SensorQuality,
    /// Perception range, metres.
    pub d_max: f64,
}

impl SensorProfile {
    pub const fn new(quality: SensorQuality) -> Self {
        let d_max = match quality {
            SensorQuality::Low => 50.0,
            SensorQuality::High => 150.0,
        };
        SensorProfile { quality, d_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedObject {
    pub object_id: u32,
    pub distance: f64,
    pub voi: f64,
}

/// Unit-disc detection: every neighbor strictly inside `d_max` is seen.
pub fn detect_objects<I>(neighbors: I, sensor: &SensorProfile) -> Vec<DetectedObject>
where
    I: IntoIterator<Item = (u32, f64)>,
{
    neighbors
        .into_iter()
        .filter(|&(_, d)| d < sensor.d_max)
        .map(|(object_id, distance)| DetectedObject {
            object_id,
            distance,
            voi: voi(distance, sensor.d_max),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpm {
    pub size: u32,
    pub objects: u32,
    /// Object ids in inclusion order.
    pub included: Vec<u32>,
}

/// Assembles a CPM from the objects whose VoI exceeds `voi_threshold`,
/// highest VoI first, for as long as the message fits in
/// `granted_bits_per_message`. Returns `None` when no object makes it in.
pub fn build_cpm(
    objects: &[DetectedObject],
    granted_bits_per_message: f64,
    voi_threshold: f64,
) -> Option<Cpm> {
    let mut eligible: Vec<&DetectedObject> =
        objects.iter().filter(|o| o.voi > voi_threshold).collect();
    eligible.sort_by(|a, b| {
        b.voi
            .partial_cmp(&a.voi)
            .unwrap_or(Ordering::Equal)
            .then(a.object_id.cmp(&b.object_id))
    });

    let fits = |n: u32| {
        8.0 * f64::from(CPM_HEADER_BYTES + CPM_OBJECT_BYTES * n) <= granted_bits_per_message
    };
    let mut n = 0u32;
    while (n as usize) < eligible.len() && fits(n + 1) {
        n += 1;
    }
    (n > 0).then(|| Cpm {
        size: CPM_HEADER_BYTES + CPM_OBJECT_BYTES * n,
        objects: n,
        included: eligible[..n as usize].iter().map(|o| o.object_id).collect(),
    })
}
