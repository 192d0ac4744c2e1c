//! V2X traffic sources and how they react to congestion-control grants.

mod cam;
mod cpm;
mod demand;
mod generic;

pub use cam::{
    cam_check, CamGenerator, CamThresholds, CAM_CHECK_INTERVAL_S, CAM_MAX_INTERVAL_S,
    CAM_SIZE_BYTES,
};
pub use cpm::{
    build_cpm, detect_objects, voi, Cpm, DetectedObject, SensorProfile, SensorQuality,
    CPM_HEADER_BYTES, CPM_INTERVAL_S, CPM_OBJECT_BYTES,
};
pub use demand::{DemandEstimate, DemandEstimator};
pub use generic::{Emission, GenericGenerator};

use serde::{Deserialize, Serialize};

use crate::geo::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    Generic1,
    Generic2,
    Generic3,
    Cas,
    Cps,
}

/// How a service turns a reduced grant into less traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adaptation {
    /// Stretch the generation interval.
    Interval,
    /// Shrink messages.
    Size,
    /// Stretch interval and shrink size together.
    Both,
    /// Evaluate the CAM triggering rules less often.
    RuleCheckInterval,
    /// Drop the least valuable objects from each CPM.
    ContentVoi,
}

impl ServiceKind {
    pub fn adaptation(self) -> Adaptation {
        match self {
            ServiceKind::Generic1 => Adaptation::Interval,
            ServiceKind::Generic2 => Adaptation::Size,
            ServiceKind::Generic3 => Adaptation::Both,
            ServiceKind::Cas => Adaptation::RuleCheckInterval,
            ServiceKind::Cps => Adaptation::ContentVoi,
        }
    }

    /// Short label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            ServiceKind::Generic1 => "s1",
            ServiceKind::Generic2 => "s2",
            ServiceKind::Generic3 => "s3",
            ServiceKind::Cas => "cas",
            ServiceKind::Cps => "cps",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceProfile {
    pub service_id: usize,
    pub priority: u32,
    pub kind: ServiceKind,
}

impl ServiceProfile {
    pub fn adaptation(&self) -> Adaptation {
        self.kind.adaptation()
    }
}

/// Kinematic state reported in CAMs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics {
    /// Unwrapped position, metres.
    pub position: Position,
    /// m/s, non-negative.
    pub speed: f64,
    /// Degrees in [0, 360).
    pub heading: f64,
}

/// Clamps a grant ratio to the [0, 1] fraction generators work with.
pub fn rate_fraction(granted_rate: f64, demand: f64) -> f64 {
    if demand <= 0.0 {
        return 1.0;
    }
    (granted_rate / demand).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_adaptation_pairing() {
        assert_eq!(ServiceKind::Generic1.adaptation(), Adaptation::Interval);
        assert_eq!(ServiceKind::Generic2.adaptation(), Adaptation::Size);
        assert_eq!(ServiceKind::Generic3.adaptation(), Adaptation::Both);
        assert_eq!(ServiceKind::Cas.adaptation(), Adaptation::RuleCheckInterval);
        assert_eq!(ServiceKind::Cps.adaptation(), Adaptation::ContentVoi);
    }

    #[test]
    fn fraction_is_clamped() {
        assert_eq!(rate_fraction(5.0, 10.0), 0.5);
        assert_eq!(rate_fraction(20.0, 10.0), 1.0);
        assert_eq!(rate_fraction(0.0, 0.0), 1.0);
    }
}
