use serde::{Deserialize, Serialize};

use super::Kinematics;

pub const CAM_SIZE_BYTES: u32 = 250;
/// Default period at which the triggering rules are evaluated.
pub const CAM_CHECK_INTERVAL_S: f64 = 0.1;
pub const CAM_MAX_INTERVAL_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CamThresholds {
    pub position_m: f64,
    pub speed_mps: f64,
    pub heading_deg: f64,
}

impl Default for CamThresholds {
    fn default() -> Self {
        CamThresholds {
            position_m: 4.0,
            speed_mps: 0.5,
            heading_deg: 4.0,
        }
    }
}

fn heading_change(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// CAM triggering rule: any kinematic change beyond its threshold, or the
/// maximum inter-CAM interval reached.
pub fn cam_check(
    kin: &Kinematics,
    last_cam: &Kinematics,
    last_time: f64,
    now: f64,
    th: &CamThresholds,
) -> bool {
    kin.position.distance(&last_cam.position) > th.position_m
        || (kin.speed - last_cam.speed).abs() > th.speed_mps
        || heading_change(kin.heading, last_cam.heading) > th.heading_deg
        // tolerate float noise in the accumulated check times
        || now - last_time >= CAM_MAX_INTERVAL_S - 1e-9
}

/// State of one CAM generation process.
#[derive(Debug, Clone)]
pub struct CamGenerator {
    thresholds: CamThresholds,
    last: Option<(Kinematics, f64)>,
    check_interval: f64,
    fraction: f64,
}

impl CamGenerator {
    pub fn new(thresholds: CamThresholds) -> Self {
        CamGenerator {
            thresholds,
            last: None,
            check_interval: CAM_CHECK_INTERVAL_S,
            fraction: 1.0,
        }
    }

    pub fn check_interval(&self) -> f64 {
        self.check_interval
    }

    pub fn is_idle(&self) -> bool {
        self.fraction <= 0.0
    }

    /// Evaluates the rules at `now`; on a trigger, remembers the CAM content
    /// and returns its size.
    pub fn check(&mut self, kin: &Kinematics, now: f64) -> Option<u32> {
        let fire = match &self.last {
            None => true,
            Some((last, t)) => cam_check(kin, last, *t, now, &self.thresholds),
        };
        if fire {
            self.last = Some((*kin, now));
            Some(CAM_SIZE_BYTES)
        } else {
            None
        }
    }

    /// Slows the rule evaluation to `0.1 / f` seconds, capped at the maximum
    /// CAM interval.
    pub fn adapt(&mut self, fraction: f64) {
        let f = fraction.clamp(0.0, 1.0);
        self.fraction = f;
        if f > 0.0 {
            self.check_interval = (CAM_CHECK_INTERVAL_S / f).min(CAM_MAX_INTERVAL_S);
        }
    }
}
