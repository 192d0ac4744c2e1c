use std::cmp::Ordering;

use crate::config::{HighwayConfig, HIGHWAY_LANES};
use crate::geo::Geometry;

use super::scenario::Vehicle;

/// Forward gap from `from` to `to` along a ring of length `len`.
fn ahead(from: f64, to: f64, len: f64) -> f64 {
    (to - from).rem_euclid(len)
}

/// Vehicle ids grouped by lane.
fn lanes(vehicles: &[Vehicle]) -> Vec<Vec<usize>> {
    let mut lanes = vec![Vec::new(); HIGHWAY_LANES as usize];
    for v in vehicles {
        lanes[v.lane as usize].push(v.id);
    }
    lanes
}

/// Nearest vehicle ahead of `id` in `lane`, with its gap.
fn leader(vehicles: &[Vehicle], order: &[usize], id: usize, len: f64) -> Option<(usize, f64)> {
    let x = vehicles[id].kinematics.position.x.rem_euclid(len);
    order
        .iter()
        .filter(|&&o| o != id)
        .map(|&o| {
            (
                o,
                ahead(x, vehicles[o].kinematics.position.x.rem_euclid(len), len),
            )
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
}

fn lane_is_free(vehicles: &[Vehicle], lane: u32, x: f64, gap: f64, len: f64) -> bool {
    vehicles.iter().filter(|v| v.lane == lane).all(|v| {
        let d = ahead(x, v.kinematics.position.x.rem_euclid(len), len);
        d.min(len - d) >= gap
    })
}

/// Advances highway traffic by `dt` seconds.
///
/// Each vehicle cruises at its target speed. When a slower leader is closer
/// than `headway_s` seconds of travel, it moves to lane + 1 if that lane has
/// no vehicle within `lane_change_gap_m`, then tries lane - 1, and otherwise
/// follows at the leader's speed. Decisions use the state at the start of the
/// step; lane changes are applied in id order so two vehicles do not merge
/// into the same gap. Longitudinal positions are odometer readings; the
/// geometry wraps them onto the ring.
pub fn mobility_step(vehicles: &mut [Vehicle], geometry: &Geometry, cfg: &HighwayConfig, dt: f64) {
    let len = match geometry {
        Geometry::Ring { length_m } => *length_m,
        Geometry::Plane => f64::INFINITY,
    };
    let order = lanes(vehicles);
    let speeds: Vec<f64> = vehicles.iter().map(|v| v.kinematics.speed).collect();

    let mut decisions = Vec::with_capacity(vehicles.len());
    for v in vehicles.iter() {
        let lead = leader(vehicles, &order[v.lane as usize], v.id, len);
        let blocked = lead
            .filter(|&(l, gap)| gap < v.target_speed * cfg.headway_s && speeds[l] < v.target_speed);
        decisions.push(blocked.map(|(l, _)| speeds[l]));
    }

    for id in 0..vehicles.len() {
        let speed = match decisions[id] {
            None => vehicles[id].target_speed,
            Some(leader_speed) => {
                let x = vehicles[id].kinematics.position.x.rem_euclid(len);
                let lane = vehicles[id].lane;
                let mut candidates = Vec::with_capacity(2);
                if lane + 1 < HIGHWAY_LANES {
                    candidates.push(lane + 1);
                }
                if lane > 0 {
                    candidates.push(lane - 1);
                }
                let target = candidates
                    .into_iter()
                    .find(|&c| lane_is_free(vehicles, c, x, cfg.lane_change_gap_m, len));
                match target {
                    Some(c) => {
                        vehicles[id].lane = c;
                        vehicles[id].kinematics.position.y = f64::from(c) * cfg.lane_width_m;
                        vehicles[id].target_speed
                    }
                    None => leader_speed,
                }
            }
        };
        let v = &mut vehicles[id];
        v.kinematics.speed = speed;
        v.kinematics.position.x += speed * dt;
    }
}
