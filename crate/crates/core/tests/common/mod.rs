//! Reference implementations and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use dcc_sim::config::{PriorityScheme, ScenarioConfig, ScenarioKind};
use dcc_sim::control::{ControllerMode, Demand, DemandSet};
use dcc_sim::time::SimTime;

/// Single-hop scenario with the default population.
pub fn single_hop(mode: ControllerMode, priorities: PriorityScheme) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(ScenarioKind::SingleHop, mode);
    c.priorities = priorities;
    c
}

/// Highway scenario used for the quantitative checks: 120 vehicles on a 2 km
/// ring (10 vehicles/km/lane).
pub fn highway(mode: ControllerMode, priorities: PriorityScheme) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(ScenarioKind::Highway, mode);
    c.priorities = priorities;
    c.highway.vehicles = Some(120);
    c.highway.road_length_m = 2000.0;
    c
}

/// Reference tiered allocator. For each priority tier, from the most
/// important down, finds by bisection the largest common fraction that
/// still fits in what the higher tiers left over.
pub fn reference_allocation(demands: &DemandSet, budget: f64) -> BTreeMap<usize, f64> {
    let mut tiers: BTreeMap<u32, Vec<&Demand>> = BTreeMap::new();
    for d in demands.iter() {
        tiers.entry(d.priority).or_default().push(d);
    }
    let mut used = 0.0;
    let mut out = BTreeMap::new();
    for tier in tiers.values() {
        let need = |f: f64| tier.iter().map(|d| f * d.required_airtime).sum::<f64>();
        let fits = |f: f64| used + need(f) <= budget.max(0.0) * (1.0 + 1e-12) + 1e-15;
        let f = if fits(1.0) {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fits(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        used += need(f);
        for d in tier {
            out.insert(d.service_id, f);
        }
    }
    out
}

/// Busy fraction of the `window` slots ending at `now`, computed by marking
/// every unit time slot. Heard intervals are merged, own intervals added on
/// top. Slots before time 0 count as idle.
pub fn naive_busy(heard: &[(u64, u64)], own: &[(u64, u64)], now: u64, window: u64) -> f64 {
    let from = now.saturating_sub(window);
    let mut busy = vec![false; (now - from) as usize];
    for &(s, e) in heard {
        for t in s.max(from)..e.min(now) {
            busy[(t - from) as usize] = true;
        }
    }
    let heard_slots = busy.iter().filter(|&&b| b).count() as u64;
    let own_slots: u64 = own
        .iter()
        .map(|&(s, e)| e.min(now).saturating_sub(s.max(from)))
        .sum();
    ((heard_slots + own_slots) as f64 / window as f64).min(1.0)
}

pub fn secs(t: f64) -> SimTime {
    SimTime::from_secs(t)
}

/// `max - min` of the values.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::MIN, f64::max);
    let min = v.iter().copied().fold(f64::MAX, f64::min);
    max - min
}
