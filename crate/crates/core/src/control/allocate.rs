use std::collections::BTreeMap;

use crate::channel::ChannelParams;
use crate::error::ControlError;

/// What one service currently asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub service_id: usize,
    /// Lower value means higher priority.
    pub priority: u32,
    /// bits/s, including lower-layer headers.
    pub required_rate: f64,
    /// Fraction of channel time needed to carry `required_rate`.
    pub required_airtime: f64,
    pub served_last_epoch: bool,
}

/// Demands of all services on one vehicle, unique by service id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DemandSet {
    entries: Vec<Demand>,
}

impl DemandSet {
    pub fn new(entries: Vec<Demand>) -> Result<Self, ControlError> {
        for (i, d) in entries.iter().enumerate() {
            if d.required_rate.is_nan()
                || d.required_airtime.is_nan()
                || d.required_rate < 0.0
                || d.required_airtime < 0.0
            {
                return Err(ControlError::NegativeDemand(d.service_id));
            }
            if entries[..i].iter().any(|o| o.service_id == d.service_id) {
                return Err(ControlError::DuplicateService(d.service_id));
            }
        }
        Ok(DemandSet { entries })
    }

    pub fn iter(&self) -> impl Iterator<Item = &Demand> {
        self.entries.iter()
    }

    pub fn get(&self, service_id: usize) -> Option<&Demand> {
        self.entries.iter().find(|d| d.service_id == service_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Average traffic shape of a service over the demand-estimation window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceLoad {
    pub avg_payload_bytes: f64,
    pub messages_per_s: f64,
}

/// Airtime budget for one control epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct AirtimeBudget {
    pub budget: f64,
    /// Required airtime fraction per service, in input order.
    pub required_airtime: Vec<f64>,
}

/// Converts each service's rate-domain load into the airtime domain the
/// duty-cycle limit `delta` is expressed in.
///
/// A service with zero average message size has no defined conversion and is
/// treated as needing no airtime.
pub fn airtime_budget(delta: f64, loads: &[ServiceLoad], channel: &ChannelParams) -> AirtimeBudget {
    let required_airtime = loads
        .iter()
        .map(|l| {
            if l.avg_payload_bytes <= 0.0 || l.messages_per_s <= 0.0 {
                return 0.0;
            }
            // Per-message airtime is affine in size, so the airtime of the mean
            // size is the mean airtime.
            let per_msg = channel.per_message_overhead_s
                + 8.0 * (l.avg_payload_bytes + f64::from(channel.header_bytes))
                    / channel.data_rate_bps;
            l.messages_per_s * per_msg
        })
        .collect();
    AirtimeBudget {
        budget: delta,
        required_airtime,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grant {
    /// bits/s
    pub granted_rate: f64,
    pub granted_airtime: f64,
    /// granted / required; 1 for services with nothing to send.
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    pub per_service: BTreeMap<usize, Grant>,
    pub override_applied: bool,
}

impl Allocation {
    pub fn grant(&self, service_id: usize) -> Option<&Grant> {
        self.per_service.get(&service_id)
    }

    pub fn total_airtime(&self) -> f64 {
        self.per_service.values().map(|g| g.granted_airtime).sum()
    }
}

/// Distributes `budget` (airtime) tier by tier from the highest priority down.
///
/// A tier whose total demand fits in what is left is fully served. Otherwise
/// every service in the tier gets the same fraction of its demand and all
/// lower tiers get nothing.
pub fn allocate_tiered(demands: &DemandSet, budget: f64) -> Allocation {
    let mut tiers: BTreeMap<u32, Vec<&Demand>> = BTreeMap::new();
    for d in demands.iter() {
        tiers.entry(d.priority).or_default().push(d);
    }

    let mut remaining = budget.max(0.0);
    let mut per_service = BTreeMap::new();
    for tier in tiers.values() {
        let tier_demand: f64 = tier.iter().map(|d| d.required_airtime).sum();
        let fraction = if tier_demand <= remaining {
            1.0
        } else {
            remaining / tier_demand
        };
        for d in tier {
            per_service.insert(
                d.service_id,
                Grant {
                    granted_rate: fraction * d.required_rate,
                    granted_airtime: fraction * d.required_airtime,
                    fraction,
                },
            );
        }
        remaining = if fraction < 1.0 {
            0.0
        } else {
            remaining - tier_demand
        };
    }

    Allocation {
        per_service,
        override_applied: false,
    }
}

/// Lets the vehicle's highest-priority service send its full demand when a
/// neighbor is still transmitting something of strictly lower priority.
pub fn apply_priority_override(
    mut alloc: Allocation,
    demands: &DemandSet,
    observed_lowest: Option<u32>,
) -> Allocation {
    let Some(observed) = observed_lowest else {
        return alloc;
    };
    let top = demands
        .iter()
        .filter(|d| d.required_rate > 0.0)
        .min_by_key(|d| (d.priority, d.service_id));
    let Some(top) = top else {
        return alloc;
    };
    if observed <= top.priority {
        return alloc;
    }
    if let Some(g) = alloc.per_service.get_mut(&top.service_id) {
        if g.fraction < 1.0 {
            *g = Grant {
                granted_rate: top.required_rate,
                granted_airtime: top.required_airtime,
                fraction: 1.0,
            };
            alloc.override_applied = true;
        }
    }
    alloc
}
