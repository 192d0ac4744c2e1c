//! Run output and the statistics computed from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::services::ServiceKind;
use crate::time::SimTime;

/// Vehicle grouping used in reports: generic-service type in the single-hop
/// scenario, sensor class on the highway.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleClass {
    Type1,
    Type2,
    Type3,
    #[serde(rename = "cas_cps_low")]
    Low,
    #[serde(rename = "cas_cps_high")]
    High,
}

impl VehicleClass {
    pub fn label(self) -> &'static str {
        match self {
            VehicleClass::Type1 => "type1",
            VehicleClass::Type2 => "type2",
            VehicleClass::Type3 => "type3",
            VehicleClass::Low => "cas_cps_low",
            VehicleClass::High => "cas_cps_high",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "type1" => VehicleClass::Type1,
            "type2" => VehicleClass::Type2,
            "type3" => VehicleClass::Type3,
            "cas_cps_low" => VehicleClass::Low,
            "cas_cps_high" => VehicleClass::High,
            _ => return None,
        })
    }
}

/// One controller execution on one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSample {
    pub time: SimTime,
    pub vehicle: usize,
    pub cbr: f64,
    pub delta: f64,
    pub beta: f64,
    pub override_applied: bool,
}

/// Traffic of one service on one vehicle during one control epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceEpoch {
    /// End of the epoch (the control tick that closed it).
    pub time: SimTime,
    pub vehicle: usize,
    pub service_id: usize,
    /// Unconstrained payload bits.
    pub demand_bits: f64,
    pub emitted_bits: f64,
    pub demand_airtime: f64,
    pub emitted_airtime: f64,
    /// Grant fraction decided at the closing tick.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceInfo {
    pub vehicle: usize,
    pub service_id: usize,
    pub kind: ServiceKind,
    pub priority: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsStore {
    pub config: ScenarioConfig,
    /// Indexed by vehicle id.
    pub vehicle_class: Vec<VehicleClass>,
    pub services: Vec<ServiceInfo>,
    pub control: Vec<ControlSample>,
    pub service_epochs: Vec<ServiceEpoch>,
}

impl MetricsStore {
    pub fn new(config: ScenarioConfig) -> Self {
        MetricsStore {
            config,
            vehicle_class: Vec::new(),
            services: Vec::new(),
            control: Vec::new(),
            service_epochs: Vec::new(),
        }
    }

    pub fn warmup(&self) -> SimTime {
        SimTime::from_secs(self.config.warmup_s)
    }

    pub fn epoch(&self) -> SimTime {
        SimTime::from_secs(self.config.control_epoch_s)
    }

    fn priority_of(&self, vehicle: usize, service_id: usize) -> Option<u32> {
        self.services
            .iter()
            .find(|s| s.vehicle == vehicle && s.service_id == service_id)
            .map(|s| s.priority)
    }

    /// Post-warm-up control samples.
    pub fn steady_control(&self) -> impl Iterator<Item = &ControlSample> {
        let warmup = self.warmup();
        self.control.iter().filter(move |s| s.time >= warmup)
    }

    /// Payload satisfaction per (vehicle class, service), post-warm-up.
    pub fn satisfaction(&self) -> Vec<Satisfaction> {
        let warmup = self.warmup();
        let mut acc: BTreeMap<(VehicleClass, ServiceKind), Totals> = BTreeMap::new();
        let kinds: BTreeMap<(usize, usize), (ServiceKind, u32)> = self
            .services
            .iter()
            .map(|s| ((s.vehicle, s.service_id), (s.kind, s.priority)))
            .collect();
        for e in self.service_epochs.iter().filter(|e| e.time > warmup) {
            let (kind, priority) = kinds[&(e.vehicle, e.service_id)];
            let t = acc
                .entry((self.vehicle_class[e.vehicle], kind))
                .or_insert_with(|| Totals {
                    priority,
                    ..Totals::default()
                });
            t.demand_bits += e.demand_bits;
            t.emitted_bits += e.emitted_bits;
            t.demand_airtime += e.demand_airtime;
            t.emitted_airtime += e.emitted_airtime;
        }
        // groups that never reported demand still appear, satisfied by vacuity
        for s in &self.services {
            acc.entry((self.vehicle_class[s.vehicle], s.kind))
                .or_insert_with(|| Totals {
                    priority: self.priority_of(s.vehicle, s.service_id).unwrap_or(0),
                    ..Totals::default()
                });
        }
        acc.into_iter()
            .map(|((class, kind), t)| Satisfaction {
                class,
                kind,
                priority: t.priority,
                ratio: satisfaction_ratio(t.emitted_bits, t.demand_bits),
                airtime_ratio: satisfaction_ratio(t.emitted_airtime, t.demand_airtime),
                zero_demand: t.demand_bits <= 0.0,
                demand_bits: t.demand_bits,
                emitted_bits: t.emitted_bits,
            })
            .collect()
    }

    pub fn satisfaction_of(&self, class: VehicleClass, kind: ServiceKind) -> Option<f64> {
        self.satisfaction()
            .into_iter()
            .find(|s| s.class == class && s.kind == kind)
            .map(|s| s.ratio)
    }

    /// Payload satisfaction of a vehicle class over all of its services.
    pub fn class_satisfaction(&self, class: VehicleClass) -> f64 {
        let warmup = self.warmup();
        let (mut emitted, mut demand) = (0.0, 0.0);
        for e in self.service_epochs.iter().filter(|e| e.time > warmup) {
            if self.vehicle_class[e.vehicle] == class {
                emitted += e.emitted_bits;
                demand += e.demand_bits;
            }
        }
        satisfaction_ratio(emitted, demand)
    }
}

#[derive(Debug, Default)]
struct Totals {
    priority: u32,
    demand_bits: f64,
    emitted_bits: f64,
    demand_airtime: f64,
    emitted_airtime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Satisfaction {
    pub class: VehicleClass,
    pub kind: ServiceKind,
    pub priority: u32,
    pub ratio: f64,
    pub airtime_ratio: f64,
    /// No demand in the horizon; `ratio` is 1 by convention.
    pub zero_demand: bool,
    /// Post-warm-up payload totals over the whole group.
    pub demand_bits: f64,
    pub emitted_bits: f64,
}

/// Emitted over demanded, clamped to [0, 1]; 1 when nothing was demanded.
pub fn satisfaction_ratio(emitted: f64, demand: f64) -> f64 {
    if demand <= 0.0 {
        return 1.0;
    }
    (emitted / demand).clamp(0.0, 1.0)
}

/// Nearest-rank percentile of already sorted values.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub const PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub time_s: f64,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl PercentileRow {
    pub fn from_values(time_s: f64, values: &mut [f64]) -> Self {
        values.sort_by(f64::total_cmp);
        let p = |q| nearest_rank(values, q);
        PercentileRow {
            time_s,
            p5: p(5.0),
            p25: p(25.0),
            p50: p(50.0),
            p75: p(75.0),
            p95: p(95.0),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.p75 - self.p25
    }
}

/// Percentiles across vehicles per control-epoch bucket. Samples are
/// bucketed by `floor(time / epoch)`; empty buckets are omitted.
pub fn percentile_series(samples: &[(SimTime, f64)], epoch: SimTime) -> Vec<PercentileRow> {
    let mut buckets: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &(t, v) in samples {
        buckets
            .entry(t.as_nanos() / epoch.as_nanos())
            .or_default()
            .push(v);
    }
    buckets
        .into_iter()
        .map(|(k, mut vals)| {
            let time = SimTime::from_nanos(k * epoch.as_nanos()).as_secs();
            PercentileRow::from_values(time, &mut vals)
        })
        .collect()
}
