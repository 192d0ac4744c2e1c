use crate::channel::{airtime_of, Channel, Transmission};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::control::{
    airtime_budget, allocate_tiered, apply_priority_override, BetaPolicy, ControllerMode, Demand,
    DemandSet, ServiceLoad,
};
use crate::error::Error;
use crate::geo::Position;
use crate::metrics::{ControlSample, MetricsStore, ServiceEpoch, ServiceInfo};
use crate::services::{build_cpm, detect_objects, CAM_CHECK_INTERVAL_S};
use crate::time::SimTime;

use super::mobility::mobility_step;
use super::queue::EventQueue;
use super::scenario::{EpochTotals, Source, World};

const CPM_INTERVAL: f64 = crate::services::CPM_INTERVAL_S;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    Control {
        vehicle: usize,
    },
    /// Next emission (or CAM rule check) of the rate-controlled generator.
    Real {
        vehicle: usize,
        service: usize,
        token: u64,
    },
    /// Next emission of the unconstrained generator used for demand estimation.
    Shadow {
        vehicle: usize,
        service: usize,
    },
    /// CPM generation instant; drives both the demand and the real CPM.
    CpmTick {
        vehicle: usize,
        service: usize,
    },
    Mobility,
}

/// A single run: world, channel, pending events and collected metrics.
pub struct Simulation {
    world: World,
    channel: Channel,
    queue: EventQueue<Event>,
    positions: Vec<Position>,
    metrics: MetricsStore,
    beta_policy: BetaPolicy,
    epoch: SimTime,
    end: SimTime,
    ticks: u64,
}

/// Builds the configured scenario and runs it to completion.
pub fn run(config: &ScenarioConfig) -> Result<MetricsStore, Error> {
    config.validate()?;
    let world = World::build(config)?;
    Ok(Simulation::new(world).run())
}

impl Simulation {
    pub fn new(world: World) -> Self {
        let cfg = world.config.clone();
        let channel = Channel::new(cfg.channel, world.geometry, world.vehicles.len());
        let positions = world.positions();
        let epoch = SimTime::from_secs(cfg.control_epoch_s);
        let end = SimTime::from_secs(cfg.duration_s);
        // epsilon guards durations that are an exact multiple in decimal only
        let ticks = (cfg.duration_s / cfg.control_epoch_s + 1e-9).floor() as u64;

        let mut metrics = MetricsStore::new(cfg.clone());
        for v in &world.vehicles {
            metrics.vehicle_class.push(v.class);
            for s in &v.services {
                metrics.services.push(ServiceInfo {
                    vehicle: v.id,
                    service_id: s.profile.service_id,
                    kind: s.profile.kind,
                    priority: s.profile.priority,
                });
            }
        }

        let mut sim = Simulation {
            beta_policy: cfg.controller.beta_policy(),
            channel,
            queue: EventQueue::new(),
            positions,
            metrics,
            epoch,
            end,
            ticks,
            world,
        };
        sim.seed_events();
        sim
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    fn schedule(&mut self, at: SimTime, event: Event) {
        if at <= self.end {
            self.queue.push(at, event);
        }
    }

    fn tick_time(&self, vehicle: usize, k: u64) -> SimTime {
        SimTime::from_nanos(k * self.epoch.as_nanos()) - self.world.vehicles[vehicle].phase
    }

    fn seed_events(&mut self) {
        if self.world.config.scenario == ScenarioKind::Highway {
            self.schedule(SimTime::ZERO, Event::Mobility);
        }
        for vehicle in 0..self.world.vehicles.len() {
            if self.ticks >= 1 {
                let t = self.tick_time(vehicle, 1);
                self.schedule(t, Event::Control { vehicle });
            }
            for service in 0..self.world.vehicles[vehicle].services.len() {
                let s = &self.world.vehicles[vehicle].services[service];
                let at = s.start_offset;
                let event = match s.source {
                    Source::Cpm => Event::CpmTick { vehicle, service },
                    _ => Event::Shadow { vehicle, service },
                };
                self.schedule(at, event);
            }
        }
    }

    /// Processes every event up to the configured duration.
    pub fn run(mut self) -> MetricsStore {
        let mut last = SimTime::ZERO;
        while let Some((now, event)) = self.queue.pop() {
            debug_assert!(now >= last, "event causality violated");
            last = now;
            match event {
                Event::Control { vehicle } => self.control_tick(vehicle, now),
                Event::Real {
                    vehicle,
                    service,
                    token,
                } => self.real_event(vehicle, service, token, now),
                Event::Shadow { vehicle, service } => self.shadow_event(vehicle, service, now),
                Event::CpmTick { vehicle, service } => self.cpm_tick(vehicle, service, now),
                Event::Mobility => self.mobility(now),
            }
        }
        self.metrics
    }

    fn mobility(&mut self, now: SimTime) {
        let dt = self.world.config.highway.mobility_step_s;
        if now > SimTime::ZERO {
            let hw = self.world.config.highway.clone();
            mobility_step(&mut self.world.vehicles, &self.world.geometry, &hw, dt);
            self.positions = self.world.positions();
        }
        self.schedule(now + SimTime::from_secs(dt), Event::Mobility);
    }

    fn transmit(&mut self, vehicle: usize, service: usize, size: u32, now: SimTime) {
        let priority = self.world.vehicles[vehicle].services[service]
            .profile
            .priority;
        let tx = Transmission {
            source: vehicle,
            start: now,
            airtime: self.channel.airtime(size),
            size,
            priority,
            position: self.positions[vehicle],
        };
        let receivers = self.channel.broadcast(&tx, &self.positions);
        let t = now.as_secs();
        for r in receivers {
            self.world.vehicles[r].observations.record(t, priority);
        }
        let totals = &mut self.world.vehicles[vehicle].services[service].totals;
        totals.emitted_bits += 8.0 * f64::from(size);
        totals.emitted_airtime += airtime_of(size, &self.channel.params);
    }

    fn record_demand(&mut self, vehicle: usize, service: usize, size: u32, now: SimTime) {
        let params = self.channel.params;
        let s = &mut self.world.vehicles[vehicle].services[service];
        s.estimator.record(now, size);
        s.totals.demand_bits += 8.0 * f64::from(size);
        s.totals.demand_airtime += airtime_of(size, &params);
    }

    fn shadow_event(&mut self, vehicle: usize, service: usize, now: SimTime) {
        let v = &mut self.world.vehicles[vehicle];
        let (size, next) = match &mut v.services[service].source {
            Source::Generic { shadow, .. } => {
                let e = shadow.next_emission();
                (Some(e.size), e.interval)
            }
            Source::Cam { shadow, .. } => (
                shadow.check(&v.kinematics, now.as_secs()),
                CAM_CHECK_INTERVAL_S,
            ),
            Source::Cpm => unreachable!("CPM demand is produced by the CPM tick"),
        };
        if let Some(size) = size {
            self.record_demand(vehicle, service, size, now);
        }
        self.schedule(
            now + SimTime::from_secs(next),
            Event::Shadow { vehicle, service },
        );
    }

    fn real_event(&mut self, vehicle: usize, service: usize, token: u64, now: SimTime) {
        let v = &mut self.world.vehicles[vehicle];
        let s = &mut v.services[service];
        if s.token != token {
            return;
        }
        let (size, next) = match &mut s.source {
            Source::Generic { real, .. } => {
                let e = real.next_emission();
                (Some(e.size), e.interval)
            }
            Source::Cam { real, .. } => (
                real.check(&v.kinematics, now.as_secs()),
                real.check_interval(),
            ),
            Source::Cpm => unreachable!("CPMs are sent from the CPM tick"),
        };
        let at = now + SimTime::from_secs(next);
        s.pending = Some(at);
        if let Some(size) = size {
            self.transmit(vehicle, service, size, now);
        }
        self.schedule(
            at,
            Event::Real {
                vehicle,
                service,
                token,
            },
        );
    }

    fn cpm_tick(&mut self, vehicle: usize, service: usize, now: SimTime) {
        let threshold = self.world.config.services.cpm_voi_threshold;
        let v = &self.world.vehicles[vehicle];
        let sensor = v.sensor.expect("CPS runs on vehicles with a sensor");
        let me = self.positions[vehicle];
        let geometry = self.world.geometry;
        let neighbors = self
            .positions
            .iter()
            .enumerate()
            .filter(|&(id, _)| id != vehicle)
            .map(|(id, p)| (id as u32, geometry.distance(&me, p)));
        let objects = detect_objects(neighbors, &sensor);

        let s = &v.services[service];
        let fraction = s.fraction;
        let budget = if fraction >= 1.0 {
            f64::INFINITY
        } else {
            fraction * s.payload_rate * CPM_INTERVAL
        };

        if let Some(full) = build_cpm(&objects, f64::INFINITY, threshold) {
            self.record_demand(vehicle, service, full.size, now);
        }
        if fraction > 0.0 {
            if let Some(cpm) = build_cpm(&objects, budget, threshold) {
                self.transmit(vehicle, service, cpm.size, now);
            }
        }
        self.schedule(
            now + SimTime::from_secs(CPM_INTERVAL),
            Event::CpmTick { vehicle, service },
        );
    }

    fn control_tick(&mut self, vehicle: usize, now: SimTime) {
        let cbr = self.channel.measure_cbr(vehicle, now);
        let params = self.channel.params;
        let mode = self.world.config.mode;
        let v = &mut self.world.vehicles[vehicle];

        let estimates: Vec<_> = v
            .services
            .iter_mut()
            .map(|s| s.estimator.estimate(now))
            .collect();
        let loads: Vec<ServiceLoad> = estimates
            .iter()
            .map(|e| ServiceLoad {
                avg_payload_bytes: e.avg_payload_bytes,
                messages_per_s: e.messages_per_s,
            })
            .collect();
        let required = airtime_budget(v.controller.delta, &loads, &params).required_airtime;
        let demands = DemandSet::new(
            v.services
                .iter()
                .zip(&estimates)
                .zip(&required)
                .map(|((s, e), &airtime)| Demand {
                    service_id: s.profile.service_id,
                    priority: s.profile.priority,
                    required_rate: e.rate_bps,
                    required_airtime: airtime,
                    served_last_epoch: s.served_last_epoch,
                })
                .collect(),
        )
        .expect("service ids are unique and estimates non-negative");

        if mode == ControllerMode::Dpa {
            v.controller.beta = self.beta_policy.compute_beta(&demands);
        }
        let delta = v.controller.limeric_update(cbr);
        let mut allocation = allocate_tiered(&demands, delta);
        if mode == ControllerMode::Dpa {
            let observed = v.observations.lowest_active_priority(now.as_secs());
            allocation = apply_priority_override(allocation, &demands, observed);
        }

        self.metrics.control.push(ControlSample {
            time: now,
            vehicle,
            cbr,
            delta,
            beta: v.controller.beta,
            override_applied: allocation.override_applied,
        });

        let mut fractions = Vec::with_capacity(estimates.len());
        for (i, estimate) in estimates.iter().enumerate() {
            let s = &mut v.services[i];
            let grant = allocation
                .grant(s.profile.service_id)
                .copied()
                .expect("every demand receives a grant");
            let fraction = if estimate.rate_bps > 0.0 {
                grant.fraction
            } else {
                0.0
            };
            s.granted_rate = grant.granted_rate;
            s.served_last_epoch = grant.granted_rate > 0.0;
            s.payload_rate = estimate.payload_rate_bps;

            let totals = std::mem::take(&mut s.totals);
            let record = epoch_record(now, vehicle, s.profile.service_id, totals, fraction);
            self.metrics.service_epochs.push(record);
            fractions.push(fraction);
        }
        for (i, fraction) in fractions.into_iter().enumerate() {
            self.adapt(vehicle, i, fraction, now);
        }

        let n = now + self.world.vehicles[vehicle].phase;
        let k = n.as_nanos() / self.epoch.as_nanos();
        if k < self.ticks {
            let t = self.tick_time(vehicle, k + 1);
            self.schedule(t, Event::Control { vehicle });
        }
    }

    /// Hands a new grant fraction to a service and reschedules its
    /// generator: an idle generator drops its pending emission, a resumed one
    /// fires now, and a running one has the remaining wait stretched by the
    /// change of interval scale.
    fn adapt(&mut self, vehicle: usize, service: usize, fraction: f64, now: SimTime) {
        let s = &mut self.world.vehicles[vehicle].services[service];
        s.fraction = fraction;
        let (before, after, idle) = match &mut s.source {
            Source::Generic { real, .. } => {
                let before = real.interval_scale();
                real.adapt(fraction);
                (before, real.interval_scale(), real.is_idle())
            }
            Source::Cam { real, .. } => {
                let before = real.check_interval();
                real.adapt(fraction);
                (before, real.check_interval(), real.is_idle())
            }
            Source::Cpm => return,
        };

        if idle {
            if s.pending.take().is_some() {
                s.token += 1;
            }
            return;
        }
        let at = match s.pending {
            None => now.max(s.start_offset),
            Some(p) if before != after => {
                let remaining = p.saturating_sub(now).as_secs() * after / before;
                now + SimTime::from_secs(remaining)
            }
            Some(_) => return,
        };
        s.token += 1;
        s.pending = Some(at);
        let token = s.token;
        self.schedule(
            at,
            Event::Real {
                vehicle,
                service,
                token,
            },
        );
    }
}

fn epoch_record(
    time: SimTime,
    vehicle: usize,
    service_id: usize,
    t: EpochTotals,
    fraction: f64,
) -> ServiceEpoch {
    ServiceEpoch {
        time,
        vehicle,
        service_id,
        demand_bits: t.demand_bits,
        emitted_bits: t.emitted_bits,
        demand_airtime: t.demand_airtime,
        emitted_airtime: t.emitted_airtime,
        fraction,
    }
}
