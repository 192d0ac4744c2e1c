use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ScenarioConfig, ScenarioKind, HIGHWAY_LANES};
use crate::control::{ControllerState, PriorityObservation};
use crate::error::ConfigError;
use crate::geo::{Geometry, Position};
use crate::metrics::VehicleClass;
use crate::services::{
    CamGenerator, DemandEstimator, GenericGenerator, Kinematics, SensorProfile, SensorQuality,
    ServiceKind, ServiceProfile,
};
use crate::time::SimTime;

/// Seeded stream `stream` of the run's random source.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The traffic machinery behind one service. The shadow copies run
/// unconstrained and feed demand estimation.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Source {
    Generic {
        real: GenericGenerator,
        shadow: GenericGenerator,
    },
    Cam {
        real: CamGenerator,
        shadow: CamGenerator,
    },
    /// CPM content is rebuilt from the sensors at every tick.
    Cpm,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct EpochTotals {
    pub demand_bits: f64,
    pub emitted_bits: f64,
    pub demand_airtime: f64,
    pub emitted_airtime: f64,
}

#[derive(Debug, Clone)]
pub struct ServiceInstance {
    pub profile: ServiceProfile,
    pub source: Source,
    pub estimator: DemandEstimator,
    /// Granted / required rate from the latest control tick.
    pub fraction: f64,
    pub served_last_epoch: bool,
    pub granted_rate: f64,
    /// Latest unconstrained payload rate estimate, bits/s.
    pub payload_rate: f64,
    /// Offset of the first shadow (or CPM) event.
    pub start_offset: SimTime,
    pub(crate) pending: Option<SimTime>,
    pub(crate) token: u64,
    pub(crate) totals: EpochTotals,
}

impl ServiceInstance {
    fn new(
        profile: ServiceProfile,
        source: Source,
        estimator: DemandEstimator,
        start_offset: SimTime,
    ) -> Self {
        ServiceInstance {
            profile,
            source,
            estimator,
            fraction: 0.0,
            served_last_epoch: true,
            granted_rate: 0.0,
            payload_rate: 0.0,
            start_offset,
            pending: None,
            token: 0,
            totals: EpochTotals::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: usize,
    pub class: VehicleClass,
    pub kinematics: Kinematics,
    pub lane: u32,
    pub target_speed: f64,
    pub sensor: Option<SensorProfile>,
    pub services: Vec<ServiceInstance>,
    pub controller: ControllerState,
    pub observations: PriorityObservation,
    /// Control ticks happen at `k * epoch - phase`.
    pub phase: SimTime,
}

/// Vehicles plus the road they live on.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ScenarioConfig,
    pub geometry: Geometry,
    pub vehicles: Vec<Vehicle>,
}

impl World {
    pub fn build(config: &ScenarioConfig) -> Result<World, ConfigError> {
        match config.scenario {
            ScenarioKind::SingleHop => build_single_hop(config),
            ScenarioKind::Highway => build_highway(config),
        }
    }

    /// Current on-road positions, indexed by vehicle id.
    pub fn positions(&self) -> Vec<Position> {
        self.vehicles
            .iter()
            .map(|v| self.geometry.wrap(v.kinematics.position))
            .collect()
    }
}

fn service_kinds(class: VehicleClass) -> &'static [ServiceKind] {
    match class {
        VehicleClass::Type1 => &[ServiceKind::Generic1],
        VehicleClass::Type2 => &[ServiceKind::Generic1, ServiceKind::Generic2],
        VehicleClass::Type3 => &[
            ServiceKind::Generic1,
            ServiceKind::Generic2,
            ServiceKind::Generic3,
        ],
        VehicleClass::Low | VehicleClass::High => &[ServiceKind::Cas, ServiceKind::Cps],
    }
}

fn nominal_interval(kind: ServiceKind) -> f64 {
    match kind {
        ServiceKind::Generic1 | ServiceKind::Generic3 | ServiceKind::Cas | ServiceKind::Cps => 0.1,
        ServiceKind::Generic2 => 0.01,
    }
}

fn make_vehicle(
    config: &ScenarioConfig,
    id: usize,
    class: VehicleClass,
    layout_rng: &mut ChaCha8Rng,
) -> Result<Vehicle, ConfigError> {
    let window = SimTime::from_secs(config.services.demand_window_s);
    let services = service_kinds(class)
        .iter()
        .enumerate()
        .map(|(sid, &kind)| {
            let profile = ServiceProfile {
                service_id: sid,
                priority: config.priorities.priority_of(kind),
                kind,
            };
            let source = match kind {
                ServiceKind::Generic1 | ServiceKind::Generic2 | ServiceKind::Generic3 => {
                    let stream = 1 + (id as u64) * 16 + sid as u64;
                    let rng = stream_rng(config.seed, stream);
                    let g = GenericGenerator::new(kind, rng, config.services.s2_min_size_bytes);
                    Source::Generic {
                        real: g.clone(),
                        shadow: g,
                    }
                }
                ServiceKind::Cas => Source::Cam {
                    real: CamGenerator::new(config.services.cam),
                    shadow: CamGenerator::new(config.services.cam),
                },
                ServiceKind::Cps => Source::Cpm,
            };
            let offset = layout_rng.random_range(0.0..nominal_interval(kind));
            ServiceInstance::new(
                profile,
                source,
                DemandEstimator::new(window, SimTime::ZERO, config.channel.header_bytes),
                SimTime::from_secs(offset),
            )
        })
        .collect();

    let epoch_ns = SimTime::from_secs(config.control_epoch_s).as_nanos();
    let phase = if config.synchronized {
        SimTime::ZERO
    } else {
        SimTime::from_nanos(layout_rng.random_range(0..epoch_ns))
    };

    Ok(Vehicle {
        id,
        class,
        kinematics: Kinematics::default(),
        lane: 0,
        target_speed: 0.0,
        sensor: None,
        services,
        controller: ControllerState::new(&config.controller, config.mode)?,
        observations: PriorityObservation::new(config.controller.observation_window_s),
        phase,
    })
}

/// Static topology where every vehicle hears every other one.
pub fn build_single_hop(config: &ScenarioConfig) -> Result<World, ConfigError> {
    let sh = &config.single_hop;
    if sh.type1 + sh.type2 + sh.type3 != sh.vehicles {
        return Err(ConfigError::invalid(
            "single_hop.vehicles",
            "must equal type1 + type2 + type3",
        ));
    }
    let mut rng = stream_rng(config.seed, 0);
    let classes = std::iter::repeat_n(VehicleClass::Type1, sh.type1 as usize)
        .chain(std::iter::repeat_n(VehicleClass::Type2, sh.type2 as usize))
        .chain(std::iter::repeat_n(VehicleClass::Type3, sh.type3 as usize));

    let columns = (f64::from(sh.vehicles).sqrt().ceil() as usize).max(1);
    let mut vehicles = Vec::with_capacity(sh.vehicles as usize);
    for (id, class) in classes.enumerate() {
        let mut v = make_vehicle(config, id, class, &mut rng)?;
        v.kinematics.position = Position::new(
            (id % columns) as f64 * sh.spacing_m,
            (id / columns) as f64 * sh.spacing_m,
        );
        vehicles.push(v);
    }

    let span = columns as f64 * sh.spacing_m * std::f64::consts::SQRT_2;
    if span > config.channel.sensing_range_m {
        return Err(ConfigError::invalid(
            "single_hop.spacing_m",
            "vehicles would not all be within channel.sensing_range_m of each other",
        ));
    }

    Ok(World {
        config: config.clone(),
        geometry: Geometry::Plane,
        vehicles,
    })
}

/// Six-lane ring road with half the fleet on short-range sensors.
pub fn build_highway(config: &ScenarioConfig) -> Result<World, ConfigError> {
    let hw = &config.highway;
    let n = hw.vehicle_count() as usize;
    if n == 0 {
        return Err(ConfigError::invalid(
            "highway.vehicles",
            "must yield at least one vehicle",
        ));
    }
    let mut rng = stream_rng(config.seed, 0);

    let n_low = (n as f64 * hw.low_sensor_fraction).round() as usize;
    let mut qualities: Vec<SensorQuality> = (0..n)
        .map(|i| {
            if i < n_low {
                SensorQuality::Low
            } else {
                SensorQuality::High
            }
        })
        .collect();
    qualities.shuffle(&mut rng);

    let lanes = HIGHWAY_LANES as usize;
    let mut per_lane = vec![0usize; lanes];
    for i in 0..n {
        per_lane[i % lanes] += 1;
    }

    let mut vehicles = Vec::with_capacity(n);
    for (id, quality) in qualities.into_iter().enumerate() {
        let class = match quality {
            SensorQuality::Low => VehicleClass::Low,
            SensorQuality::High => VehicleClass::High,
        };
        let mut v = make_vehicle(config, id, class, &mut rng)?;
        let lane = id % lanes;
        let slot = id / lanes;
        let spacing = hw.road_length_m / per_lane[lane] as f64;
        let jitter = rng.random_range(-0.25..0.25) * spacing;
        let stagger = lane as f64 * spacing / lanes as f64;
        let x = (slot as f64 * spacing + stagger + jitter).rem_euclid(hw.road_length_m);
        let speed = rng.random_range(hw.speed_min_kmh..=hw.speed_max_kmh) / 3.6;
        v.lane = lane as u32;
        v.target_speed = speed;
        v.kinematics = Kinematics {
            position: Position::new(x, lane as f64 * hw.lane_width_m),
            speed,
            heading: 0.0,
        };
        v.sensor = Some(SensorProfile::new(quality));
        vehicles.push(v);
    }

    Ok(World {
        config: config.clone(),
        geometry: Geometry::Ring {
            length_m: hw.road_length_m,
        },
        vehicles,
    })
}
