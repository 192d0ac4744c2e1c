//! Scenario configuration (TOML).
//!
//! Only `scenario` and `mode` are required; every other key has a default.
//! Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::control::{ControllerMode, ControllerParams};
use crate::error::{ConfigError, Error};
use crate::services::{CamThresholds, ServiceKind};

/// Number of lanes on the highway.
pub const HIGHWAY_LANES: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SingleHop,
    Highway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityScheme {
    #[default]
    Equal,
    /// S1 > S2 > S3, and CAS > CPS.
    Differentiated,
}

impl PriorityScheme {
    pub fn priority_of(self, kind: ServiceKind) -> u32 {
        match self {
            PriorityScheme::Equal => 0,
            PriorityScheme::Differentiated => match kind {
                ServiceKind::Generic1 | ServiceKind::Cas => 0,
                ServiceKind::Generic2 | ServiceKind::Cps => 1,
                ServiceKind::Generic3 => 2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServicesConfig {
    /// Smallest payload Service 2 shrinks its messages to.
    pub s2_min_size_bytes: u32,
    pub cam: CamThresholds,
    /// Objects at or below this VoI are never reported.
    pub cpm_voi_threshold: f64,
    pub demand_window_s: f64,
}

impl Default for ServicesConfig {
    fn default() -> Self {
        ServicesConfig {
            s2_min_size_bytes: 100,
            cam: CamThresholds::default(),
            cpm_voi_threshold: 0.3,
            demand_window_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleHopConfig {
    pub vehicles: u32,
    pub type1: u32,
    pub type2: u32,
    pub type3: u32,
    /// Grid spacing of the static vehicles, metres.
    pub spacing_m: f64,
}

impl Default for SingleHopConfig {
    fn default() -> Self {
        SingleHopConfig {
            vehicles: 60,
            type1: 20,
            type2: 20,
            type3: 20,
            spacing_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HighwayConfig {
    /// Ring road circumference.
    pub road_length_m: f64,
    pub density_per_km_lane: f64,
    /// Overrides the density-derived vehicle count.
    pub vehicles: Option<u32>,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    pub low_sensor_fraction: f64,
    pub lane_width_m: f64,
    pub mobility_step_s: f64,
    /// Time headway under which a follower reacts to a slower leader.
    pub headway_s: f64,
    /// Free space needed ahead of and behind a lane-change slot.
    pub lane_change_gap_m: f64,
}

impl Default for HighwayConfig {
    fn default() -> Self {
        HighwayConfig {
            road_length_m: 5000.0,
            density_per_km_lane: 20.0,
            vehicles: None,
            speed_min_kmh: 80.0,
            speed_max_kmh: 130.0,
            low_sensor_fraction: 0.5,
            lane_width_m: 3.5,
            mobility_step_s: 0.1,
            headway_s: 2.0,
            lane_change_gap_m: 20.0,
        }
    }
}

impl HighwayConfig {
    pub fn vehicle_count(&self) -> u32 {
        self.vehicles.unwrap_or_else(|| {
            (self.density_per_km_lane * f64::from(HIGHWAY_LANES) * self.road_length_m / 1000.0)
                .round() as u32
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub mode: ControllerMode,
    #[serde(default)]
    pub priorities: PriorityScheme,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Statistics ignore everything before this time.
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_epoch")]
    pub control_epoch_s: f64,
    /// Run every controller at the same instant instead of staggering them.
    #[serde(default)]
    pub synchronized: bool,
    #[serde(default)]
    pub controller: ControllerParams,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub services: ServicesConfig,
    #[serde(default)]
    pub single_hop: SingleHopConfig,
    #[serde(default)]
    pub highway: HighwayConfig,
}

fn default_seed() -> u64 {
    1
}
fn default_duration() -> f64 {
    60.0
}
fn default_warmup() -> f64 {
    10.0
}
fn default_epoch() -> f64 {
    0.2
}

impl ScenarioConfig {
    /// All defaults for the given scenario and controller.
    pub fn new(scenario: ScenarioKind, mode: ControllerMode) -> Self {
        ScenarioConfig {
            scenario,
            mode,
            priorities: PriorityScheme::default(),
            seed: default_seed(),
            duration_s: default_duration(),
            warmup_s: default_warmup(),
            control_epoch_s: default_epoch(),
            synchronized: false,
            controller: ControllerParams::default(),
            channel: ChannelParams::default(),
            services: ServicesConfig::default(),
            single_hop: SingleHopConfig::default(),
            highway: HighwayConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |key: &str, ok: bool, constraint: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::invalid(key, constraint))
            }
        };
        check(
            "duration_s",
            self.duration_s >= 0.0 && self.duration_s.is_finite(),
            "must be a finite value >= 0",
        )?;
        check("warmup_s", self.warmup_s >= 0.0, "must be >= 0")?;
        check("control_epoch_s", self.control_epoch_s > 0.0, "must be > 0")?;
        self.controller.validate()?;

        let ch = &self.channel;
        check(
            "channel.data_rate_bps",
            ch.data_rate_bps > 0.0,
            "must be > 0",
        )?;
        check(
            "channel.per_message_overhead_s",
            ch.per_message_overhead_s >= 0.0,
            "must be >= 0",
        )?;
        check(
            "channel.sensing_range_m",
            ch.sensing_range_m > 0.0,
            "must be > 0",
        )?;
        check("channel.cbr_window_s", ch.cbr_window_s > 0.0, "must be > 0")?;
        check(
            "control_epoch_s",
            (self.control_epoch_s - ch.cbr_window_s).abs() < 1e-12,
            "must equal channel.cbr_window_s (the controller runs on each fresh CBR measurement)",
        )?;

        let sv = &self.services;
        check(
            "services.s2_min_size_bytes",
            sv.s2_min_size_bytes >= 1,
            "must be >= 1",
        )?;
        check(
            "services.cam.position_m",
            sv.cam.position_m > 0.0,
            "must be > 0",
        )?;
        check(
            "services.cam.speed_mps",
            sv.cam.speed_mps > 0.0,
            "must be > 0",
        )?;
        check(
            "services.cam.heading_deg",
            sv.cam.heading_deg > 0.0,
            "must be > 0",
        )?;
        check(
            "services.cpm_voi_threshold",
            (0.0..1.0).contains(&sv.cpm_voi_threshold),
            "must be in [0, 1)",
        )?;
        check(
            "services.demand_window_s",
            sv.demand_window_s > 0.0,
            "must be > 0",
        )?;

        match self.scenario {
            ScenarioKind::SingleHop => {
                let sh = &self.single_hop;
                check(
                    "single_hop.vehicles",
                    sh.type1 + sh.type2 + sh.type3 == sh.vehicles,
                    "must equal type1 + type2 + type3",
                )?;
                check("single_hop.spacing_m", sh.spacing_m > 0.0, "must be > 0")?;
            }
            ScenarioKind::Highway => {
                let hw = &self.highway;
                check(
                    "highway.road_length_m",
                    hw.road_length_m > 0.0,
                    "must be > 0",
                )?;
                check(
                    "highway.density_per_km_lane",
                    hw.density_per_km_lane > 0.0,
                    "must be > 0",
                )?;
                check(
                    "highway.speed_min_kmh",
                    hw.speed_min_kmh > 0.0,
                    "must be > 0",
                )?;
                check(
                    "highway.speed_max_kmh",
                    hw.speed_max_kmh >= hw.speed_min_kmh,
                    "must be >= highway.speed_min_kmh",
                )?;
                check(
                    "highway.low_sensor_fraction",
                    (0.0..=1.0).contains(&hw.low_sensor_fraction),
                    "must be in [0, 1]",
                )?;
                check("highway.lane_width_m", hw.lane_width_m > 0.0, "must be > 0")?;
                check(
                    "highway.mobility_step_s",
                    hw.mobility_step_s > 0.0,
                    "must be > 0",
                )?;
                check("highway.headway_s", hw.headway_s >= 0.0, "must be >= 0")?;
                check(
                    "highway.lane_change_gap_m",
                    hw.lane_change_gap_m >= 0.0,
                    "must be >= 0",
                )?;
                check(
                    "highway.vehicles",
                    hw.vehicle_count() >= 1,
                    "must yield at least one vehicle",
                )?;
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScenarioConfig::from_toml(&text).map_err(|e| match e {
        ConfigError::Parse(msg) => ConfigError::Parse(format!("{}: {msg}", path.display())).into(),
        other => other.into(),
    })
}
