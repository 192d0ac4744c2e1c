//! Congestion control: the LIMERIC duty-cycle update, demand-proportional
//! gain adaptation, tiered service allocation and the neighbor-driven
//! priority override.

mod allocate;
mod observe;

pub use allocate::{
    airtime_budget, allocate_tiered, apply_priority_override, AirtimeBudget, Allocation, Demand,
    DemandSet, Grant, ServiceLoad,
};
pub use observe::PriorityObservation;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Which controller a vehicle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    /// Standard adaptive DCC: constant gain, no override.
    AdaptiveDcc,
    /// Demand- and priority-aware: gain follows the vehicle's demand and the
    /// highest-priority service may override the local limit.
    Dpa,
}

impl ControllerMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::AdaptiveDcc => "adaptive_dcc",
            ControllerMode::Dpa => "dpa",
        }
    }
}

/// Tunables shared by every controller in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerParams {
    pub alpha: f64,
    /// Gain used by legacy stations, and the reference gain for demand scaling.
    pub beta_base: f64,
    /// Reference demand (bits/s) that maps to `beta_base`.
    pub r_base_bps: f64,
    pub cbr_target: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Per-step offset clamps. Disabled by `gain_clamps = false`.
    pub gain_up_max: f64,
    pub gain_down_max: f64,
    pub gain_clamps: bool,
    /// Gain used when no served service reports demand, as a fraction of `beta_base`.
    pub zero_demand_beta_ratio: f64,
    /// Horizon for remembering priorities heard from neighbors, seconds.
    pub observation_window_s: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            alpha: 0.016,
            beta_base: 0.0012,
            r_base_bps: 17_000.0,
            cbr_target: 0.68,
            delta_min: 0.0006,
            delta_max: 0.03,
            gain_up_max: 0.0005,
            gain_down_max: 0.00025,
            gain_clamps: true,
            zero_demand_beta_ratio: 0.01,
            observation_window_s: 1.0,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, ok: bool, constraint: &str| {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::invalid(
                    format!("controller.{key}"),
                    constraint,
                ))
            }
        };
        range(
            "alpha",
            self.alpha > 0.0 && self.alpha < 1.0,
            "must be in (0, 1)",
        )?;
        range("beta_base", self.beta_base > 0.0, "must be > 0")?;
        range("r_base_bps", self.r_base_bps > 0.0, "must be > 0")?;
        range(
            "cbr_target",
            self.cbr_target > 0.0 && self.cbr_target < 1.0,
            "must be in (0, 1)",
        )?;
        range(
            "delta_min",
            (0.0..=1.0).contains(&self.delta_min),
            "must be in [0, 1]",
        )?;
        range(
            "delta_max",
            self.delta_max >= self.delta_min && self.delta_max <= 1.0,
            "must be in [delta_min, 1]",
        )?;
        range("gain_up_max", self.gain_up_max >= 0.0, "must be >= 0")?;
        range("gain_down_max", self.gain_down_max >= 0.0, "must be >= 0")?;
        range(
            "zero_demand_beta_ratio",
            self.zero_demand_beta_ratio > 0.0,
            "must be > 0",
        )?;
        range(
            "observation_window_s",
            self.observation_window_s > 0.0,
            "must be > 0",
        )?;
        Ok(())
    }

    pub fn beta_policy(&self) -> BetaPolicy {
        BetaPolicy {
            beta_base: self.beta_base,
            r_base: self.r_base_bps,
            zero_demand_ratio: self.zero_demand_beta_ratio,
        }
    }
}

/// Per-vehicle LIMERIC state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// Maximum fraction of time the vehicle may transmit.
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub cbr_target: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub gain_up_max: Option<f64>,
    pub gain_down_max: Option<f64>,
    pub mode: ControllerMode,
}

impl ControllerState {
    /// Starts at `delta_min` with `beta = beta_base`.
    pub fn new(params: &ControllerParams, mode: ControllerMode) -> Result<Self, ConfigError> {
        params.validate()?;
        let (up, down) = if params.gain_clamps {
            (Some(params.gain_up_max), Some(params.gain_down_max))
        } else {
            (None, None)
        };
        Ok(ControllerState {
            delta: params.delta_min,
            alpha: params.alpha,
            beta: params.beta_base,
            cbr_target: params.cbr_target,
            delta_min: params.delta_min,
            delta_max: params.delta_max,
            gain_up_max: up,
            gain_down_max: down,
            mode,
        })
    }

    /// One LIMERIC step:
    /// `delta <- (1 - alpha) * delta + clamp(beta * (target - cbr))`,
    /// bounded to `[delta_min, delta_max]`. Returns the new delta.
    pub fn limeric_update(&mut self, cbr_measured: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&cbr_measured));
        let mut offset = self.beta * (self.cbr_target - cbr_measured);
        if let Some(up) = self.gain_up_max {
            offset = offset.min(up);
        }
        if let Some(down) = self.gain_down_max {
            offset = offset.max(-down);
        }
        let next = (1.0 - self.alpha) * self.delta + offset;
        self.delta = next.clamp(self.delta_min, self.delta_max);
        self.delta
    }
}

/// Demand-proportional gain rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPolicy {
    pub beta_base: f64,
    /// bits/s
    pub r_base: f64,
    pub zero_demand_ratio: f64,
}

impl BetaPolicy {
    /// `beta_base * R_tot / r_base`, where `R_tot` sums the required rate of
    /// services that were served last epoch. Services granted nothing do not
    /// inflate the vehicle's gain.
    pub fn compute_beta(&self, demands: &DemandSet) -> f64 {
        let r_tot: f64 = demands
            .iter()
            .filter(|d| d.served_last_epoch)
            .map(|d| d.required_rate)
            .sum();
        if r_tot > 0.0 {
            self.beta_base * r_tot / self.r_base
        } else {
            self.beta_base * self.zero_demand_ratio
        }
    }
}
