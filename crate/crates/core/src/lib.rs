//! Discrete-event simulator for decentralized congestion control in
//! vehicle-to-vehicle networks: the LIMERIC-based Adaptive DCC baseline and a
//! demand- and priority-aware variant, with the service traffic models and
//! scenarios used to compare them.

pub mod channel;
pub mod cli;
pub mod config;
pub mod control;
pub mod engine;
pub mod error;
pub mod export;
pub mod geo;
pub mod metrics;
pub mod services;
pub mod time;

pub use config::{parse_config, ScenarioConfig};
pub use engine::run;
pub use error::{Error, Result};
pub use metrics::MetricsStore;
