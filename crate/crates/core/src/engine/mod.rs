//! Discrete-event engine: scenario construction, mobility and the main loop.

mod mobility;
mod queue;
mod scenario;
mod sim;

pub use mobility::mobility_step;
pub use queue::EventQueue;
pub use scenario::{build_highway, build_single_hop, ServiceInstance, Source, Vehicle, World};
pub use sim::{run, Simulation};
