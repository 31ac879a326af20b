//! Microscopic pedestrian simulator.
//!
//! Agents descend a per-destination floor field: at every tick each agent
//! evaluates the points on a circle of its step length (and its current
//! position) against the interpolated distance plus short-range repulsion from
//! walls and other agents, and moves to the cheapest one.

mod floor_field;
mod log;
mod run;
mod scenario;
mod spawn;
mod step;

pub use floor_field::{build_floor_field, FloorField};
pub use log::{AgentState, Frame, SpawnRecord, TrajectoryLog};
pub use run::{run_simulation, run_simulation_with_fields, run_many, FloorFields, SimConfig};
pub use scenario::{CrossroadLayout, Scenario};
pub use spawn::{sample_destination_distribution, sample_speed, SpeedDistribution};
pub use step::{choose_next_position, step_cost, Pedestrian, StepModel, StepOutcome};

/// Default torso diameter in meters.
pub const TORSO_DIAMETER: f64 = 0.195;
