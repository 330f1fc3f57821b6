//! Screw-space bimanual manipulation toolkit: recovers 1-DoF screw joints
//! from two-hand pose trajectories, generates synchronized bimanual
//! waypoint trajectories from screw actions, and fine-tunes wrong axes by
//! cross-entropy search against a simulated constrained mechanism.

pub mod cem;
pub mod dataset;
pub mod fit;
pub mod io;
pub mod noise;
pub mod report;
pub mod scenario;
pub mod screw;
pub mod se3;
mod search;
pub mod sim;
pub mod trajectory;
pub mod waypoints;
