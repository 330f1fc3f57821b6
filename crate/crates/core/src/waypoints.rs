//! Turning a screw action into executable bimanual waypoint trajectories,
//! including composition with a moving left hand and the raw-waypoint
//! baseline representation.

use crate::screw::ScrewAxis;
use crate::se3::Pose;
use crate::trajectory::{HandTrajectory, RelativeTrajectory};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaypointError {
    #[error("k_steps must be at least 1")]
    ZeroSteps,
    #[error("theta_total must be finite")]
    NonFiniteTheta,
    #[error("left trajectory has {got} poses, expected {expected}")]
    LeftLengthMismatch { expected: usize, got: usize },
    #[error("need at least 2 waypoints to keep")]
    TooFewKept,
    #[error("cannot keep {requested} waypoints from {available} samples")]
    KeepExceedsSamples { requested: usize, available: usize },
}

/// The full bimanual behavior parameter: two grasp points, the screw axis of
/// the inter-hand motion, and an optional absolute left-hand trajectory
/// (empty when the left hand just stabilizes the object).
#[derive(Debug, Clone, PartialEq)]
pub struct ScrewAction {
    pub grasp_left: Vector3<f64>,
    pub grasp_right: Vector3<f64>,
    pub axis: ScrewAxis,
    pub left_trajectory: Option<HandTrajectory>,
}

impl ScrewAction {
    pub fn new(grasp_left: Vector3<f64>, grasp_right: Vector3<f64>, axis: ScrewAxis) -> Self {
        ScrewAction {
            grasp_left,
            grasp_right,
            axis,
            left_trajectory: None,
        }
    }
}

/// Discretization of one execution: total displacement (radians, or meters
/// for prismatic axes), number of steps K, and the initial right-in-left
/// pose T_0. Produces K+1 waypoints including the initial one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub theta_total: f64,
    pub k_steps: usize,
    pub t_initial: Pose,
}

impl WaypointPlan {
    pub fn new(theta_total: f64, k_steps: usize, t_initial: Pose) -> Result<Self, WaypointError> {
        if k_steps == 0 {
            return Err(WaypointError::ZeroSteps);
        }
        if !theta_total.is_finite() {
            return Err(WaypointError::NonFiniteTheta);
        }
        Ok(WaypointPlan {
            theta_total,
            k_steps,
            t_initial,
        })
    }

    /// The same plan with its displacement re-signed, e.g. to follow a
    /// demonstrated direction of motion.
    pub fn with_sign(mut self, sign: f64) -> Self {
        self.theta_total = self.theta_total.abs() * if sign < 0.0 { -1.0 } else { 1.0 };
        self
    }
}

/// Synchronized world-frame waypoints for both hands plus the relative
/// sequence they were built from; `right[k] = left[k] * relative[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BimanualWaypoints {
    pub left: Vec<Pose>,
    pub right: Vec<Pose>,
    pub relative: Vec<Pose>,
}

/// K+1 right-in-left poses along the axis: theta_k = k * theta_T / K applied
/// with per-type semantics (revolute3d keeps the initial orientation).
pub fn generate_relative_waypoints(axis: &ScrewAxis, plan: &WaypointPlan) -> Vec<Pose> {
    let k = plan.k_steps;
    (0..=k)
        .map(|i| axis.pose_at(plan.theta_total * i as f64 / k as f64, &plan.t_initial))
        .collect()
}

/// Composes the relative waypoints with a world-frame left-hand sequence.
/// The relative motion, and hence the fitted axis, is unchanged by any
/// choice of left motion.
pub fn compose_bimanual(
    action: &ScrewAction,
    plan: &WaypointPlan,
    left_world: &[Pose],
) -> Result<BimanualWaypoints, WaypointError> {
    if left_world.len() != plan.k_steps + 1 {
        return Err(WaypointError::LeftLengthMismatch {
            expected: plan.k_steps + 1,
            got: left_world.len(),
        });
    }
    let relative = generate_relative_waypoints(&action.axis, plan);
    let right: Vec<Pose> = left_world
        .iter()
        .zip(&relative)
        .map(|(l, r)| l.compose(r))
        .collect();
    Ok(BimanualWaypoints {
        left: left_world.to_vec(),
        right,
        relative,
    })
}

/// Left-hand world poses for a plan: the action's left trajectory resampled
/// to K+1 poses, or a constant identity sequence when it is empty.
pub fn left_world_poses(action: &ScrewAction, plan: &WaypointPlan) -> Result<Vec<Pose>, WaypointError> {
    match &action.left_trajectory {
        None => Ok(vec![Pose::identity(); plan.k_steps + 1]),
        Some(traj) => {
            let poses: Vec<Pose> = traj.samples().iter().map(|s| s.pose).collect();
            if poses.len() == plan.k_steps + 1 {
                Ok(poses)
            } else {
                Ok(subsample_uniform(&poses, plan.k_steps + 1)?)
            }
        }
    }
}

/// Uniform index subsampling keeping both endpoints: the N x 6-DoF baseline
/// action representation.
pub fn demo_waypoints_passthrough(
    traj: &RelativeTrajectory,
    n_keep: usize,
) -> Result<Vec<Pose>, WaypointError> {
    let poses: Vec<Pose> = traj.samples().iter().map(|s| s.pose).collect();
    subsample_uniform(&poses, n_keep)
}

fn subsample_uniform(poses: &[Pose], n_keep: usize) -> Result<Vec<Pose>, WaypointError> {
    if n_keep < 2 {
        return Err(WaypointError::TooFewKept);
    }
    if n_keep > poses.len() {
        return Err(WaypointError::KeepExceedsSamples {
            requested: n_keep,
            available: poses.len(),
        });
    }
    let last = poses.len() - 1;
    Ok((0..n_keep)
        .map(|i| {
            let idx = (i as f64 * last as f64 / (n_keep - 1) as f64).round() as usize;
            poses[idx]
        })
        .collect())
}
