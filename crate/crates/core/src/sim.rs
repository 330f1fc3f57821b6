//! A deterministic constrained-mechanism simulator: candidate waypoint
//! trajectories are projected onto the mechanism's feasible one-parameter
//! manifold, a spring-plus-friction wrench is read off the residual, and the
//! three self-detected failures terminate the episode.
//!
//! Physics and detection are separated: every step of the trace is computed
//! regardless of which detector would have fired, so a ranking policy that
//! ignores grasp-lost detection can re-derive the episode it would have
//! seen. Once the grasp residual is exceeded the hand is detached: progress
//! freezes and the wrench drops to bare dragging friction.

use crate::screw::ScrewAxis;
use crate::se3::{pose_distance, Pose, POSE_DISTANCE_LAMBDA};
use crate::search::minimize_scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum advance of the projected coordinate for a step to count as
/// progress (and incur friction); guards against projection jitter.
pub const PROGRESS_HYSTERESIS: f64 = 1e-6;

const PROJECTION_GRID: usize = 32;
const PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MechanismError {
    #[error("friction must lie strictly between f_min and f_max")]
    FrictionOutsideThresholds,
    #[error("d_grasp must be positive")]
    NonPositiveGrasp,
    #[error("theta_range must be a non-degenerate interval")]
    DegenerateRange,
    #[error("stiffnesses must be nonnegative")]
    NegativeStiffness,
}

/// Ground truth for one episode: the constraint axis, its reachable range,
/// and the wrench model constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mechanism {
    pub true_axis: ScrewAxis,
    pub t_initial: Pose,
    /// Reachable interval of the joint coordinate (radians or meters).
    pub theta_range: (f64, f64),
    /// Resistive wrench added on every progressing step.
    pub friction: f64,
    /// Positional stiffness, wrench units per meter.
    pub k_pos_per_m: f64,
    /// Rotational stiffness, wrench units per radian.
    pub k_rot_per_rad: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Grasp-loss residual, meters.
    pub d_grasp_m: f64,
    /// Fraction of the range span that counts as task success.
    pub theta_success_fraction: f64,
}

impl Mechanism {
    /// Default wrench-model constants around spring stiffness 200/m, 5/rad.
    pub fn with_defaults(
        true_axis: ScrewAxis,
        t_initial: Pose,
        theta_range: (f64, f64),
    ) -> Result<Self, MechanismError> {
        Mechanism {
            true_axis,
            t_initial,
            theta_range,
            friction: 2.0,
            k_pos_per_m: 200.0,
            k_rot_per_rad: 5.0,
            f_min: 0.5,
            f_max: 10.0,
            d_grasp_m: 0.05,
            theta_success_fraction: 0.9,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, MechanismError> {
        if !(self.f_min < self.friction && self.friction < self.f_max) {
            return Err(MechanismError::FrictionOutsideThresholds);
        }
        if self.d_grasp_m <= 0.0 {
            return Err(MechanismError::NonPositiveGrasp);
        }
        if !(self.theta_range.1 > self.theta_range.0) {
            return Err(MechanismError::DegenerateRange);
        }
        if self.k_pos_per_m < 0.0 || self.k_rot_per_rad < 0.0 {
            return Err(MechanismError::NegativeStiffness);
        }
        Ok(self)
    }

    pub fn span(&self) -> f64 {
        self.theta_range.1 - self.theta_range.0
    }

    /// Pose on the feasible manifold at joint coordinate theta.
    pub fn feasible(&self, theta: f64) -> Pose {
        self.true_axis.pose_at(theta, &self.t_initial)
    }
}

impl<'de> Deserialize<'de> for Mechanism {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            true_axis: ScrewAxis,
            t_initial: Pose,
            theta_range: (f64, f64),
            friction: f64,
            k_pos_per_m: f64,
            k_rot_per_rad: f64,
            f_min: f64,
            f_max: f64,
            d_grasp_m: f64,
            theta_success_fraction: f64,
        }
        let raw = Raw::deserialize(d)?;
        Mechanism {
            true_axis: raw.true_axis,
            t_initial: raw.t_initial,
            theta_range: raw.theta_range,
            friction: raw.friction,
            k_pos_per_m: raw.k_pos_per_m,
            k_rot_per_rad: raw.k_rot_per_rad,
            f_min: raw.f_min,
            f_max: raw.f_max,
            d_grasp_m: raw.d_grasp_m,
            theta_success_fraction: raw.theta_success_fraction,
        }
        .validated()
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    None,
    LowForce,
    HighForce,
    GraspLost,
}

/// One executed waypoint step of detector-independent physics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub wrench: f64,
    pub e_pos: f64,
    pub e_rot: f64,
    pub theta: f64,
    pub progressed: bool,
    /// Positional residual exceeded d_grasp on this (attached) step.
    pub grasp_exceeded: bool,
}

/// Episode view under a detector policy: what length, wrench, and outcome
/// the ranking sees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingView {
    pub completed_waypoints: usize,
    pub mean_wrench: f64,
    pub failure: Failure,
    pub theta_final: f64,
}

/// Result of one episode under the full detector set, carrying the raw step
/// trace so alternative detector policies can re-derive their view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub completed_waypoints: usize,
    pub wrench_trace: Vec<f64>,
    pub mean_wrench: f64,
    pub failure: Failure,
    pub theta_final: f64,
    #[serde(skip)]
    pub steps: Vec<StepRecord>,
    #[serde(skip)]
    f_min: f64,
    #[serde(skip)]
    f_max: f64,
}

impl EpisodeResult {
    /// Applies the detector policy to a raw step trace.
    pub fn from_trace(steps: Vec<StepRecord>, f_min: f64, f_max: f64) -> Self {
        let view = apply_detectors(&steps, f_min, f_max, true);
        let wrench_trace = steps[..view.completed_steps]
            .iter()
            .map(|s| s.wrench)
            .collect();
        EpisodeResult {
            completed_waypoints: view.view.completed_waypoints,
            wrench_trace,
            mean_wrench: view.view.mean_wrench,
            failure: view.view.failure,
            theta_final: view.view.theta_final,
            steps,
            f_min,
            f_max,
        }
    }

    /// The episode as a ranking policy sees it; with `use_grasp_lost` off,
    /// grasp-terminated episodes continue to their high/low-force step or
    /// to completion.
    pub fn ranking_view(&self, use_grasp_lost: bool) -> RankingView {
        if use_grasp_lost {
            return RankingView {
                completed_waypoints: self.completed_waypoints,
                mean_wrench: self.mean_wrench,
                failure: self.failure,
                theta_final: self.theta_final,
            };
        }
        apply_detectors(&self.steps, self.f_min, self.f_max, false).view
    }
}

struct DetectorOutcome {
    view: RankingView,
    /// Number of executed steps (including the failing one).
    completed_steps: usize,
}

fn apply_detectors(
    steps: &[StepRecord],
    f_min: f64,
    f_max: f64,
    use_grasp_lost: bool,
) -> DetectorOutcome {
    let mut executed = steps.len();
    let mut failure = Failure::None;
    for (i, s) in steps.iter().enumerate() {
        let kind = if s.grasp_exceeded && use_grasp_lost {
            Failure::GraspLost
        } else if s.wrench > f_max {
            Failure::HighForce
        } else if s.wrench < f_min {
            Failure::LowForce
        } else {
            continue;
        };
        executed = i + 1;
        failure = kind;
        break;
    }
    let completed_waypoints = if failure == Failure::None {
        steps.len()
    } else {
        executed - 1
    };
    let mean_wrench = if executed == 0 {
        0.0
    } else {
        steps[..executed].iter().map(|s| s.wrench).sum::<f64>() / executed as f64
    };
    let theta_final = if executed == 0 {
        0.0
    } else {
        steps[executed - 1].theta
    };
    DetectorOutcome {
        view: RankingView {
            completed_waypoints,
            mean_wrench,
            failure,
            theta_final,
        },
        completed_steps: executed,
    }
}

/// Joint coordinate, positional residual, and rotational residual of the
/// closest feasible pose: argmin over theta in range of the pose distance,
/// golden-section refined from a coarse-grid seed.
pub fn project_to_mechanism(mech: &Mechanism, rel_pose: &Pose) -> (f64, f64, f64) {
    let (lo, hi) = mech.theta_range;
    let (theta, _) = minimize_scalar(
        |t| pose_distance(rel_pose, &mech.feasible(t), POSE_DISTANCE_LAMBDA),
        lo,
        hi,
        PROJECTION_GRID,
        PROJECTION_TOL,
    );
    let nearest = mech.feasible(theta);
    let e_pos = (rel_pose.translation - nearest.translation).norm();
    let e_rot = rel_pose.rotation.angle_to(&nearest.rotation);
    (theta, e_pos, e_rot)
}

/// Detector-independent physics for every waypoint beyond the first.
fn evaluate_steps(mech: &Mechanism, relative_waypoints: &[Pose]) -> Vec<StepRecord> {
    let (mut theta_prev, _, _) = project_to_mechanism(mech, &relative_waypoints[0]);
    let mut steps = Vec::with_capacity(relative_waypoints.len().saturating_sub(1));
    let mut detached = false;
    for wp in &relative_waypoints[1..] {
        if detached {
            // Free hand dragging along the object: no constraint wrench,
            // no progress.
            let nearest = mech.feasible(theta_prev);
            steps.push(StepRecord {
                wrench: mech.friction,
                e_pos: (wp.translation - nearest.translation).norm(),
                e_rot: wp.rotation.angle_to(&nearest.rotation),
                theta: theta_prev,
                progressed: false,
                grasp_exceeded: false,
            });
            continue;
        }
        let (theta, e_pos, e_rot) = project_to_mechanism(mech, wp);
        let progressed = theta > theta_prev + PROGRESS_HYSTERESIS;
        let wrench = mech.k_pos_per_m * e_pos
            + mech.k_rot_per_rad * e_rot
            + if progressed { mech.friction } else { 0.0 };
        let grasp_exceeded = e_pos > mech.d_grasp_m;
        steps.push(StepRecord {
            wrench,
            e_pos,
            e_rot,
            theta,
            progressed,
            grasp_exceeded,
        });
        if grasp_exceeded {
            detached = true;
        }
        theta_prev = theta;
    }
    steps
}

/// Executes the waypoints against the mechanism. Failures are results, not
/// errors; the first detector to fire ends the episode.
pub fn run_episode(mech: &Mechanism, relative_waypoints: &[Pose]) -> EpisodeResult {
    assert!(
        relative_waypoints.len() >= 2,
        "need at least one waypoint beyond the initial pose"
    );
    EpisodeResult::from_trace(evaluate_steps(mech, relative_waypoints), mech.f_min, mech.f_max)
}

/// Success: no failure and final progress of at least the success fraction
/// of the range span.
pub fn is_success(mech: &Mechanism, result: &EpisodeResult) -> bool {
    result.failure == Failure::None
        && result.theta_final >= mech.theta_success_fraction * mech.span()
}
