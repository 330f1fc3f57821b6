//! Screw-axis recovery from a relative trajectory: per-type estimators, a
//! trajectory-discrepancy score, and MAP joint-type selection.
//!
//! The revolute estimator works on displacements from the first pose
//! (D_i = T_i T_0^-1) rather than consecutive deltas: the larger angles keep
//! the twist-to-screw conversion numerically stable.

use crate::screw::{twist_to_screw, JointType, ScrewAxis};
use crate::se3::{log_pose, pose_distance};
use crate::search::minimize_scalar;
use crate::trajectory::RelativeTrajectory;
use nalgebra::{Matrix3, Vector3};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Displacement rotation angles outside (MIN_STEP_ANGLE, pi - 0.01) are
/// skipped by the revolute estimator.
pub const MIN_STEP_ANGLE: f64 = 1e-4;
pub const MAX_STEP_ANGLE: f64 = PI - 0.01;

/// Pitch magnitude (m/rad) above which a displacement sample is dropped
/// from the axis-point average. Pitch measures inconsistency of the
/// translational evidence, which observation noise inflates as 1/theta, so
/// this is far looser than the pure-rotation classification tolerance. The
/// rotational evidence of such samples is unaffected and still feeds the
/// direction average.
pub const FIT_PITCH_SKIP: f64 = 0.06;

/// Registration span: rotational types search theta in [-2pi, 2pi],
/// prismatic in [-1, 1] meters.
const ROTATIONAL_SPAN: f64 = 2.0 * PI;
const PRISMATIC_SPAN: f64 = 1.0;

const COARSE_GRID: usize = 64;
const THETA_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(&'static str),
    #[error("circle fit degenerate: positions are collinear")]
    CircleFitDegenerate,
    #[error("no joint model could be fitted")]
    NoModel,
}

/// A fitted axis with its mean trajectory discrepancy and the scores of all
/// attempted joint types (lower is more likely).
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub axis: ScrewAxis,
    pub score: f64,
    pub per_type_scores: BTreeMap<JointType, f64>,
    /// Displacement samples skipped by the revolute estimator (near-zero or
    /// near-pi rotation, degenerate or pitch-flagged twists).
    pub skipped_samples: usize,
}

impl FitResult {
    fn single(axis: ScrewAxis, score: f64, skipped: usize) -> Self {
        let mut per_type_scores = BTreeMap::new();
        per_type_scores.insert(axis.joint_type, score);
        FitResult {
            axis,
            score,
            per_type_scores,
            skipped_samples: skipped,
        }
    }
}

fn centroid(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().sum::<Vector3<f64>>() / points.len() as f64
}

fn scatter(points: &[Vector3<f64>], center: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for p in points {
        let d = p - center;
        m += d * d.transpose();
    }
    m
}

/// Eigenvectors of the position scatter, sorted by descending eigenvalue.
fn principal_axes(points: &[Vector3<f64>]) -> [(f64, Vector3<f64>); 3] {
    let c = centroid(points);
    let eig = scatter(points, &c).symmetric_eigen();
    let mut pairs: Vec<(f64, Vector3<f64>)> = (0..3)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    [pairs[0], pairs[1], pairs[2]]
}

/// Fits a 3D line through the positions: direction from the largest
/// principal component, sign-aligned with the net motion.
pub fn fit_prismatic(traj: &RelativeTrajectory, lambda: f64) -> Result<FitResult, FitError> {
    let positions: Vec<Vector3<f64>> = traj.positions().collect();
    if positions.len() < 2 {
        return Err(FitError::DegenerateTrajectory("need at least 2 samples"));
    }
    let net = positions[positions.len() - 1] - positions[0];
    if net.norm() <= 1e-6 {
        return Err(FitError::DegenerateTrajectory(
            "positional extent below 1e-6 m",
        ));
    }
    let c = centroid(&positions);
    let [(_, mut dir), _, _] = principal_axes(&positions);
    if dir.dot(&net) < 0.0 {
        dir = -dir;
    }
    let axis = ScrewAxis::prismatic(c, dir)
        .map_err(|_| FitError::DegenerateTrajectory("degenerate line direction"))?;
    let score = model_score(traj, &axis, lambda);
    Ok(FitResult::single(axis, score, 0))
}

/// Converts each displacement from the first pose to screw parameters and
/// averages the sign-aligned directions and canonical points.
pub fn fit_revolute(traj: &RelativeTrajectory, lambda: f64) -> Result<FitResult, FitError> {
    if traj.len() < 2 {
        return Err(FitError::DegenerateTrajectory("need at least 2 samples"));
    }
    let t0_inv = traj.initial().inverse();
    // (angle, direction, point, pitch) per usable displacement.
    let mut usable: Vec<(f64, Vector3<f64>, Vector3<f64>, f64)> = Vec::new();
    let mut skipped = 0usize;
    for sample in &traj.samples()[1..] {
        let disp = sample.pose.compose(&t0_inv);
        let angle = disp.rotation.angle();
        if angle <= MIN_STEP_ANGLE || angle >= MAX_STEP_ANGLE {
            skipped += 1;
            continue;
        }
        let xi = match log_pose(&disp) {
            Ok(xi) => xi,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        match twist_to_screw(&xi) {
            Ok(dec) if dec.axis.joint_type == JointType::Revolute => {
                usable.push((angle, dec.axis.direction, dec.axis.point, dec.pitch));
            }
            _ => skipped += 1,
        }
    }
    let total = traj.len() - 1;
    if usable.len() < 2 {
        return Err(FitError::DegenerateTrajectory(
            "fewer than 2 usable displacement samples",
        ));
    }
    if skipped * 2 > total {
        return Err(FitError::DegenerateTrajectory(
            "more than half the displacement samples were skipped",
        ));
    }
    // Sign-align every direction with the first usable one before averaging.
    let reference = usable[0].1;
    let mut dir_sum = Vector3::zeros();
    for (_, d, _, _) in &usable {
        dir_sum += if d.dot(&reference) < 0.0 { -*d } else { *d };
    }
    // The point average drops pitch-flagged samples (noise-corrupted
    // translational evidence); with nothing left it falls back to all.
    let clean_points: Vec<Vector3<f64>> = usable
        .iter()
        .filter(|(_, _, _, pitch)| pitch.abs() <= FIT_PITCH_SKIP)
        .map(|(_, _, q, _)| *q)
        .collect();
    let pitch_skipped = usable.len() - clean_points.len();
    let q_mean = if clean_points.is_empty() {
        centroid(&usable.iter().map(|(_, _, q, _)| *q).collect::<Vec<_>>())
    } else {
        centroid(&clean_points)
    };
    skipped += pitch_skipped;
    let axis = ScrewAxis::revolute(q_mean, dir_sum)
        .map_err(|_| FitError::DegenerateTrajectory("averaged direction vanished"))?;
    let score = model_score(traj, &axis, lambda);
    Ok(FitResult::single(axis, score, skipped))
}

/// Plane fit by principal components (normal = smallest component), then an
/// algebraic Kasa circle fit in plane coordinates; the plane normal gives
/// the direction and the circle center gives the point.
pub fn fit_revolute3d(traj: &RelativeTrajectory, lambda: f64) -> Result<FitResult, FitError> {
    let positions: Vec<Vector3<f64>> = traj.positions().collect();
    if positions.len() < 3 {
        return Err(FitError::DegenerateTrajectory("need at least 3 samples"));
    }
    let c = centroid(&positions);
    let [(ev0, e1), (ev1, _), (_, normal)] = principal_axes(&positions);
    if ev0 <= 0.0 || ev1 / ev0 < 1e-10 {
        return Err(FitError::CircleFitDegenerate);
    }
    let e1 = e1.normalize();
    let e2 = normal.cross(&e1).normalize();

    // Kasa: 2u a + 2v b + c = u^2 + v^2, solved via the 3x3 normal
    // equations with one iterative-refinement step.
    let mut m = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for p in &positions {
        let d = p - c;
        let row = Vector3::new(2.0 * d.dot(&e1), 2.0 * d.dot(&e2), 1.0);
        let r = row.x * row.x / 4.0 + row.y * row.y / 4.0;
        m += row * row.transpose();
        b += row * r;
    }
    let lu = m.lu();
    let mut sol = lu.solve(&b).ok_or(FitError::CircleFitDegenerate)?;
    if let Some(correction) = lu.solve(&(b - m * sol)) {
        sol += correction;
    }
    let center = c + e1 * sol[0] + e2 * sol[1];
    let axis = ScrewAxis::revolute3d(center, normal)
        .map_err(|_| FitError::CircleFitDegenerate)?;
    let score = model_score(traj, &axis, lambda);
    Ok(FitResult::single(axis, score, 0))
}

/// Mean over samples of the best-registered pose distance to the model
/// trajectory the axis generates from T_0. Lower means more likely.
pub fn model_score(traj: &RelativeTrajectory, axis: &ScrewAxis, lambda: f64) -> f64 {
    let t0 = traj.initial();
    let span = registration_span(axis.joint_type);
    let mut total = 0.0;
    for sample in traj.samples() {
        let (_, d) = minimize_scalar(
            |theta| pose_distance(&sample.pose, &axis.pose_at(theta, t0), lambda),
            -span,
            span,
            COARSE_GRID,
            THETA_TOL,
        );
        total += d;
    }
    total / traj.len() as f64
}

/// Displacement along the axis that best registers one pose against the
/// model trajectory started at T_0. Signed: negative values mean the motion
/// runs against the canonical direction.
pub fn register_theta(pose: &crate::se3::Pose, axis: &ScrewAxis, t0: &crate::se3::Pose, lambda: f64) -> f64 {
    let span = registration_span(axis.joint_type);
    let (theta, _) = minimize_scalar(
        |theta| pose_distance(pose, &axis.pose_at(theta, t0), lambda),
        -span,
        span,
        COARSE_GRID,
        THETA_TOL,
    );
    theta
}

/// Net displacement of the trajectory along the axis, unwrapped: each sample
/// is registered in a local window around the previous one, so revolute
/// motions are not folded modulo a full turn. Used to orient execution plans
/// along the demonstrated direction of motion.
pub fn trajectory_displacement(traj: &RelativeTrajectory, axis: &ScrewAxis, lambda: f64) -> f64 {
    let t0 = traj.initial();
    let window = match axis.joint_type {
        JointType::Prismatic => 0.5,
        _ => std::f64::consts::FRAC_PI_2,
    };
    let mut theta = 0.0;
    for sample in &traj.samples()[1..] {
        let (best, _) = minimize_scalar(
            |t| pose_distance(&sample.pose, &axis.pose_at(t, t0), lambda),
            theta - window,
            theta + window,
            33,
            THETA_TOL,
        );
        theta = best;
    }
    theta
}

fn registration_span(joint_type: JointType) -> f64 {
    match joint_type {
        JointType::Prismatic => PRISMATIC_SPAN,
        _ => ROTATIONAL_SPAN,
    }
}

/// Runs all three estimators (skipping failures) and picks the lowest
/// score: MAP selection under a uniform type prior.
pub fn select_joint_type(traj: &RelativeTrajectory, lambda: f64) -> Result<FitResult, FitError> {
    let mut best: Option<FitResult> = None;
    let mut per_type_scores = BTreeMap::new();
    for joint_type in JointType::ALL {
        let fitted = match joint_type {
            JointType::Prismatic => fit_prismatic(traj, lambda),
            JointType::Revolute => fit_revolute(traj, lambda),
            JointType::Revolute3d => fit_revolute3d(traj, lambda),
        };
        if let Ok(result) = fitted {
            per_type_scores.insert(joint_type, result.score);
            match &best {
                Some(b) if b.score <= result.score => {}
                _ => best = Some(result),
            }
        }
    }
    let mut best = best.ok_or(FitError::NoModel)?;
    best.per_type_scores = per_type_scores;
    Ok(best)
}
