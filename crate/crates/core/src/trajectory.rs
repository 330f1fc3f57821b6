//! Timed pose trajectories for each hand and the right-in-left relative
//! trajectory that the screw axis explains.

use crate::se3::Pose;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Timestamps closer than this (seconds) count as matching across hands.
pub const TIME_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one sample")]
    Empty,
    #[error("timestamps must be strictly increasing (sample {index})")]
    NonIncreasingTime { index: usize },
    #[error("trajectories differ in length: left {left}, right {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("timestamps differ at sample {index}: left {left}, right {right}")]
    TimestampMismatch { index: usize, left: f64, right: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub time: f64,
    pub pose: Pose,
}

/// One hand's 6-DoF trajectory: world-frame poses at strictly increasing
/// timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct HandTrajectory {
    pub frame_id: String,
    samples: Vec<TimedPose>,
}

impl HandTrajectory {
    pub fn new(frame_id: impl Into<String>, samples: Vec<TimedPose>) -> Result<Self, TrajectoryError> {
        check_times(&samples)?;
        Ok(HandTrajectory {
            frame_id: frame_id.into(),
            samples,
        })
    }

    /// Poses at unit timestamps 0, 1, 2, ...
    pub fn from_poses(frame_id: impl Into<String>, poses: Vec<Pose>) -> Result<Self, TrajectoryError> {
        HandTrajectory::new(frame_id, index_timed(poses))
    }

    pub fn samples(&self) -> &[TimedPose] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The right hand's pose expressed in the left-hand frame, sample by sample.
/// The first pose is kept separately as the initial relative pose T_0.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeTrajectory {
    samples: Vec<TimedPose>,
    initial: Pose,
}

impl RelativeTrajectory {
    pub fn new(samples: Vec<TimedPose>) -> Result<Self, TrajectoryError> {
        check_times(&samples)?;
        let initial = samples[0].pose;
        Ok(RelativeTrajectory { samples, initial })
    }

    pub fn from_poses(poses: Vec<Pose>) -> Result<Self, TrajectoryError> {
        RelativeTrajectory::new(index_timed(poses))
    }

    pub fn samples(&self) -> &[TimedPose] {
        &self.samples
    }

    pub fn initial(&self) -> &Pose {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = nalgebra::Vector3<f64>> + '_ {
        self.samples.iter().map(|s| s.pose.translation)
    }
}

fn index_timed(poses: Vec<Pose>) -> Vec<TimedPose> {
    poses
        .into_iter()
        .enumerate()
        .map(|(i, pose)| TimedPose {
            time: i as f64,
            pose,
        })
        .collect()
}

fn check_times(samples: &[TimedPose]) -> Result<(), TrajectoryError> {
    if samples.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    for i in 1..samples.len() {
        if samples[i].time <= samples[i - 1].time {
            return Err(TrajectoryError::NonIncreasingTime { index: i });
        }
    }
    Ok(())
}

/// Expresses the right hand in the left-hand frame: sample_i = left_i^-1 *
/// right_i. Sample counts must match and timestamps must agree to 1e-6 s.
pub fn relative_trajectory(
    left: &HandTrajectory,
    right: &HandTrajectory,
) -> Result<RelativeTrajectory, TrajectoryError> {
    if left.len() != right.len() {
        return Err(TrajectoryError::LengthMismatch {
            left: left.len(),
            right: right.len(),
        });
    }
    let mut samples = Vec::with_capacity(left.len());
    for (i, (l, r)) in left.samples().iter().zip(right.samples()).enumerate() {
        if (l.time - r.time).abs() > TIME_MATCH_TOL {
            return Err(TrajectoryError::TimestampMismatch {
                index: i,
                left: l.time,
                right: r.time,
            });
        }
        samples.push(TimedPose {
            time: l.time,
            pose: l.pose.inverse().compose(&r.pose),
        });
    }
    RelativeTrajectory::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{pose_distance, Rotation};
    use nalgebra::Vector3;

    fn timed(poses: Vec<Pose>) -> Vec<TimedPose> {
        index_timed(poses)
    }

    #[test]
    fn identity_left_passes_right_through() {
        let right: Vec<Pose> = (0..5)
            .map(|k| Pose::from_translation(Vector3::new(0.1 * k as f64, 0.0, 0.0)))
            .collect();
        let left = vec![Pose::identity(); 5];
        let l = HandTrajectory::from_poses("left", left).unwrap();
        let r = HandTrajectory::from_poses("right", right.clone()).unwrap();
        let rel = relative_trajectory(&l, &r).unwrap();
        for (s, expect) in rel.samples().iter().zip(&right) {
            assert!(pose_distance(&s.pose, expect, 0.1) < 1e-12);
        }
        assert_eq!(rel.initial(), &right[0]);
    }

    #[test]
    fn equal_hands_give_identity() {
        let poses: Vec<Pose> = (0..4)
            .map(|k| {
                Pose::new(
                    Rotation::from_axis_angle(&Vector3::z(), 0.2 * k as f64),
                    Vector3::new(0.0, 0.05 * k as f64, 0.0),
                )
            })
            .collect();
        let l = HandTrajectory::from_poses("left", poses.clone()).unwrap();
        let r = HandTrajectory::from_poses("right", poses).unwrap();
        let rel = relative_trajectory(&l, &r).unwrap();
        for s in rel.samples() {
            assert!(pose_distance(&s.pose, &Pose::identity(), 0.1) < 1e-12);
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let l = HandTrajectory::from_poses("left", vec![Pose::identity(); 3]).unwrap();
        let r = HandTrajectory::from_poses("right", vec![Pose::identity(); 4]).unwrap();
        assert_eq!(
            relative_trajectory(&l, &r),
            Err(TrajectoryError::LengthMismatch { left: 3, right: 4 })
        );

        let r2 = HandTrajectory::new(
            "right",
            vec![
                TimedPose { time: 0.0, pose: Pose::identity() },
                TimedPose { time: 1.5, pose: Pose::identity() },
                TimedPose { time: 2.0, pose: Pose::identity() },
            ],
        )
        .unwrap();
        assert!(matches!(
            relative_trajectory(&l, &r2),
            Err(TrajectoryError::TimestampMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn strictly_increasing_times_enforced() {
        let bad = vec![
            TimedPose { time: 0.0, pose: Pose::identity() },
            TimedPose { time: 0.0, pose: Pose::identity() },
        ];
        assert_eq!(
            HandTrajectory::new("x", bad).unwrap_err(),
            TrajectoryError::NonIncreasingTime { index: 1 }
        );
        assert_eq!(
            RelativeTrajectory::new(vec![]).unwrap_err(),
            TrajectoryError::Empty
        );
    }

    #[test]
    fn frame_invariance() {
        let g = Pose::new(
            Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, -0.5), 0.9),
            Vector3::new(0.4, -0.2, 0.7),
        );
        let left: Vec<Pose> = (0..6)
            .map(|k| {
                Pose::new(
                    Rotation::from_axis_angle(&Vector3::y(), 0.1 * k as f64),
                    Vector3::new(0.02 * k as f64, 0.0, 0.0),
                )
            })
            .collect();
        let right: Vec<Pose> = (0..6)
            .map(|k| {
                Pose::new(
                    Rotation::from_axis_angle(&Vector3::z(), 0.15 * k as f64),
                    Vector3::new(0.0, 0.03 * k as f64, 0.1),
                )
            })
            .collect();
        let rel_a = relative_trajectory(
            &HandTrajectory::from_poses("l", left.clone()).unwrap(),
            &HandTrajectory::from_poses("r", right.clone()).unwrap(),
        )
        .unwrap();
        let rel_b = relative_trajectory(
            &HandTrajectory::new("l", timed(left.iter().map(|p| g.compose(p)).collect())).unwrap(),
            &HandTrajectory::new("r", timed(right.iter().map(|p| g.compose(p)).collect())).unwrap(),
        )
        .unwrap();
        for (a, b) in rel_a.samples().iter().zip(rel_b.samples()) {
            assert!(pose_distance(&a.pose, &b.pose, 0.1) < 1e-9);
        }
    }
}
