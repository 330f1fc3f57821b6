//! Screw axes: the (point, direction, pitch) parameterization of 1-DoF
//! joints, conversions to and from twists, a canonical representative for
//! comparison and averaging, and line-to-line error metrics.

use crate::se3::{exp_coords, Pose, Rotation, Twist, SMALL_ANGLE};
use nalgebra::Vector3;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Pitch magnitude (m/rad) below which a twist counts as pure rotation.
pub const PITCH_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ScrewError {
    #[error("twist has neither angular nor linear motion")]
    DegenerateTwist,
    #[error("axis direction has near-zero norm")]
    ZeroDirection,
    #[error("non-finite component in input")]
    NonFinite,
}

/// The three screw classes: pure translation, pure rotation with the
/// orientation co-rotating, and circular translation with fixed orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Prismatic,
    Revolute,
    Revolute3d,
}

impl JointType {
    pub const ALL: [JointType; 3] = [
        JointType::Prismatic,
        JointType::Revolute,
        JointType::Revolute3d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            JointType::Prismatic => "prismatic",
            JointType::Revolute => "revolute",
            JointType::Revolute3d => "revolute3d",
        }
    }
}

impl std::fmt::Display for JointType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A line in space with a pitch: point `point` (meters), unit direction
/// `direction`, pitch in meters per radian (`inf` for prismatic, 0 for the
/// two rotational types).
///
/// Canonical form: `point . direction = 0` and the first component of
/// `direction` with magnitude above 1e-9 is positive, giving every axis a
/// unique representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewAxis {
    pub joint_type: JointType,
    pub point: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub pitch: f64,
}

impl ScrewAxis {
    /// Canonicalized constructor; normalizes the direction.
    pub fn new(
        joint_type: JointType,
        point: Vector3<f64>,
        direction: Vector3<f64>,
    ) -> Result<Self, ScrewError> {
        let pitch = match joint_type {
            JointType::Prismatic => f64::INFINITY,
            _ => 0.0,
        };
        ScrewAxis {
            joint_type,
            point,
            direction,
            pitch,
        }
        .canonicalized()
    }

    pub fn prismatic(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, ScrewError> {
        ScrewAxis::new(JointType::Prismatic, point, direction)
    }

    pub fn revolute(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, ScrewError> {
        ScrewAxis::new(JointType::Revolute, point, direction)
    }

    pub fn revolute3d(point: Vector3<f64>, direction: Vector3<f64>) -> Result<Self, ScrewError> {
        ScrewAxis::new(JointType::Revolute3d, point, direction)
    }

    /// Unique representative of the same axis: `point` moved to the point on
    /// the line closest to the origin, direction renormalized, sign fixed so
    /// the first component with magnitude above 1e-9 is positive.
    pub fn canonicalized(&self) -> Result<ScrewAxis, ScrewError> {
        let n = self.direction.norm();
        if !n.is_finite() || n <= SMALL_ANGLE {
            return Err(ScrewError::ZeroDirection);
        }
        if !self.point.iter().all(|c| c.is_finite()) {
            return Err(ScrewError::NonFinite);
        }
        let mut dir = self.direction / n;
        for c in dir.iter() {
            if c.abs() > 1e-9 {
                if *c < 0.0 {
                    dir = -dir;
                }
                break;
            }
        }
        let point = self.point - dir * self.point.dot(&dir);
        Ok(ScrewAxis {
            joint_type: self.joint_type,
            point,
            direction: dir,
            pitch: self.pitch,
        })
    }

    /// Twist moving theta along this axis: a displacement in meters for
    /// prismatic axes, an angle in radians otherwise.
    pub fn to_twist(&self, theta: f64) -> Twist {
        match self.joint_type {
            JointType::Prismatic => Twist::new(Vector3::zeros(), self.direction * theta),
            _ => {
                let angular = self.direction * theta;
                let linear = -angular.cross(&self.point) + self.direction * (self.pitch * theta);
                Twist::new(angular, linear)
            }
        }
    }

    /// Pose reached after displacing `theta` along the axis, starting from
    /// `initial`, with per-type semantics: prismatic slides, revolute applies
    /// the full screw displacement, revolute3d moves the position along the
    /// circle while keeping the initial orientation.
    pub fn pose_at(&self, theta: f64, initial: &Pose) -> Pose {
        if theta == 0.0 {
            return *initial;
        }
        match self.joint_type {
            JointType::Prismatic => Pose::new(
                initial.rotation,
                initial.translation + self.direction * theta,
            ),
            JointType::Revolute => {
                let disp = exp_coords(&self.to_twist(theta))
                    .expect("finite axis and theta produce a finite twist");
                disp.compose(initial)
            }
            JointType::Revolute3d => {
                let rot = Rotation::from_axis_angle(&self.direction, theta);
                let p = rot.apply(&(initial.translation - self.point)) + self.point;
                Pose::new(initial.rotation, p)
            }
        }
    }
}

impl Serialize for ScrewAxis {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ScrewAxis", 4)?;
        st.serialize_field("type", &self.joint_type)?;
        st.serialize_field("q", &[self.point.x, self.point.y, self.point.z])?;
        st.serialize_field("s_hat", &[self.direction.x, self.direction.y, self.direction.z])?;
        if self.pitch.is_infinite() {
            st.serialize_field("pitch", "inf")?;
        } else {
            st.serialize_field("pitch", &self.pitch)?;
        }
        st.end()
    }
}

impl<'de> Deserialize<'de> for ScrewAxis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum PitchRepr {
            Number(f64),
            Text(String),
        }
        #[derive(Deserialize)]
        struct Raw {
            #[serde(rename = "type")]
            joint_type: JointType,
            q: [f64; 3],
            s_hat: [f64; 3],
            pitch: PitchRepr,
        }
        let raw = Raw::deserialize(d)?;
        let pitch = match raw.pitch {
            PitchRepr::Number(x) => x,
            PitchRepr::Text(t) if t == "inf" => f64::INFINITY,
            PitchRepr::Text(t) => {
                return Err(D::Error::custom(format!("invalid pitch string {t:?}")))
            }
        };
        match raw.joint_type {
            JointType::Prismatic if !pitch.is_infinite() => {
                return Err(D::Error::custom("prismatic axis requires pitch \"inf\""))
            }
            JointType::Revolute | JointType::Revolute3d if pitch != 0.0 => {
                return Err(D::Error::custom("rotational axis requires pitch 0"))
            }
            _ => {}
        }
        ScrewAxis {
            joint_type: raw.joint_type,
            point: Vector3::from(raw.q),
            direction: Vector3::from(raw.s_hat),
            pitch,
        }
        .canonicalized()
        .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Line-to-line deviation: minimal distance between the infinite lines
/// (meters) and the sign-invariant angle between directions (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisError {
    pub distance: f64,
    pub angle: f64,
}

/// Result of decomposing a twist into screw parameters. When the recovered
/// pitch exceeds `PITCH_TOL` the axis is still reported (snapped to pure
/// rotation) but flagged; no downstream consumer accepts general pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewDecomposition {
    pub axis: ScrewAxis,
    /// Pitch recovered from the twist, meters per radian.
    pub pitch: f64,
    pub pitch_flagged: bool,
}

/// Recovers screw parameters from a twist: direction omega/|omega|, point
/// (s x v)/|omega|, pitch (s . v)/|omega| for the rotational case; for a
/// near-zero angular part the motion is prismatic along v.
pub fn twist_to_screw(xi: &Twist) -> Result<ScrewDecomposition, ScrewError> {
    if !xi.is_finite() {
        return Err(ScrewError::NonFinite);
    }
    let w_norm = xi.angular.norm();
    if w_norm > SMALL_ANGLE {
        let s_hat = xi.angular / w_norm;
        let q = s_hat.cross(&xi.linear) / w_norm;
        let pitch = s_hat.dot(&xi.linear) / w_norm;
        let axis = ScrewAxis::revolute(q, s_hat)?;
        Ok(ScrewDecomposition {
            axis,
            pitch,
            pitch_flagged: pitch.abs() >= PITCH_TOL,
        })
    } else if xi.linear.norm() > SMALL_ANGLE {
        let axis = ScrewAxis::prismatic(Vector3::zeros(), xi.linear)?;
        Ok(ScrewDecomposition {
            axis,
            pitch: f64::INFINITY,
            pitch_flagged: false,
        })
    } else {
        Err(ScrewError::DegenerateTwist)
    }
}

/// Threshold on |s_a x s_b| below which two directions count as parallel.
const PARALLEL_TOL: f64 = 1e-9;

/// Distance and angle between two screw axes, exactly symmetric in both
/// components and invariant to flipping either direction.
pub fn axis_error(a: &ScrewAxis, b: &ScrewAxis) -> AxisError {
    let sa = sign_fixed(&a.direction);
    let sb = sign_fixed(&b.direction);
    let dot = sa.dot(&sb).abs().min(1.0);
    let cross = sa.cross(&sb);
    let cross_norm = cross.norm();
    // arccos(|dot|) computed as atan2(|cross|, |dot|): same value, but well
    // conditioned for near-identical directions.
    let angle = cross_norm.atan2(dot).to_degrees();
    let diff = b.point - a.point;
    let distance = if cross_norm > PARALLEL_TOL {
        diff.dot(&cross).abs() / cross_norm
    } else {
        // Parallel: perpendicular offset, projected along one deterministic
        // direction so the result is symmetric bit-for-bit.
        let u = if lex_ge(&sa, &sb) { sa } else { sb };
        (diff - u * diff.dot(&u)).norm()
    };
    AxisError { distance, angle }
}

fn sign_fixed(v: &Vector3<f64>) -> Vector3<f64> {
    for c in v.iter() {
        if c.abs() > 1e-9 {
            return if *c < 0.0 { -*v } else { *v };
        }
    }
    *v
}

fn lex_ge(a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x > y {
            return true;
        }
        if x < y {
            return false;
        }
    }
    true
}
