//! Rigid-body poses, twists, and the exponential/logarithm maps between them.
//!
//! Rotations are stored as unit quaternions (serialized scalar-first); the
//! exp map uses Rodrigues' formula plus the standard V-matrix for the
//! translational block, with Taylor fallbacks below `SMALL_ANGLE`.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Angular magnitude below which a twist is treated as a pure translation.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Rotation angle (radians) at which the matrix logarithm refuses to pick a
/// branch. Callers must subdivide motions that rotate this far in one step.
pub const LOG_BRANCH_LIMIT: f64 = std::f64::consts::PI - 1e-6;

/// Default weight (meters per radian) mixing angular into positional error
/// in [`pose_distance`]. Makes 1 rad comparable to 10 cm at tabletop scale.
pub const POSE_DISTANCE_LAMBDA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum Se3Error {
    #[error("non-finite component in input")]
    NonFinite,
    #[error("rotation angle {angle} rad is within {limit} of pi; branch ambiguous", limit = 1e-6)]
    BranchAmbiguous { angle: f64 },
}

/// A proper rotation of 3-space, kept orthonormal by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation(q)
    }

    /// Builds from scalar-first components, normalizing. Returns `None` when
    /// the norm is too small to define a direction.
    pub fn from_wxyz(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let q = Quaternion::new(w, x, y, z);
        if q.norm() < 1e-12 || !q.norm().is_finite() {
            return None;
        }
        Some(Rotation(UnitQuaternion::from_quaternion(q)))
    }

    /// Scalar-first components (w, x, y, z), with w >= 0 for a stable
    /// serialized form.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        if q.w < 0.0 {
            [-q.w, -q.i, -q.j, -q.k]
        } else {
            [q.w, q.i, q.j, q.k]
        }
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n < 1e-15 || angle == 0.0 {
            return Rotation::identity();
        }
        Rotation(UnitQuaternion::from_axis_angle(
            &nalgebra::Unit::new_normalize(*axis),
            angle,
        ))
    }

    /// Rotation taking the scaled-axis vector `w` (axis * angle).
    pub fn from_scaled_axis(w: &Vector3<f64>) -> Self {
        Rotation(UnitQuaternion::from_scaled_axis(*w))
    }

    /// Axis * angle vector of this rotation (zero for identity).
    pub fn scaled_axis(&self) -> Vector3<f64> {
        self.0.scaled_axis()
    }

    pub fn angle(&self) -> f64 {
        self.0.angle()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.inverse())
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        self.0.to_rotation_matrix().into_inner()
    }

    /// Geodesic angle to another rotation, in radians.
    ///
    /// Computed from quaternion chord lengths, `theta = 4 atan2(|qa - qb|,
    /// |qa + qb|)` after sign alignment, which is exactly symmetric in its
    /// arguments and well conditioned near both 0 and pi.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let a = self.0.quaternion();
        let b = other.0.quaternion();
        let dot = a.w * b.w + a.i * b.i + a.j * b.j + a.k * b.k;
        let (bw, bi, bj, bk) = if dot < 0.0 {
            (-b.w, -b.i, -b.j, -b.k)
        } else {
            (b.w, b.i, b.j, b.k)
        };
        let dn = ((a.w - bw).powi(2) + (a.i - bi).powi(2) + (a.j - bj).powi(2) + (a.k - bk).powi(2))
            .sqrt();
        let sn = ((a.w + bw).powi(2) + (a.i + bi).powi(2) + (a.j + bj).powi(2) + (a.k + bk).powi(2))
            .sqrt();
        4.0 * dn.atan2(sn)
    }

    pub fn is_finite(&self) -> bool {
        let q = self.0.quaternion();
        q.w.is_finite() && q.i.is_finite() && q.j.is_finite() && q.k.is_finite()
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.wxyz().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Rotation::from_wxyz(w, x, y, z)
            .ok_or_else(|| serde::de::Error::custom("quaternion norm too small"))
    }
}

/// A rigid transform: rotation followed by translation (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    #[serde(rename = "quaternion")]
    pub rotation: Rotation,
    #[serde(rename = "position")]
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation,
        }
    }

    /// `self` then-applied-to `other`: the transform mapping a point through
    /// `other` first is `self.compose(&other)` = self * other.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.translation + self.rotation.apply(&other.translation),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rot_inv = self.rotation.inverse();
        Pose {
            translation: -rot_inv.apply(&self.translation),
            rotation: rot_inv,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) + self.translation
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.is_finite()
            && self.translation.iter().all(|c| c.is_finite())
    }
}

/// Exponential coordinates of a rigid motion: angular part omega (radians)
/// and linear part (meters). Unconstrained in R^6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl Twist {
    pub fn new(angular: Vector3<f64>, linear: Vector3<f64>) -> Self {
        Twist { angular, linear }
    }

    pub fn zero() -> Self {
        Twist {
            angular: Vector3::zeros(),
            linear: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.angular.iter().chain(self.linear.iter()).all(|c| c.is_finite())
    }
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// exp: se(3) -> SE(3). Rodrigues for the rotation, V-matrix for the
/// translation; below `SMALL_ANGLE` the pure-translation limit applies.
pub fn exp_coords(xi: &Twist) -> Result<Pose, Se3Error> {
    if !xi.is_finite() {
        return Err(Se3Error::NonFinite);
    }
    let theta = xi.angular.norm();
    if theta < SMALL_ANGLE {
        return Ok(Pose {
            rotation: Rotation::from_scaled_axis(&xi.angular),
            translation: xi.linear,
        });
    }
    let rotation = Rotation::from_scaled_axis(&xi.angular);
    let w = skew(&xi.angular);
    let w2 = w * w;
    let t2 = theta * theta;
    // V = I + a [w] + b [w]^2 with the unnormalized generator [w].
    let (a, b) = if theta < 1e-4 {
        (0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        ((1.0 - theta.cos()) / t2, (theta - theta.sin()) / (t2 * theta))
    };
    let v_mat = Matrix3::identity() + w * a + w2 * b;
    Ok(Pose {
        rotation,
        translation: v_mat * xi.linear,
    })
}

/// log: SE(3) -> se(3), principal branch only.
///
/// Rotations within 1e-6 rad of pi are refused: the axis sign is ambiguous
/// there and a silent branch pick would corrupt downstream averaging.
pub fn log_pose(pose: &Pose) -> Result<Twist, Se3Error> {
    if !pose.is_finite() {
        return Err(Se3Error::NonFinite);
    }
    let theta = pose.rotation.angle();
    if theta >= LOG_BRANCH_LIMIT {
        return Err(Se3Error::BranchAmbiguous { angle: theta });
    }
    let w_vec = pose.rotation.scaled_axis();
    if theta < SMALL_ANGLE {
        return Ok(Twist {
            angular: w_vec,
            linear: pose.translation,
        });
    }
    let w = skew(&w_vec);
    let w2 = w * w;
    let t2 = theta * theta;
    // V^-1 = I - [w]/2 + c [w]^2
    let c = if theta < 1e-4 {
        1.0 / 12.0 + t2 / 720.0
    } else {
        (1.0 - 0.5 * theta * (1.0 + theta.cos()) / theta.sin()) / t2
    };
    let v_inv = Matrix3::identity() - w * 0.5 + w2 * c;
    Ok(Twist {
        angular: w_vec,
        linear: v_inv * pose.translation,
    })
}

/// Mixed position/orientation distance: `|t_a - t_b| + lambda * geodesic`.
/// Nonnegative, symmetric, zero only for equal poses.
pub fn pose_distance(a: &Pose, b: &Pose, lambda: f64) -> f64 {
    (a.translation - b.translation).norm() + lambda * a.rotation.angle_to(&b.rotation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix4;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    /// Truncated power-series matrix exponential on the 4x4 generator;
    /// independent of the closed-form path under test.
    fn series_exp(xi: &Twist, terms: usize) -> Matrix4<f64> {
        let mut g = Matrix4::zeros();
        g.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&xi.angular));
        g.fixed_view_mut::<3, 1>(0, 3).copy_from(&xi.linear);
        let mut acc = Matrix4::identity();
        let mut term = Matrix4::identity();
        for k in 1..=terms {
            term = term * g / (k as f64);
            acc += term;
        }
        acc
    }

    fn pose_to_matrix(p: &Pose) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&p.rotation.to_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&p.translation);
        m
    }

    fn random_twist(rng: &mut ChaCha8Rng, min_angle: f64, max_angle: f64) -> Twist {
        let axis = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .normalize();
        let angle = rng.random_range(min_angle..max_angle);
        let linear = Vector3::new(
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
            rng.random_range(-0.5..0.5),
        );
        Twist::new(axis * angle, linear)
    }

    #[test]
    fn exp_pure_translation() {
        let p = exp_coords(&Twist::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 0.0))).unwrap();
        assert_eq!(p.rotation.angle(), 0.0);
        assert_eq!(p.translation, Vector3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn exp_pure_rotation() {
        let p = exp_coords(&Twist::new(Vector3::new(0.0, 0.0, FRAC_PI_2), Vector3::zeros()))
            .unwrap();
        assert_abs_diff_eq!(p.rotation.angle(), FRAC_PI_2, epsilon = 1e-12);
        assert_abs_diff_eq!(p.translation.norm(), 0.0, epsilon = 1e-12);
        let v = p.rotation.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!(v.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_rejects_non_finite() {
        let bad = Twist::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros());
        assert_eq!(exp_coords(&bad), Err(Se3Error::NonFinite));
    }

    #[test]
    fn exp_matches_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let xi = random_twist(&mut rng, 1e-3, PI - 1e-3);
            let closed = pose_to_matrix(&exp_coords(&xi).unwrap());
            let series = series_exp(&xi, 30);
            assert!((closed - series).abs().max() < 1e-9, "xi = {:?}", xi);
        }
    }

    #[test]
    fn log_identity_and_translation() {
        let xi = log_pose(&Pose::identity()).unwrap();
        assert_eq!(xi.angular, Vector3::zeros());
        assert_eq!(xi.linear, Vector3::zeros());

        let t = Pose::from_translation(Vector3::new(0.3, 0.0, 0.0));
        let xi = log_pose(&t).unwrap();
        assert_eq!(xi.angular, Vector3::zeros());
        assert_eq!(xi.linear, Vector3::new(0.3, 0.0, 0.0));
    }

    #[test]
    fn log_rejects_near_pi() {
        let p = exp_coords(&Twist::new(Vector3::new(0.0, 0.0, PI - 1e-9), Vector3::zeros()))
            .unwrap();
        assert!(matches!(log_pose(&p), Err(Se3Error::BranchAmbiguous { .. })));
    }

    #[test]
    fn exp_log_roundtrip_1000() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let xi = random_twist(&mut rng, 0.01, 3.0);
            let back = log_pose(&exp_coords(&xi).unwrap()).unwrap();
            assert!((back.angular - xi.angular).norm() < 1e-9);
            assert!((back.linear - xi.linear).norm() < 1e-9);
        }
    }

    #[test]
    fn log_exp_small_angle_branch() {
        let xi = Twist::new(
            Vector3::new(1e-6, -2e-6, 5e-7),
            Vector3::new(0.1, 0.2, -0.3),
        );
        let back = log_pose(&exp_coords(&xi).unwrap()).unwrap();
        assert!((back.angular - xi.angular).norm() < 1e-12);
        assert!((back.linear - xi.linear).norm() < 1e-12);
    }

    #[test]
    fn pose_compose_inverse_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let xi = random_twist(&mut rng, 0.01, 3.0);
            let p = exp_coords(&xi).unwrap();
            let id = p.compose(&p.inverse());
            assert!(id.translation.norm() < 1e-9);
            assert!(id.rotation.angle() < 1e-9);
        }
    }

    #[test]
    fn pose_distance_examples() {
        let a = Pose::identity();
        assert_eq!(pose_distance(&a, &a, 0.1), 0.0);

        let b = Pose::from_translation(Vector3::new(0.1, 0.0, 0.0));
        assert_abs_diff_eq!(pose_distance(&a, &b, 0.1), 0.1, epsilon = 1e-12);

        let c = Pose::new(
            Rotation::from_axis_angle(&Vector3::z(), FRAC_PI_2),
            Vector3::zeros(),
        );
        assert_abs_diff_eq!(pose_distance(&a, &c, 0.1), 0.1 * FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn pose_distance_symmetric_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = exp_coords(&random_twist(&mut rng, 0.01, 3.0)).unwrap();
            let b = exp_coords(&random_twist(&mut rng, 0.01, 3.0)).unwrap();
            let dab = pose_distance(&a, &b, 0.1);
            let dba = pose_distance(&b, &a, 0.1);
            assert!(dab >= 0.0);
            assert_eq!(dab, dba);
            assert!(pose_distance(&a, &a, 0.1) < 1e-9);
            assert!(dab > 1e-9);
        }
    }

    #[test]
    fn rotation_serde_scalar_first() {
        let r = Rotation::from_axis_angle(&Vector3::z(), 1.0);
        let json = serde_json::to_string(&r).unwrap();
        let vals: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_abs_diff_eq!(vals[0], (0.5f64).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(vals[3], (0.5f64).sin(), epsilon = 1e-12);
        let back: Rotation = serde_json::from_str(&json).unwrap();
        assert!(r.angle_to(&back) < 1e-12);
    }
}
