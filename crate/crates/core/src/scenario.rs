//! Per-task scenario configuration: the simulated mechanism, the execution
//! plan, how far the initial axis is perturbed, and the optimizer settings.
//! Ships presets for four simulated task analogues.

use crate::cem::CemConfig;
use crate::screw::ScrewAxis;
use crate::se3::{Pose, Rotation};
use crate::sim::Mechanism;
use crate::waypoints::WaypointPlan;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("referenced file does not exist: {path}")]
    MissingFile { path: PathBuf },
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

/// Magnitudes of the synthetic initial-axis error: a point offset in meters
/// and a direction tilt in degrees, both in random perpendicular directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitPerturbation {
    pub dq_m: f64,
    pub ds_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoPaths {
    pub left: PathBuf,
    pub right: PathBuf,
    pub meta: PathBuf,
    #[serde(default)]
    pub cloud: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub mechanism: Mechanism,
    pub plan: WaypointPlan,
    pub init_perturbation: InitPerturbation,
    pub cem: CemConfig,
    #[serde(default)]
    pub demo: Option<DemoPaths>,
}

impl ScenarioConfig {
    /// Parses a scenario file and checks that any referenced demo files
    /// exist.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let config: ScenarioConfig =
            serde_json::from_str(&text).map_err(|e| ScenarioError::Invalid {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if let Some(demo) = &config.demo {
            let base = path.parent().unwrap_or(Path::new(""));
            for p in [&demo.left, &demo.right, &demo.meta] {
                let resolved = base.join(p);
                if !resolved.exists() {
                    return Err(ScenarioError::MissingFile { path: resolved });
                }
            }
            if let Some(cloud) = &demo.cloud {
                let resolved = base.join(cloud);
                if !resolved.exists() {
                    return Err(ScenarioError::MissingFile { path: resolved });
                }
            }
        }
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let mut body = serde_json::to_string_pretty(self).map_err(|e| ScenarioError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        body.push('\n');
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| ScenarioError::Invalid {
                    path: path.to_path_buf(),
                    message: e.to_string(),
                })?;
            }
        }
        std::fs::write(path, body).map_err(|e| ScenarioError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(())
    }
}

/// Perturbs an axis by a point offset and a direction tilt, each along a
/// deterministic pseudo-random perpendicular direction. The result is
/// canonical, so its stored direction may be the flip of the motion
/// direction; execution plans must be oriented with [`oriented_plan`].
pub fn perturbed_axis(axis: &ScrewAxis, dq_m: f64, ds_deg: f64, seed: u64) -> ScrewAxis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_perp = |dir: &Vector3<f64>| loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        )
        .cross(dir);
        if v.norm() > 1e-3 {
            break v.normalize();
        }
    };
    let point = axis.point + random_perp(&axis.direction) * dq_m;
    let tilt_axis = random_perp(&axis.direction);
    let direction =
        Rotation::from_axis_angle(&tilt_axis, ds_deg.to_radians()).apply(&axis.direction);
    ScrewAxis::new(axis.joint_type, point, direction).expect("tilted direction stays unit")
}

/// Signs the plan displacement so that executing it along `init` moves in
/// the same direction as motion along `reference` with the plan's original
/// sign. Canonicalization can flip a fitted or perturbed axis relative to
/// the demonstrated motion; this restores the intended direction.
pub fn oriented_plan(plan: &WaypointPlan, init: &ScrewAxis, reference: &ScrewAxis) -> WaypointPlan {
    let dot = init.direction.dot(&reference.direction);
    let mut oriented = *plan;
    if dot < 0.0 {
        oriented.theta_total = -oriented.theta_total;
    }
    oriented
}

pub const PRESET_NAMES: [&str; 4] = ["bottle", "zipper", "stir", "laptop"];

/// Simulated analogues of four bimanual tasks, parameterized by declared
/// configuration rather than measured object geometry.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let (mechanism, plan) = match name {
        "bottle" => {
            // Vertical cap axis, hand gripping 3 cm off-axis, half-turn.
            let axis = ScrewAxis::revolute(Vector3::zeros(), Vector3::z()).ok()?;
            let t0 = Pose::new(Rotation::identity(), Vector3::new(0.03, 0.0, 0.0));
            let mech = Mechanism::with_defaults(axis, t0, (0.0, PI)).ok()?;
            let plan = WaypointPlan::new(PI, 29, t0).ok()?;
            (mech, plan)
        }
        "zipper" => {
            // Straight 40 cm slide.
            let axis = ScrewAxis::prismatic(Vector3::zeros(), Vector3::x()).ok()?;
            let t0 = Pose::identity();
            let mech = Mechanism::with_defaults(axis, t0, (0.0, 0.4)).ok()?;
            let plan = WaypointPlan::new(0.4, 20, t0).ok()?;
            (mech, plan)
        }
        "stir" => {
            // Circular stirring at 5 cm radius with fixed hand orientation.
            let axis = ScrewAxis::revolute3d(Vector3::zeros(), Vector3::z()).ok()?;
            let t0 = Pose::new(Rotation::identity(), Vector3::new(0.05, 0.0, 0.0));
            let mech = Mechanism::with_defaults(axis, t0, (0.0, 1.5 * PI)).ok()?;
            let plan = WaypointPlan::new(1.5 * PI, 24, t0).ok()?;
            (mech, plan)
        }
        "laptop" => {
            // Horizontal hinge, hand on the screen edge 25 cm out.
            let axis = ScrewAxis::revolute(Vector3::zeros(), Vector3::y()).ok()?;
            let t0 = Pose::new(Rotation::identity(), Vector3::new(0.25, 0.0, 0.0));
            let mech = Mechanism::with_defaults(axis, t0, (0.0, 1.6)).ok()?;
            let plan = WaypointPlan::new(1.6, 20, t0).ok()?;
            (mech, plan)
        }
        _ => return None,
    };
    Some(ScenarioConfig {
        name: name.to_string(),
        mechanism,
        plan,
        init_perturbation: InitPerturbation {
            dq_m: 0.02,
            ds_deg: 8.0,
        },
        cem: CemConfig::default(),
        demo: None,
    })
}
