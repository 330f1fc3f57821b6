//! On-disk formats: trajectory and waypoint CSV, axis/action/mechanism
//! JSON, point-cloud XYZ text, dataset directories, and study tables.
//! Parse errors carry file, row, and column so harness users can fix their
//! inputs; writers emit full-precision floats so roundtrips are lossless.

use crate::dataset::{AugmentSpec, Dataset, Example, PointCloud, Provenance};
use crate::noise::NoiseStudyRow;
use crate::screw::ScrewAxis;
use crate::se3::{Pose, Rotation};
use crate::trajectory::{relative_trajectory, HandTrajectory, RelativeTrajectory, TimedPose};
use crate::waypoints::{BimanualWaypoints, ScrewAction};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const TRAJECTORY_HEADER: &str = "t,px,py,pz,qw,qx,qy,qz";
pub const WAYPOINT_HEADER: &str = "k,side,px,py,pz,qw,qx,qy,qz";
pub const NOISE_STUDY_HEADER: &str =
    "level,sigma_pos_m,sigma_rot_deg,mean_dist_m,std_dist_m,mean_angle_deg,std_angle_deg,failures";

/// Quaternion norms within this band are renormalized; outside it the row
/// is rejected.
pub const QUAT_NORM_BAND: (f64, f64) = (0.99, 1.01);

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}, row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },
    #[error("{path}, row {row}: {message}")]
    Validation {
        path: PathBuf,
        row: usize,
        message: String,
    },
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Header {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| IoError::io(path, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| IoError::io(path, e))
}

fn parse_field(path: &Path, row: usize, column: &str, raw: &str) -> Result<f64, IoError> {
    raw.trim().parse::<f64>().map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: e.to_string(),
    })
}

/// Builds a pose from CSV fields, renormalizing quaternions within the
/// accepted band and rejecting rows outside it.
fn pose_from_fields(
    path: &Path,
    row: usize,
    p: [f64; 3],
    q: [f64; 4],
) -> Result<Pose, IoError> {
    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if !(QUAT_NORM_BAND.0..=QUAT_NORM_BAND.1).contains(&norm) {
        return Err(IoError::Validation {
            path: path.to_path_buf(),
            row,
            message: format!("quaternion norm {norm} outside [0.99, 1.01]"),
        });
    }
    let rotation = Rotation::from_wxyz(q[0], q[1], q[2], q[3]).ok_or(IoError::Validation {
        path: path.to_path_buf(),
        row,
        message: "degenerate quaternion".into(),
    })?;
    Ok(Pose::new(rotation, Vector3::new(p[0], p[1], p[2])))
}

pub fn write_trajectory_csv(path: &Path, samples: &[TimedPose]) -> Result<(), IoError> {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for s in samples {
        let q = s.pose.rotation.wxyz();
        let t = s.pose.translation;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.time, t.x, t.y, t.z, q[0], q[1], q[2], q[3]
        ));
    }
    write_string(path, &out)
}

pub fn read_trajectory_csv(path: &Path) -> Result<HandTrajectory, IoError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::Format {
        path: path.to_path_buf(),
        message: "empty file".into(),
    })?;
    if header.trim() != TRAJECTORY_HEADER {
        return Err(IoError::Header {
            path: path.to_path_buf(),
            expected: TRAJECTORY_HEADER.into(),
            found: header.trim().into(),
        });
    }
    let columns = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
    let mut samples = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line_idx + 1; // 1-based, header is row 1
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                row,
                column: format!("{} fields", fields.len()),
                message: format!("expected {} comma-separated fields", columns.len()),
            });
        }
        let mut vals = [0.0f64; 8];
        for (i, (raw, col)) in fields.iter().zip(columns).enumerate() {
            vals[i] = parse_field(path, row, col, raw)?;
        }
        let pose = pose_from_fields(
            path,
            row,
            [vals[1], vals[2], vals[3]],
            [vals[4], vals[5], vals[6], vals[7]],
        )?;
        samples.push(TimedPose {
            time: vals[0],
            pose,
        });
    }
    let frame_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trajectory".into());
    HandTrajectory::new(frame_id, samples).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_waypoints_csv(path: &Path, wps: &BimanualWaypoints) -> Result<(), IoError> {
    let mut out = String::from(WAYPOINT_HEADER);
    out.push('\n');
    for (side, poses) in [("left", &wps.left), ("right", &wps.right)] {
        for (k, pose) in poses.iter().enumerate() {
            let q = pose.rotation.wxyz();
            let t = pose.translation;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                k, side, t.x, t.y, t.z, q[0], q[1], q[2], q[3]
            ));
        }
    }
    write_string(path, &out)
}

pub fn read_waypoints_csv(path: &Path) -> Result<BimanualWaypoints, IoError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::Format {
        path: path.to_path_buf(),
        message: "empty file".into(),
    })?;
    if header.trim() != WAYPOINT_HEADER {
        return Err(IoError::Header {
            path: path.to_path_buf(),
            expected: WAYPOINT_HEADER.into(),
            found: header.trim().into(),
        });
    }
    let mut left: Vec<(usize, Pose)> = Vec::new();
    let mut right: Vec<(usize, Pose)> = Vec::new();
    for (line_idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row = line_idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                row,
                column: format!("{} fields", fields.len()),
                message: "expected 9 comma-separated fields".into(),
            });
        }
        let k = fields[0].trim().parse::<usize>().map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            row,
            column: "k".into(),
            message: e.to_string(),
        })?;
        let side = fields[1].trim();
        let mut vals = [0.0f64; 7];
        for (i, col) in ["px", "py", "pz", "qw", "qx", "qy", "qz"].iter().enumerate() {
            vals[i] = parse_field(path, row, col, fields[i + 2])?;
        }
        let pose = pose_from_fields(
            path,
            row,
            [vals[0], vals[1], vals[2]],
            [vals[3], vals[4], vals[5], vals[6]],
        )?;
        match side {
            "left" => left.push((k, pose)),
            "right" => right.push((k, pose)),
            other => {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: "side".into(),
                    message: format!("expected left or right, found {other:?}"),
                })
            }
        }
    }
    left.sort_by_key(|(k, _)| *k);
    right.sort_by_key(|(k, _)| *k);
    if left.len() != right.len() {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            message: format!(
                "left has {} waypoints, right has {}",
                left.len(),
                right.len()
            ),
        });
    }
    let left: Vec<Pose> = left.into_iter().map(|(_, p)| p).collect();
    let right: Vec<Pose> = right.into_iter().map(|(_, p)| p).collect();
    let relative = left
        .iter()
        .zip(&right)
        .map(|(l, r)| l.inverse().compose(r))
        .collect();
    Ok(BimanualWaypoints {
        left,
        right,
        relative,
    })
}

pub fn write_axis_json(path: &Path, axis: &ScrewAxis) -> Result<(), IoError> {
    let mut body = serde_json::to_string_pretty(axis).expect("axis serializes");
    body.push('\n');
    write_string(path, &body)
}

pub fn read_axis_json(path: &Path) -> Result<ScrewAxis, IoError> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[derive(Serialize, Deserialize)]
struct ActionRecord {
    g_l: [f64; 3],
    g_r: [f64; 3],
    axis: ScrewAxis,
    tau_l: Option<String>,
}

/// Writes a screw action; a left-hand trajectory, when present, goes to a
/// sibling CSV referenced by relative path.
pub fn write_action_json(path: &Path, action: &ScrewAction) -> Result<(), IoError> {
    let tau_l = match &action.left_trajectory {
        None => None,
        Some(traj) => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "action".into());
            let tau_name = format!("{stem}_tau_l.csv");
            let tau_path = path.with_file_name(&tau_name);
            write_trajectory_csv(&tau_path, traj.samples())?;
            Some(tau_name)
        }
    };
    let record = ActionRecord {
        g_l: action.grasp_left.into(),
        g_r: action.grasp_right.into(),
        axis: action.axis,
        tau_l,
    };
    let mut body = serde_json::to_string_pretty(&record).expect("action serializes");
    body.push('\n');
    write_string(path, &body)
}

pub fn read_action_json(path: &Path) -> Result<ScrewAction, IoError> {
    let record: ActionRecord =
        serde_json::from_str(&read_to_string(path)?).map_err(|e| IoError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let left_trajectory = match record.tau_l {
        None => None,
        Some(rel) => {
            let tau_path = path.with_file_name(&rel);
            Some(read_trajectory_csv(&tau_path)?)
        }
    };
    Ok(ScrewAction {
        grasp_left: Vector3::from(record.g_l),
        grasp_right: Vector3::from(record.g_r),
        axis: record.axis,
        left_trajectory,
    })
}

pub fn write_cloud_xyz(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let mut out = String::new();
    for p in &cloud.points {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    write_string(path, &out)
}

pub fn read_cloud_xyz(path: &Path) -> Result<PointCloud, IoError> {
    let text = read_to_string(path)?;
    let mut points = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line_idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(IoError::Parse {
                path: path.to_path_buf(),
                row,
                column: format!("{} fields", fields.len()),
                message: "expected 3 whitespace-separated coordinates".into(),
            });
        }
        let x = parse_field(path, row, "x", fields[0])?;
        let y = parse_field(path, row, "y", fields[1])?;
        let z = parse_field(path, row, "z", fields[2])?;
        points.push(Vector3::new(x, y, z));
    }
    Ok(PointCloud::new(points))
}

pub fn write_noise_study_csv(path: &Path, rows: &[NoiseStudyRow]) -> Result<(), IoError> {
    let mut out = String::from(NOISE_STUDY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.level,
            r.sigma_pos_m,
            r.sigma_rot_deg,
            r.mean_dist_m,
            r.std_dist_m,
            r.mean_angle_deg,
            r.std_angle_deg,
            r.failures
        ));
    }
    write_string(path, &out)
}

#[derive(Serialize, Deserialize)]
struct ExampleRecord {
    action: ActionRecord,
    provenance: Provenance,
    parent_id: Option<usize>,
    cloud: String,
}

/// Dataset directory layout: `spec.json`, `index.txt` (ids in insertion
/// order), and `examples/<id>.json` + `examples/<id>.xyz`.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<(), IoError> {
    let examples_dir = dir.join("examples");
    fs::create_dir_all(&examples_dir).map_err(|e| IoError::io(&examples_dir, e))?;
    let mut spec_body = serde_json::to_string_pretty(&dataset.spec).expect("spec serializes");
    spec_body.push('\n');
    write_string(&dir.join("spec.json"), &spec_body)?;
    let mut index = String::new();
    for ex in &dataset.examples {
        index.push_str(&format!("{}\n", ex.id));
        let cloud_name = format!("{}.xyz", ex.id);
        write_cloud_xyz(&examples_dir.join(&cloud_name), &ex.cloud)?;
        let record = ExampleRecord {
            action: ActionRecord {
                g_l: ex.action.grasp_left.into(),
                g_r: ex.action.grasp_right.into(),
                axis: ex.action.axis,
                tau_l: None,
            },
            provenance: ex.provenance,
            parent_id: ex.parent_id,
            cloud: cloud_name,
        };
        let mut body = serde_json::to_string_pretty(&record).expect("example serializes");
        body.push('\n');
        write_string(&examples_dir.join(format!("{}.json", ex.id)), &body)?;
    }
    write_string(&dir.join("index.txt"), &index)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, IoError> {
    let spec_path = dir.join("spec.json");
    let spec: AugmentSpec =
        serde_json::from_str(&read_to_string(&spec_path)?).map_err(|e| IoError::Json {
            path: spec_path,
            message: e.to_string(),
        })?;
    let index_path = dir.join("index.txt");
    let index = read_to_string(&index_path)?;
    let mut examples = Vec::new();
    for line in index.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let id: usize = line.parse().map_err(|_| IoError::Format {
            path: index_path.clone(),
            message: format!("invalid id {line:?}"),
        })?;
        let record_path = dir.join("examples").join(format!("{id}.json"));
        let record: ExampleRecord =
            serde_json::from_str(&read_to_string(&record_path)?).map_err(|e| IoError::Json {
                path: record_path.clone(),
                message: e.to_string(),
            })?;
        let cloud = read_cloud_xyz(&dir.join("examples").join(&record.cloud))?;
        examples.push(Example {
            id,
            cloud,
            action: ScrewAction {
                grasp_left: Vector3::from(record.action.g_l),
                grasp_right: Vector3::from(record.action.g_r),
                axis: record.action.axis,
                left_trajectory: None,
            },
            provenance: record.provenance,
            parent_id: record.parent_id,
        });
    }
    Ok(Dataset { examples, spec })
}

#[derive(Serialize, Deserialize)]
pub struct DemoMeta {
    pub g_l: [f64; 3],
    pub g_r: [f64; 3],
}

/// Ingests a demonstration: left/right trajectory CSVs plus a metadata
/// sidecar carrying the grasp points.
pub fn load_demo(
    left_path: &Path,
    right_path: &Path,
    meta_path: &Path,
) -> Result<(RelativeTrajectory, Vector3<f64>, Vector3<f64>), IoError> {
    let left = read_trajectory_csv(left_path)?;
    let right = read_trajectory_csv(right_path)?;
    let meta: DemoMeta =
        serde_json::from_str(&read_to_string(meta_path)?).map_err(|e| IoError::Json {
            path: meta_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let rel = relative_trajectory(&left, &right).map_err(|e| IoError::Format {
        path: left_path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((rel, Vector3::from(meta.g_l), Vector3::from(meta.g_r)))
}

/// Appends one JSON value per line.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| IoError::io(path, e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r).expect("record serializes");
        writeln!(file, "{line}").map_err(|e| IoError::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::screw::{axis_error, JointType};
    use crate::se3::pose_distance;
    use crate::waypoints::{compose_bimanual, WaypointPlan};
    use std::f64::consts::PI;

    fn tmpdir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("screwspace-io-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn demo_axis() -> ScrewAxis {
        ScrewAxis::revolute(Vector3::new(0.1, 0.0, 0.0), Vector3::z()).unwrap()
    }

    #[test]
    fn trajectory_roundtrip_lossless() {
        let dir = tmpdir("traj");
        let plan = WaypointPlan::new(
            PI * 0.8,
            12,
            Pose::new(Rotation::from_axis_angle(&Vector3::x(), 0.3), Vector3::new(0.05, 0.0, 0.0)),
        )
        .unwrap();
        let poses = crate::waypoints::generate_relative_waypoints(&demo_axis(), &plan);
        let samples: Vec<TimedPose> = poses
            .iter()
            .enumerate()
            .map(|(i, pose)| TimedPose { time: 0.1 * i as f64, pose: *pose })
            .collect();
        let path = dir.join("right.csv");
        write_trajectory_csv(&path, &samples).unwrap();
        let back = read_trajectory_csv(&path).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in samples.iter().zip(back.samples()) {
            assert!(pose_distance(&a.pose, &b.pose, 0.1) < 1e-9);
            assert!((a.time - b.time).abs() < 1e-12);
        }
    }

    #[test]
    fn minimal_two_row_file_loads() {
        let dir = tmpdir("mini");
        let path = dir.join("t.csv");
        fs::write(
            &path,
            "t,px,py,pz,qw,qx,qy,qz\n0.0,0,0,0,1,0,0,0\n1.0,0.1,0,0,1,0,0,0\n",
        )
        .unwrap();
        let traj = read_trajectory_csv(&path).unwrap();
        assert_eq!(traj.len(), 2);
    }

    #[test]
    fn bad_quaternion_cites_row() {
        let dir = tmpdir("badq");
        let path = dir.join("t.csv");
        fs::write(
            &path,
            "t,px,py,pz,qw,qx,qy,qz\n0.0,0,0,0,1,0,0,0\n1.0,0,0,0,1,0,0,0\n2.0,0,0,0,0.5,0,0,0\n",
        )
        .unwrap();
        let err = read_trajectory_csv(&path).unwrap_err();
        match err {
            IoError::Validation { row, .. } => assert_eq!(row, 4),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn near_unit_quaternion_renormalized() {
        let dir = tmpdir("renorm");
        let path = dir.join("t.csv");
        fs::write(
            &path,
            "t,px,py,pz,qw,qx,qy,qz\n0.0,0,0,0,1.005,0,0,0\n1.0,0,0,0,1,0,0,0\n",
        )
        .unwrap();
        let traj = read_trajectory_csv(&path).unwrap();
        let q = traj.samples()[0].pose.rotation.wxyz();
        assert!((q[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parse_error_cites_row_and_column() {
        let dir = tmpdir("badfield");
        let path = dir.join("t.csv");
        fs::write(
            &path,
            "t,px,py,pz,qw,qx,qy,qz\n0.0,0,oops,0,1,0,0,0\n",
        )
        .unwrap();
        match read_trajectory_csv(&path).unwrap_err() {
            IoError::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "py");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn waypoints_roundtrip_preserves_composition() {
        let dir = tmpdir("wps");
        let plan = WaypointPlan::new(1.2, 10, Pose::from_translation(Vector3::new(0.2, 0.0, 0.0)))
            .unwrap();
        let action = ScrewAction::new(Vector3::zeros(), Vector3::zeros(), demo_axis());
        let left: Vec<Pose> = (0..=10)
            .map(|k| Pose::from_translation(Vector3::new(0.0, 0.01 * k as f64, 0.0)))
            .collect();
        let wps = compose_bimanual(&action, &plan, &left).unwrap();
        let path = dir.join("wps.csv");
        write_waypoints_csv(&path, &wps).unwrap();
        let back = read_waypoints_csv(&path).unwrap();
        assert_eq!(back.left.len(), 11);
        for k in 0..11 {
            assert!(pose_distance(&back.left[k], &wps.left[k], 0.1) < 1e-9);
            assert!(pose_distance(&back.right[k], &wps.right[k], 0.1) < 1e-9);
            let recomposed = back.left[k].compose(&back.relative[k]);
            assert!(pose_distance(&recomposed, &back.right[k], 0.1) < 1e-9);
        }
    }

    #[test]
    fn action_json_roundtrip_with_tau() {
        let dir = tmpdir("action");
        let tau = HandTrajectory::from_poses(
            "left",
            vec![
                Pose::identity(),
                Pose::from_translation(Vector3::new(0.0, 0.01, 0.0)),
            ],
        )
        .unwrap();
        let mut action = ScrewAction::new(
            Vector3::new(0.1, 0.2, 0.3),
            Vector3::new(-0.1, 0.0, 0.05),
            demo_axis(),
        );
        action.left_trajectory = Some(tau);
        let path = dir.join("action.json");
        write_action_json(&path, &action).unwrap();
        assert!(dir.join("action_tau_l.csv").exists());
        let back = read_action_json(&path).unwrap();
        assert!((back.grasp_left - action.grasp_left).norm() < 1e-12);
        let err = axis_error(&back.axis, &action.axis);
        assert!(err.distance < 1e-12 && err.angle < 1e-12);
        assert_eq!(back.left_trajectory.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn cloud_roundtrip_and_errors() {
        let dir = tmpdir("cloud");
        let cloud = PointCloud::new(vec![
            Vector3::new(0.0, 0.1, 0.2),
            Vector3::new(-0.3, 0.4, 0.5),
        ]);
        let path = dir.join("c.xyz");
        write_cloud_xyz(&path, &cloud).unwrap();
        let back = read_cloud_xyz(&path).unwrap();
        assert_eq!(back, cloud);

        fs::write(&path, "0 0\n").unwrap();
        assert!(matches!(
            read_cloud_xyz(&path),
            Err(IoError::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn dataset_directory_roundtrip() {
        let dir = tmpdir("dataset");
        let ex = Example {
            id: 0,
            cloud: PointCloud::new(
                (0..40)
                    .map(|i| Vector3::new(0.01 * i as f64, 0.02, (i % 3) as f64 * 0.01))
                    .collect(),
            ),
            action: ScrewAction::new(Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0), demo_axis()),
            provenance: Provenance::Demonstration,
            parent_id: None,
        };
        let dataset = crate::dataset::augment_dataset(
            &[ex],
            &AugmentSpec {
                n_samples: 3,
                seed: 2,
                ..AugmentSpec::default()
            },
        )
        .unwrap();
        let root = dir.join("ds");
        save_dataset(&root, &dataset).unwrap();
        let back = load_dataset(&root).unwrap();
        assert_eq!(back.len(), dataset.len());
        assert_eq!(back.spec, dataset.spec);
        for (a, b) in dataset.examples.iter().zip(&back.examples) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.provenance, b.provenance);
            assert_eq!(a.parent_id, b.parent_id);
            let err = axis_error(&a.action.axis, &b.action.axis);
            assert!(err.distance < 1e-9 && err.angle < 1e-9);
        }
    }

    #[test]
    fn demo_loading_end_to_end() {
        let dir = tmpdir("demo");
        let left = vec![Pose::identity(); 5];
        let axis = demo_axis();
        let right: Vec<Pose> = (0..5)
            .map(|k| axis.pose_at(0.2 * k as f64, &Pose::from_translation(Vector3::new(0.2, 0.0, 0.0))))
            .collect();
        let lp = dir.join("left.csv");
        let rp = dir.join("right.csv");
        let mp = dir.join("meta.json");
        write_trajectory_csv(
            &lp,
            &left
                .iter()
                .enumerate()
                .map(|(i, pose)| TimedPose { time: i as f64, pose: *pose })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        write_trajectory_csv(
            &rp,
            &right
                .iter()
                .enumerate()
                .map(|(i, pose)| TimedPose { time: i as f64, pose: *pose })
                .collect::<Vec<_>>(),
        )
        .unwrap();
        fs::write(&mp, r#"{"g_l": [0.0, 0.1, 0.2], "g_r": [0.3, 0.4, 0.5]}"#).unwrap();
        let (rel, g_l, g_r) = load_demo(&lp, &rp, &mp).unwrap();
        assert_eq!(rel.len(), 5);
        assert_eq!(g_l, Vector3::new(0.0, 0.1, 0.2));
        assert_eq!(g_r, Vector3::new(0.3, 0.4, 0.5));
        let fitted = crate::fit::fit_revolute(&rel, 0.1).unwrap();
        let err = axis_error(&fitted.axis, &axis);
        assert!(err.distance < 1e-9 && err.angle < 1e-7);
        assert_eq!(fitted.axis.joint_type, JointType::Revolute);
    }
}
