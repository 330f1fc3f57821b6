use nalgebra::Vector3;
use screwspace::cem::{optimize, CemConfig};
use screwspace::screw::{axis_error, ScrewAxis};
use screwspace::se3::{Pose, Rotation};
use screwspace::sim::{is_success, Mechanism};
use screwspace::waypoints::WaypointPlan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn perturbed_axis(axis: &ScrewAxis, dq_m: f64, ds_deg: f64, seed: u64) -> ScrewAxis {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perp = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).cross(&axis.direction);
        if v.norm() > 1e-3 { break v.normalize(); }
    };
    let point = axis.point + perp * dq_m;
    perp = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).cross(&axis.direction);
        if v.norm() > 1e-3 { break v.normalize(); }
    };
    let direction = Rotation::from_axis_angle(&perp, ds_deg.to_radians()).apply(&axis.direction);
    ScrewAxis::new(axis.joint_type, point, direction).unwrap()
}

#[test]
fn trace_failing_seed() {
    let axis = ScrewAxis::revolute(Vector3::zeros(), Vector3::z()).unwrap();
    let t0 = Pose::new(Rotation::identity(), Vector3::new(0.03, 0.0, 0.0));
    let mech = Mechanism::with_defaults(axis, t0, (0.0, PI)).unwrap();
    let plan = WaypointPlan::new(PI, 29, t0).unwrap();
    for seed in 0..10u64 {
        let init = perturbed_axis(&mech.true_axis, 0.02, 8.0, 900 + seed);
        let run = optimize(&mech, &init, &plan, &CemConfig { seed, ..CemConfig::default() }).unwrap();
        let ie = axis_error(&mech.true_axis, &init);
        println!("seed {seed}: init (d={:.3} a={:.1}) success={} eps={:?}", ie.distance, ie.angle, run.succeeded, run.episodes_to_success);
        if !run.succeeded {
            for s in run.history.iter() {
                let a = s.candidate_axis.as_ref().unwrap();
                let e = axis_error(&mech.true_axis, a);
                let v = &s.episode;
                println!("  {}.{}: d={:.3} a={:>5.1} len={} fail={:?} mw={:.2} th={:.2} succ={}",
                    s.epoch, s.index, e.distance, e.angle, v.completed_waypoints, v.failure, v.mean_wrench, v.theta_final, is_success(&mech, v));
            }
        }
    }
}
