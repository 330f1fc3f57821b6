//! Cross-entropy-method fine-tuning of a screw axis against the simulated
//! mechanism, with two-stage episode ranking (length, then mean wrench) over
//! the cumulative history, plus the baseline that explores directly in raw
//! waypoint space.
//!
//! The perturbation anchor is fixed: candidates are always init + epsilon,
//! and only the sampling distribution of epsilon evolves.

use crate::screw::ScrewAxis;
use crate::se3::{Pose, Rotation};
use crate::sim::{is_success, run_episode, EpisodeResult, Mechanism};
use crate::waypoints::{generate_relative_waypoints, WaypointPlan};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CemError {
    #[error("elite_count must not exceed n_epochs * episodes_per_epoch")]
    EliteExceedsBudget,
    #[error("n_epochs and episodes_per_epoch must be at least 1")]
    EmptyBudget,
    #[error("sigma entries must be positive")]
    NonPositiveSigma,
    #[error("candidate direction vanished after 100 resamples")]
    DegenerateDirection,
    #[error("initial axis joint type {init} does not match mechanism type {mech}")]
    JointTypeMismatch { init: String, mech: String },
}

/// Which reward signals the episode ranking uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardFlags {
    pub use_grasp_lost: bool,
    pub use_mean_wrench: bool,
}

impl Default for RewardFlags {
    fn default() -> Self {
        RewardFlags {
            use_grasp_lost: true,
            use_mean_wrench: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemConfig {
    pub n_epochs: usize,
    pub episodes_per_epoch: usize,
    pub elite_count: usize,
    /// Initial per-dimension stds: 3 for the axis point (meters), 3 for the
    /// direction components (dimensionless).
    pub sigma0: [f64; 6],
    pub sigma_floor: [f64; 6],
    pub seed: u64,
    pub stop_on_success: bool,
    pub reward_flags: RewardFlags,
}

impl Default for CemConfig {
    fn default() -> Self {
        CemConfig {
            n_epochs: 5,
            episodes_per_epoch: 5,
            elite_count: 5,
            sigma0: [0.02, 0.02, 0.02, 0.1, 0.1, 0.1],
            sigma_floor: [1e-4; 6],
            seed: 0,
            stop_on_success: true,
            reward_flags: RewardFlags::default(),
        }
    }
}

impl CemConfig {
    pub fn validated(self) -> Result<Self, CemError> {
        if self.n_epochs == 0 || self.episodes_per_epoch == 0 || self.elite_count == 0 {
            return Err(CemError::EmptyBudget);
        }
        if self.elite_count > self.n_epochs * self.episodes_per_epoch {
            return Err(CemError::EliteExceedsBudget);
        }
        if self
            .sigma0
            .iter()
            .chain(self.sigma_floor.iter())
            .any(|s| !(*s > 0.0))
        {
            return Err(CemError::NonPositiveSigma);
        }
        Ok(self)
    }
}

/// Diagonal Gaussian over the perturbation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CemDistribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| Normal::new(*m, *s).expect("finite std").sample(rng))
            .collect()
    }
}

/// One executed candidate: the drawn perturbation, the axis it produced
/// (absent for waypoint-space candidates), and its episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CemSample {
    pub epoch: usize,
    pub index: usize,
    pub epsilon: Vec<f64>,
    pub candidate_axis: Option<ScrewAxis>,
    pub episode: EpisodeResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRun {
    pub history: Vec<CemSample>,
    pub best: CemSample,
    pub succeeded: bool,
    /// Cumulative episode count at the first success.
    pub episodes_to_success: Option<usize>,
    pub final_distribution: CemDistribution,
}

/// Per-episode RNG derived from (seed, epoch, index) so results are
/// independent of evaluation order.
fn episode_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

/// Draws epsilon and applies it to the anchor axis: additive in the point,
/// additive-then-renormalized in the direction, then canonicalized.
pub fn sample_candidate(
    init_axis: &ScrewAxis,
    distribution: &CemDistribution,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, ScrewAxis), CemError> {
    debug_assert_eq!(distribution.mean.len(), 6);
    for _ in 0..100 {
        let eps = distribution.sample(rng);
        let point = init_axis.point + Vector3::new(eps[0], eps[1], eps[2]);
        let direction = init_axis.direction + Vector3::new(eps[3], eps[4], eps[5]);
        if direction.norm() < 1e-8 {
            continue;
        }
        let axis = ScrewAxis::new(init_axis.joint_type, point, direction)
            .expect("non-degenerate direction");
        return Ok((eps, axis));
    }
    Err(CemError::DegenerateDirection)
}

/// Cumulative two-stage ranking: episode length first (longer is better);
/// among equal lengths, lower mean wrench when enabled; remaining ties by
/// submission order. Returns the top `t` samples in ranking order.
pub fn rank_and_elite<'a>(
    history: &'a [CemSample],
    t: usize,
    flags: RewardFlags,
) -> Vec<&'a CemSample> {
    let mut order: Vec<(&CemSample, usize, f64)> = history
        .iter()
        .map(|s| {
            let view = s.episode.ranking_view(flags.use_grasp_lost);
            (s, view.completed_waypoints, view.mean_wrench)
        })
        .collect();
    order.sort_by(|(sa, la, wa), (sb, lb, wb)| {
        lb.cmp(la)
            .then_with(|| {
                if flags.use_mean_wrench {
                    wa.total_cmp(wb)
                } else {
                    Ordering::Equal
                }
            })
            .then_with(|| sa.epoch.cmp(&sb.epoch))
            .then_with(|| sa.index.cmp(&sb.index))
    });
    order.into_iter().take(t).map(|(s, _, _)| s).collect()
}

/// Per-dimension mean and maximum-likelihood std of the elite
/// perturbations, stds clamped below by the floor. A single-sample elite
/// gets the floor.
pub fn fit_distribution(elite: &[&CemSample], sigma_floor: &[f64]) -> CemDistribution {
    assert!(!elite.is_empty(), "elite must be non-empty");
    let dim = elite[0].epsilon.len();
    let n = elite.len() as f64;
    let mut mean = vec![0.0; dim];
    for s in elite {
        for (m, e) in mean.iter_mut().zip(&s.epsilon) {
            *m += e;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut std = vec![0.0; dim];
    if elite.len() > 1 {
        for s in elite {
            for ((v, e), m) in std.iter_mut().zip(&s.epsilon).zip(&mean) {
                *v += (e - m).powi(2);
            }
        }
        for v in std.iter_mut() {
            *v = (*v / n).sqrt();
        }
    }
    for (i, v) in std.iter_mut().enumerate() {
        let floor = sigma_floor[i % sigma_floor.len()];
        if *v < floor {
            *v = floor;
        }
    }
    CemDistribution { mean, std }
}

/// Algorithm: per epoch, draw E candidates around the fixed anchor from the
/// current distribution, execute each, then refit the distribution to the
/// elite of the cumulative history. Stops early on simulated success when
/// configured. Deterministic given the seed.
pub fn optimize(
    mech: &Mechanism,
    init_axis: &ScrewAxis,
    plan: &WaypointPlan,
    config: &CemConfig,
) -> Result<OptRun, CemError> {
    let config = config.clone().validated()?;
    if init_axis.joint_type != mech.true_axis.joint_type {
        return Err(CemError::JointTypeMismatch {
            init: init_axis.joint_type.to_string(),
            mech: mech.true_axis.joint_type.to_string(),
        });
    }
    let initial = CemDistribution {
        mean: vec![0.0; 6],
        std: config.sigma0.to_vec(),
    };
    run_cem_loop(&config, initial, mech, |epoch, index, dist| {
        let mut rng = episode_rng(config.seed, epoch, index);
        let (eps, axis) = sample_candidate(init_axis, dist, &mut rng)?;
        // The sampled motion runs along s_init + eps. Canonicalization may
        // flip the stored direction (its sign rule keys on the leading
        // component, which a perturbation can push across zero); execution
        // must still follow the sampled direction, so the displacement sign
        // compensates.
        let raw_dir = init_axis.direction + Vector3::new(eps[3], eps[4], eps[5]);
        let mut exec_plan = *plan;
        if raw_dir.dot(&axis.direction) < 0.0 {
            exec_plan.theta_total = -exec_plan.theta_total;
        }
        let wps = generate_relative_waypoints(&axis, &exec_plan);
        let episode = run_episode(mech, &wps);
        Ok(CemSample {
            epoch,
            index,
            epsilon: eps,
            candidate_axis: Some(axis),
            episode,
        })
    })
}

/// The waypoint-space baseline: candidates perturb every waypoint pose
/// independently (position noise plus a rotation-vector perturbation), so
/// the search space has 6 dimensions per waypoint.
pub fn optimize_waypoint_space(
    mech: &Mechanism,
    init_waypoints: &[Pose],
    config: &CemConfig,
    noise: (f64, f64),
) -> Result<OptRun, CemError> {
    let config = config.clone().validated()?;
    assert!(init_waypoints.len() >= 2, "need at least 2 waypoints");
    let (sigma_pos, sigma_rot_deg) = noise;
    if !(sigma_pos >= 0.0 && sigma_rot_deg >= 0.0) {
        return Err(CemError::NonPositiveSigma);
    }
    let dim = 6 * init_waypoints.len();
    // Rotation dims share the angle budget across three components.
    let sigma_rot = sigma_rot_deg.to_radians() / 3f64.sqrt();
    let mut sigma0 = Vec::with_capacity(dim);
    for _ in 0..init_waypoints.len() {
        sigma0.extend_from_slice(&[sigma_pos, sigma_pos, sigma_pos, sigma_rot, sigma_rot, sigma_rot]);
    }
    // Zero exploration stds are allowed here (the no-noise baseline).
    let sigma0: Vec<f64> = sigma0.into_iter().map(|s| s.max(1e-12)).collect();
    let initial = CemDistribution {
        mean: vec![0.0; dim],
        std: sigma0,
    };
    run_cem_loop(&config, initial, mech, |epoch, index, dist| {
        let mut rng = episode_rng(config.seed, epoch, index);
        let eps = dist.sample(&mut rng);
        let wps: Vec<Pose> = init_waypoints
            .iter()
            .enumerate()
            .map(|(i, wp)| {
                let dt = Vector3::new(eps[6 * i], eps[6 * i + 1], eps[6 * i + 2]);
                let dr = Vector3::new(eps[6 * i + 3], eps[6 * i + 4], eps[6 * i + 5]);
                Pose::new(
                    wp.rotation.compose(&Rotation::from_scaled_axis(&dr)),
                    wp.translation + dt,
                )
            })
            .collect();
        let episode = run_episode(mech, &wps);
        Ok(CemSample {
            epoch,
            index,
            epsilon: eps,
            candidate_axis: None,
            episode,
        })
    })
}

fn run_cem_loop<F>(
    config: &CemConfig,
    initial_dist: CemDistribution,
    mech: &Mechanism,
    mut run_candidate: F,
) -> Result<OptRun, CemError>
where
    F: FnMut(usize, usize, &CemDistribution) -> Result<CemSample, CemError>,
{
    let mut dist = initial_dist;
    let mut history: Vec<CemSample> = Vec::new();
    let mut succeeded = false;
    let mut episodes_to_success = None;
    'epochs: for epoch in 1..=config.n_epochs {
        for index in 1..=config.episodes_per_epoch {
            let sample = run_candidate(epoch, index, &dist)?;
            let success = is_success(mech, &sample.episode);
            history.push(sample);
            if success && episodes_to_success.is_none() {
                succeeded = true;
                episodes_to_success =
                    Some((epoch - 1) * config.episodes_per_epoch + index);
                if config.stop_on_success {
                    break 'epochs;
                }
            }
        }
        let elite = rank_and_elite(&history, config.elite_count, config.reward_flags);
        dist = fit_distribution(&elite, &config.sigma_floor);
    }
    // Final distribution over the cumulative history, also when stopping
    // mid-epoch.
    let elite = rank_and_elite(&history, config.elite_count, config.reward_flags);
    dist = fit_distribution(&elite, &config.sigma_floor);
    let best = rank_and_elite(&history, 1, config.reward_flags)[0].clone();
    Ok(OptRun {
        history,
        best,
        succeeded,
        episodes_to_success,
        final_distribution: dist,
    })
}
