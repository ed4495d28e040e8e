use std::time::Instant;

use thiserror::Error;

use super::{ground_truth_collision, obstacle_distance, sample_points, Scenario, ScenarioError};
use crate::geometry::Point;
use crate::pipeline::{identify, IdentifiedEllipse, PipelineConfig, PipelineError, StageTimings};
use crate::planner::{shift_controls, solve_mpc_warm, step_dynamics, MpcConfig, MpcSolution, PlannerError, VehicleState};
use crate::tracking::{FeatureVector, Track, Tracker, TrackerConfig, TrackingError};

/// Intermediate positions checked for collisions per control step.
const COLLISION_SUBSTEPS: usize = 5;

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub time: f64,
    /// Vehicle state at the start of the frame.
    pub state: VehicleState,
    pub points: Vec<Point>,
    pub ellipses: Vec<IdentifiedEllipse>,
    pub tracks: Vec<Track>,
    pub plan: MpcSolution,
    pub identification_ms: f64,
    pub stage_ms: StageTimings,
    pub tracking_ms: f64,
    pub planning_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GoalReached,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub reached: bool,
    /// Time at which the vehicle first came within the goal tolerance.
    pub time_to_goal: Option<f64>,
    /// Smallest gap between the vehicle disc and any obstacle; negative
    /// when they overlapped.
    pub min_clearance: f64,
    pub collisions: usize,
    pub termination: Termination,
    /// Vehicle state when the episode ended.
    pub final_state: VehicleState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub scenario: String,
    pub frames: Vec<FrameRecord>,
    /// Every simulated vehicle state, one per control step.
    pub trajectory: Vec<(f64, VehicleState)>,
    pub outcome: Outcome,
}

impl EpisodeLog {
    pub fn mean_identification_ms(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().map(|f| f.identification_ms).sum::<f64>() / self.frames.len() as f64
    }
}

/// Runs the closed loop: per frame, sample the obstacles, identify
/// ellipses, update the tracks, plan, then apply the planned controls for
/// one frame interval. Stops at the goal, on contact with the ground truth,
/// or when the scenario duration is used up.
pub fn run_episode(
    scenario: &Scenario,
    pipeline_cfg: &PipelineConfig,
    tracker_cfg: &TrackerConfig,
    mpc_cfg: &MpcConfig,
) -> Result<EpisodeLog, EpisodeError> {
    scenario.validate()?;
    pipeline_cfg.validate()?;
    mpc_cfg.validate()?;
    let mut tracker = Tracker::new(*tracker_cfg)?;
    let goal = scenario.goal_point();
    let steps_per_frame = ((scenario.frame_dt / mpc_cfg.dt).round() as usize).max(1);
    let radius = scenario.vehicle_radius;

    let mut xi = scenario.vehicle_start;
    let mut frames = Vec::new();
    let mut trajectory = vec![(0.0, xi)];
    let mut warm: Option<Vec<nalgebra::Vector2<f64>>> = None;
    let mut min_clearance = obstacle_distance(scenario, 0.0, &xi.position()) - radius;
    let mut termination = Termination::Timeout;
    let mut time_to_goal = None;
    let mut collisions = 0;

    if (xi.position() - goal).norm() < scenario.goal_tolerance {
        termination = Termination::GoalReached;
        time_to_goal = Some(0.0);
    } else if ground_truth_collision(scenario, 0.0, &xi.position(), radius) {
        termination = Termination::Collision;
        collisions = 1;
    }

    let mut k = 0usize;
    'frames: while termination == Termination::Timeout {
        let t = k as f64 * scenario.frame_dt;
        if t >= scenario.duration {
            break;
        }
        let points = sample_points(scenario, t);

        let start = Instant::now();
        let (ellipses, stage_ms) = if points.is_empty() {
            (Vec::new(), StageTimings::default())
        } else {
            let id = identify(&points, pipeline_cfg)?;
            (id.ellipses, id.timings)
        };
        let identification_ms = start.elapsed().as_secs_f64() * 1e3;

        let start = Instant::now();
        let features: Vec<FeatureVector> = ellipses.iter().map(|e| FeatureVector::from(e.ellipse)).collect();
        let tracks = tracker.update(&features, t)?.to_vec();
        let tracking_ms = start.elapsed().as_secs_f64() * 1e3;

        let start = Instant::now();
        let plan = solve_mpc_warm(&xi, &goal, &tracks, mpc_cfg, warm.as_deref())?;
        let planning_ms = start.elapsed().as_secs_f64() * 1e3;

        let frame_state = xi;
        for s in 0..steps_per_frame {
            let u = plan.controls[s.min(plan.controls.len() - 1)];
            let next = step_dynamics(&xi, &u, mpc_cfg.dt, mpc_cfg.mass);
            let t0 = t + s as f64 * mpc_cfg.dt;
            for sub in 1..=COLLISION_SUBSTEPS {
                let f = sub as f64 / COLLISION_SUBSTEPS as f64;
                let ts = t0 + f * mpc_cfg.dt;
                let p = xi.position() + (next.position() - xi.position()) * f;
                min_clearance = min_clearance.min(obstacle_distance(scenario, ts, &p) - radius);
                if ground_truth_collision(scenario, ts, &p, radius) {
                    collisions += 1;
                    termination = Termination::Collision;
                }
            }
            xi = next;
            let ts = t0 + mpc_cfg.dt;
            trajectory.push((ts, xi));
            if termination == Termination::Collision {
                break;
            }
            if (xi.position() - goal).norm() < scenario.goal_tolerance {
                termination = Termination::GoalReached;
                time_to_goal = Some(ts);
                break;
            }
        }
        warm = Some(shift_controls(&plan.controls, steps_per_frame));
        frames.push(FrameRecord {
            time: t,
            state: frame_state,
            points,
            ellipses,
            tracks,
            plan,
            identification_ms,
            stage_ms,
            tracking_ms,
            planning_ms,
        });
        k += 1;
        if termination != Termination::Timeout {
            break 'frames;
        }
    }

    Ok(EpisodeLog {
        scenario: scenario.name.clone(),
        frames,
        trajectory,
        outcome: Outcome {
            reached: termination == Termination::GoalReached,
            time_to_goal,
            min_clearance,
            collisions,
            termination,
            final_state: xi,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{builtin_map, Obstacle, Shape};

    fn open_field() -> Scenario {
        Scenario {
            name: "open".into(),
            obstacles: Vec::new(),
            vehicle_start: VehicleState::new(0.0, 0.0, 0.0, 0.0),
            goal: [6.0, 2.0],
            point_count: None,
            point_density: None,
            sensor_noise_sigma: 0.01,
            frame_dt: 0.1,
            duration: 10.0,
            seed: 0,
            vehicle_radius: 0.2,
            goal_tolerance: 0.2,
        }
    }

    fn run(sc: &Scenario, mpc: &MpcConfig) -> EpisodeLog {
        run_episode(sc, &PipelineConfig::default(), &TrackerConfig::default(), mpc).unwrap()
    }

    #[test]
    fn empty_scenario_reaches_goal() {
        let log = run(&open_field(), &MpcConfig::default());
        assert!(log.outcome.reached);
        assert_eq!(log.outcome.collisions, 0);
        let times: Vec<f64> = log.frames.iter().map(|f| f.time).collect();
        for w in times.windows(2) {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_duration_stops_immediately() {
        let sc = Scenario { duration: 0.0, ..open_field() };
        let log = run(&sc, &MpcConfig::default());
        assert!(!log.outcome.reached);
        assert!(log.frames.is_empty());
        assert_eq!(log.outcome.termination, Termination::Timeout);
    }

    #[test]
    fn sweeping_obstacle_hits_frozen_vehicle() {
        let sc = builtin_map(3).unwrap();
        let frozen = MpcConfig {
            u_min: nalgebra::Vector2::new(-1e-12, -1e-12),
            u_max: nalgebra::Vector2::zeros(),
            ..MpcConfig::default()
        };
        let log = run(&sc, &frozen);
        assert!(log.outcome.collisions >= 1);
        assert_eq!(log.outcome.termination, Termination::Collision);
    }

    #[test]
    fn episodes_are_deterministic() {
        let mut sc = open_field();
        sc.obstacles.push(Obstacle {
            name: "block".into(),
            shape: Shape::Rect { width: 0.6, height: 0.6 },
            position: [3.0, 1.0],
            orientation: 0.3,
            velocity: [0.0, 0.0],
            omega: 0.0,
        });
        sc.point_count = Some(60);
        let a = run(&sc, &MpcConfig::default());
        let b = run(&sc, &MpcConfig::default());
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.outcome, b.outcome);
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            assert_eq!(fa.points, fb.points);
            assert_eq!(fa.ellipses, fb.ellipses);
            assert_eq!(fa.plan, fb.plan);
        }
        assert!(a.outcome.reached && a.outcome.collisions == 0);
    }
}
