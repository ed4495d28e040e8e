//! Ellipse-based identification, tracking and avoidance of obstacles in
//! planar point clouds.

pub mod clustering;
pub mod geometry;
pub mod mvee;
pub mod pipeline;
pub mod refinement;
pub mod simulator;
pub mod planner;
pub mod tracking;

pub use clustering::{ClusterResult, VigmmConfig};
pub use geometry::{GeneralEllipse, Point, QuadraticEllipse, StandardEllipse};
pub use mvee::{enclosing_ellipse, MveeConfig};
pub use pipeline::{identify, IdentifiedEllipse, Identification, PipelineConfig, PipelineError, Segmentation};
pub use planner::{solve_mpc, solve_mpc_warm, MpcConfig, MpcSolution, VehicleState};
pub use refinement::{refine, union_ellipse, RefinementConfig};
pub use simulator::{builtin_map, builtin_maps, run_episode, EpisodeLog, Scenario};
pub use tracking::{FeatureVector, Track, Tracker, TrackerConfig};
