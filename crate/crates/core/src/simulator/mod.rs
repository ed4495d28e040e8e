//! Scenario engine: rigidly moving polygon obstacles, outline sampling with
//! sensor noise, exact ground-truth collision checks and the closed loop.

mod episode;
mod export;

pub use episode::{run_episode, EpisodeError, EpisodeLog, FrameRecord, Outcome, Termination};
pub use export::{episode_csv, render_identification_svg, render_svg, write_episode_csv, EPISODE_CSV_HEADER};

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;
use crate::planner::{MpcConfig, VehicleState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Body-frame outline of an obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Axis-aligned rectangle centered on the body origin.
    Rect { width: f64, height: f64 },
    /// Plus with arm lengths (right, up, left, down) measured from the
    /// origin and arm width `2 * half_width`.
    Plus { arms: [f64; 4], half_width: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
    /// Several disjoint polygons moving as one body.
    Composite { polygons: Vec<Vec<[f64; 2]>> },
}

impl Shape {
    /// Closed polygons (last vertex connects to the first).
    pub fn polygons(&self) -> Vec<Vec<Point>> {
        let conv = |v: &Vec<[f64; 2]>| v.iter().map(|p| Point::new(p[0], p[1])).collect::<Vec<_>>();
        match self {
            Shape::Rect { width, height } => {
                let (w, h) = (width / 2.0, height / 2.0);
                vec![vec![Point::new(-w, -h), Point::new(w, -h), Point::new(w, h), Point::new(-w, h)]]
            }
            Shape::Plus { arms, half_width: w } => {
                let [r, u, l, d] = *arms;
                let w = *w;
                vec![vec![
                    Point::new(r, -w),
                    Point::new(r, w),
                    Point::new(w, w),
                    Point::new(w, u),
                    Point::new(-w, u),
                    Point::new(-w, w),
                    Point::new(-l, w),
                    Point::new(-l, -w),
                    Point::new(-w, -w),
                    Point::new(-w, -d),
                    Point::new(w, -d),
                    Point::new(w, -w),
                ]]
            }
            Shape::Polygon { vertices } => vec![conv(vertices)],
            Shape::Composite { polygons } => polygons.iter().map(conv).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    #[serde(default)]
    pub name: String,
    pub shape: Shape,
    /// Pose at `t = 0`; the body rotates about this point.
    pub position: [f64; 2],
    #[serde(default)]
    pub orientation: f64,
    #[serde(default)]
    pub velocity: [f64; 2],
    /// Counter-clockwise angular velocity, rad/s.
    #[serde(default)]
    pub omega: f64,
}

fn ccw(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

impl Obstacle {
    pub fn is_static(&self) -> bool {
        self.velocity == [0.0, 0.0] && self.omega == 0.0
    }

    /// Pose `(position, orientation)` at time `t`.
    pub fn pose(&self, t: f64) -> (Point, f64) {
        let p = Point::new(self.position[0], self.position[1]) + Vector2::new(self.velocity[0], self.velocity[1]) * t;
        (p, self.orientation + self.omega * t)
    }

    pub fn to_world(&self, body: &Point, t: f64) -> Point {
        let (p, a) = self.pose(t);
        p + ccw(a) * body
    }

    /// Outline polygons posed at time `t`.
    pub fn posed_polygons(&self, t: f64) -> Vec<Vec<Point>> {
        self.shape
            .polygons()
            .iter()
            .map(|poly| poly.iter().map(|v| self.to_world(v, t)).collect())
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.shape.polygons().iter().map(|p| perimeter(p)).sum()
    }
}

fn edges(poly: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

pub fn perimeter(poly: &[Point]) -> f64 {
    edges(poly).map(|(a, b)| (b - a).norm()).sum()
}

/// Crossing-number test; boundary points may go either way.
pub fn point_in_polygon(p: &Point, poly: &[Point]) -> bool {
    let mut inside = false;
    for (a, b) in edges(poly) {
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the region bounded by `poly`; zero inside.
pub fn polygon_distance(p: &Point, poly: &[Point]) -> f64 {
    if point_in_polygon(p, poly) {
        return 0.0;
    }
    edges(poly).map(|(a, b)| segment_distance(p, &a, &b)).fold(f64::INFINITY, f64::min)
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance(p: &Point, poly: &[Point]) -> f64 {
    edges(poly).map(|(a, b)| segment_distance(p, &a, &b)).fold(f64::INFINITY, f64::min)
}

fn default_noise() -> f64 {
    0.01
}

fn default_frame_dt() -> f64 {
    0.1
}

fn default_vehicle_radius() -> f64 {
    0.2
}

fn default_goal_tolerance() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub vehicle_start: VehicleState,
    pub goal: [f64; 2],
    /// Total points per frame; takes precedence over `point_density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_count: Option<usize>,
    /// Points per metre of outline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_density: Option<f64>,
    #[serde(default = "default_noise")]
    pub sensor_noise_sigma: f64,
    #[serde(default = "default_frame_dt")]
    pub frame_dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Radius of the physical vehicle disc used for ground-truth collisions.
    #[serde(default = "default_vehicle_radius")]
    pub vehicle_radius: f64,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn goal_point(&self) -> Point {
        Point::new(self.goal[0], self.goal[1])
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if !(self.frame_dt > 0.0) {
            return bad("frame_dt must be positive");
        }
        if !(self.duration >= 0.0) {
            return bad("duration must be nonnegative");
        }
        if !(self.sensor_noise_sigma >= 0.0) {
            return bad("sensor_noise_sigma must be nonnegative");
        }
        if !(self.vehicle_radius >= 0.0 && self.goal_tolerance > 0.0) {
            return bad("vehicle_radius must be nonnegative and goal_tolerance positive");
        }
        if matches!(self.point_density, Some(d) if !(d > 0.0)) {
            return bad("point_density must be positive");
        }
        if !self.vehicle_start.is_finite() || !self.goal.iter().all(|g| g.is_finite()) {
            return bad("start and goal must be finite");
        }
        for ob in &self.obstacles {
            for poly in ob.shape.polygons() {
                if poly.len() < 3 || !(perimeter(&poly) > 0.0) {
                    return Err(ScenarioError::Invalid(format!("obstacle '{}' has a degenerate outline", ob.name)));
                }
            }
        }
        Ok(())
    }

    pub fn total_perimeter(&self) -> f64 {
        self.obstacles.iter().map(Obstacle::perimeter).sum()
    }

    /// Points sampled per frame.
    pub fn point_total(&self) -> usize {
        match (self.point_count, self.point_density) {
            (Some(n), _) => n,
            (None, Some(d)) => (d * self.total_perimeter()).round() as usize,
            (None, None) => 0,
        }
    }

    /// Sample locations as `(obstacle index, body-frame point)`, spaced
    /// uniformly by arc length over all outlines.
    pub fn body_samples(&self) -> Vec<(usize, Point)> {
        let n = self.point_total();
        let total = self.total_perimeter();
        let mut out = Vec::with_capacity(n);
        if n == 0 || total <= 0.0 {
            return out;
        }
        let step = total / n as f64;
        let mut k = 0;
        let mut offset = 0.0;
        for (oi, ob) in self.obstacles.iter().enumerate() {
            for poly in ob.shape.polygons() {
                for (a, b) in edges(&poly) {
                    let len = (b - a).norm();
                    while k < n {
                        let s = (k as f64 + 0.5) * step - offset;
                        if s > len {
                            break;
                        }
                        out.push((oi, a + (b - a) * (s / len)));
                        k += 1;
                    }
                    offset += len;
                }
            }
        }
        // Rounding can leave the final sample just past the last edge.
        while out.len() < n {
            let (oi, p) = *out.last().expect("at least one sample");
            out.push((oi, p));
        }
        out
    }

    pub fn moving_obstacles(&self) -> usize {
        self.obstacles.iter().filter(|o| !o.is_static()).count()
    }
}

fn frame_seed(seed: u64, t: f64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ t.to_bits().rotate_left(29)
}

/// Noisy outline points of every obstacle posed at time `t`.
pub fn sample_points(scenario: &Scenario, t: f64) -> Vec<Point> {
    let samples = scenario.body_samples();
    let sigma = scenario.sensor_noise_sigma;
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(scenario.seed, t));
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("valid sigma"));
    samples
        .iter()
        .map(|(oi, body)| {
            let p = scenario.obstacles[*oi].to_world(body, t);
            match &noise {
                Some(d) => p + Vector2::new(d.sample(&mut rng), d.sample(&mut rng)),
                None => p,
            }
        })
        .collect()
}

/// Distance from `p` to the nearest posed obstacle at time `t` (zero when
/// inside one); infinite without obstacles.
pub fn obstacle_distance(scenario: &Scenario, t: f64, p: &Point) -> f64 {
    scenario
        .obstacles
        .iter()
        .flat_map(|ob| ob.posed_polygons(t))
        .map(|poly| polygon_distance(p, &poly))
        .fold(f64::INFINITY, f64::min)
}

/// Whether a disc of `vehicle_radius` at `vehicle_pos` touches any obstacle
/// at time `t`. Contact at exactly the radius counts as a collision.
pub fn ground_truth_collision(scenario: &Scenario, t: f64, vehicle_pos: &Point, vehicle_radius: f64) -> bool {
    obstacle_distance(scenario, t, vehicle_pos) <= vehicle_radius
}

/// Shortest possible time to the goal disc ignoring obstacles: full
/// acceleration along the straight line, capped at the speed bound. Both
/// limits are the support of the control and velocity boxes along the
/// line, so no admissible trajectory is faster.
pub fn straight_line_lower_bound(scenario: &Scenario, mpc: &MpcConfig) -> f64 {
    let start = scenario.vehicle_start;
    let to_goal = scenario.goal_point() - start.position();
    let dist = to_goal.norm() - scenario.goal_tolerance;
    if dist <= 0.0 {
        return 0.0;
    }
    let d = to_goal.normalize();
    let support = |lo: f64, hi: f64, c: f64| (lo * c).max(hi * c);
    let accel = (support(mpc.u_min.x, mpc.u_max.x, d.x) + support(mpc.u_min.y, mpc.u_max.y, d.y)) / mpc.mass;
    let v_max = support(mpc.xi_min[2], mpc.xi_max[2], d.x) + support(mpc.xi_min[3], mpc.xi_max[3], d.y);
    let v0 = start.velocity().dot(&d).clamp(0.0, v_max);
    if accel <= 0.0 {
        return if v0 > 0.0 { dist / v0 } else { f64::INFINITY };
    }
    let t_acc = (v_max - v0) / accel;
    let d_acc = v0 * t_acc + 0.5 * accel * t_acc * t_acc;
    if !d_acc.is_finite() || dist <= d_acc {
        (-v0 + (v0 * v0 + 2.0 * accel * dist).sqrt()) / accel
    } else {
        t_acc + (dist - d_acc) / v_max
    }
}

const MAP_FIXTURES: [&str; 5] = [
    include_str!("../../fixtures/map1.toml"),
    include_str!("../../fixtures/map2.toml"),
    include_str!("../../fixtures/map3.toml"),
    include_str!("../../fixtures/map4.toml"),
    include_str!("../../fixtures/map5.toml"),
];

/// The five reference maps, in order.
pub fn builtin_maps() -> Vec<Scenario> {
    MAP_FIXTURES
        .iter()
        .map(|text| Scenario::from_toml(text).expect("built-in map fixture is valid"))
        .collect()
}

/// Built-in map by 1-based number.
pub fn builtin_map(number: usize) -> Option<Scenario> {
    (1..=MAP_FIXTURES.len())
        .contains(&number)
        .then(|| Scenario::from_toml(MAP_FIXTURES[number - 1]).expect("built-in map fixture is valid"))
}
