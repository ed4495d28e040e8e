//! Point-mass model predictive control with soft ellipsoidal collision
//! constraints.
//!
//! The optimal slack for a fixed trajectory is `s = max(0, (1 - c) / ψ)`,
//! so slacks are eliminated and the problem becomes a box-constrained
//! nonlinear least-squares problem in the control sequence alone. It is
//! solved by projected Gauss-Newton with Armijo backtracking. Velocity and
//! position bounds are enforced exactly by clamping each control so that
//! the next state stays inside the box.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, StandardEllipse};
use crate::tracking::{predict_ellipse, Track};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite input")]
    NonFinite,
}

/// `[px, py, vx, vy]` of the point-mass vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub px: f64,
    pub py: f64,
    pub vx: f64,
    pub vy: f64,
}

impl VehicleState {
    pub fn new(px: f64, py: f64, vx: f64, vy: f64) -> Self {
        Self { px, py, vx, vy }
    }

    pub fn at_rest(p: Point) -> Self {
        Self::new(p.x, p.y, 0.0, 0.0)
    }

    pub fn position(&self) -> Point {
        Point::new(self.px, self.py)
    }

    pub fn velocity(&self) -> Vector2<f64> {
        Vector2::new(self.vx, self.vy)
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.px, self.py, self.vx, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.as_vector().iter().all(|x| x.is_finite())
    }
}

/// Forward-Euler step of the point mass: position uses the old velocity.
pub fn step_dynamics(xi: &VehicleState, u: &Vector2<f64>, dt: f64, m: f64) -> VehicleState {
    VehicleState {
        px: xi.px + xi.vx * dt,
        py: xi.py + xi.vy * dt,
        vx: xi.vx + u.x / m * dt,
        vy: xi.vy + u.y / m * dt,
    }
}

/// Quadratic form of the vehicle position in the obstacle ellipse grown by
/// `vehicle_radius` on both semi-axes. Values above one are collision free.
pub fn collision_margin(xi: &VehicleState, e: &StandardEllipse, vehicle_radius: f64) -> f64 {
    e.enlarged(vehicle_radius).quad_at(&xi.position())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MpcConfig {
    pub horizon: usize,
    pub dt: f64,
    pub mass: f64,
    /// Tracking weight on `[px, py, vx, vy]`.
    pub q: Matrix4<f64>,
    pub p: Matrix2<f64>,
    /// Slack weight, shared by all obstacles. With unit weight the
    /// tracking and control terms outweigh the collision penalty and plans
    /// cut through obstacles.
    pub slack_weight: f64,
    pub psi: f64,
    pub u_min: Vector2<f64>,
    pub u_max: Vector2<f64>,
    pub xi_min: Vector4<f64>,
    pub xi_max: Vector4<f64>,
    pub vehicle_radius: f64,
    pub solver_iters: usize,
    pub solver_tol: f64,
    /// Speed of the velocity reference far from the goal; zero gives a
    /// pure stop-at-goal reference.
    pub cruise_speed: f64,
    /// Deceleration of the reference speed profile near the goal: the
    /// speed is capped at sqrt(2·approach_decel·distance).
    pub approach_decel: f64,
    /// Also try lateral detour initializations when the best plan still
    /// violates a collision constraint.
    pub multi_start: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let inf = f64::INFINITY;
        Self {
            horizon: 20,
            dt: 0.05,
            mass: 1.0,
            q: Matrix4::identity(),
            p: Matrix2::from_diagonal(&Vector2::new(0.1, 0.1)),
            slack_weight: 100.0,
            psi: 0.15,
            u_min: Vector2::new(-20.0, -20.0),
            u_max: Vector2::new(20.0, 20.0),
            xi_min: Vector4::new(-inf, -inf, -20.0, -20.0),
            xi_max: Vector4::new(inf, inf, 20.0, 20.0),
            vehicle_radius: 0.3,
            solver_iters: 50,
            solver_tol: 1e-6,
            cruise_speed: 12.0,
            approach_decel: 7.0,
            multi_start: true,
        }
    }
}

fn is_psd(m: &[f64], n: usize) -> bool {
    let mat = DMatrix::from_column_slice(n, n, m);
    if (&mat - mat.transpose()).amax() > 1e-12 * (1.0 + mat.amax()) {
        return false;
    }
    SymmetricEigen::new(mat).eigenvalues.iter().all(|&l| l >= -1e-12)
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        use PlannerError::InvalidConfig as E;
        if self.horizon == 0 {
            return Err(E("horizon must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(E("dt must be positive"));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(E("mass must be positive"));
        }
        if !(self.psi > 0.0 && self.psi.is_finite()) {
            return Err(E("psi must be positive"));
        }
        if !(self.slack_weight >= 0.0 && self.slack_weight.is_finite()) {
            return Err(E("slack_weight must be nonnegative"));
        }
        if !(0..2).all(|k| self.u_min[k] < self.u_max[k] && self.u_min[k].is_finite() && self.u_max[k].is_finite()) {
            return Err(E("control bounds must be finite with u_min < u_max"));
        }
        if !(0..4).all(|k| self.xi_min[k] <= self.xi_max[k]) {
            return Err(E("state bounds must satisfy xi_min <= xi_max"));
        }
        if !is_psd(self.q.as_slice(), 4) || !is_psd(self.p.as_slice(), 2) {
            return Err(E("q and p must be symmetric positive semidefinite"));
        }
        if !(self.vehicle_radius >= 0.0 && self.solver_tol > 0.0) {
            return Err(E("vehicle_radius must be nonnegative and solver_tol positive"));
        }
        if !(self.cruise_speed >= 0.0 && self.approach_decel > 0.0) {
            return Err(E("cruise_speed must be nonnegative and approach_decel positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Converged,
    IterLimit,
    Infeasible,
}

/// Tracking, control and slack parts of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub tracking: f64,
    pub control: f64,
    pub slack: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.tracking + self.control + self.slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSolution {
    /// `N + 1` states starting with the initial state.
    pub states: Vec<VehicleState>,
    pub controls: Vec<Vector2<f64>>,
    /// `slacks[i][j]` belongs to state `i + 1` and obstacle `j`.
    pub slacks: Vec<Vec<f64>>,
    /// Collision margins in the same layout as `slacks`.
    pub margins: Vec<Vec<f64>>,
    pub cost: CostBreakdown,
    pub status: SolverStatus,
    pub iterations: usize,
}

impl MpcSolution {
    pub fn first_control(&self) -> Vector2<f64> {
        self.controls[0]
    }

    pub fn max_slack(&self) -> f64 {
        self.slacks.iter().flatten().fold(0.0, |a, &s| a.max(s))
    }
}

/// Obstacle ellipses predicted for every step of the horizon:
/// `steps[i][j]` is obstacle `j` at time `(i + 1)·dt`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObstacleForecast {
    pub steps: Vec<Vec<StandardEllipse>>,
}

impl ObstacleForecast {
    pub fn from_tracks(tracks: &[Track], horizon: usize, dt: f64) -> Self {
        Self {
            steps: (1..=horizon)
                .map(|i| tracks.iter().map(|tr| predict_ellipse(tr, i as f64 * dt)).collect())
                .collect(),
        }
    }

    pub fn from_static(ellipses: &[StandardEllipse], horizon: usize) -> Self {
        Self {
            steps: vec![ellipses.to_vec(); horizon],
        }
    }

    pub fn n_obstacles(&self) -> usize {
        self.steps.first().map_or(0, Vec::len)
    }
}

/// Plans against the constant-velocity predictions of `obstacles`.
pub fn solve_mpc(
    xi_init: &VehicleState,
    goal: &Point,
    obstacles: &[Track],
    cfg: &MpcConfig,
) -> Result<MpcSolution, PlannerError> {
    solve_mpc_warm(xi_init, goal, obstacles, cfg, None)
}

/// [`solve_mpc`] with an optional initial control sequence, typically the
/// previous plan shifted by one step.
pub fn solve_mpc_warm(
    xi_init: &VehicleState,
    goal: &Point,
    obstacles: &[Track],
    cfg: &MpcConfig,
    warm: Option<&[Vector2<f64>]>,
) -> Result<MpcSolution, PlannerError> {
    let forecast = ObstacleForecast::from_tracks(obstacles, cfg.horizon, cfg.dt);
    solve_mpc_forecast(xi_init, goal, &forecast, cfg, warm)
}

/// Shifts a plan by `steps` controls, repeating the last one.
pub fn shift_controls(controls: &[Vector2<f64>], steps: usize) -> Vec<Vector2<f64>> {
    let Some(last) = controls.last() else {
        return Vec::new();
    };
    (0..controls.len())
        .map(|i| controls.get(i + steps).copied().unwrap_or(*last))
        .collect()
}

struct Problem<'a> {
    cfg: &'a MpcConfig,
    xi0: Vector4<f64>,
    /// Reference state for each step after the initial one.
    reference: Vec<Vector4<f64>>,
    forecast: &'a ObstacleForecast,
    /// Enlarged ellipse shape matrices and centers per step and obstacle.
    shapes: Vec<Vec<(Matrix2<f64>, Point, Point)>>,
    q_half: Matrix4<f64>,
    p_half: Matrix2<f64>,
}

struct Rollout {
    u: DVector<f64>,
    states: Vec<Vector4<f64>>,
    feasible: bool,
}

fn sym_sqrt4(m: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix4::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

fn sym_sqrt2(m: &Matrix2<f64>) -> Matrix2<f64> {
    let eig = SymmetricEigen::new(*m);
    let d = Matrix2::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    eig.eigenvectors * d * eig.eigenvectors.transpose()
}

impl<'a> Problem<'a> {
    fn n(&self) -> usize {
        self.cfg.horizon
    }

    fn n_obs(&self) -> usize {
        self.forecast.n_obstacles()
    }

    /// Projects onto the control box, then clamps controls sequentially so
    /// that every state respects the state box where reachable.
    fn rollout(&self, u: &DVector<f64>) -> Rollout {
        let cfg = self.cfg;
        let (dt, m) = (cfg.dt, cfg.mass);
        let mut u = u.clone();
        let mut states = Vec::with_capacity(self.n() + 1);
        let mut x = self.xi0;
        states.push(x);
        let mut feasible = true;
        for i in 0..self.n() {
            let mut next = Vector4::zeros();
            for k in 0..2 {
                let idx = 2 * i + k;
                let pos_next = x[k] + x[k + 2] * dt;
                // Velocity after this step fixes the position one step later.
                let mut v_lo = cfg.xi_min[k + 2].max((cfg.xi_min[k] - pos_next) / dt);
                let mut v_hi = cfg.xi_max[k + 2].min((cfg.xi_max[k] - pos_next) / dt);
                let v_lo_u = x[k + 2] + cfg.u_min[k] / m * dt;
                let v_hi_u = x[k + 2] + cfg.u_max[k] / m * dt;
                v_lo = v_lo.max(v_lo_u);
                v_hi = v_hi.min(v_hi_u);
                let mut uk = u[idx].clamp(cfg.u_min[k], cfg.u_max[k]);
                if v_lo > v_hi {
                    feasible = false;
                } else {
                    let v = (x[k + 2] + uk / m * dt).clamp(v_lo, v_hi);
                    uk = ((v - x[k + 2]) * m / dt).clamp(cfg.u_min[k], cfg.u_max[k]);
                }
                if pos_next < cfg.xi_min[k] || pos_next > cfg.xi_max[k] {
                    feasible = false;
                }
                u[idx] = uk;
                next[k] = pos_next;
                next[k + 2] = x[k + 2] + uk / m * dt;
            }
            x = next;
            states.push(x);
        }
        Rollout { u, states, feasible }
    }

    fn margin(&self, i: usize, j: usize, p: &Point) -> f64 {
        let (m, c, _) = &self.shapes[i][j];
        let d = p - c;
        d.dot(&(m * d))
    }

    fn residuals(&self, r: &Rollout) -> DVector<f64> {
        let n = self.n();
        let n_obs = self.n_obs();
        let mut res = DVector::zeros(6 * n + n * n_obs);
        let ws = self.cfg.slack_weight.sqrt();
        for i in 0..n {
            let e = self.q_half * (r.states[i + 1] - self.reference[i]);
            res.fixed_rows_mut::<4>(4 * i).copy_from(&e);
            let u = Vector2::new(r.u[2 * i], r.u[2 * i + 1]);
            res.fixed_rows_mut::<2>(4 * n + 2 * i).copy_from(&(self.p_half * u));
            let p = Point::new(r.states[i + 1][0], r.states[i + 1][1]);
            for j in 0..n_obs {
                let c = self.margin(i, j, &p);
                res[6 * n + i * n_obs + j] = ws * ((1.0 - c) / self.cfg.psi).max(0.0);
            }
        }
        res
    }

    fn jacobian(&self, r: &Rollout) -> DMatrix<f64> {
        let n = self.n();
        let n_obs = self.n_obs();
        let (dt, m) = (self.cfg.dt, self.cfg.mass);
        let mut jac = DMatrix::zeros(6 * n + n * n_obs, 2 * n);
        let ws = self.cfg.slack_weight.sqrt();
        for i in 1..=n {
            // State i as a linear function of the controls.
            let mut dstate = DMatrix::<f64>::zeros(4, 2 * n);
            for l in 0..i {
                for k in 0..2 {
                    dstate[(k + 2, 2 * l + k)] = dt / m;
                    if l + 1 < i {
                        dstate[(k, 2 * l + k)] = dt * dt / m * (i - 1 - l) as f64;
                    }
                }
            }
            let q_rows = self.q_half * dstate.fixed_rows::<4>(0);
            jac.view_mut((4 * (i - 1), 0), (4, 2 * n)).copy_from(&q_rows);
            let p = Point::new(r.states[i][0], r.states[i][1]);
            for j in 0..n_obs {
                let (mat, center, fallback) = &self.shapes[i - 1][j];
                let c = self.margin(i - 1, j, &p);
                if c >= 1.0 {
                    continue;
                }
                let mut d = p - center;
                if d.norm() < 1e-9 {
                    d = *fallback * 1e-3;
                }
                let grad = 2.0 * mat * d;
                let row = 6 * n + (i - 1) * n_obs + j;
                let scale = -ws / self.cfg.psi;
                for col in 0..2 * n {
                    jac[(row, col)] = scale * (grad.x * dstate[(0, col)] + grad.y * dstate[(1, col)]);
                }
            }
        }
        for i in 0..n {
            jac.view_mut((4 * n + 2 * i, 2 * i), (2, 2)).copy_from(&self.p_half);
        }
        jac
    }

    fn solution(&self, r: &Rollout, status: SolverStatus, iterations: usize) -> MpcSolution {
        let n = self.n();
        let n_obs = self.n_obs();
        let mut cost = CostBreakdown::default();
        let mut slacks = vec![vec![0.0; n_obs]; n];
        let mut margins = vec![vec![0.0; n_obs]; n];
        for i in 0..n {
            let e = r.states[i + 1] - self.reference[i];
            cost.tracking += e.dot(&(self.cfg.q * e));
            let u = Vector2::new(r.u[2 * i], r.u[2 * i + 1]);
            cost.control += u.dot(&(self.cfg.p * u));
            let p = Point::new(r.states[i + 1][0], r.states[i + 1][1]);
            for j in 0..n_obs {
                let c = self.margin(i, j, &p);
                let s = ((1.0 - c) / self.cfg.psi).max(0.0);
                margins[i][j] = c;
                slacks[i][j] = s;
                cost.slack += self.cfg.slack_weight * s * s;
            }
        }
        MpcSolution {
            states: r.states.iter().map(VehicleState::from_vector).collect(),
            controls: (0..n).map(|i| Vector2::new(r.u[2 * i], r.u[2 * i + 1])).collect(),
            slacks,
            margins,
            cost,
            status,
            iterations,
        }
    }

    fn lower(&self, idx: usize) -> f64 {
        self.cfg.u_min[idx % 2]
    }

    fn upper(&self, idx: usize) -> f64 {
        self.cfg.u_max[idx % 2]
    }

    /// Projected Gauss-Newton from `u0`; returns the final rollout, its cost,
    /// whether it converged and the iteration count.
    fn descend(&self, u0: DVector<f64>) -> (Rollout, f64, bool, usize) {
        let nu = 2 * self.n();
        let mut cur = self.rollout(&u0);
        let mut res = self.residuals(&cur);
        let mut cost = res.norm_squared();
        let tol = self.cfg.solver_tol;
        let mut iters = 0;
        let mut converged = false;
        while iters < self.cfg.solver_iters {
            iters += 1;
            let jac = self.jacobian(&cur);
            let grad = 2.0 * jac.transpose() * &res;
            let hess = 2.0 * jac.transpose() * &jac;

            // Bounds that are active and pushed against are held fixed.
            let eps = 1e-9;
            let free: Vec<usize> = (0..nu)
                .filter(|&k| {
                    let at_lo = cur.u[k] <= self.lower(k) + eps && grad[k] > 0.0;
                    let at_hi = cur.u[k] >= self.upper(k) - eps && grad[k] < 0.0;
                    !(at_lo || at_hi)
                })
                .collect();
            let proj_grad = free.iter().fold(0.0f64, |a, &k| a.max(grad[k].abs()));
            if proj_grad <= tol * cost.max(1.0) {
                converged = true;
                break;
            }

            let nf = free.len();
            let mut h = DMatrix::zeros(nf, nf);
            let mut g = DVector::zeros(nf);
            for (a, &ka) in free.iter().enumerate() {
                g[a] = grad[ka];
                for (b, &kb) in free.iter().enumerate() {
                    h[(a, b)] = hess[(ka, kb)];
                }
            }
            let mut mu = 1e-10 * (1.0 + h.diagonal().amax());
            let step_free = loop {
                let mut hm = h.clone();
                for a in 0..nf {
                    hm[(a, a)] += mu;
                }
                if let Some(ch) = hm.cholesky() {
                    break ch.solve(&(-&g));
                }
                mu *= 100.0;
            };
            let mut dir = DVector::zeros(nu);
            for (a, &ka) in free.iter().enumerate() {
                dir[ka] = step_free[a];
            }

            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let trial_u = &cur.u + alpha * &dir;
                let trial = self.rollout(&trial_u);
                let trial_res = self.residuals(&trial);
                let trial_cost = trial_res.norm_squared();
                let decrease = grad.dot(&(&trial.u - &cur.u));
                if trial_cost <= cost + 1e-4 * decrease.min(0.0) && trial_cost < cost {
                    accepted = Some((trial, trial_res, trial_cost));
                    break;
                }
                alpha *= 0.5;
            }
            let Some((trial, trial_res, trial_cost)) = accepted else {
                // No descent along the projected Newton path.
                converged = proj_grad <= 1e-3 * cost.max(1.0);
                break;
            };
            let rel_change = (cost - trial_cost) / cost.max(1e-300);
            let step_norm = (&trial.u - &cur.u).amax();
            cur = trial;
            res = trial_res;
            cost = trial_cost;
            if rel_change < tol || step_norm < tol {
                converged = true;
                break;
            }
        }
        (cur, cost, converged, iters)
    }
}

/// Reference velocity at `p`: toward the goal at the cruise speed, braking
/// at a constant rate so that it reaches zero at the goal.
fn reference_velocity(p: &Point, goal: &Point, cfg: &MpcConfig) -> Vector2<f64> {
    let to_goal = goal - p;
    let dist = to_goal.norm();
    if dist > 0.0 {
        to_goal / dist * cfg.cruise_speed.min((2.0 * cfg.approach_decel * dist).sqrt())
    } else {
        Vector2::zeros()
    }
}

/// One reference state per horizon step, obtained by following the
/// reference velocity from the current position. With `cruise_speed = 0`
/// every entry is the goal at rest.
pub fn reference_trajectory(xi: &VehicleState, goal: &Point, cfg: &MpcConfig) -> Vec<VehicleState> {
    if cfg.cruise_speed == 0.0 {
        return vec![VehicleState::at_rest(*goal); cfg.horizon];
    }
    let mut p = xi.position();
    (0..cfg.horizon)
        .map(|_| {
            let v = reference_velocity(&p, goal, cfg);
            // Never step past the goal.
            let step = v * cfg.dt;
            let to_goal = goal - p;
            p = if step.norm() >= to_goal.norm() { *goal } else { p + step };
            let v = reference_velocity(&p, goal, cfg);
            VehicleState::new(p.x, p.y, v.x, v.y)
        })
        .collect()
}

fn detour_controls(xi: &VehicleState, goal: &Point, cfg: &MpcConfig, side: f64) -> DVector<f64> {
    let n = cfg.horizon;
    let to_goal = goal - xi.position();
    let dir = if to_goal.norm() > 1e-12 {
        to_goal.normalize()
    } else {
        Vector2::new(1.0, 0.0)
    };
    let lateral = Vector2::new(-dir.y, dir.x) * side;
    let a = 0.5 * cfg.u_max.x.min(-cfg.u_min.x).min(cfg.u_max.y.min(-cfg.u_min.y));
    let mut u = DVector::zeros(2 * n);
    for i in 0..n {
        let f = if i < n / 2 { lateral * a + dir * a * 0.5 } else { -lateral * a + dir * a * 0.5 };
        u[2 * i] = f.x;
        u[2 * i + 1] = f.y;
    }
    u
}

/// Plans against an explicit per-step obstacle forecast.
pub fn solve_mpc_forecast(
    xi_init: &VehicleState,
    goal: &Point,
    forecast: &ObstacleForecast,
    cfg: &MpcConfig,
    warm: Option<&[Vector2<f64>]>,
) -> Result<MpcSolution, PlannerError> {
    cfg.validate()?;
    if !xi_init.is_finite() || !goal.iter().all(|x| x.is_finite()) {
        return Err(PlannerError::NonFinite);
    }
    let n = cfg.horizon;
    let n_obs = forecast.n_obstacles();
    if n_obs > 0 && forecast.steps.len() != n {
        return Err(PlannerError::InvalidConfig("forecast length must equal the horizon"));
    }
    let empty = ObstacleForecast {
        steps: vec![Vec::new(); n],
    };
    let forecast = if n_obs == 0 { &empty } else { forecast };
    let shapes = forecast
        .steps
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    let g = e.enlarged(cfg.vehicle_radius);
                    (g.shape_matrix(), g.center, g.minor_axis())
                })
                .collect()
        })
        .collect();
    let problem = Problem {
        cfg,
        xi0: xi_init.as_vector(),
        reference: reference_trajectory(xi_init, goal, cfg).iter().map(VehicleState::as_vector).collect(),
        forecast,
        shapes,
        q_half: sym_sqrt4(&cfg.q),
        p_half: sym_sqrt2(&cfg.p),
    };

    let mut starts: Vec<DVector<f64>> = Vec::new();
    if let Some(w) = warm {
        if w.len() == n {
            starts.push(DVector::from_iterator(2 * n, w.iter().flat_map(|u| [u.x, u.y])));
        }
    }
    starts.push(DVector::zeros(2 * n));

    let mut best: Option<(Rollout, f64, bool, usize)> = None;
    let mut total_iters = 0;
    let mut consider = |start: DVector<f64>, best: &mut Option<(Rollout, f64, bool, usize)>| {
        let out = problem.descend(start);
        total_iters += out.3;
        if best.as_ref().is_none_or(|b| out.1 < b.1) {
            *best = Some(out);
        }
    };
    for s in starts {
        consider(s, &mut best);
    }
    if cfg.multi_start && n_obs > 0 {
        let violated = {
            let b = best.as_ref().expect("at least one start");
            let res = problem.residuals(&b.0);
            res.rows(6 * n, n * n_obs).amax() > 1e-3
        };
        if violated {
            for side in [1.0, -1.0] {
                consider(detour_controls(xi_init, goal, cfg, side), &mut best);
            }
        }
    }
    let (rollout, _, converged, _) = best.expect("at least one start");
    let status = if !rollout.feasible {
        SolverStatus::Infeasible
    } else if converged {
        SolverStatus::Converged
    } else {
        SolverStatus::IterLimit
    };
    Ok(problem.solution(&rollout, status, total_iters))
}
