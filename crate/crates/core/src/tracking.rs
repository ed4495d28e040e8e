//! Frame-to-frame ellipse association and Kalman motion estimation.
//!
//! Ellipses are compared through their feature vector `(xc, r1, r2, θ)`.
//! Orientation differences are taken modulo π. Each track carries a
//! constant-velocity Kalman filter over `[x, y, θ, vx, vy, ω]` driven by
//! white acceleration noise.

use nalgebra::{Matrix3, Matrix3x6, Matrix6, Matrix6x3, SMatrix, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff_mod_pi, reduce_angle, Point, StandardEllipse};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackingError {
    #[error("time step must be positive, got {0}")]
    ZeroDt(f64),
    #[error("observation time {obs} precedes track time {track}")]
    TimeReversal { obs: f64, track: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Ellipse parameters used for association.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub xc: Point,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
}

impl From<&StandardEllipse> for FeatureVector {
    fn from(e: &StandardEllipse) -> Self {
        Self {
            xc: e.center,
            r1: e.r1,
            r2: e.r2,
            theta: e.theta,
        }
    }
}

impl From<StandardEllipse> for FeatureVector {
    fn from(e: StandardEllipse) -> Self {
        Self::from(&e)
    }
}

/// Per-component scale of the feature distance: center, `r1`, `r2`, `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub center: f64,
    pub r1: f64,
    pub r2: f64,
    pub theta: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self {
            center: 1.0,
            r1: 1.0,
            r2: 1.0,
            theta: 1.0,
        }
    }
}

/// Euclidean distance between feature vectors with wrapped orientation.
pub fn feature_distance(f1: &FeatureVector, f2: &FeatureVector) -> f64 {
    weighted_feature_distance(f1, f2, &FeatureWeights::default())
}

pub fn weighted_feature_distance(f1: &FeatureVector, f2: &FeatureVector, w: &FeatureWeights) -> f64 {
    // Fixed argument order keeps the rounding, and thus the value, symmetric.
    let (f1, f2) = if (f1.xc.x, f1.xc.y, f1.theta) <= (f2.xc.x, f2.xc.y, f2.theta) { (f1, f2) } else { (f2, f1) };
    let dc = (f1.xc - f2.xc).norm() * w.center;
    let d1 = (f1.r1 - f2.r1) * w.r1;
    let d2 = (f1.r2 - f2.r2) * w.r2;
    let dt = angle_diff_mod_pi(f1.theta, f2.theta).abs() * w.theta;
    (dc * dc + d1 * d1 + d2 * d2 + dt * dt).sqrt()
}

/// Association of current features with previous ones.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// `(previous index or None for a new object, current index)` for every
    /// current feature, in current-index order.
    pub pairs: Vec<(Option<usize>, usize)>,
    /// Previous features left without a partner.
    pub unmatched_prev: Vec<usize>,
}

/// Greedy one-to-one association by ascending distance, limited to `gate`.
pub fn match_frames(prev: &[FeatureVector], curr: &[FeatureVector], gate: f64) -> Matching {
    match_frames_weighted(prev, curr, gate, &FeatureWeights::default())
}

pub fn match_frames_weighted(
    prev: &[FeatureVector],
    curr: &[FeatureVector],
    gate: f64,
    weights: &FeatureWeights,
) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in prev.iter().enumerate() {
        for (j, c) in curr.iter().enumerate() {
            let d = weighted_feature_distance(p, c, weights);
            if d <= gate {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut prev_taken = vec![false; prev.len()];
    let mut assigned: Vec<Option<usize>> = vec![None; curr.len()];
    for (_, i, j) in candidates {
        if !prev_taken[i] && assigned[j].is_none() {
            prev_taken[i] = true;
            assigned[j] = Some(i);
        }
    }
    Matching {
        pairs: assigned.into_iter().enumerate().map(|(j, i)| (i, j)).collect(),
        unmatched_prev: (0..prev.len()).filter(|&i| !prev_taken[i]).collect(),
    }
}

/// Finite-difference linear and angular velocity between matched features.
pub fn estimate_motion(
    prev: &FeatureVector,
    curr: &FeatureVector,
    dt: f64,
) -> Result<(Point, f64), TrackingError> {
    if !(dt > 0.0) {
        return Err(TrackingError::ZeroDt(dt));
    }
    let v = (curr.xc - prev.xc) / dt;
    let omega = angle_diff_mod_pi(curr.theta, prev.theta) / dt;
    Ok((v, omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Association gate in feature-space units.
    pub gate_distance: f64,
    /// White-acceleration spectral density for the position axes.
    pub process_noise_pos: f64,
    /// White-acceleration spectral density for the orientation axis.
    pub process_noise_ang: f64,
    pub meas_noise_pos: f64,
    pub meas_noise_ang: f64,
    /// Tracks unobserved for more than this many frames are dropped.
    pub max_missed: u32,
    /// Initial velocity variance of a new track, (m/s)².
    pub init_vel_var: f64,
    /// Initial angular-rate variance of a new track, (rad/s)².
    pub init_omega_var: f64,
    pub feature_weights: FeatureWeights,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            gate_distance: 1.0,
            process_noise_pos: 1.0,
            process_noise_ang: 1.0,
            meas_noise_pos: 0.01,
            meas_noise_ang: 0.01,
            max_missed: 2,
            init_vel_var: 100.0,
            init_omega_var: 25.0,
            feature_weights: FeatureWeights::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), TrackingError> {
        let positive = [
            self.gate_distance,
            self.process_noise_pos,
            self.process_noise_ang,
            self.meas_noise_pos,
            self.meas_noise_ang,
            self.init_vel_var,
            self.init_omega_var,
        ];
        if positive.iter().all(|v| *v > 0.0) {
            Ok(())
        } else {
            Err(TrackingError::InvalidConfig("noise terms and gate must be positive"))
        }
    }
}

/// Kalman track of one obstacle ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    /// `[x, y, θ, vx, vy, ω]`.
    pub state: Vector6<f64>,
    pub covariance: Matrix6<f64>,
    /// Semi-axes `(r1, r2)` from the latest observation.
    pub shape: (f64, f64),
    pub last_seen: f64,
    /// Time the state refers to.
    pub time: f64,
    pub age: u32,
    pub missed: u32,
}

impl Track {
    /// A track with known motion and zero covariance, e.g. for planning
    /// against scripted obstacles.
    pub fn with_motion(id: u64, ellipse: &StandardEllipse, velocity: Point, omega: f64) -> Self {
        Self {
            id,
            state: Vector6::new(ellipse.center.x, ellipse.center.y, ellipse.theta, velocity.x, velocity.y, omega),
            covariance: Matrix6::zeros(),
            shape: (ellipse.r1, ellipse.r2),
            last_seen: 0.0,
            time: 0.0,
            age: 1,
            missed: 0,
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.state[0], self.state[1])
    }

    pub fn theta(&self) -> f64 {
        self.state[2]
    }

    pub fn velocity(&self) -> Point {
        Point::new(self.state[3], self.state[4])
    }

    pub fn omega(&self) -> f64 {
        self.state[5]
    }

    pub fn ellipse(&self) -> StandardEllipse {
        predict_ellipse(self, 0.0)
    }

    pub fn feature(&self) -> FeatureVector {
        FeatureVector::from(self.ellipse())
    }
}

/// Ellipse of `track` after `horizon_dt` seconds of constant linear and
/// angular velocity; the shape is unchanged.
pub fn predict_ellipse(track: &Track, horizon_dt: f64) -> StandardEllipse {
    let center = track.center() + track.velocity() * horizon_dt;
    let theta = reduce_angle(track.theta() + track.omega() * horizon_dt);
    StandardEllipse {
        center,
        r1: track.shape.0,
        r2: track.shape.1,
        theta,
    }
}

fn transition(dt: f64) -> Matrix6<f64> {
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    f
}

fn process_noise(dt: f64, cfg: &TrackerConfig) -> Matrix6<f64> {
    let mut q = Matrix6::zeros();
    let dt2 = dt * dt;
    for (i, density) in [cfg.process_noise_pos, cfg.process_noise_pos, cfg.process_noise_ang]
        .into_iter()
        .enumerate()
    {
        q[(i, i)] = density * dt2 * dt / 3.0;
        q[(i, i + 3)] = density * dt2 / 2.0;
        q[(i + 3, i)] = density * dt2 / 2.0;
        q[(i + 3, i + 3)] = density * dt;
    }
    q
}

fn predict(track: &mut Track, t: f64, cfg: &TrackerConfig) {
    let dt = t - track.time;
    if dt > 0.0 {
        let f = transition(dt);
        track.state = f * track.state;
        track.state[2] = reduce_angle(track.state[2]);
        track.covariance = f * track.covariance * f.transpose() + process_noise(dt, cfg);
        track.time = t;
    }
}

fn correct(track: &mut Track, obs: &FeatureVector, cfg: &TrackerConfig) {
    let h: Matrix3x6<f64> = SMatrix::from_fn(|r, c| if r == c { 1.0 } else { 0.0 });
    let r = Matrix3::from_diagonal(&Vector3::new(cfg.meas_noise_pos, cfg.meas_noise_pos, cfg.meas_noise_ang));
    let innovation = Vector3::new(
        obs.xc.x - track.state[0],
        obs.xc.y - track.state[1],
        angle_diff_mod_pi(obs.theta, track.state[2]),
    );
    let s = h * track.covariance * h.transpose() + r;
    let s_inv = s.try_inverse().expect("innovation covariance is positive definite");
    let gain: Matrix6x3<f64> = track.covariance * h.transpose() * s_inv;
    track.state += gain * innovation;
    track.state[2] = reduce_angle(track.state[2]);
    // Joseph form keeps the covariance symmetric positive definite.
    let i_kh = Matrix6::identity() - gain * h;
    let p = i_kh * track.covariance * i_kh.transpose() + gain * r * gain.transpose();
    track.covariance = 0.5 * (p + p.transpose());
    track.shape = (obs.r1, obs.r2);
}

/// Owns the live tracks and assigns identifiers.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_matching: Matching,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackingError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            last_matching: Matching::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Association computed by the latest update, indexed against the
    /// tracks that existed before it.
    pub fn last_matching(&self) -> &Matching {
        &self.last_matching
    }

    /// Predicts all tracks to time `t`, associates `observations`, applies
    /// the measurement updates, spawns tracks for unmatched observations
    /// and drops tracks missed for too long.
    pub fn update(&mut self, observations: &[FeatureVector], t: f64) -> Result<&[Track], TrackingError> {
        if let Some(tr) = self.tracks.iter().find(|tr| tr.time > t) {
            return Err(TrackingError::TimeReversal { obs: t, track: tr.time });
        }
        for tr in &mut self.tracks {
            predict(tr, t, &self.cfg);
        }
        let predicted: Vec<FeatureVector> = self.tracks.iter().map(Track::feature).collect();
        let matching = match_frames_weighted(
            &predicted,
            observations,
            self.cfg.gate_distance,
            &self.cfg.feature_weights,
        );

        let mut seen = vec![false; self.tracks.len()];
        let mut spawned = Vec::new();
        for &(prev, j) in &matching.pairs {
            let obs = &observations[j];
            match prev {
                Some(i) => {
                    let tr = &mut self.tracks[i];
                    correct(tr, obs, &self.cfg);
                    tr.last_seen = t;
                    tr.age += 1;
                    tr.missed = 0;
                    seen[i] = true;
                }
                None => {
                    spawned.push(self.spawn(obs, t));
                }
            }
        }
        for (tr, seen) in self.tracks.iter_mut().zip(&seen) {
            if !seen {
                tr.missed += 1;
            }
        }
        let max_missed = self.cfg.max_missed;
        self.tracks.retain(|tr| tr.missed <= max_missed);
        self.tracks.extend(spawned);
        self.last_matching = matching;
        Ok(&self.tracks)
    }

    fn spawn(&mut self, obs: &FeatureVector, t: f64) -> Track {
        let id = self.next_id;
        self.next_id += 1;
        let c = &self.cfg;
        Track {
            id,
            state: Vector6::new(obs.xc.x, obs.xc.y, reduce_angle(obs.theta), 0.0, 0.0, 0.0),
            covariance: Matrix6::from_diagonal(&Vector6::new(
                c.meas_noise_pos,
                c.meas_noise_pos,
                c.meas_noise_ang,
                c.init_vel_var,
                c.init_vel_var,
                c.init_omega_var,
            )),
            shape: (obs.r1, obs.r2),
            last_seen: t,
            time: t,
            age: 1,
            missed: 0,
        }
    }
}

/// Single-call form of [`Tracker::update`] for callers holding bare tracks.
/// New tracks get identifiers above the largest existing one.
pub fn track_update(
    tracks: Vec<Track>,
    observations: &[FeatureVector],
    t: f64,
    cfg: &TrackerConfig,
) -> Result<Vec<Track>, TrackingError> {
    let next_id = tracks.iter().map(|tr| tr.id + 1).max().unwrap_or(0);
    let mut tracker = Tracker {
        cfg: *cfg,
        tracks,
        next_id,
        last_matching: Matching::default(),
    };
    cfg.validate()?;
    tracker.update(observations, t)?;
    Ok(tracker.tracks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn fv(x: f64, y: f64, r1: f64, r2: f64, theta: f64) -> FeatureVector {
        FeatureVector {
            xc: Point::new(x, y),
            r1,
            r2,
            theta,
        }
    }

    #[test]
    fn distance_examples() {
        let a = fv(0.0, 0.0, 1.0, 2.0, 0.0);
        assert_eq!(feature_distance(&a, &a), 0.0);
        assert_relative_eq!(
            feature_distance(&fv(0.0, 0.0, 1.0, 2.0, 0.05), &fv(0.0, 0.0, 1.0, 2.0, PI - 0.05)),
            0.1,
            epsilon = 1e-12
        );
        assert_relative_eq!(feature_distance(&a, &fv(3.0, 4.0, 1.0, 2.0, 0.0)), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn identity_and_empty_matching() {
        let feats = vec![fv(0.0, 0.0, 1.0, 2.0, 0.3), fv(5.0, 1.0, 0.5, 0.9, 1.0)];
        let m = match_frames(&feats, &feats, 1.0);
        assert_eq!(m.pairs, vec![(Some(0), 0), (Some(1), 1)]);
        assert!(m.unmatched_prev.is_empty());
        let m = match_frames(&[], &feats, 1.0);
        assert_eq!(m.pairs, vec![(None, 0), (None, 1)]);
    }

    #[test]
    fn gate_rejects_far_features() {
        let m = match_frames(&[fv(0.0, 0.0, 1.0, 1.0, 0.0)], &[fv(3.0, 0.0, 1.0, 1.0, 0.0)], 1.0);
        assert_eq!(m.pairs, vec![(None, 0)]);
        assert_eq!(m.unmatched_prev, vec![0]);
    }

    #[test]
    fn matching_is_one_to_one() {
        let prev = vec![fv(0.0, 0.0, 1.0, 1.0, 0.0)];
        let curr = vec![fv(0.1, 0.0, 1.0, 1.0, 0.0), fv(0.2, 0.0, 1.0, 1.0, 0.0)];
        let m = match_frames(&prev, &curr, 1.0);
        assert_eq!(m.pairs, vec![(Some(0), 0), (None, 1)]);
    }

    #[test]
    fn motion_examples() {
        let a = fv(1.0, 1.0, 1.0, 2.0, 0.0);
        assert_eq!(estimate_motion(&a, &a, 0.1).unwrap(), (Point::zeros(), 0.0));
        let b = fv(1.5, 1.2, 1.0, 2.0, PI / 20.0);
        let (v, w) = estimate_motion(&a, &b, 0.1).unwrap();
        assert_relative_eq!(v, Point::new(5.0, 2.0), epsilon = 1e-9);
        assert_relative_eq!(w, PI / 2.0, epsilon = 1e-9);
        assert_eq!(estimate_motion(&a, &b, 0.0), Err(TrackingError::ZeroDt(0.0)));
    }

    #[test]
    fn motion_takes_short_way_round() {
        let (_, w) = estimate_motion(&fv(0.0, 0.0, 1.0, 2.0, PI - 0.05), &fv(0.0, 0.0, 1.0, 2.0, 0.05), 0.1).unwrap();
        assert_relative_eq!(w, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn static_obstacle_stays_still() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        let obs = [fv(2.0, -1.0, 0.5, 1.5, 0.4)];
        for k in 0..30 {
            tracker.update(&obs, k as f64 * 0.1).unwrap();
        }
        let tr = &tracker.tracks()[0];
        assert!(tr.velocity().norm() < 1e-6);
        assert!(tr.omega().abs() < 1e-6);
        assert_eq!(tr.age, 30);
    }

    #[test]
    fn new_tracks_start_at_rest() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        tracker.update(&[fv(0.0, 0.0, 1.0, 2.0, 0.0), fv(9.0, 0.0, 1.0, 2.0, 0.0)], 0.0).unwrap();
        assert_eq!(tracker.tracks().len(), 2);
        assert!(tracker.tracks().iter().all(|t| t.velocity() == Point::zeros()));
        assert_ne!(tracker.tracks()[0].id, tracker.tracks()[1].id);
    }

    #[test]
    fn missed_tracks_expire() {
        let cfg = TrackerConfig { max_missed: 2, ..TrackerConfig::default() };
        let mut tracker = Tracker::new(cfg).unwrap();
        tracker.update(&[fv(0.0, 0.0, 1.0, 2.0, 0.0)], 0.0).unwrap();
        for k in 1..=2 {
            tracker.update(&[], k as f64 * 0.1).unwrap();
            assert_eq!(tracker.tracks().len(), 1);
        }
        tracker.update(&[], 0.3).unwrap();
        assert!(tracker.tracks().is_empty());
    }

    #[test]
    fn rejects_time_reversal() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        tracker.update(&[fv(0.0, 0.0, 1.0, 2.0, 0.0)], 1.0).unwrap();
        assert!(tracker.update(&[], 0.5).is_err());
    }

    #[test]
    fn prediction_examples() {
        let mut tracker = Tracker::new(TrackerConfig::default()).unwrap();
        tracker.update(&[fv(1.0, 2.0, 0.5, 1.0, 0.3)], 0.0).unwrap();
        let mut tr = tracker.tracks()[0].clone();
        assert_eq!(predict_ellipse(&tr, 0.0), tr.ellipse());
        tr.state[3] = 1.0;
        let e = predict_ellipse(&tr, 2.0);
        assert_relative_eq!(e.center, Point::new(3.0, 2.0), epsilon = 1e-12);
        tr.state[3] = 0.0;
        tr.state[5] = PI / 2.0;
        let e = predict_ellipse(&tr, 1.0);
        assert_relative_eq!(e.theta, 0.3 + PI / 2.0, epsilon = 1e-12);
        assert_eq!((e.r1, e.r2), (0.5, 1.0));
    }

    #[test]
    fn free_function_assigns_fresh_ids() {
        let cfg = TrackerConfig::default();
        let tracks = track_update(Vec::new(), &[fv(0.0, 0.0, 1.0, 2.0, 0.0)], 0.0, &cfg).unwrap();
        let tracks = track_update(tracks, &[fv(0.0, 0.0, 1.0, 2.0, 0.0), fv(8.0, 0.0, 1.0, 2.0, 0.0)], 0.1, &cfg).unwrap();
        let mut ids: Vec<u64> = tracks.iter().map(|t| t.id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 1]);
    }
}
