//! Minimum-volume enclosing ellipse of a planar point set (Khachiyan).
//!
//! The solver works on the lifted points `q = (p, 1)` and maintains
//! barycentric weights `u` over the inputs. Every iteration either moves
//! weight towards the point of largest lifted Mahalanobis distance
//! (Khachiyan step) or removes weight from the supported point of smallest
//! distance (away step, Todd–Yıldırım). The iteration stops once
//! `max_i M_i <= (1 + ε)(d + 1)` and every supported point satisfies
//! `M_i >= (1 - ε)(d + 1)`.
//!
//! The returned ellipse is scaled so that the farthest input point lies
//! exactly on its boundary.

use log::trace;
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{spd_sqrt, GeneralEllipse, Point, StandardEllipse};

const DIM: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MveeError {
    #[error("at least 3 distinct points are required, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite input point")]
    NonFinite,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MveeConfig {
    /// Relative optimality tolerance.
    pub epsilon: f64,
    /// Hard iteration cap; `None` means ten iterations per input point.
    pub max_iters: Option<usize>,
    /// Ridge added to the scatter matrix of collinear sets, relative to the
    /// squared spread of the points.
    pub regularization: f64,
    /// Radius of the disk returned for clusters too small to fit.
    pub min_radius: f64,
}

impl Default for MveeConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            max_iters: None,
            regularization: 1e-8,
            min_radius: 0.05,
        }
    }
}

impl MveeConfig {
    pub fn validate(&self) -> Result<(), MveeError> {
        if !(self.epsilon > 0.0) {
            return Err(MveeError::InvalidConfig("epsilon must be positive"));
        }
        if self.max_iters == Some(0) {
            return Err(MveeError::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.regularization >= 0.0) {
            return Err(MveeError::InvalidConfig("regularization must be non-negative"));
        }
        if !(self.min_radius > 0.0) {
            return Err(MveeError::InvalidConfig("min_radius must be positive"));
        }
        Ok(())
    }
}

/// Result of a Khachiyan fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MveeFit {
    pub ellipse: GeneralEllipse,
    /// Deduplicated input points, in first-occurrence order.
    pub points: Vec<Point>,
    /// Dual weights over `points`; sum to one.
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// The points were affinely dependent and the ridge was applied.
    pub degenerate: bool,
    /// False when the iteration cap was hit before the stopping rule held.
    pub converged: bool,
}

/// Removes points closer than `1e-12` to an earlier point.
pub fn dedup_points(points: &[Point]) -> Vec<Point> {
    const DUP_TOL: f64 = 1e-12;
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (p - q).norm() <= DUP_TOL) {
            out.push(*p);
        }
    }
    out
}

/// Fits the minimum-volume enclosing ellipse to `points`.
pub fn khachiyan_mvee(points: &[Point], cfg: &MveeConfig) -> Result<MveeFit, MveeError> {
    cfg.validate()?;
    if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(MveeError::NonFinite);
    }
    let pts = dedup_points(points);
    let n = pts.len();
    if n < 3 {
        return Err(MveeError::TooFewPoints(n));
    }

    let centroid = pts.iter().fold(Point::zeros(), |a, p| a + p) / n as f64;
    let mut scatter = Matrix2::zeros();
    for p in &pts {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    scatter /= n as f64;
    let spread2 = pts
        .iter()
        .map(|p| (p - centroid).norm_squared())
        .fold(0.0, f64::max);
    // Collinear sets have a singular scatter matrix.
    let det = scatter.determinant();
    let degenerate = det <= 1e-12 * scatter.trace().powi(2);
    let ridge = if degenerate {
        (cfg.regularization * spread2).max(f64::MIN_POSITIVE)
    } else {
        0.0
    };

    let lifted: Vec<Vector3<f64>> = pts.iter().map(|p| Vector3::new(p.x, p.y, 1.0)).collect();
    let mut u = vec![1.0 / n as f64; n];
    let mut m = vec![0.0; n];
    let max_iters = cfg.max_iters.unwrap_or(10 * n);
    let upper = (1.0 + cfg.epsilon) * (DIM + 1.0);
    let lower = (1.0 - cfg.epsilon) * (DIM + 1.0);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut x = Matrix3::zeros();
        for (q, &w) in lifted.iter().zip(&u) {
            if w > 0.0 {
                x += w * q * q.transpose();
            }
        }
        x[(0, 0)] += ridge;
        x[(1, 1)] += ridge;
        let x_inv = match x.try_inverse() {
            Some(inv) => inv,
            None => break,
        };
        for (mi, q) in m.iter_mut().zip(&lifted) {
            *mi = q.dot(&(x_inv * q));
        }

        let (j, m_max) = argmax(&m);
        let (k, m_min) = u
            .iter()
            .zip(&m)
            .enumerate()
            .filter(|(_, (&w, _))| w > 0.0)
            .map(|(i, (_, &mi))| (i, mi))
            .fold((usize::MAX, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });

        if m_max <= upper && m_min >= lower {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        iterations += 1;

        if m_max - (DIM + 1.0) >= (DIM + 1.0) - m_min {
            let step = (m_max - (DIM + 1.0)) / ((DIM + 1.0) * (m_max - 1.0));
            for w in u.iter_mut() {
                *w *= 1.0 - step;
            }
            u[j] += step;
        } else {
            // Away step; clipped so the weight of `k` stays non-negative.
            let uk = u[k];
            let full = if m_min > 1.0 {
                (m_min - (DIM + 1.0)) / ((DIM + 1.0) * (m_min - 1.0))
            } else {
                f64::NEG_INFINITY
            };
            let clip = -uk / (1.0 - uk);
            let step = full.max(clip);
            for w in u.iter_mut() {
                *w *= 1.0 - step;
            }
            u[k] += step;
            if step == clip {
                u[k] = 0.0;
            }
        }
    }
    trace!("khachiyan: n={n} iterations={iterations} converged={converged}");

    let center = pts
        .iter()
        .zip(&u)
        .fold(Point::zeros(), |acc, (p, &w)| acc + w * p);
    let mut cov = Matrix2::zeros();
    for (p, &w) in pts.iter().zip(&u) {
        let d = p - center;
        cov += w * d * d.transpose();
    }
    cov[(0, 0)] += ridge;
    cov[(1, 1)] += ridge;
    let mut shape = cov
        .try_inverse()
        .unwrap_or_else(|| Matrix2::identity() / spread2.max(f64::MIN_POSITIVE))
        / DIM;

    // Tight scaling: the farthest point lands on the boundary.
    let reach = pts
        .iter()
        .map(|p| {
            let d = p - center;
            d.dot(&(shape * d))
        })
        .fold(0.0, f64::max);
    if reach > 0.0 {
        shape /= reach;
    }
    shape = 0.5 * (shape + shape.transpose());
    let mut a = spd_sqrt(&shape);
    // The square root and the affine form round; shrink A by a few ulps
    // until every point is inside in floating point too.
    for _ in 0..64 {
        let worst = pts.iter().map(|p| (a * p - a * center).norm()).fold(0.0, f64::max);
        if worst <= 1.0 {
            break;
        }
        a *= (1.0 / worst).min(1.0 - 2.0 * f64::EPSILON);
    }
    let ellipse = GeneralEllipse::new(a, -(a * center))
        .map_err(|_| MveeError::TooFewPoints(n))?;

    let total: f64 = u.iter().sum();
    let weights = u.iter().map(|w| w / total).collect();

    Ok(MveeFit {
        ellipse,
        points: pts,
        weights,
        iterations,
        degenerate,
        converged,
    })
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
}

/// Enclosing ellipse of any non-empty point set.
///
/// Sets with fewer than three distinct points get a disk at their centroid,
/// with radius at least `cfg.min_radius` and large enough to cover them.
pub fn enclosing_ellipse(points: &[Point], cfg: &MveeConfig) -> Result<StandardEllipse, MveeError> {
    match khachiyan_mvee(points, cfg) {
        Ok(fit) => Ok(fit.ellipse.to_standard()),
        Err(MveeError::TooFewPoints(_)) if !points.is_empty() => {
            let pts = dedup_points(points);
            let centroid = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / pts.len() as f64;
            let reach = pts
                .iter()
                .map(|p| (p - centroid).norm())
                .fold(0.0, f64::max);
            Ok(StandardEllipse::disk(centroid, (reach * (1.0 + 1e-12)).max(cfg.min_radius))
                .expect("positive radius"))
        }
        Err(e) => Err(e),
    }
}
