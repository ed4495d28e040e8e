//! Point-cloud clustering: variational Gaussian mixtures and two baselines.

mod dbscan;
mod kmeans;
mod vigmm;

pub use dbscan::{dbscan_baseline, DbscanConfig};
pub use kmeans::{kmeans_baseline, kmeans_lloyd, KmeansConfig};
pub use vigmm::{fit_vigmm, responsibilities, VigmmConfig, VigmmPosterior};

use nalgebra::Matrix2;
use rand::Rng;
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("no points to cluster")]
    EmptyInput,
    #[error("requested {k} clusters from {n} points")]
    TooFewPoints { k: usize, n: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// One mixture component (or hard cluster summary).
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Point,
    pub covariance: Matrix2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub components: Vec<Component>,
    /// Component index of each input point.
    pub assignments: Vec<usize>,
    /// Evidence lower bound after each variational iteration, then the bound
    /// reached by each accepted merge move; empty for the hard-clustering
    /// baselines.
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    /// Variational posterior over the surviving components (VIGMM only).
    pub posterior: Option<VigmmPosterior>,
}

impl ClusterResult {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Points grouped by assigned component, in component order.
    pub fn groups(&self, points: &[Point]) -> Vec<Vec<Point>> {
        let mut groups = vec![Vec::new(); self.components.len()];
        for (p, &a) in points.iter().zip(&self.assignments) {
            groups[a].push(*p);
        }
        groups
    }

    /// Summarizes a hard partition. Labels must be `0..k` with every label used.
    pub(crate) fn from_labels(points: &[Point], labels: Vec<usize>, k: usize) -> Self {
        let mut counts = vec![0usize; k];
        let mut sums = vec![Point::zeros(); k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l] += p;
        }
        let means: Vec<Point> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &c)| s / c.max(1) as f64)
            .collect();
        let mut covs = vec![Matrix2::zeros(); k];
        for (p, &l) in points.iter().zip(&labels) {
            let d = p - means[l];
            covs[l] += d * d.transpose();
        }
        let n = points.len() as f64;
        let components = (0..k)
            .map(|j| Component {
                weight: counts[j] as f64 / n,
                mean: means[j],
                // Ridge keeps singleton and collinear clusters positive definite.
                covariance: covs[j] / counts[j].max(1) as f64 + Matrix2::identity() * 1e-9,
            })
            .collect();
        Self {
            components,
            assignments: labels,
            elbo_trace: Vec::new(),
            iterations: 0,
            posterior: None,
        }
    }
}

/// k-means++ seeding: indices of `k` (at most `points.len()`) distinct seeds.
pub(crate) fn kmeans_pp_seeds<R: Rng>(points: &[Point], k: usize, rng: &mut R) -> Vec<usize> {
    let n = points.len();
    let mut seeds = Vec::with_capacity(k);
    if n == 0 || k == 0 {
        return seeds;
    }
    seeds.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| (p - points[seeds[0]]).norm_squared())
        .collect();
    while seeds.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] <= 0.0 {
            // Rounding walked past the last positive entry.
            pick = d2.iter().rposition(|&d| d > 0.0).expect("positive total");
        }
        seeds.push(pick);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - points[pick]).norm_squared());
        }
    }
    seeds
}

/// Index of the nearest center to `p`; ties go to the lower index.
pub(crate) fn nearest(p: &Point, centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = (p - c).norm_squared();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}
