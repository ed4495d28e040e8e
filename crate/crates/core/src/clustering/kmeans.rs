//! Lloyd's k-means with k-means++ seeding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kmeans_pp_seeds, nearest, ClusterResult, ClusteringError};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmeansConfig {
    pub max_iters: usize,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self { max_iters: 100 }
    }
}

fn sse(points: &[Point], centers: &[Point], labels: &[usize]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| (p - centers[l]).norm_squared())
        .sum()
}

/// Runs Lloyd iterations and also returns the within-cluster sum of squared
/// errors after every assignment step.
pub fn kmeans_lloyd(
    points: &[Point],
    k: usize,
    seed: u64,
    cfg: &KmeansConfig,
) -> Result<(ClusterResult, Vec<f64>), ClusteringError> {
    if points.is_empty() {
        return Err(ClusteringError::EmptyInput);
    }
    if k == 0 {
        return Err(ClusteringError::InvalidConfig("k must be at least 1"));
    }
    if points.len() < k {
        return Err(ClusteringError::TooFewPoints { k, n: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Point> = kmeans_pp_seeds(points, k, &mut rng)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    let mut trace = vec![sse(points, &centers, &labels)];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let mut sums = vec![Point::zeros(); centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &l) in points.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for j in 0..centers.len() {
            // Empty clusters keep their previous center.
            if counts[j] > 0 {
                centers[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        trace.push(sse(points, &centers, &next));
        let changed = next != labels;
        labels = next;
        if !changed {
            break;
        }
    }

    // Compact labels so that every reported cluster is non-empty.
    let mut used = vec![false; centers.len()];
    for &l in &labels {
        used[l] = true;
    }
    let mut remap = vec![0; centers.len()];
    let mut k_used = 0;
    for (j, &u) in used.iter().enumerate() {
        if u {
            remap[j] = k_used;
            k_used += 1;
        }
    }
    let labels: Vec<usize> = labels.into_iter().map(|l| remap[l]).collect();
    let mut result = ClusterResult::from_labels(points, labels, k_used);
    result.iterations = iterations;
    Ok((result, trace))
}

/// k-means clustering with a fixed cluster count.
pub fn kmeans_baseline(points: &[Point], k: usize, seed: u64) -> Result<ClusterResult, ClusteringError> {
    kmeans_lloyd(points, k, seed, &KmeansConfig::default()).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_blobs() -> Vec<Point> {
        let mut pts = Vec::new();
        for i in 0..20 {
            let a = i as f64 * 0.3;
            pts.push(Point::new(a.cos() * 0.5, a.sin() * 0.5));
            pts.push(Point::new(20.0 + a.cos() * 0.5, 3.0 + a.sin() * 0.5));
        }
        pts
    }

    #[test]
    fn separates_two_blobs() {
        let pts = two_blobs();
        let res = kmeans_baseline(&pts, 2, 4).unwrap();
        assert_eq!(res.len(), 2);
        for (i, p) in pts.iter().enumerate() {
            let other = if p.x < 10.0 { 0 } else { 1 };
            let first_label = res.assignments[if other == 0 { 0 } else { 1 }];
            assert_eq!(res.assignments[i], first_label);
        }
        assert_ne!(res.assignments[0], res.assignments[1]);
    }

    #[test]
    fn single_cluster_center_is_centroid() {
        let pts = two_blobs();
        let res = kmeans_baseline(&pts, 1, 0).unwrap();
        let centroid = pts.iter().fold(Point::zeros(), |a, p| a + p) / pts.len() as f64;
        assert_relative_eq!(res.components[0].mean, centroid, epsilon = 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        let pts: Vec<Point> = (0..200)
            .map(|i| {
                let t = i as f64;
                Point::new((t * 1.7).sin() * 5.0 + (t * 0.13).cos(), (t * 0.91).cos() * 3.0)
            })
            .collect();
        for seed in 0..5 {
            let (_, trace) = kmeans_lloyd(&pts, 7, seed, &KmeansConfig::default()).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_k() {
        assert!(kmeans_baseline(&two_blobs(), 0, 0).is_err());
        assert!(matches!(
            kmeans_baseline(&two_blobs()[..3], 5, 0),
            Err(ClusteringError::TooFewPoints { .. })
        ));
    }
}
