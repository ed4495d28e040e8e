//! Density-based clustering with noise folded into the nearest cluster.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{nearest, ClusterResult, ClusteringError};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbscanConfig {
    /// Neighborhood radius in meters.
    pub eps: f64,
    /// Neighbors (including the point itself) needed for a core point.
    pub min_pts: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self { eps: 0.3, min_pts: 4 }
    }
}

/// Uniform grid with cell size `eps` for fixed-radius neighbor queries.
struct Grid<'a> {
    points: &'a [Point],
    eps: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Point], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self { points, eps, cells }
    }

    fn key(p: &Point, eps: f64) -> (i64, i64) {
        ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)
    }

    /// Indices within `eps` of point `i` (inclusive), ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let (cx, cy) = Self::key(p, self.eps);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(cell) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(
                        cell.iter()
                            .copied()
                            .filter(|&j| (self.points[j] - p).norm() <= self.eps),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// DBSCAN labels: `Some(cluster)` or `None` for noise.
pub(crate) fn dbscan_labels(points: &[Point], cfg: &DbscanConfig) -> Vec<Option<usize>> {
    let grid = Grid::new(points, cfg.eps);
    let neighbors: Vec<Vec<usize>> = (0..points.len()).map(|i| grid.neighbors(i)).collect();
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= cfg.min_pts).collect();
    let mut labels = vec![None; points.len()];
    let mut next = 0;
    for start in 0..points.len() {
        if !core[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &j in &neighbors[i] {
                if labels[j].is_none() {
                    labels[j] = Some(next);
                    if core[j] {
                        queue.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    labels
}

/// DBSCAN with every noise point assigned to the cluster whose centroid is
/// nearest, so that downstream ellipse fitting covers all points. If no
/// dense region exists the whole set forms one cluster.
pub fn dbscan_baseline(points: &[Point], eps: f64, min_pts: usize) -> Result<ClusterResult, ClusteringError> {
    if points.is_empty() {
        return Err(ClusteringError::EmptyInput);
    }
    if !(eps > 0.0) || min_pts == 0 {
        return Err(ClusteringError::InvalidConfig("dbscan needs eps > 0 and min_pts >= 1"));
    }
    let labels = dbscan_labels(points, &DbscanConfig { eps, min_pts });
    let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
    if k == 0 {
        return Ok(ClusterResult::from_labels(points, vec![0; points.len()], 1));
    }
    let mut sums = vec![Point::zeros(); k];
    let mut counts = vec![0usize; k];
    for (p, l) in points.iter().zip(&labels) {
        if let Some(l) = l {
            sums[*l] += p;
            counts[*l] += 1;
        }
    }
    let centroids: Vec<Point> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let hard = points
        .iter()
        .zip(&labels)
        .map(|(p, l)| l.unwrap_or_else(|| nearest(p, &centroids)))
        .collect();
    Ok(ClusterResult::from_labels(points, hard, k))
}
