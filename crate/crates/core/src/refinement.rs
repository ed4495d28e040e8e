//! Merging of over-segmented ellipses.
//!
//! Two ellipses are merged when their combined area fills a large enough
//! share of their joint oriented bounding box. The merged ellipse is the
//! minimum-volume ellipse around polygons circumscribed about both inputs,
//! so it contains each input entirely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{obb_of_pair, Point, StandardEllipse};
use crate::mvee::{khachiyan_mvee, MveeConfig, MveeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefinementError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Mvee(#[from] MveeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    /// Pairs whose volume ratio reaches this value are merged.
    pub ratio_threshold: f64,
    /// Boundary samples per ellipse when fitting a union.
    pub union_samples: usize,
    pub max_passes: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            ratio_threshold: 0.6,
            union_samples: 64,
            max_passes: 10,
        }
    }
}

impl RefinementConfig {
    pub fn validate(&self) -> Result<(), RefinementError> {
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(RefinementError::InvalidConfig("ratio_threshold must lie in (0, 1]"));
        }
        if self.union_samples < 16 {
            return Err(RefinementError::InvalidConfig("union_samples must be at least 16"));
        }
        if self.max_passes == 0 {
            return Err(RefinementError::InvalidConfig("max_passes must be at least 1"));
        }
        Ok(())
    }
}

/// `(area(e1) + area(e2)) / area(OBB(e1, e2))`.
pub fn volume_ratio(e1: &StandardEllipse, e2: &StandardEllipse) -> f64 {
    (e1.area() + e2.area()) / obb_of_pair(e1, e2).area()
}

/// Minimum-volume ellipse covering both inputs.
pub fn union_ellipse(
    e1: &StandardEllipse,
    e2: &StandardEllipse,
    cfg: &RefinementConfig,
    mvee: &MveeConfig,
) -> Result<StandardEllipse, RefinementError> {
    let pts: Vec<Point> = e1
        .circumscribed_polygon(cfg.union_samples)
        .into_iter()
        .chain(e2.circumscribed_polygon(cfg.union_samples))
        .collect();
    Ok(khachiyan_mvee(&pts, mvee)?.ellipse.to_standard())
}

/// Counters from a refinement run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefineStats {
    pub passes: usize,
    pub merges: usize,
}

/// Merges ellipses until no pair reaches the ratio threshold.
pub fn refine(
    ellipses: Vec<StandardEllipse>,
    cfg: &RefinementConfig,
    mvee: &MveeConfig,
) -> Result<Vec<StandardEllipse>, RefinementError> {
    let tagged = ellipses.into_iter().map(|e| (e, ())).collect();
    Ok(refine_tagged(tagged, cfg, mvee, |_, _| ())?
        .0
        .into_iter()
        .map(|(e, _)| e)
        .collect())
}

/// [`refine`] carrying a tag per ellipse; tags of merged ellipses are
/// combined with `merge_tag`.
///
/// A pass scans pairs `(i, j)`, `i < j`, in index order. The first pair at
/// or above the threshold is replaced by its union (stored at `i`) and the
/// scan restarts. A pass ends when a full scan merges nothing; passes repeat
/// until one performs no merge or `max_passes` is reached.
pub fn refine_tagged<T>(
    mut items: Vec<(StandardEllipse, T)>,
    cfg: &RefinementConfig,
    mvee: &MveeConfig,
    merge_tag: impl Fn(T, T) -> T,
) -> Result<(Vec<(StandardEllipse, T)>, RefineStats), RefinementError> {
    cfg.validate()?;
    let mut stats = RefineStats::default();
    while stats.passes < cfg.max_passes {
        stats.passes += 1;
        let mut merged_in_pass = 0;
        'scan: loop {
            for i in 0..items.len() {
                for j in i + 1..items.len() {
                    if volume_ratio(&items[i].0, &items[j].0) >= cfg.ratio_threshold {
                        let union = union_ellipse(&items[i].0, &items[j].0, cfg, mvee)?;
                        let (_, tag_j) = items.remove(j);
                        let (_, tag_i) = items.remove(i);
                        items.insert(i, (union, merge_tag(tag_i, tag_j)));
                        merged_in_pass += 1;
                        continue 'scan;
                    }
                }
            }
            break;
        }
        stats.merges += merged_in_pass;
        if merged_in_pass == 0 {
            break;
        }
    }
    Ok((items, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disk(x: f64, y: f64) -> StandardEllipse {
        StandardEllipse::disk(Point::new(x, y), 1.0).unwrap()
    }

    #[test]
    fn coincident_disks_ratio() {
        assert_relative_eq!(volume_ratio(&disk(0.0, 0.0), &disk(0.0, 0.0)), PI / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn distant_disks_ratio() {
        let r = volume_ratio(&disk(0.0, 0.0), &disk(100.0, 0.0));
        assert_relative_eq!(r, 2.0 * PI / 204.0, max_relative = 1e-6);
    }

    #[test]
    fn ratio_is_symmetric() {
        let a = StandardEllipse::new(Point::new(0.2, 0.1), 0.4, 1.5, 0.7).unwrap();
        let b = StandardEllipse::new(Point::new(1.4, -0.3), 0.9, 1.1, 2.2).unwrap();
        assert_eq!(volume_ratio(&a, &b), volume_ratio(&b, &a));
    }

    #[test]
    fn union_of_identical_disks_is_the_disk() {
        let u = union_ellipse(&disk(0.0, 0.0), &disk(0.0, 0.0), &RefinementConfig::default(), &MveeConfig::default())
            .unwrap();
        assert_relative_eq!(u.r1, 1.0, max_relative = 0.05);
        assert_relative_eq!(u.r2, 1.0, max_relative = 0.05);
        assert!(u.center.norm() < 0.05);
    }

    #[test]
    fn union_of_side_by_side_disks() {
        let tight = MveeConfig { epsilon: 1e-4, max_iters: Some(100_000), ..MveeConfig::default() };
        let u = union_ellipse(&disk(-2.0, 0.0), &disk(2.0, 0.0), &RefinementConfig::default(), &tight).unwrap();
        assert!(u.center.norm() < 0.05);
        // Optimum found by a dense search over axis-aligned ellipses:
        // semi-axes (3.346, 1.316), area 4.4037π.
        assert_relative_eq!(u.r2, 3.346, max_relative = 0.02);
        assert_relative_eq!(u.r1, 1.316, max_relative = 0.02);
        assert!(u.area() >= 4.40 * PI && u.area() <= 4.4037 * PI * 1.02);
        assert!(u.major_axis().x.abs() > 0.999);
    }

    #[test]
    fn refine_empty_and_coincident() {
        let cfg = RefinementConfig::default();
        let mvee = MveeConfig::default();
        assert!(refine(Vec::new(), &cfg, &mvee).unwrap().is_empty());
        let out = refine(vec![disk(0.0, 0.0), disk(0.0, 0.0)], &cfg, &mvee).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn refine_merges_neighbors_only() {
        let cfg = RefinementConfig::default();
        let r = volume_ratio(&disk(0.0, 0.0), &disk(1.5, 0.0));
        assert_relative_eq!(r, 2.0 * PI / 7.0, max_relative = 1e-6);
        let out = refine(vec![disk(0.0, 0.0), disk(1.5, 0.0), disk(100.0, 0.0)], &cfg, &MveeConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[0].center.x < 2.0 && out[1].center.x > 99.0);
    }

    #[test]
    fn tags_are_combined() {
        let items = vec![(disk(0.0, 0.0), 3usize), (disk(0.5, 0.0), 4), (disk(50.0, 0.0), 5)];
        let (out, stats) =
            refine_tagged(items, &RefinementConfig::default(), &MveeConfig::default(), |a, b| a + b).unwrap();
        assert_eq!(out.iter().map(|(_, t)| *t).collect::<Vec<_>>(), vec![7, 5]);
        assert_eq!(stats.merges, 1);
    }

    #[test]
    fn invalid_config() {
        let cfg = RefinementConfig { ratio_threshold: 0.0, ..RefinementConfig::default() };
        assert!(refine(vec![disk(0.0, 0.0)], &cfg, &MveeConfig::default()).is_err());
    }
}
