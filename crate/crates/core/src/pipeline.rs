//! Clustering, per-cluster enclosing ellipses and refinement as a single
//! identification call.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{dbscan_baseline, fit_vigmm, kmeans_baseline, ClusterResult, ClusteringError, VigmmConfig};
use crate::geometry::{Point, StandardEllipse};
use crate::mvee::{enclosing_ellipse, MveeConfig, MveeError};
use crate::refinement::{refine_tagged, RefinementConfig, RefinementError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("no input points")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Mvee(#[from] MveeError),
    #[error(transparent)]
    Refinement(#[from] RefinementError),
}

/// How points are grouped before fitting ellipses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segmentation {
    /// Variational mixture followed by refinement.
    #[default]
    Vigmm,
    /// k-means with a fixed count, no refinement.
    Kmeans { k: usize },
    /// DBSCAN, no refinement.
    Dbscan { eps: f64, min_pts: usize },
}

impl Segmentation {
    pub fn name(&self) -> &'static str {
        match self {
            Segmentation::Vigmm => "ours",
            Segmentation::Kmeans { .. } => "kmeans",
            Segmentation::Dbscan { .. } => "dbscan",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub segmentation: Segmentation,
    pub vigmm: VigmmConfig,
    pub mvee: MveeConfig,
    pub refine: RefinementConfig,
    /// Semi-axes below this are raised to it, so thin clusters still give
    /// obstacles with some width.
    pub min_axis: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            segmentation: Segmentation::Vigmm,
            vigmm: VigmmConfig::default(),
            mvee: MveeConfig::default(),
            refine: RefinementConfig::default(),
            min_axis: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.vigmm.validate()?;
        self.mvee.validate()?;
        self.refine.validate()?;
        if !(self.min_axis > 0.0 && self.min_axis.is_finite()) {
            return Err(PipelineError::InvalidConfig("min_axis must be positive"));
        }
        match self.segmentation {
            Segmentation::Kmeans { k: 0 } => Err(PipelineError::InvalidConfig("k must be at least 1")),
            Segmentation::Dbscan { eps, min_pts } if !(eps > 0.0) || min_pts == 0 => {
                Err(PipelineError::InvalidConfig("dbscan needs eps > 0 and min_pts >= 1"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentifiedEllipse {
    pub ellipse: StandardEllipse,
    /// Number of input points in the clusters this ellipse was built from.
    pub support: usize,
}

/// Wall-clock time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StageTimings {
    pub clustering_ms: f64,
    pub mvee_ms: f64,
    pub refine_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub ellipses: Vec<IdentifiedEllipse>,
    pub timings: StageTimings,
    /// Clusters produced by the segmentation stage.
    pub n_clusters: usize,
}

impl Identification {
    pub fn standard(&self) -> Vec<StandardEllipse> {
        self.ellipses.iter().map(|e| e.ellipse).collect()
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn segment(points: &[Point], cfg: &PipelineConfig) -> Result<ClusterResult, PipelineError> {
    Ok(match cfg.segmentation {
        Segmentation::Vigmm => {
            // Merging inside the mixture turns a non-convex outline into
            // convex parts that refinement's ratio test cannot reassemble.
            let vigmm = VigmmConfig { merge_moves: Some(cfg.vigmm.merge_moves.unwrap_or(false)), ..cfg.vigmm.clone() };
            fit_vigmm(points, &vigmm)?
        }
        Segmentation::Kmeans { k } => kmeans_baseline(points, k.min(points.len()), cfg.vigmm.seed)?,
        Segmentation::Dbscan { eps, min_pts } => dbscan_baseline(points, eps, min_pts)?,
    })
}

fn with_floor(e: StandardEllipse, min_axis: f64) -> StandardEllipse {
    if e.r1 >= min_axis {
        return e;
    }
    StandardEllipse::new(e.center, e.r1.max(min_axis), e.r2.max(min_axis), e.theta).expect("positive axes")
}

/// Identifies obstacle ellipses in a point cloud.
///
/// Every input point lies inside some returned ellipse at inflation
/// `2·mvee.epsilon`.
pub fn identify(points: &[Point], cfg: &PipelineConfig) -> Result<Identification, PipelineError> {
    if points.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    cfg.validate()?;
    let start = Instant::now();

    let clusters = segment(points, cfg)?;
    let clustering_ms = ms_since(start);

    let t = Instant::now();
    let groups = clusters.groups(points);
    let mut fitted = Vec::with_capacity(groups.len());
    for (i, group) in groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let e = with_floor(enclosing_ellipse(group, &cfg.mvee)?, cfg.min_axis);
        fitted.push((e, vec![i]));
    }
    let mvee_ms = ms_since(t);

    let t = Instant::now();
    let merged = match cfg.segmentation {
        Segmentation::Vigmm => {
            // A merged ellipse is refitted to the points of its clusters,
            // which is tighter than the union of the parts. The refit can
            // qualify a pair that did not before, so alternate until a round
            // merges nothing; every merging round lowers the count.
            let mut items = fitted;
            loop {
                let (merged, stats) = refine_tagged(items, &cfg.refine, &cfg.mvee, |mut a, b| {
                    a.extend(b);
                    a
                })?;
                if stats.merges == 0 {
                    break merged;
                }
                items = Vec::with_capacity(merged.len());
                for (e, members) in merged {
                    if members.len() == 1 {
                        items.push((e, members));
                        continue;
                    }
                    let pts: Vec<Point> = members.iter().flat_map(|&i| groups[i].iter().copied()).collect();
                    items.push((with_floor(enclosing_ellipse(&pts, &cfg.mvee)?, cfg.min_axis), members));
                }
            }
        }
        _ => fitted,
    };
    let refine_ms = ms_since(t);

    Ok(Identification {
        ellipses: merged
            .into_iter()
            .map(|(ellipse, members)| IdentifiedEllipse {
                ellipse,
                support: members.iter().map(|&i| groups[i].len()).sum(),
            })
            .collect(),
        timings: StageTimings {
            clustering_ms,
            mvee_ms,
            refine_ms,
            total_ms: ms_since(start),
        },
        n_clusters: clusters.len(),
    })
}
