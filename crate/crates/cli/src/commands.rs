use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ellid_core::pipeline::{identify, Identification, PipelineConfig, Segmentation};
use ellid_core::simulator::{
    render_identification_svg, render_svg, run_episode, sample_points, write_episode_csv, Outcome, Scenario,
};
use ellid_core::tracking::{FeatureVector, Tracker};
use ellid_core::{builtin_map, Point};
use log::{debug, info};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::input::{frame_files, load_scenario, read_points, write_points};

pub const ELLIPSES_CSV_HEADER: [&str; 6] = ["xc", "yc", "r1", "r2", "theta", "support"];
pub const TIMINGS_CSV_HEADER: [&str; 2] = ["stage", "ms"];
pub const TRACKS_CSV_HEADER: [&str; 12] =
    ["time", "id", "xc", "yc", "r1", "r2", "theta", "vx", "vy", "omega", "cov_trace", "age"];
pub const BENCH_CSV_HEADER: [&str; 13] = [
    "map",
    "pipeline",
    "n_points",
    "reps",
    "n_ellipses",
    "id_median_ms",
    "id_p95_ms",
    "reached",
    "time_to_goal",
    "collisions",
    "min_clearance",
    "frames",
    "mean_frame_id_ms",
];

/// `out/name` when an output directory is set, stdout otherwise.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Box::new(BufWriter::new(File::create(dir.join(name))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn out_dir(cfg: &RunConfig, what: &str) -> Result<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| CliError::Input(format!("{what} needs --out DIR")))
}

fn scenario(which: &str, cfg: &RunConfig) -> Result<Scenario> {
    let mut sc = load_scenario(which)?;
    if let Some(seed) = cfg.seed {
        sc.seed = seed;
    }
    Ok(sc)
}

pub fn cmd_identify(points_file: &Path, cfg: &RunConfig) -> Result<()> {
    let points = read_points(points_file)?;
    if points.is_empty() {
        return Err(CliError::Empty(points_file.display().to_string()));
    }
    let id = identify(&points, &cfg.pipeline).map_err(CliError::failed)?;
    info!(
        "{} points -> {} clusters -> {} ellipses in {:.2} ms",
        points.len(),
        id.n_clusters,
        id.ellipses.len(),
        id.timings.total_ms
    );

    let out = cfg.out.as_deref();
    let mut w = csv::Writer::from_writer(sink(out, "ellipses.csv")?);
    w.write_record(ELLIPSES_CSV_HEADER)?;
    for e in &id.ellipses {
        let s = e.ellipse;
        w.write_record([
            format!("{:.6}", s.center.x),
            format!("{:.6}", s.center.y),
            format!("{:.6}", s.r1),
            format!("{:.6}", s.r2),
            format!("{:.6}", s.theta),
            e.support.to_string(),
        ])?;
    }
    w.flush()?;
    if let Some(dir) = out {
        write_timings(&id, dir)?;
        if cfg.svg {
            fs::write(dir.join("identify.svg"), render_identification_svg(&points, &id.standard()))?;
        }
        println!("{} ellipses from {} points in {:.2} ms", id.ellipses.len(), points.len(), id.timings.total_ms);
    } else if cfg.svg {
        log::warn!("--svg ignored without --out");
    }
    Ok(())
}

fn write_timings(id: &Identification, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(Some(dir), "timings.csv")?);
    w.write_record(TIMINGS_CSV_HEADER)?;
    let t = id.timings;
    for (stage, ms) in [
        ("clustering", t.clustering_ms),
        ("mvee", t.mvee_ms),
        ("refine", t.refine_ms),
        ("total", t.total_ms),
    ] {
        w.write_record([stage.to_string(), format!("{ms:.3}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_track(frames_dir: &Path, cfg: &RunConfig) -> Result<()> {
    let frames = frame_files(frames_dir)?;
    if frames.is_empty() {
        return Err(CliError::Empty(frames_dir.display().to_string()));
    }
    let mut tracker = Tracker::new(cfg.tracker).map_err(CliError::failed)?;
    let mut w = csv::Writer::from_writer(sink(cfg.out.as_deref(), "tracks.csv")?);
    w.write_record(TRACKS_CSV_HEADER)?;
    for (t, path) in &frames {
        let points = read_points(path)?;
        let features: Vec<FeatureVector> = if points.is_empty() {
            Vec::new()
        } else {
            let id = identify(&points, &cfg.pipeline).map_err(CliError::failed)?;
            id.ellipses.iter().map(|e| FeatureVector::from(e.ellipse)).collect()
        };
        let tracks = tracker.update(&features, *t).map_err(CliError::failed)?;
        debug!("t={t:.3}: {} observations, {} tracks", features.len(), tracks.len());
        for tr in tracks {
            let e = tr.ellipse();
            w.write_record([
                format!("{t:.3}"),
                tr.id.to_string(),
                format!("{:.6}", e.center.x),
                format!("{:.6}", e.center.y),
                format!("{:.6}", e.r1),
                format!("{:.6}", e.r2),
                format!("{:.6}", e.theta),
                format!("{:.6}", tr.velocity().x),
                format!("{:.6}", tr.velocity().y),
                format!("{:.6}", tr.omega()),
                format!("{:.6}", tr.covariance.trace()),
                tr.age.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs one episode and returns its outcome; artifacts go to `--out`.
pub fn cmd_run(which: &str, cfg: &RunConfig) -> Result<Outcome> {
    let sc = scenario(which, cfg)?;
    let log = run_episode(&sc, &cfg.pipeline, &cfg.tracker, &cfg.mpc).map_err(CliError::failed)?;
    if let Some(dir) = cfg.out.as_deref() {
        fs::create_dir_all(dir)?;
        write_episode_csv(&log, sc.goal, BufWriter::new(File::create(dir.join("episode.csv"))?))?;
        if cfg.svg {
            let frames = dir.join("frames");
            fs::create_dir_all(&frames)?;
            for (i, f) in log.frames.iter().enumerate() {
                fs::write(frames.join(format!("frame_{i:04}.svg")), render_svg(&sc, &log, f))?;
            }
        }
    } else if cfg.svg {
        log::warn!("--svg ignored without --out");
    }
    let o = log.outcome;
    let time = o.time_to_goal.map_or("none".to_string(), |t| format!("{t:.2}"));
    println!(
        "scenario={} reached={} time_to_goal={time} min_clearance={:.3} collisions={} frames={} mean_identification_ms={:.2}",
        if sc.name.is_empty() { which } else { &sc.name },
        o.reached,
        o.min_clearance,
        o.collisions,
        log.frames.len(),
        log.mean_identification_ms()
    );
    Ok(o)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<()> {
    let b = &cfg.bench;
    if b.reps == 0 {
        return Err(CliError::Input("bench.reps must be at least 1".into()));
    }
    let mut w = csv::Writer::from_writer(sink(cfg.out.as_deref(), "bench.csv")?);
    w.write_record(BENCH_CSV_HEADER)?;
    for &map in &b.maps {
        let mut sc = builtin_map(map).ok_or_else(|| CliError::Input(format!("no built-in map {map}")))?;
        if let Some(seed) = cfg.seed {
            sc.seed = seed;
        }
        let points = sample_points(&sc, 0.0);
        let pipelines = [
            Segmentation::Vigmm,
            Segmentation::Kmeans { k: b.kmeans_k[map - 1] },
            Segmentation::Dbscan { eps: b.dbscan_eps, min_pts: b.dbscan_min_pts },
        ];
        for seg in pipelines {
            let pipeline = PipelineConfig { segmentation: seg, ..cfg.pipeline.clone() };
            let mut ms = Vec::with_capacity(b.reps);
            let mut n_ellipses = 0;
            for _ in 0..b.reps {
                let start = Instant::now();
                n_ellipses = identify(&points, &pipeline).map_err(CliError::failed)?.ellipses.len();
                ms.push(start.elapsed().as_secs_f64() * 1e3);
            }
            ms.sort_by(f64::total_cmp);
            let log = run_episode(&sc, &pipeline, &cfg.tracker, &cfg.mpc).map_err(CliError::failed)?;
            let o = log.outcome;
            info!("map {map} {}: reached={} time={:?}", seg.name(), o.reached, o.time_to_goal);
            w.write_record([
                map.to_string(),
                seg.name().to_string(),
                points.len().to_string(),
                b.reps.to_string(),
                n_ellipses.to_string(),
                format!("{:.3}", percentile(&ms, 0.5)),
                format!("{:.3}", percentile(&ms, 0.95)),
                o.reached.to_string(),
                o.time_to_goal.map_or(String::new(), |t| format!("{t:.2}")),
                o.collisions.to_string(),
                format!("{:.4}", o.min_clearance),
                log.frames.len().to_string(),
                format!("{:.3}", log.mean_identification_ms()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes sampled scenario points: one file at `time`, or `frames`
/// timestamped files for `track`.
pub fn cmd_sample(which: &str, time: f64, frames: Option<usize>, cfg: &RunConfig) -> Result<()> {
    let sc = scenario(which, cfg)?;
    match frames {
        None => {
            let pts: Vec<Point> = sample_points(&sc, time);
            write_points(sink(cfg.out.as_deref(), "points.txt")?, &pts)?;
        }
        Some(n) => {
            let dir = out_dir(cfg, "sample --frames")?;
            fs::create_dir_all(&dir)?;
            for k in 0..n {
                let t = time + k as f64 * sc.frame_dt;
                let ms = (t * 1000.0).round() as u64;
                write_points(BufWriter::new(File::create(dir.join(format!("{ms:06}.txt")))?), &sample_points(&sc, t))?;
            }
        }
    }
    Ok(())
}
