use std::fmt::Write as _;
use std::io;

use super::{EpisodeLog, FrameRecord, Scenario};
use crate::geometry::{Point, StandardEllipse};
use crate::planner::{SolverStatus, VehicleState};

pub const EPISODE_CSV_HEADER: [&str; 20] = [
    "frame",
    "time",
    "px",
    "py",
    "vx",
    "vy",
    "ux",
    "uy",
    "n_points",
    "n_ellipses",
    "n_tracks",
    "identification_ms",
    "tracking_ms",
    "planning_ms",
    "solver_status",
    "cost_tracking",
    "cost_control",
    "cost_slack",
    "max_slack",
    "dist_to_goal",
];

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Converged => "converged",
        SolverStatus::IterLimit => "iter_limit",
        SolverStatus::Infeasible => "infeasible",
    }
}

/// Writes one row per frame.
pub fn write_episode_csv<W: io::Write>(log: &EpisodeLog, goal: [f64; 2], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPISODE_CSV_HEADER)?;
    for (i, f) in log.frames.iter().enumerate() {
        let u = f.plan.first_control();
        let s = f.state;
        let dist = ((s.px - goal[0]).powi(2) + (s.py - goal[1]).powi(2)).sqrt();
        w.write_record([
            i.to_string(),
            format!("{:.4}", f.time),
            format!("{:.6}", s.px),
            format!("{:.6}", s.py),
            format!("{:.6}", s.vx),
            format!("{:.6}", s.vy),
            format!("{:.6}", u.x),
            format!("{:.6}", u.y),
            f.points.len().to_string(),
            f.ellipses.len().to_string(),
            f.tracks.len().to_string(),
            format!("{:.3}", f.identification_ms),
            format!("{:.3}", f.tracking_ms),
            format!("{:.3}", f.planning_ms),
            status_name(f.plan.status).to_string(),
            format!("{:.6}", f.plan.cost.tracking),
            format!("{:.6}", f.plan.cost.control),
            format!("{:.6}", f.plan.cost.slack),
            format!("{:.6}", f.plan.max_slack()),
            format!("{:.6}", dist),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn episode_csv(log: &EpisodeLog, goal: [f64; 2]) -> String {
    let mut buf = Vec::new();
    write_episode_csv(log, goal, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

struct Bounds {
    min: [f64; 2],
    max: [f64; 2],
}

impl Bounds {
    fn new() -> Self {
        Self {
            min: [f64::INFINITY; 2],
            max: [f64::NEG_INFINITY; 2],
        }
    }

    fn add(&mut self, x: f64, y: f64) {
        if x.is_finite() && y.is_finite() {
            self.min = [self.min[0].min(x), self.min[1].min(y)];
            self.max = [self.max[0].max(x), self.max[1].max(y)];
        }
    }
}

fn ellipse_svg(svg: &mut String, e: &StandardEllipse, style: &str) {
    let _ = writeln!(
        svg,
        r#"<ellipse cx="0" cy="0" rx="{:.4}" ry="{:.4}" transform="translate({:.4} {:.4}) rotate({:.3})" {style}/>"#,
        e.r1,
        e.r2,
        e.center.x,
        e.center.y,
        e.theta.to_degrees()
    );
}

fn polyline(states: impl Iterator<Item = VehicleState>) -> String {
    states.map(|s| format!("{:.4},{:.4}", s.px, s.py)).collect::<Vec<_>>().join(" ")
}

/// Renders a point cloud with its identified ellipses.
pub fn render_identification_svg(points: &[Point], ellipses: &[StandardEllipse]) -> String {
    let mut b = Bounds::new();
    for p in points {
        b.add(p.x, p.y);
    }
    for e in ellipses {
        for p in e.boundary_sample(32) {
            b.add(p.x, p.y);
        }
    }
    if !b.min[0].is_finite() {
        b.add(0.0, 0.0);
    }
    let pad = 0.5;
    let (x0, y0) = (b.min[0] - pad, b.min[1] - pad);
    let (w, h) = (b.max[0] - b.min[0] + 2.0 * pad, b.max[1] - b.min[1] + 2.0 * pad);
    let scale = 800.0 / w.max(h);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{x0:.4} {:.4} {w:.4} {h:.4}">"#,
        w * scale,
        h * scale,
        -(y0 + h),
    );
    let _ = writeln!(svg, r#"<g transform="scale(1 -1)" stroke-width="{:.4}">"#, 1.5 / scale);
    for e in ellipses {
        ellipse_svg(&mut svg, e, r##"fill="none" stroke="#1f77b4""##);
    }
    let r = 2.0 / scale;
    for p in points {
        let _ = writeln!(svg, r##"<circle cx="{:.4}" cy="{:.4}" r="{r:.4}" fill="#d62728"/>"##, p.x, p.y);
    }
    svg.push_str("</g>\n</svg>\n");
    svg
}

/// Renders one frame: ground-truth outlines, sampled points, identified
/// ellipses, the trajectory so far and the horizon plan. World y points up.
pub fn render_svg(scenario: &Scenario, log: &EpisodeLog, frame: &FrameRecord) -> String {
    let t = frame.time;
    let polys: Vec<Vec<_>> = scenario.obstacles.iter().flat_map(|o| o.posed_polygons(t)).collect();
    let mut b = Bounds::new();
    for p in polys.iter().flatten().chain(frame.points.iter()) {
        b.add(p.x, p.y);
    }
    for (_, s) in &log.trajectory {
        b.add(s.px, s.py);
    }
    b.add(scenario.goal[0], scenario.goal[1]);
    b.add(scenario.vehicle_start.px, scenario.vehicle_start.py);
    let pad = 1.0;
    let (x0, y0) = (b.min[0] - pad, b.min[1] - pad);
    let (w, h) = (b.max[0] - b.min[0] + 2.0 * pad, b.max[1] - b.min[1] + 2.0 * pad);
    let scale = 800.0 / w.max(h);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{x0:.4} {:.4} {w:.4} {h:.4}">"#,
        w * scale,
        h * scale,
        -(y0 + h),
    );
    let _ = writeln!(svg, r#"<g transform="scale(1 -1)" stroke-width="{:.4}">"#, 1.5 / scale);
    let _ = writeln!(svg, "<title>{} t={:.2}s</title>", scenario.name, t);
    for poly in &polys {
        let pts: Vec<String> = poly.iter().map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect();
        let _ = writeln!(svg, r##"<polygon points="{}" fill="#d9d9d9" stroke="#555"/>"##, pts.join(" "));
    }
    for e in &frame.ellipses {
        ellipse_svg(&mut svg, &e.ellipse, r##"fill="none" stroke="#1f77b4""##);
    }
    let r = 2.0 / scale;
    for p in &frame.points {
        let _ = writeln!(svg, r##"<circle cx="{:.4}" cy="{:.4}" r="{r:.4}" fill="#d62728"/>"##, p.x, p.y);
    }
    let travelled = log.trajectory.iter().filter(|(ts, _)| *ts <= t + 1e-9).map(|(_, s)| *s);
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#2ca02c"/>"##, polyline(travelled));
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#ff7f0e" stroke-dasharray="{:.4}"/>"##,
        polyline(frame.plan.states.iter().copied()),
        4.0 / scale
    );
    let _ = writeln!(
        svg,
        r##"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" fill="none" stroke="#2ca02c"/>"##,
        frame.state.px, frame.state.py, scenario.vehicle_radius
    );
    let _ = writeln!(
        svg,
        r##"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" fill="none" stroke="#9467bd"/>"##,
        scenario.goal[0], scenario.goal[1], scenario.goal_tolerance
    );
    svg.push_str("</g>\n</svg>\n");
    svg
}
