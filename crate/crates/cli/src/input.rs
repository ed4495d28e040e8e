//! Point files (one `x y` pair per line) and frame directories (point files
//! named by millisecond timestamp).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ellid_core::simulator::{builtin_map, Scenario};
use ellid_core::Point;

use crate::config::read;
use crate::error::{CliError, Result};

/// Parses a point file. Blank lines and lines starting with `#` are
/// skipped; coordinates may be separated by whitespace or a comma.
pub fn parse_points(text: &str, path: &str) -> Result<Vec<Point>> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CliError::Parse {
            path: path.to_string(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect();
        if fields.len() != 2 {
            return Err(err(format!("expected 2 coordinates, found {} in {line:?}", fields.len())));
        }
        let mut xy = [0.0; 2];
        for (v, f) in xy.iter_mut().zip(&fields) {
            *v = f.parse::<f64>().map_err(|_| err(format!("not a number: {f:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("not a finite number: {f:?}")));
            }
        }
        points.push(Point::new(xy[0], xy[1]));
    }
    Ok(points)
}

pub fn read_points(path: &Path) -> Result<Vec<Point>> {
    parse_points(&read(path)?, &path.display().to_string())
}

pub fn write_points(mut out: impl Write, points: &[Point]) -> std::io::Result<()> {
    for p in points {
        writeln!(out, "{:.6} {:.6}", p.x, p.y)?;
    }
    out.flush()
}

/// Frame files sorted by timestamp, with times in seconds.
pub fn frame_files(dir: &Path) -> Result<Vec<(f64, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut frames = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::input(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with('.') || !path.is_file() {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let ms: u64 = stem
            .parse()
            .map_err(|_| CliError::input(&path, "frame file name is not a millisecond timestamp"))?;
        frames.push((ms, path));
    }
    frames.sort();
    Ok(frames.into_iter().map(|(ms, p)| (ms as f64 / 1000.0, p)).collect())
}

/// A scenario file, or `mapN` / `N` for a built-in map.
pub fn load_scenario(which: &str) -> Result<Scenario> {
    let path = Path::new(which);
    if path.exists() {
        return Scenario::from_toml(&read(path)?).map_err(|e| CliError::input(path, e));
    }
    which.trim_start_matches("map")
        .parse::<usize>()
        .ok()
        .and_then(builtin_map)
        .ok_or_else(|| CliError::Input(format!("{which}: no such scenario file or built-in map (map1..map5)")))
}
