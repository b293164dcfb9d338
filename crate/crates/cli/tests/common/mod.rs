#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const GOLDENS: [&str; 7] = [
    "rectangle-uncalibrated.json",
    "rectangle.json",
    "route-5km.json",
    "circle.json",
    "square.json",
    "danube.json",
    "empty.json",
];

pub fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

/// A temp dir holding a fresh copy of every golden file.
pub fn golden_copies() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(golden("")).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
    }
    dir
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Self {
            code: o.status.code().unwrap_or(-1),
            stdout: String::from_utf8(o.stdout).unwrap(),
            stderr: String::from_utf8(o.stderr).unwrap(),
        }
    }
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cartometry"))
}

pub fn cartometry<I, S>(args: I) -> Run
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    bin().args(args).output().unwrap().into()
}

/// Parses aligned `key  value [unit]` text output into (key, first token).
pub fn text_fields(out: &str) -> Vec<(String, String)> {
    out.lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            Some((it.next()?.to_string(), it.next()?.to_string()))
        })
        .collect()
}

/// Snapshot of every file in a directory: names and bytes.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// Feature ids of a session file, with their kinds.
pub fn features(path: &Path) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["id"].as_str().unwrap().to_string(), f["kind"].as_str().unwrap().to_string()))
        .collect()
}

pub const REPORT_KEYS: [&str; 11] = [
    "feature_id",
    "kind",
    "planar",
    "geodesic",
    "anomaly_ratio",
    "bbox_w",
    "bbox_h",
    "bbox_area",
    "simple",
    "display_value",
    "display_unit",
];

pub const FIT_KEYS: [&str; 6] = ["feature_id", "n", "rms_error", "area", "boundary", "samples"];

pub const CALIBRATION_KEYS: [&str; 8] = [
    "kind",
    "coefficients",
    "flip_v",
    "georeferenced",
    "rms_residual",
    "rms_residual_display",
    "display_unit",
    "warnings",
];

/// True when `line` is a single-line JSON object with exactly `keys`, in order.
pub fn has_keys(line: &str, keys: &[&str]) -> bool {
    if line.trim_end().contains('\n') {
        return false;
    }
    let v: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(_) => return false,
    };
    // serde_json preserves insertion order only with a feature; compare sets
    // and check order against the raw text instead.
    let Some(obj) = v.as_object() else { return false };
    if obj.len() != keys.len() || !keys.iter().all(|k| obj.contains_key(*k)) {
        return false;
    }
    let positions: Vec<usize> = keys.iter().filter_map(|k| line.find(&format!("\"{k}\":"))).collect();
    positions.windows(2).all(|w| w[0] < w[1])
}
