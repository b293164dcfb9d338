//! Versioned JSON session files.
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "image": { "path": "delta.png", "width_px": 1200, "height_px": 900 },
//!   "projection": "web_mercator",
//!   "display_unit": "km",
//!   "calibration": {
//!     "kind": "similarity",
//!     "coefficients": [0.05, 0.0, 3.0, 7.0],
//!     "flip_v": true,
//!     "rms_residual": 0.0,
//!     "control_points": [
//!       { "label": "Braila", "pixel": [10.0, 20.0], "world": [0.0, 0.0] },
//!       { "label": "Galati", "pixel": [90.0, 20.0], "geo": [45.43, 28.05] }
//!     ]
//!   },
//!   "features": [
//!     { "id": "r1", "kind": "route", "name": "road", "points": [[10.0, 20.0], [40.0, 25.0]] }
//!   ]
//! }
//! ```
//!
//! `calibration` is `null` until the session is calibrated. Floats are written
//! with shortest round-trip formatting, so coordinates survive bit-exactly.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Calibration, DisplayUnit, Feature, FeatureKind, ImageRef, Projection, Session};
use crate::calibration::{rms_residual, CalibrationTransform, ControlPoint, ControlTarget, PixelPoint, TransformKind};
use crate::error::{Error, Result};
use crate::geodesy::GeoPoint;
use crate::geom::WorldPoint;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFile {
    schema_version: String,
    image: ImageFile,
    projection: Projection,
    display_unit: DisplayUnit,
    #[serde(default)]
    calibration: Option<CalibrationFile>,
    features: Vec<FeatureFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageFile {
    path: String,
    width_px: u32,
    height_px: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    kind: TransformKind,
    coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flip_v: Option<bool>,
    rms_residual: f64,
    control_points: Vec<ControlPointFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlPointFile {
    label: String,
    pixel: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    world: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geo: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureFile {
    id: String,
    kind: FeatureKind,
    name: String,
    points: Vec<[f64; 2]>,
}

/// Canonical JSON text of a session: pretty-printed, two-space indent,
/// trailing newline.
pub fn to_json(session: &Session) -> String {
    let file = SessionFile {
        schema_version: SCHEMA_VERSION.to_string(),
        image: ImageFile {
            path: session.image.path.clone(),
            width_px: session.image.width_px,
            height_px: session.image.height_px,
        },
        projection: session.projection,
        display_unit: session.display_unit,
        calibration: session.calibration.as_ref().map(|c| CalibrationFile {
            kind: c.transform.kind(),
            coefficients: c.transform.coefficients(),
            flip_v: (c.transform.kind() == TransformKind::Similarity).then(|| c.transform.flip_v()),
            rms_residual: c.transform.rms_residual,
            control_points: c
                .control_points
                .iter()
                .map(|cp| {
                    let (world, geo) = match cp.target {
                        ControlTarget::World(w) => (Some([w.x, w.y]), None),
                        ControlTarget::Geo(g) => (None, Some([g.lat(), g.lon()])),
                    };
                    ControlPointFile {
                        label: cp.label.clone(),
                        pixel: [cp.pixel.u, cp.pixel.v],
                        world,
                        geo,
                    }
                })
                .collect(),
        }),
        features: session
            .features
            .iter()
            .map(|f| FeatureFile {
                id: f.id.clone(),
                kind: f.kind,
                name: f.name.clone(),
                points: f.points.iter().map(|p| [p.u, p.v]).collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("session serializes");
    text.push('\n');
    text
}

/// Parses and validates session JSON text.
pub fn parse_session(text: &str) -> Result<Session> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema {
        path: String::new(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string(),
    })?;
    match value.get("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(serde_json::Value::String(v)) => return Err(Error::Version(v.clone())),
        Some(_) => return Err(Error::schema("schema_version", "must be a string")),
        None => return Err(Error::schema("schema_version", "missing field")),
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let file: SessionFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Schema {
            path,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }
    })?;
    from_file(file)
}

fn from_file(file: SessionFile) -> Result<Session> {
    let image = ImageRef {
        path: file.image.path,
        width_px: file.image.width_px,
        height_px: file.image.height_px,
    };
    if image.width_px == 0 || image.height_px == 0 {
        return Err(Error::schema("image", "pixel dimensions must be positive"));
    }
    let calibration = file.calibration.map(calibration_from_file).transpose()?;

    let mut seen = HashSet::new();
    let mut features = Vec::with_capacity(file.features.len());
    for (i, f) in file.features.into_iter().enumerate() {
        if f.id.is_empty() {
            return Err(Error::schema(format!("features[{i}].id"), "must not be empty"));
        }
        if !seen.insert(f.id.clone()) {
            return Err(Error::schema(
                format!("features[{i}].id"),
                format!("duplicate feature id {:?}", f.id),
            ));
        }
        let mut points: Vec<PixelPoint> = f.points.iter().map(|&p| p.into()).collect();
        if let Some(j) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::schema(format!("features[{i}].points[{j}]"), "not finite"));
        }
        if let Some(j) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::schema(
                format!("features[{i}].points[{}]", j + 1),
                "repeats the previous point",
            ));
        }
        // Regions close implicitly; drop an explicit closing vertex.
        if f.kind == FeatureKind::Region && points.len() > 3 && points.first() == points.last() {
            points.pop();
        }
        features.push(Feature {
            id: f.id,
            kind: f.kind,
            name: f.name,
            points,
        });
    }
    Session::from_parts(image, file.projection, file.display_unit, calibration, features)
}

fn calibration_from_file(c: CalibrationFile) -> Result<Calibration> {
    let mut transform = CalibrationTransform::from_coefficients(
        c.kind,
        &c.coefficients,
        c.flip_v.unwrap_or(true),
    )
    .map_err(|e| Error::schema("calibration.coefficients", e.to_string()))?;
    if c.rms_residual.is_nan() || c.rms_residual < 0.0 {
        return Err(Error::schema("calibration.rms_residual", "must be non-negative"));
    }
    transform.rms_residual = c.rms_residual;
    let control_points = c
        .control_points
        .into_iter()
        .enumerate()
        .map(|(i, cp)| {
            let path = format!("calibration.control_points[{i}]");
            let target = match (cp.world, cp.geo) {
                (Some(w), None) => ControlTarget::World(WorldPoint::from(w)),
                (None, Some([lat, lon])) => ControlTarget::Geo(
                    GeoPoint::new(lat, lon).map_err(|e| Error::schema(format!("{path}.geo"), e.to_string()))?,
                ),
                _ => return Err(Error::schema(path, "needs exactly one of \"world\" or \"geo\"")),
            };
            Ok(ControlPoint {
                pixel: cp.pixel.into(),
                target,
                label: cp.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if !control_points.is_empty() {
        rms_residual(&transform, &control_points)
            .map_err(|e| Error::schema("calibration.control_points", e.to_string()))?;
    }
    Ok(Calibration {
        transform,
        control_points,
    })
}

/// Writes the session atomically: a temporary file in the target directory
/// is renamed over `path`, so readers never see a partial file.
pub fn save_session(session: &Session, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(to_json(session).as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn load_session(path: &Path) -> Result<Session> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_session(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "schema_version": "1",
  "image": { "path": "m.png", "width_px": 10, "height_px": 10 },
  "projection": "planar_unknown",
  "display_unit": "km",
  "calibration": null,
  "features": []
}"#;

    #[test]
    fn minimal_file_loads() {
        let s = parse_session(MINIMAL).unwrap();
        assert!(s.features().is_empty());
        assert_eq!(parse_session(&to_json(&s)).unwrap(), s);
    }

    #[test]
    fn version_and_schema_errors() {
        let v2 = MINIMAL.replace("\"1\"", "\"2\"");
        assert!(matches!(parse_session(&v2), Err(Error::Version(v)) if v == "2"));
        let bad_unit = MINIMAL.replace("\"km\"", "\"ft\"");
        match parse_session(&bad_unit) {
            Err(Error::Schema { path, line, .. }) => {
                assert_eq!(path, "display_unit");
                assert_eq!(line, Some(5));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_session("{"), Err(Error::Schema { .. })));
        let extra = MINIMAL.replace("\"features\": []", "\"features\": [], \"extra\": 1");
        assert!(matches!(parse_session(&extra), Err(Error::Schema { .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dup = MINIMAL.replace(
            "\"features\": []",
            r#""features": [
              {"id": "a", "kind": "route", "name": "", "points": []},
              {"id": "a", "kind": "region", "name": "", "points": []}]"#,
        );
        match parse_session(&dup) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "features[1].id"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closing_vertex_is_stripped() {
        let ring = MINIMAL.replace(
            "\"features\": []",
            r#""features": [{"id": "g", "kind": "region", "name": "",
               "points": [[0,0],[5,0],[5,5],[0,0]]}]"#,
        );
        assert_eq!(parse_session(&ring).unwrap().features()[0].points.len(), 3);
    }

    #[test]
    fn control_point_needs_one_target() {
        let cal = MINIMAL.replace(
            "\"calibration\": null",
            r#""calibration": {"kind": "similarity", "coefficients": [1, 0, 0, 0], "rms_residual": 0,
               "control_points": [{"label": "x", "pixel": [0, 0]}]}"#,
        );
        assert!(matches!(parse_session(&cal), Err(Error::Schema { .. })));
    }
}
