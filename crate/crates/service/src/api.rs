//! Request bodies and the operations behind each endpoint.
//!
//! The CLI calls the same functions, so a `--json` invocation and the matching
//! endpoint serialize identical values.

use cartometry::calibration::{ControlPoint, PixelPoint, TransformKind};
use cartometry::geodesy::GeoPoint;
use cartometry::geom::WorldPoint;
use cartometry::session::{
    CalibrationSummary, DisplayUnit, Feature, FeatureKind, FitOutcome, MeasurementReport, Session, Warning,
};
use cartometry::{Error, Result};
use serde::{Deserialize, Serialize};

/// One control point: `pixel` plus exactly one of `world` (km) or `geo`
/// (`[lat, lon]` degrees).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(default)]
    pub label: String,
    pub pixel: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<[f64; 2]>,
}

impl PairSpec {
    pub fn to_control_point(&self) -> Result<ControlPoint> {
        let pixel = PixelPoint::new(self.pixel[0], self.pixel[1]);
        match (self.world, self.geo) {
            (Some([x, y]), None) => Ok(ControlPoint::world(&self.label, pixel, WorldPoint::new(x, y))),
            (None, Some([lat, lon])) => Ok(ControlPoint::geo(&self.label, pixel, GeoPoint::new(lat, lon)?)),
            _ => Err(Error::InvalidInput(
                "each pair needs exactly one of \"world\" or \"geo\"".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateRequest {
    pub pairs: Vec<PairSpec>,
    #[serde(default = "default_kind")]
    pub kind: TransformKind,
}

fn default_kind() -> TransformKind {
    TransformKind::Similarity
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewFeatureRequest {
    pub id: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub name: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointRequest {
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRequest {
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
}

/// A feature after a point append, with any warnings raised by the append.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureUpdate {
    pub id: String,
    pub kind: FeatureKind,
    pub name: String,
    pub points: Vec<PixelPoint>,
    pub warnings: Vec<Warning>,
}

impl FeatureUpdate {
    fn new(feature: &Feature, warnings: Vec<Warning>) -> Self {
        Self {
            id: feature.id.clone(),
            kind: feature.kind,
            name: feature.name.clone(),
            points: feature.points.clone(),
            warnings,
        }
    }
}

/// Error payload: `{"error": <machine code>, "message": <text>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        Self {
            error: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// Parses a JSON request body, reporting the offending field path.
pub fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Schema {
            path: if path == "." { "(root)".into() } else { path },
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }
    })
}

/// Compact single-line JSON, the wire format of every response and of
/// `--json` output.
pub fn to_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("response types always serialize")
}

pub fn calibrate(session: &Session, req: &CalibrateRequest) -> Result<(Session, CalibrationSummary)> {
    let pairs = req.pairs.iter().map(PairSpec::to_control_point).collect::<Result<Vec<_>>>()?;
    session.calibrate(req.kind, pairs)
}

pub fn add_feature(session: &Session, req: &NewFeatureRequest) -> Result<(Session, Feature)> {
    let next = session.add_feature(&req.id, req.kind, &req.name)?;
    let feature = next.feature(&req.id)?.clone();
    Ok((next, feature))
}

pub fn append_point(session: &Session, feature_id: &str, p: PointRequest) -> Result<(Session, FeatureUpdate)> {
    let (next, warnings) = session.add_point(feature_id, PixelPoint::new(p.u, p.v))?;
    let update = FeatureUpdate::new(next.feature(feature_id)?, warnings);
    Ok((next, update))
}

pub fn measure(session: &Session, feature_id: &str, unit: Option<DisplayUnit>) -> Result<MeasurementReport> {
    session.measure_feature_in(feature_id, unit.unwrap_or(session.display_unit()))
}

pub fn fit(session: &Session, feature_id: &str, req: FitRequest) -> Result<FitOutcome> {
    session.fit_feature(feature_id, req.n, req.samples)
}
