//! Tracing sessions: one map image, its calibration and the traced features.
//!
//! Features keep the clicked *pixel* positions. World coordinates are always
//! derived through the current calibration, so recalibrating corrects every
//! measurement after the fact. Session values are immutable; each edit
//! returns a new session.

mod format;
mod units;

pub use format::{load_session, parse_session, save_session, to_json, SCHEMA_VERSION};
pub use units::{convert_display, convert_from_display, DisplayUnit, Quantity, MILES_PER_KM};

use serde::{Deserialize, Serialize};

use crate::boundary::{self, ErrorCurvePoint, FitReport, FourierBoundary};
use crate::calibration::{self, CalibrationTransform, ControlPoint, PixelPoint, TransformKind};
use crate::error::{Error, Result};
use crate::geodesy::{self, mercator_inverse, GeoPoint, MercatorPoint};
use crate::geom::{BoundingBox, Polygon, Polyline, WorldPoint};

/// Calibration residuals above this fraction of the mapped image diagonal
/// produce a warning.
pub const RESIDUAL_WARNING_FRACTION: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub path: String,
    pub width_px: u32,
    pub height_px: u32,
}

impl ImageRef {
    pub fn new(path: impl Into<String>, width_px: u32, height_px: u32) -> Self {
        Self {
            path: path.into(),
            width_px,
            height_px,
        }
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        (0.0..=self.width_px as f64).contains(&p.u) && (0.0..=self.height_px as f64).contains(&p.v)
    }
}

/// Projection assumed for the map image. Geodesic comparisons need
/// `WebMercator` and geographic control points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    #[default]
    WebMercator,
    PlanarUnknown,
}

impl std::str::FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "web_mercator" => Ok(Self::WebMercator),
            "planar_unknown" => Ok(Self::PlanarUnknown),
            other => Err(Error::InvalidInput(format!(
                "unknown projection {other:?} (expected web_mercator or planar_unknown)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Route,
    Region,
}

impl FeatureKind {
    /// Points needed before the feature can be measured.
    pub fn min_points(self) -> usize {
        match self {
            FeatureKind::Route => 2,
            FeatureKind::Region => 3,
        }
    }

    pub fn quantity(self) -> Quantity {
        match self {
            FeatureKind::Route => Quantity::Length,
            FeatureKind::Region => Quantity::Area,
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "route" => Ok(Self::Route),
            "region" => Ok(Self::Region),
            other => Err(Error::InvalidInput(format!(
                "unknown feature kind {other:?} (expected route or region)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub id: String,
    pub kind: FeatureKind,
    pub name: String,
    pub points: Vec<PixelPoint>,
}

impl Feature {
    pub fn is_complete(&self) -> bool {
        self.points.len() >= self.kind.min_points()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub transform: CalibrationTransform,
    pub control_points: Vec<ControlPoint>,
}

impl Calibration {
    /// Fits a transform of the given kind to the control points.
    pub fn fit(kind: TransformKind, control_points: Vec<ControlPoint>) -> Result<Self> {
        let transform = calibration::fit(kind, &control_points)?;
        Ok(Self {
            transform,
            control_points,
        })
    }

    /// World coordinates are Web Mercator kilometres.
    pub fn is_georeferenced(&self) -> bool {
        calibration::is_georeferenced(&self.control_points)
    }
}

/// Non-fatal conditions reported alongside a successful edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    PointOutsideImage { u: f64, v: f64 },
    HighResidual { rms_residual: f64, threshold: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::PointOutsideImage { u, v } => {
                write!(f, "point ({u}, {v}) lies outside the image")
            }
            Warning::HighResidual {
                rms_residual,
                threshold,
            } => write!(
                f,
                "calibration residual {rms_residual} km exceeds {threshold} km (0.5% of the map diagonal)"
            ),
        }
    }
}

/// Measurement of one feature. Serialized field names are part of the public
/// JSON interface shared by the CLI and the REST service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub feature_id: String,
    pub kind: FeatureKind,
    /// Route length (km) or region area (km²) on the calibrated plane.
    #[serde(rename = "planar")]
    pub planar_value: f64,
    /// Great-circle length or spherical area; georeferenced Web Mercator only.
    #[serde(rename = "geodesic")]
    pub geodesic_value: Option<f64>,
    pub anomaly_ratio: Option<f64>,
    pub bbox_w: f64,
    pub bbox_h: f64,
    pub bbox_area: f64,
    pub simple: bool,
    pub display_value: f64,
    pub display_unit: DisplayUnit,
}

impl MeasurementReport {
    pub fn bounding_box(&self) -> (f64, f64, f64) {
        (self.bbox_w, self.bbox_h, self.bbox_area)
    }
}

/// Result of a calibration request, shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub kind: TransformKind,
    pub coefficients: Vec<f64>,
    pub flip_v: bool,
    pub georeferenced: bool,
    pub rms_residual: f64,
    pub rms_residual_display: f64,
    pub display_unit: DisplayUnit,
    pub warnings: Vec<Warning>,
}

/// Result of a boundary fit, shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub feature_id: String,
    pub n: usize,
    pub rms_error: f64,
    pub area: f64,
    pub boundary: FourierBoundary,
    pub samples: Option<Vec<WorldPoint>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    image: ImageRef,
    projection: Projection,
    display_unit: DisplayUnit,
    calibration: Option<Calibration>,
    features: Vec<Feature>,
}

impl Session {
    pub fn new(image: ImageRef, projection: Projection) -> Self {
        Self {
            image,
            projection,
            display_unit: DisplayUnit::default(),
            calibration: None,
            features: Vec::new(),
        }
    }

    /// Assembles a session from parts, checking feature-id uniqueness.
    pub fn from_parts(
        image: ImageRef,
        projection: Projection,
        display_unit: DisplayUnit,
        calibration: Option<Calibration>,
        features: Vec<Feature>,
    ) -> Result<Self> {
        let mut session = Self {
            image,
            projection,
            display_unit,
            calibration,
            features: Vec::with_capacity(features.len()),
        };
        for f in features {
            if session.feature(&f.id).is_ok() {
                return Err(Error::DuplicateId(f.id));
            }
            session.features.push(f);
        }
        Ok(session)
    }

    pub fn image(&self) -> &ImageRef {
        &self.image
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn display_unit(&self) -> DisplayUnit {
        self.display_unit
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, id: &str) -> Result<&Feature> {
        self.features
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| Error::NotFound(format!("feature not found: {id:?}")))
    }

    pub fn with_display_unit(&self, unit: DisplayUnit) -> Self {
        Self {
            display_unit: unit,
            ..self.clone()
        }
    }

    pub fn with_projection(&self, projection: Projection) -> Self {
        Self {
            projection,
            ..self.clone()
        }
    }

    pub fn with_calibration(&self, calibration: Calibration) -> Self {
        Self {
            calibration: Some(calibration),
            ..self.clone()
        }
    }

    /// Fits and installs a calibration. Warns when the residual exceeds
    /// [`RESIDUAL_WARNING_FRACTION`] of the mapped image diagonal.
    pub fn calibrate(
        &self,
        kind: TransformKind,
        control_points: Vec<ControlPoint>,
    ) -> Result<(Session, CalibrationSummary)> {
        let cal = Calibration::fit(kind, control_points)?;
        let next = self.with_calibration(cal);
        let summary = next.calibration_summary()?;
        Ok((next, summary))
    }

    /// Summary of the installed calibration.
    pub fn calibration_summary(&self) -> Result<CalibrationSummary> {
        let cal = self.calibration.as_ref().ok_or(Error::Uncalibrated)?;
        let t = &cal.transform;
        let corner = t.apply(PixelPoint::new(self.image.width_px as f64, self.image.height_px as f64));
        let threshold = RESIDUAL_WARNING_FRACTION * t.apply(PixelPoint::new(0.0, 0.0)).distance(&corner);
        let mut warnings = Vec::new();
        if t.rms_residual > threshold {
            warnings.push(Warning::HighResidual {
                rms_residual: t.rms_residual,
                threshold,
            });
        }
        Ok(CalibrationSummary {
            kind: t.kind(),
            coefficients: t.coefficients(),
            flip_v: t.flip_v(),
            georeferenced: cal.is_georeferenced(),
            rms_residual: t.rms_residual,
            rms_residual_display: convert_display(t.rms_residual, Quantity::Length, self.display_unit),
            display_unit: self.display_unit,
            warnings,
        })
    }

    pub fn add_feature(&self, id: &str, kind: FeatureKind, name: &str) -> Result<Session> {
        if id.is_empty() {
            return Err(Error::InvalidInput("feature id must not be empty".into()));
        }
        if self.feature(id).is_ok() {
            return Err(Error::DuplicateId(id.to_string()));
        }
        let mut next = self.clone();
        next.features.push(Feature {
            id: id.to_string(),
            kind,
            name: name.to_string(),
            points: Vec::new(),
        });
        Ok(next)
    }

    /// Appends a traced point. Points outside the image are accepted with a
    /// warning; repeating the previous point (or, for regions, clicking the
    /// first vertex again) is rejected.
    pub fn add_point(&self, feature_id: &str, p: PixelPoint) -> Result<(Session, Vec<Warning>)> {
        if !p.is_finite() {
            return Err(Error::InvalidInput("pixel coordinates must be finite".into()));
        }
        let feature = self.feature(feature_id)?;
        if feature.points.last() == Some(&p) {
            return Err(Error::DuplicatePoint(format!(
                "({}, {}) repeats the previous point of {feature_id:?}",
                p.u, p.v
            )));
        }
        if feature.kind == FeatureKind::Region && feature.points.len() >= 2 && feature.points[0] == p {
            return Err(Error::DuplicatePoint(format!(
                "({}, {}) repeats the first vertex; regions close implicitly",
                p.u, p.v
            )));
        }
        let mut warnings = Vec::new();
        if !self.image.contains(p) {
            warnings.push(Warning::PointOutsideImage { u: p.u, v: p.v });
        }
        let mut next = self.clone();
        next.features
            .iter_mut()
            .find(|f| f.id == feature_id)
            .expect("feature checked above")
            .points
            .push(p);
        Ok((next, warnings))
    }

    /// Feature vertices in calibrated world kilometres.
    pub fn world_points(&self, feature_id: &str) -> Result<Vec<WorldPoint>> {
        let feature = self.feature(feature_id)?;
        let cal = self.calibration.as_ref().ok_or(Error::Uncalibrated)?;
        Ok(feature.points.iter().map(|p| cal.transform.apply(*p)).collect())
    }

    fn geodesic_enabled(&self) -> bool {
        self.projection == Projection::WebMercator
            && self.calibration.as_ref().is_some_and(Calibration::is_georeferenced)
    }

    fn complete_feature(&self, feature_id: &str) -> Result<&Feature> {
        let feature = self.feature(feature_id)?;
        if self.calibration.is_none() {
            return Err(Error::Uncalibrated);
        }
        if !feature.is_complete() {
            return Err(Error::IncompleteFeature(format!(
                "{} {feature_id:?} has {} point(s), needs {}",
                match feature.kind {
                    FeatureKind::Route => "route",
                    FeatureKind::Region => "region",
                },
                feature.points.len(),
                feature.kind.min_points()
            )));
        }
        Ok(feature)
    }

    /// Measures a feature, presenting `display_value` in the session unit.
    pub fn measure_feature(&self, feature_id: &str) -> Result<MeasurementReport> {
        self.measure_feature_in(feature_id, self.display_unit)
    }

    /// Measures a feature with an explicit display unit. Raw values never
    /// depend on the unit.
    pub fn measure_feature_in(&self, feature_id: &str, unit: DisplayUnit) -> Result<MeasurementReport> {
        let feature = self.complete_feature(feature_id)?;
        let world = self.world_points(feature_id)?;
        let (planar, bbox, simple, geo_points) = match feature.kind {
            FeatureKind::Route => {
                let line = Polyline::new(world)?;
                let bbox = crate::geom::bounding_box(line.points())?;
                (line.length(), bbox, line.is_simple(), line.points().to_vec())
            }
            FeatureKind::Region => {
                let poly = Polygon::new(world)?;
                (poly.area(), poly.bounding_box(), poly.is_simple(), poly.vertices().to_vec())
            }
        };
        let (geodesic_value, anomaly_ratio) = if self.geodesic_enabled() {
            let geo = to_geo(&geo_points)?;
            let g = match feature.kind {
                FeatureKind::Route => geo
                    .windows(2)
                    .map(|w| geodesy::haversine_distance(w[0], w[1]))
                    .sum(),
                FeatureKind::Region => geodesy::geodesic_polygon_area(&geo)?,
            };
            (Some(g), Some(geodesy::anomaly_ratio(planar, g)?))
        } else {
            (None, None)
        };
        Ok(report(feature, planar, geodesic_value, anomaly_ratio, bbox, simple, unit))
    }

    /// Fits a Fourier boundary to a region, optionally sampling it at `samples`
    /// points. `n` defaults to [`boundary::default_harmonics`].
    pub fn fit_feature(&self, feature_id: &str, n: Option<usize>, samples: Option<usize>) -> Result<FitOutcome> {
        let world = self.region_world_points(feature_id)?;
        let n = n.unwrap_or_else(|| boundary::default_harmonics(world.len()));
        let FitReport {
            boundary,
            rms_error,
            area,
        } = boundary::fit_fourier_boundary(&world, n)?;
        let samples = samples.map(|m| boundary::sample_boundary(&boundary, m)).transpose()?;
        Ok(FitOutcome {
            feature_id: feature_id.to_string(),
            n,
            rms_error,
            area,
            boundary,
            samples,
        })
    }

    /// Residual and area of the fit for `n = 1..=n_max`, capped where the
    /// region has too few vertices.
    pub fn fit_error_curve(&self, feature_id: &str, n_max: usize) -> Result<Vec<ErrorCurvePoint>> {
        boundary::fit_error_curve(&self.region_world_points(feature_id)?, n_max)
    }

    fn region_world_points(&self, feature_id: &str) -> Result<Vec<WorldPoint>> {
        let feature = self.feature(feature_id)?;
        if feature.kind != FeatureKind::Region {
            return Err(Error::InvalidInput(format!(
                "fit requires a region; {feature_id:?} is a route"
            )));
        }
        self.complete_feature(feature_id)?;
        self.world_points(feature_id)
    }

    /// Adds a region whose vertices are world points mapped back to pixels,
    /// e.g. a sampled Fourier boundary.
    pub fn add_world_region(&self, id: &str, name: &str, points: &[WorldPoint]) -> Result<Session> {
        let cal = self.calibration.as_ref().ok_or(Error::Uncalibrated)?;
        let inverse = cal.transform.invert()?;
        let mut next = self.add_feature(id, FeatureKind::Region, name)?;
        let feature = next.features.last_mut().expect("just added");
        feature.points = points
            .iter()
            .map(|w| {
                let p = inverse.apply(PixelPoint::new(w.x, w.y));
                PixelPoint::new(p.x, p.y)
            })
            .collect();
        Ok(next)
    }
}

fn to_geo(points: &[WorldPoint]) -> Result<Vec<GeoPoint>> {
    points
        .iter()
        .map(|w| mercator_inverse(MercatorPoint { mx: w.x, my: w.y }))
        .collect()
}

fn report(
    feature: &Feature,
    planar: f64,
    geodesic_value: Option<f64>,
    anomaly_ratio: Option<f64>,
    bbox: BoundingBox,
    simple: bool,
    unit: DisplayUnit,
) -> MeasurementReport {
    MeasurementReport {
        feature_id: feature.id.clone(),
        kind: feature.kind,
        planar_value: planar,
        geodesic_value,
        anomaly_ratio,
        bbox_w: bbox.width,
        bbox_h: bbox.height,
        bbox_area: bbox.area,
        simple,
        display_value: convert_display(planar, feature.kind.quantity(), unit),
        display_unit: unit,
    }
}
