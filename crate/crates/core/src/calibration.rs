//! Pixel → world calibration from control points.
//!
//! Image pixels have `v` pointing down while world `y` points north. Fitted
//! transforms bake that flip in as a fixed reflection of the `v` axis, so a
//! two-point similarity fit can never pick the mirrored solution.

use nalgebra::{DMatrix, Matrix3x2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{mercator_forward, GeoPoint};
use crate::geom::WorldPoint;

/// Pixel spreads below this (RMS distance from the centroid, px) count as
/// coincident control points.
const COINCIDENT_TOLERANCE_PX: f64 = 1e-12;

/// Three pixel points whose triangle is smaller than this (px²) are collinear.
const COLLINEAR_AREA_PX2: f64 = 1e-9;

/// Image coordinate: `u` to the right, `v` down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
}

impl PixelPoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

impl From<[f64; 2]> for PixelPoint {
    fn from([u, v]: [f64; 2]) -> Self {
        Self { u, v }
    }
}

impl From<PixelPoint> for [f64; 2] {
    fn from(p: PixelPoint) -> Self {
        [p.u, p.v]
    }
}

/// Known location of a control point: planar kilometres, or a geographic
/// coordinate that is projected to Web Mercator kilometres before fitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlTarget {
    World(WorldPoint),
    Geo(GeoPoint),
}

impl ControlTarget {
    pub fn to_km(&self) -> Result<WorldPoint> {
        match self {
            ControlTarget::World(w) => Ok(*w),
            ControlTarget::Geo(g) => {
                let m = mercator_forward(*g)?;
                Ok(WorldPoint::new(m.mx, m.my))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPoint {
    pub pixel: PixelPoint,
    pub target: ControlTarget,
    pub label: String,
}

impl ControlPoint {
    pub fn world(label: impl Into<String>, pixel: PixelPoint, world: WorldPoint) -> Self {
        Self {
            pixel,
            target: ControlTarget::World(world),
            label: label.into(),
        }
    }

    pub fn geo(label: impl Into<String>, pixel: PixelPoint, geo: GeoPoint) -> Self {
        Self {
            pixel,
            target: ControlTarget::Geo(geo),
            label: label.into(),
        }
    }
}

/// True when every control point is geographic. Mixed sets are rejected by
/// the fitters.
pub fn is_georeferenced(pairs: &[ControlPoint]) -> bool {
    !pairs.is_empty() && pairs.iter().all(|p| matches!(p.target, ControlTarget::Geo(_)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Similarity,
    Affine,
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "similarity" => Ok(Self::Similarity),
            "affine" => Ok(Self::Affine),
            other => Err(Error::InvalidInput(format!(
                "unknown transform kind {other:?} (expected similarity or affine)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformModel {
    /// `world = scale · R(rotation) · (u, ±v) + (tx, ty)`, with `-v` when
    /// `flip_v` is set.
    Similarity {
        scale: f64,
        rotation: f64,
        tx: f64,
        ty: f64,
        flip_v: bool,
    },
    /// `x = a·u + b·v + e`, `y = c·u + d·v + f`.
    Affine {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        e: f64,
        f: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTransform {
    pub model: TransformModel,
    /// RMS distance (km) between mapped control pixels and their targets.
    pub rms_residual: f64,
}

impl CalibrationTransform {
    /// Similarity with the standard `v` flip and no residual recorded.
    pub fn similarity(scale: f64, rotation: f64, tx: f64, ty: f64) -> Result<Self> {
        Self::from_model(TransformModel::Similarity {
            scale,
            rotation,
            tx,
            ty,
            flip_v: true,
        })
    }

    pub fn affine(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        Self::from_model(TransformModel::Affine { a, b, c, d, e, f })
    }

    /// Validates the model invariants: finite coefficients, positive scale,
    /// non-zero determinant.
    pub fn from_model(model: TransformModel) -> Result<Self> {
        let t = Self {
            model,
            rms_residual: 0.0,
        };
        if !t.coefficients().iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("transform coefficients must be finite".into()));
        }
        match model {
            TransformModel::Similarity { scale, .. } if scale <= 0.0 => Err(
                Error::DegenerateConfiguration(format!("similarity scale must be positive, got {scale}")),
            ),
            TransformModel::Affine { .. } if t.determinant() == 0.0 => Err(
                Error::DegenerateConfiguration("affine transform has zero determinant".into()),
            ),
            _ => Ok(t),
        }
    }

    /// Rebuilds a transform from its serialized coefficient list.
    pub fn from_coefficients(kind: TransformKind, coefficients: &[f64], flip_v: bool) -> Result<Self> {
        let model = match (kind, coefficients) {
            (TransformKind::Similarity, &[scale, rotation, tx, ty]) => TransformModel::Similarity {
                scale,
                rotation,
                tx,
                ty,
                flip_v,
            },
            (TransformKind::Affine, &[a, b, c, d, e, f]) => TransformModel::Affine { a, b, c, d, e, f },
            (kind, c) => {
                return Err(Error::InvalidInput(format!(
                    "{kind:?} transform takes {} coefficients, got {}",
                    if kind == TransformKind::Similarity { 4 } else { 6 },
                    c.len()
                )))
            }
        };
        Self::from_model(model)
    }

    pub fn kind(&self) -> TransformKind {
        match self.model {
            TransformModel::Similarity { .. } => TransformKind::Similarity,
            TransformModel::Affine { .. } => TransformKind::Affine,
        }
    }

    /// `[s, θ, tx, ty]` for similarities, `[a, b, c, d, e, f]` for affines.
    pub fn coefficients(&self) -> Vec<f64> {
        match self.model {
            TransformModel::Similarity {
                scale,
                rotation,
                tx,
                ty,
                ..
            } => vec![scale, rotation, tx, ty],
            TransformModel::Affine { a, b, c, d, e, f } => vec![a, b, c, d, e, f],
        }
    }

    pub fn flip_v(&self) -> bool {
        matches!(self.model, TransformModel::Similarity { flip_v: true, .. })
    }

    /// Linear part as a row-major 2×2 matrix plus translation.
    fn linear(&self) -> ([f64; 4], [f64; 2]) {
        match self.model {
            TransformModel::Similarity {
                scale,
                rotation,
                tx,
                ty,
                flip_v,
            } => {
                let (s, c) = rotation.sin_cos();
                let f = if flip_v { -1.0 } else { 1.0 };
                ([scale * c, -scale * s * f, scale * s, scale * c * f], [tx, ty])
            }
            TransformModel::Affine { a, b, c, d, e, f } => ([a, b, c, d], [e, f]),
        }
    }

    pub fn determinant(&self) -> f64 {
        let ([a, b, c, d], _) = self.linear();
        a * d - b * c
    }

    pub fn apply(&self, p: PixelPoint) -> WorldPoint {
        let ([a, b, c, d], [e, f]) = self.linear();
        WorldPoint::new(a * p.u + b * p.v + e, c * p.u + d * p.v + f)
    }

    /// Maps a world point back to pixels. Same as `self.invert()?.apply(..)`.
    pub fn unapply(&self, w: WorldPoint) -> Result<PixelPoint> {
        let inv = self.invert()?;
        let p = inv.apply(PixelPoint::new(w.x, w.y));
        Ok(PixelPoint::new(p.x, p.y))
    }

    /// Exact analytic inverse, treating world points as inputs and pixels as
    /// outputs. The residual is carried over unchanged.
    pub fn invert(&self) -> Result<Self> {
        let model = match self.model {
            TransformModel::Similarity {
                scale,
                rotation,
                tx,
                ty,
                flip_v,
            } => {
                if scale.is_nan() || scale <= 0.0 {
                    return Err(Error::NonInvertible(format!("similarity scale {scale}")));
                }
                // (sRF)⁻¹ = s⁻¹ F R(-θ) = s⁻¹ R(θ) F for the reflection F.
                let inv_scale = 1.0 / scale;
                let inv_rot = if flip_v { rotation } else { -rotation };
                let probe = CalibrationTransform {
                    model: TransformModel::Similarity {
                        scale: inv_scale,
                        rotation: inv_rot,
                        tx: 0.0,
                        ty: 0.0,
                        flip_v,
                    },
                    rms_residual: 0.0,
                };
                let t = probe.apply(PixelPoint::new(tx, ty));
                TransformModel::Similarity {
                    scale: inv_scale,
                    rotation: inv_rot,
                    tx: -t.x,
                    ty: -t.y,
                    flip_v,
                }
            }
            TransformModel::Affine { a, b, c, d, e, f } => {
                let det = a * d - b * c;
                if det == 0.0 || !det.is_finite() {
                    return Err(Error::NonInvertible("affine determinant is zero".into()));
                }
                let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
                TransformModel::Affine {
                    a: ia,
                    b: ib,
                    c: ic,
                    d: id,
                    e: -(ia * e + ib * f),
                    f: -(ic * e + id * f),
                }
            }
        };
        Ok(Self {
            model,
            rms_residual: self.rms_residual,
        })
    }

    fn with_residual(mut self, pairs: &[(PixelPoint, WorldPoint)]) -> Self {
        self.rms_residual = residual_of(&self, pairs);
        self
    }
}

fn residual_of(t: &CalibrationTransform, pairs: &[(PixelPoint, WorldPoint)]) -> f64 {
    let sum: f64 = pairs
        .iter()
        .map(|(p, w)| {
            let m = t.apply(*p);
            (m.x - w.x).powi(2) + (m.y - w.y).powi(2)
        })
        .sum();
    (sum / pairs.len() as f64).sqrt()
}

/// RMS distance (km) between `t`-mapped control pixels and their targets.
pub fn rms_residual(t: &CalibrationTransform, pairs: &[ControlPoint]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no control points".into()));
    }
    Ok(residual_of(t, &resolve(pairs)?))
}

fn resolve(pairs: &[ControlPoint]) -> Result<Vec<(PixelPoint, WorldPoint)>> {
    let geo = pairs.iter().filter(|p| matches!(p.target, ControlTarget::Geo(_))).count();
    if geo != 0 && geo != pairs.len() {
        return Err(Error::InvalidInput(
            "control points mix planar and geographic targets".into(),
        ));
    }
    pairs
        .iter()
        .map(|cp| {
            if !cp.pixel.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "control point {:?} has a non-finite pixel",
                    cp.label
                )));
            }
            let w = cp.target.to_km()?;
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "control point {:?} has a non-finite target",
                    cp.label
                )));
            }
            Ok((cp.pixel, w))
        })
        .collect()
}

/// Centroid and RMS radius of the pixel coordinates.
fn pixel_frame(pairs: &[(PixelPoint, WorldPoint)]) -> (f64, f64, f64) {
    let n = pairs.len() as f64;
    let cu = pairs.iter().map(|(p, _)| p.u).sum::<f64>() / n;
    let cv = pairs.iter().map(|(p, _)| p.v).sum::<f64>() / n;
    let spread = (pairs
        .iter()
        .map(|(p, _)| (p.u - cu).powi(2) + (p.v - cv).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (cu, cv, spread)
}

/// Least-squares similarity (uniform scale, rotation, translation) with the
/// `v` axis pre-flipped. Two pairs are interpolated exactly.
pub fn fit_similarity(pairs: &[ControlPoint]) -> Result<CalibrationTransform> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "insufficient control points: similarity needs at least 2, got {}",
            pairs.len()
        )));
    }
    let data = resolve(pairs)?;
    let (cu, cv, spread) = pixel_frame(&data);
    if spread.is_nan() || spread <= COINCIDENT_TOLERANCE_PX {
        return Err(Error::DegenerateConfiguration(
            "control points share the same pixel position".into(),
        ));
    }
    let n = data.len() as f64;
    let wx = data.iter().map(|(_, w)| w.x).sum::<f64>() / n;
    let wy = data.iter().map(|(_, w)| w.y).sum::<f64>() / n;

    // In complex form: world' = z · q', with q' the centred, flipped,
    // unit-RMS pixel offsets. Least squares gives z = Σ conj(q')·w' / Σ|q'|².
    let (mut re, mut im, mut norm) = (0.0, 0.0, 0.0);
    for (p, w) in &data {
        let (qx, qy) = ((p.u - cu) / spread, -(p.v - cv) / spread);
        let (dx, dy) = (w.x - wx, w.y - wy);
        re += qx * dx + qy * dy;
        im += qx * dy - qy * dx;
        norm += qx * qx + qy * qy;
    }
    let (re, im) = (re / norm / spread, im / norm / spread);
    let scale = re.hypot(im);
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "control point targets all coincide".into(),
        ));
    }
    let rotation = im.atan2(re);
    // Translation maps the pixel centroid onto the world centroid.
    let tx = wx - (re * cu + im * cv);
    let ty = wy - (im * cu - re * cv);
    let t = CalibrationTransform::from_model(TransformModel::Similarity {
        scale,
        rotation,
        tx,
        ty,
        flip_v: true,
    })?;
    Ok(t.with_residual(&data))
}

/// Largest triangle spanned by the pixel points, found from the first point,
/// the point farthest from it and the point farthest from that line.
fn spanned_triangle_area(data: &[(PixelPoint, WorldPoint)]) -> f64 {
    let a = data[0].0;
    let b = data
        .iter()
        .map(|(p, _)| *p)
        .max_by(|p, q| {
            let dp = (p.u - a.u).hypot(p.v - a.v);
            let dq = (q.u - a.u).hypot(q.v - a.v);
            dp.total_cmp(&dq)
        })
        .unwrap();
    data.iter()
        .map(|(c, _)| 0.5 * ((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u)).abs())
        .fold(0.0, f64::max)
}

/// Least-squares six-parameter affine fit, solved by QR on normalised pixel
/// coordinates.
pub fn fit_affine(pairs: &[ControlPoint]) -> Result<CalibrationTransform> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "insufficient control points: affine needs at least 3, got {}",
            pairs.len()
        )));
    }
    let data = resolve(pairs)?;
    let spanned = spanned_triangle_area(&data);
    if spanned.is_nan() || spanned <= COLLINEAR_AREA_PX2 {
        return Err(Error::DegenerateConfiguration(
            "control point pixels are collinear".into(),
        ));
    }
    let (cu, cv, spread) = pixel_frame(&data);
    let rows = data.len();
    let design = DMatrix::from_fn(rows, 3, |i, j| match j {
        0 => (data[i].0.u - cu) / spread,
        1 => (data[i].0.v - cv) / spread,
        _ => 1.0,
    });
    let rhs = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { data[i].1.x } else { data[i].1.y });
    let sol: Matrix3x2<f64> = solve_least_squares(design, rhs)?.fixed_view::<3, 2>(0, 0).into();

    let (a, b) = (sol[(0, 0)] / spread, sol[(1, 0)] / spread);
    let (c, d) = (sol[(0, 1)] / spread, sol[(1, 1)] / spread);
    let e = sol[(2, 0)] - a * cu - b * cv;
    let f = sol[(2, 1)] - c * cu - d * cv;
    let t = CalibrationTransform::from_model(TransformModel::Affine { a, b, c, d, e, f })
        .map_err(|_| Error::DegenerateConfiguration("control point targets are collinear".into()))?;
    Ok(t.with_residual(&data))
}

/// Fits the requested transform kind.
pub fn fit(kind: TransformKind, pairs: &[ControlPoint]) -> Result<CalibrationTransform> {
    match kind {
        TransformKind::Similarity => fit_similarity(pairs),
        TransformKind::Affine => fit_affine(pairs),
    }
}

/// Solves `min ‖A·X − B‖` column-wise through a Householder QR of `A`.
/// `A` must have at least as many rows as columns.
pub(crate) fn solve_least_squares(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cols = a.ncols();
    let qr = a.qr();
    let r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rank_tol = max_diag * 1e-12 * cols as f64;
    if r.diagonal().iter().any(|x| x.is_nan() || x.abs() <= rank_tol) {
        return Err(Error::DegenerateConfiguration(
            "least-squares system is rank deficient".into(),
        ));
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::DegenerateConfiguration("singular triangular factor".into()))
}
