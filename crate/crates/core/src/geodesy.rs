//! Spherical-Earth geodesy and the spherical Web Mercator projection.
//!
//! Angles are degrees at the API boundary and radians internally. Distances
//! are kilometres on a sphere of mean radius [`EARTH_RADIUS_KM`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// IUGG mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Latitude limit of the square Web Mercator world.
pub const MERCATOR_MAX_LAT: f64 = 85.05113;

/// Half the circumference, the Mercator easting of the antimeridian.
pub const MERCATOR_HALF_WIDTH_KM: f64 = PI * EARTH_RADIUS_KM;

/// Geographic coordinate on the sphere. Latitude in [-90, 90], longitude in
/// (-180, 180].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidInput("coordinates must be finite".into()));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidInput(format!("latitude {lat} outside [-90, 90]")));
        }
        if lon <= -180.0 || lon > 180.0 {
            return Err(Error::InvalidInput(format!("longitude {lon} outside (-180, 180]")));
        }
        Ok(Self { lat, lon })
    }

    /// Builds a point, wrapping any finite longitude into (-180, 180].
    pub fn wrapped(lat: f64, lon: f64) -> Result<Self> {
        Self::new(lat, wrap_lon(lon))
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl TryFrom<[f64; 2]> for GeoPoint {
    type Error = Error;

    fn try_from([lat, lon]: [f64; 2]) -> Result<Self> {
        Self::new(lat, lon)
    }
}

impl From<GeoPoint> for [f64; 2] {
    fn from(p: GeoPoint) -> Self {
        [p.lat, p.lon]
    }
}

/// Position on the spherical Web Mercator plane, in kilometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MercatorPoint {
    pub mx: f64,
    pub my: f64,
}

fn wrap_lon(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l <= -180.0 {
        l += 360.0;
    } else if l > 180.0 {
        l -= 360.0;
    }
    l
}

/// Sine and cosine of an angle in degrees, exact at multiples of 30° and 45°.
///
/// Reduces to [-45°, 45°] before converting to radians, so e.g. `cos(60°)` is
/// exactly 0.5 instead of `0.5000000000000001`.
pub fn sincos_deg(deg: f64) -> (f64, f64) {
    let q = (deg / 90.0).round();
    let r = deg - 90.0 * q;
    let (s, c) = if r.abs() == 45.0 {
        let c = 0.5f64.sqrt();
        (c.copysign(r), c)
    } else if r.abs() == 30.0 {
        (0.5f64.copysign(r), 0.75f64.sqrt())
    } else {
        r.to_radians().sin_cos()
    };
    match (q as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// Great-circle distance by the haversine formula.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

fn check_mercator_lat(lat: f64) -> Result<()> {
    if lat.abs() < MERCATOR_MAX_LAT {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "latitude {lat} outside the Web Mercator range ±{MERCATOR_MAX_LAT}"
        )))
    }
}

pub fn mercator_forward(p: GeoPoint) -> Result<MercatorPoint> {
    check_mercator_lat(p.lat)?;
    // asinh(tan φ) is ln tan(π/4 + φ/2) without the cancellation near the
    // equator.
    let phi = p.lat.to_radians();
    Ok(MercatorPoint {
        mx: EARTH_RADIUS_KM * p.lon.to_radians(),
        my: EARTH_RADIUS_KM * phi.tan().asinh(),
    })
}

/// Analytic inverse of [`mercator_forward`]. Eastings beyond ±πR wrap around.
pub fn mercator_inverse(m: MercatorPoint) -> Result<GeoPoint> {
    if !m.mx.is_finite() || !m.my.is_finite() {
        return Err(Error::InvalidInput("mercator coordinates must be finite".into()));
    }
    let lat = (m.my / EARTH_RADIUS_KM).sinh().atan().to_degrees();
    let lon = (m.mx / EARTH_RADIUS_KM).to_degrees();
    GeoPoint::wrapped(lat, lon)
}

/// Local length stretch `1/cos(lat)` of the Mercator projection.
pub fn mercator_scale_factor(lat: f64) -> Result<f64> {
    check_mercator_lat(lat)?;
    Ok(1.0 / sincos_deg(lat).1)
}

/// Spherical polygon area from the latitude-weighted longitude sum.
///
/// Longitude steps are wrapped into (-180°, 180°], so rings crossing the
/// antimeridian are handled. Valid for polygons well inside one hemisphere.
pub fn geodesic_polygon_area(vertices: &[GeoPoint]) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon needs at least 3 vertices, got {n}"
        )));
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let (p, q) = (vertices[i], vertices[(i + 1) % n]);
            let dlambda = wrap_lon(q.lon - p.lon).to_radians();
            dlambda * (2.0 + p.lat.to_radians().sin() + q.lat.to_radians().sin())
        })
        .sum();
    Ok(EARTH_RADIUS_KM * EARTH_RADIUS_KM / 2.0 * sum.abs())
}

/// Ratio of an on-map measurement to its real-Earth counterpart. 1.0 means
/// the map is faithful.
pub fn anomaly_ratio(planar_value: f64, geodesic_value: f64) -> Result<f64> {
    if !geodesic_value.is_finite() || geodesic_value <= 0.0 {
        return Err(Error::Domain(format!(
            "anomaly ratio needs a positive geodesic value, got {geodesic_value}"
        )));
    }
    Ok(planar_value / geodesic_value)
}
