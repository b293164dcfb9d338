//! Human-readable output: six significant digits, aligned `key  value` rows.

use cartometry::session::{CalibrationSummary, DisplayUnit, FitOutcome, MeasurementReport, Quantity};

/// Formats `x` with six significant digits, switching to exponent form
/// outside `1e-4 ..= 1e15`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    // Rounding first settles the exponent (9.999996 becomes 1.00000e1).
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..=15).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, x)
    } else {
        sci
    }
}

fn rows(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn opt(v: Option<f64>, suffix: &str) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{}{suffix}", sig6(v)))
}

pub fn measurement(r: &MeasurementReport) -> String {
    let q = r.kind.quantity();
    let raw = format!(" {}", DisplayUnit::Km.label(q));
    let km = format!(" {}", DisplayUnit::Km.label(Quantity::Length));
    let km2 = format!(" {}", DisplayUnit::Km.label(Quantity::Area));
    rows(&[
        ("feature_id", r.feature_id.clone()),
        ("kind", format!("{:?}", r.kind).to_lowercase()),
        ("planar", format!("{}{raw}", sig6(r.planar_value))),
        ("geodesic", opt(r.geodesic_value, &raw)),
        ("anomaly_ratio", opt(r.anomaly_ratio, "")),
        ("bbox_w", format!("{}{km}", sig6(r.bbox_w))),
        ("bbox_h", format!("{}{km}", sig6(r.bbox_h))),
        ("bbox_area", format!("{}{km2}", sig6(r.bbox_area))),
        ("simple", r.simple.to_string()),
        ("display_value", format!("{} {}", sig6(r.display_value), r.display_unit.label(q))),
    ])
}

/// Residuals under a micrometre are rounding noise of an exact fit.
const RESIDUAL_FLOOR_KM: f64 = 1e-9;

pub fn calibration(s: &CalibrationSummary, pairs: usize) -> String {
    let residual = if s.rms_residual < RESIDUAL_FLOOR_KM { 0.0 } else { s.rms_residual_display };
    let coeffs: Vec<String> = s.coefficients.iter().map(|c| sig6(*c)).collect();
    rows(&[
        ("kind", format!("{:?}", s.kind).to_lowercase()),
        ("pairs", pairs.to_string()),
        ("coefficients", coeffs.join(" ")),
        ("georeferenced", s.georeferenced.to_string()),
        (
            "rms_residual",
            format!("{} {}", sig6(residual), s.display_unit.label(Quantity::Length)),
        ),
    ])
}

pub fn fit(f: &FitOutcome) -> String {
    rows(&[
        ("feature_id", f.feature_id.clone()),
        ("n", f.n.to_string()),
        ("rms_error", format!("{} km", sig6(f.rms_error))),
        ("area", format!("{} km²", sig6(f.area))),
    ])
}
