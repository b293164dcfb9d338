//! Continuous closed boundaries as truncated trigonometric series.
//!
//! A traced frontier is a handful of clicked vertices. Fitting
//!
//! ```text
//! x(t) = a0 + Σ aₖ cos kt + bₖ sin kt
//! y(t) = c0 + Σ cₖ cos kt + dₖ sin kt,   t ∈ [0, 2π)
//! ```
//!
//! by linear least squares turns it into a smooth periodic curve with an
//! exact area and no fixed resolution. Vertices are placed on `t` by
//! cumulative chord length, so the fit does not depend on how evenly the
//! points were clicked.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calibration::solve_least_squares;
use crate::error::{Error, Result};
use crate::geom::WorldPoint;

/// Closed curve with `n` harmonics per coordinate. All lengths in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBoundary {
    pub a0: f64,
    pub c0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl FourierBoundary {
    pub fn new(a0: f64, c0: f64, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let n = a.len();
        if n == 0 || b.len() != n || c.len() != n || d.len() != n {
            return Err(Error::InvalidInput(
                "harmonic coefficient arrays must share a non-zero length".into(),
            ));
        }
        let boundary = Self { a0, c0, a, b, c, d };
        if !boundary.coefficients().all(f64::is_finite) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(boundary)
    }

    /// Circle of radius `r` around `(cx, cy)`, traversed counter-clockwise.
    pub fn circle(cx: f64, cy: f64, r: f64) -> Self {
        Self {
            a0: cx,
            c0: cy,
            a: vec![r],
            b: vec![0.0],
            c: vec![0.0],
            d: vec![r],
        }
    }

    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        [self.a0, self.c0]
            .into_iter()
            .chain(self.a.iter().chain(&self.b).chain(&self.c).chain(&self.d).copied())
    }

    pub fn eval(&self, t: f64) -> WorldPoint {
        let (mut x, mut y) = (self.a0, self.c0);
        for k in 0..self.harmonics() {
            let (s, c) = ((k + 1) as f64 * t).sin_cos();
            x += self.a[k] * c + self.b[k] * s;
            y += self.c[k] * c + self.d[k] * s;
        }
        WorldPoint::new(x, y)
    }

    /// Derivative `(x'(t), y'(t))`.
    pub fn tangent(&self, t: f64) -> (f64, f64) {
        let (mut dx, mut dy) = (0.0, 0.0);
        for k in 0..self.harmonics() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * t).sin_cos();
            dx += kf * (self.b[k] * c - self.a[k] * s);
            dy += kf * (self.d[k] * c - self.c[k] * s);
        }
        (dx, dy)
    }

    /// Same curve with the parameter shifted, `t → t + phase`.
    pub fn shifted(&self, phase: f64) -> Self {
        let mut out = self.clone();
        for k in 0..self.harmonics() {
            let (s, c) = ((k + 1) as f64 * phase).sin_cos();
            out.a[k] = self.a[k] * c + self.b[k] * s;
            out.b[k] = self.b[k] * c - self.a[k] * s;
            out.c[k] = self.c[k] * c + self.d[k] * s;
            out.d[k] = self.d[k] * c - self.c[k] * s;
        }
        out
    }
}

/// Enclosed area from Green's theorem, `|π Σ k (aₖdₖ − bₖcₖ)|`.
/// Unsigned, so traversal direction does not matter.
pub fn fourier_area(b: &FourierBoundary) -> f64 {
    let sum: f64 = (0..b.harmonics())
        .map(|k| (k + 1) as f64 * (b.a[k] * b.d[k] - b.b[k] * b.c[k]))
        .sum();
    (PI * sum).abs()
}

/// `m` points at uniform parameter steps `t = 2πj/m`.
pub fn sample_boundary(b: &FourierBoundary, m: usize) -> Result<Vec<WorldPoint>> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {m}")));
    }
    Ok((0..m).map(|j| b.eval(TAU * j as f64 / m as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub boundary: FourierBoundary,
    /// RMS distance (km) between each vertex and the curve at its parameter.
    pub rms_error: f64,
    pub area: f64,
}

/// Smallest vertex count that determines `n` harmonics.
pub fn min_vertices(n: usize) -> usize {
    (2 * n + 1).max(3)
}

/// Harmonic count used when the caller does not choose one.
pub fn default_harmonics(vertex_count: usize) -> usize {
    (vertex_count / 4).clamp(1, 8)
}

/// Chord-length parameters of a closed vertex ring, in [0, 2π).
pub fn chord_parameters(vertices: &[WorldPoint]) -> Result<Vec<f64>> {
    let n = vertices.len();
    let mut cumulative = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        cumulative.push(total);
        total += vertices[i].distance(&vertices[(i + 1) % n]);
    }
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::DegenerateConfiguration(
            "boundary has zero perimeter".into(),
        ));
    }
    Ok(cumulative.into_iter().map(|l| TAU * l / total).collect())
}

/// Least-squares trigonometric fit of a closed vertex ring with `n`
/// harmonics per coordinate.
pub fn fit_fourier_boundary(vertices: &[WorldPoint], n: usize) -> Result<FitReport> {
    if n == 0 {
        return Err(Error::InvalidInput("harmonic count must be at least 1".into()));
    }
    if vertices.len() < min_vertices(n) {
        return Err(Error::InsufficientData(format!(
            "{n} harmonics need at least {} vertices, got {}",
            min_vertices(n),
            vertices.len()
        )));
    }
    if vertices.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("vertices must be finite".into()));
    }
    let ts = chord_parameters(vertices)?;
    fit_at(vertices, &ts, n)
}

fn fit_at(vertices: &[WorldPoint], ts: &[f64], n: usize) -> Result<FitReport> {
    let rows = vertices.len();
    let design = DMatrix::from_fn(rows, 2 * n + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            let k = j.div_ceil(2) as f64;
            if j % 2 == 1 {
                (k * ts[i]).cos()
            } else {
                (k * ts[i]).sin()
            }
        }
    });
    let rhs = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { vertices[i].x } else { vertices[i].y });
    let sol = solve_least_squares(design, rhs)?;

    let column = |col: usize, offset: usize| (0..n).map(|k| sol[(2 * k + 1 + offset, col)]).collect();
    let boundary = FourierBoundary::new(
        sol[(0, 0)],
        sol[(0, 1)],
        column(0, 0),
        column(0, 1),
        column(1, 0),
        column(1, 1),
    )?;
    let sq: f64 = vertices
        .iter()
        .zip(ts)
        .map(|(p, &t)| {
            let q = boundary.eval(t);
            (p.x - q.x).powi(2) + (p.y - q.y).powi(2)
        })
        .sum();
    Ok(FitReport {
        rms_error: (sq / rows as f64).sqrt(),
        area: fourier_area(&boundary),
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurvePoint {
    pub n: usize,
    pub rms_error: f64,
    pub area: f64,
}

/// Fits `n = 1..=n_max`, stopping early once the vertex count no longer
/// supports another harmonic.
pub fn fit_error_curve(vertices: &[WorldPoint], n_max: usize) -> Result<Vec<ErrorCurvePoint>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 && vertices.len() < min_vertices(n) {
            break;
        }
        let fit = fit_fourier_boundary(vertices, n)?;
        out.push(ErrorCurvePoint {
            n,
            rms_error: fit.rms_error,
            area: fit.area,
        });
    }
    Ok(out)
}
