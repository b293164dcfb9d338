//! Measurement engine for raster maps.
//!
//! The pipeline follows a classroom map exercise:
//!
//! 1. **Calibrate** – fit a pixel → kilometre transform from control points
//!    ([`calibration`]).
//! 2. **Trace** – click successive points along a route or around a region
//!    ([`session`]).
//! 3. **Measure** – planar lengths and areas ([`geom`]), compared against
//!    great-circle and spherical values when the map is georeferenced Web
//!    Mercator imagery ([`geodesy`]).
//! 4. **Smooth** – replace a jagged traced frontier by a continuous Fourier
//!    boundary with exact area and arbitrary-resolution resampling
//!    ([`boundary`]).

pub mod boundary;
pub mod calibration;
mod error;
pub mod geodesy;
pub mod geom;
pub mod session;

pub use error::{Error, ErrorClass, Result};
