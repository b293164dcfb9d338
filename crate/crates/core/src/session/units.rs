use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Miles per kilometre.
pub const MILES_PER_KM: f64 = 0.621371;

/// Unit used only when presenting values; stored geometry is always km.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplayUnit {
    M,
    #[default]
    Km,
    Mi,
}

/// Whether a value is a length (km) or an area (km²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Length,
    Area,
}

impl DisplayUnit {
    fn per_km(self) -> f64 {
        match self {
            DisplayUnit::M => 1000.0,
            DisplayUnit::Km => 1.0,
            DisplayUnit::Mi => MILES_PER_KM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DisplayUnit::M => "m",
            DisplayUnit::Km => "km",
            DisplayUnit::Mi => "mi",
        }
    }

    /// Unit label for a quantity, e.g. `km` or `km²`.
    pub fn label(self, quantity: Quantity) -> String {
        match quantity {
            Quantity::Length => self.as_str().to_string(),
            Quantity::Area => format!("{}²", self.as_str()),
        }
    }
}

impl fmt::Display for DisplayUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisplayUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(DisplayUnit::M),
            "km" => Ok(DisplayUnit::Km),
            "mi" => Ok(DisplayUnit::Mi),
            other => Err(Error::InvalidInput(format!(
                "unsupported unit {other:?} (expected m, km or mi)"
            ))),
        }
    }
}

/// Converts a km or km² value into the display unit.
pub fn convert_display(value: f64, quantity: Quantity, unit: DisplayUnit) -> f64 {
    match quantity {
        Quantity::Length => value * unit.per_km(),
        Quantity::Area => value * unit.per_km() * unit.per_km(),
    }
}

/// Inverse of [`convert_display`].
pub fn convert_from_display(value: f64, quantity: Quantity, unit: DisplayUnit) -> f64 {
    match quantity {
        Quantity::Length => value / unit.per_km(),
        Quantity::Area => value / (unit.per_km() * unit.per_km()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        assert!((convert_display(13.02, Quantity::Area, DisplayUnit::M) - 13_020_000.0).abs() < 1e-6);
        assert!((convert_display(5.0, Quantity::Length, DisplayUnit::Mi) - 3.106855).abs() < 1e-12);
        assert_eq!(convert_display(5.0, Quantity::Length, DisplayUnit::M), 5000.0);
        assert_eq!(convert_display(2.5, Quantity::Area, DisplayUnit::Km), 2.5);
    }

    #[test]
    fn unit_parsing() {
        assert_eq!("mi".parse::<DisplayUnit>().unwrap(), DisplayUnit::Mi);
        assert!(matches!("ft".parse::<DisplayUnit>(), Err(Error::InvalidInput(_))));
        assert_eq!(DisplayUnit::M.label(Quantity::Area), "m²");
    }
}
