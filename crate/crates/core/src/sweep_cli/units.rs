//! Quantities written as `"<number> <unit>"` strings, converted to SI.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Speed,
    Time,
    Density,
    Viscosity,
    Acceleration,
}

impl Dimension {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6)],
            Dimension::Speed => &[("m/s", 1.0), ("cm/s", 1e-2), ("mm/s", 1e-3), ("um/s", 1e-6)],
            Dimension::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6)],
            Dimension::Density => &[("kg/m3", 1.0), ("kg/m^3", 1.0), ("g/cm3", 1e3), ("g/cm^3", 1e3)],
            Dimension::Viscosity => &[
                ("Pa s", 1.0),
                ("Pa*s", 1.0),
                ("Pa.s", 1.0),
                ("Pa·s", 1.0),
                ("mPa s", 1e-3),
                ("mPa*s", 1e-3),
                ("mPa·s", 1e-3),
            ],
            Dimension::Acceleration => &[("m/s2", 1.0), ("m/s^2", 1.0), ("mm/s2", 1e-3), ("mm/s^2", 1e-3)],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Length => "length",
            Dimension::Speed => "speed",
            Dimension::Time => "time",
            Dimension::Density => "density",
            Dimension::Viscosity => "viscosity",
            Dimension::Acceleration => "acceleration",
        };
        f.write_str(s)
    }
}

/// Converts `text` such as `"0.32 mm"` to SI units of `dim`.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text.find(|c: char| c.is_whitespace()).unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| Error::Config(format!("'{text}' does not start with a number")))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Err(Error::Config(format!("'{text}' has no unit; expected a {dim}")));
    }
    let normalized = unit.split_whitespace().collect::<Vec<_>>().join(" ");
    dim.units()
        .iter()
        .find(|(name, _)| *name == normalized)
        .map(|(_, scale)| value * scale)
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            let known: Vec<&str> = dim.units().iter().map(|u| u.0).collect();
            Error::Config(format!(
                "unit '{unit}' is not a {dim} unit (known: {})",
                known.join(", ")
            ))
        })
}

/// A quantity as written in a configuration file. Bare numbers parse but
/// are refused on conversion, so files must spell out their units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawQuantity {
    Text(String),
    Number(f64),
}

impl RawQuantity {
    pub fn to_si(&self, dim: Dimension, key: &str) -> Result<f64> {
        match self {
            RawQuantity::Text(t) => parse_quantity(t, dim).map_err(|e| Error::Config(format!("{key}: {e}"))),
            RawQuantity::Number(n) => Err(Error::Config(format!(
                "{key} = {n} has no unit; write it as a string such as \"{n} {}\"",
                dim.units()[0].0
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn converts_common_units() {
        assert_relative_eq!(parse_quantity("0.32 mm", Dimension::Length).unwrap(), 0.32e-3);
        assert_relative_eq!(parse_quantity("20 mm/s", Dimension::Speed).unwrap(), 0.02);
        assert_relative_eq!(parse_quantity("1 g/cm3", Dimension::Density).unwrap(), 1000.0);
        assert_relative_eq!(parse_quantity("1000 Pa  s", Dimension::Viscosity).unwrap(), 1000.0);
        assert_relative_eq!(parse_quantity("-9.81 m/s2", Dimension::Acceleration).unwrap(), -9.81);
        assert_relative_eq!(parse_quantity("5 ms", Dimension::Time).unwrap(), 5e-3);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        assert!(parse_quantity("0.32", Dimension::Length).is_err());
        assert!(parse_quantity("20 mm", Dimension::Speed).is_err());
        assert!(parse_quantity("mm 3", Dimension::Length).is_err());
        assert!(RawQuantity::Number(0.02).to_si(Dimension::Speed, "gamma").is_err());
        let ok = RawQuantity::Text("20 mm/s".into());
        assert_relative_eq!(ok.to_si(Dimension::Speed, "x").unwrap(), 0.02);
    }
}
