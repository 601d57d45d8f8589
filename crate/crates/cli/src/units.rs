//! Unit-tagged physical quantities.
//!
//! Every physical value in a manifest or points file is written as
//! `"<number> <unit>"` (for example `k_f = "2.16 uNm/rad"`). Parsing converts
//! to SI and checks the dimension the field expects; formatting always emits
//! the canonical SI unit, so a parse→format→parse round trip preserves the
//! value.

use std::f64::consts::PI;
use std::fmt;

/// Physical dimension of a quantity, used to reject unit mix-ups at parse
/// time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Torque,
    Stiffness,
    Damping,
    TrimGain,
    Mass,
    Length,
    Angle,
    AngularRate,
    Voltage,
    Frequency,
    Time,
    Force,
    Inertia,
    TorquePerVolt,
    ForcePerVolt,
    Acceleration,
    Pressure,
}

impl Dimension {
    /// Canonical SI unit token emitted by [`format_si`].
    pub fn si_unit(&self) -> &'static str {
        match self {
            Dimension::Torque => "Nm",
            Dimension::Stiffness => "Nm/rad",
            Dimension::Damping => "Nms/rad",
            Dimension::TrimGain => "Nm/(rad*s)",
            Dimension::Mass => "kg",
            Dimension::Length => "m",
            Dimension::Angle => "rad",
            Dimension::AngularRate => "rad/s",
            Dimension::Voltage => "V",
            Dimension::Frequency => "Hz",
            Dimension::Time => "s",
            Dimension::Force => "N",
            Dimension::Inertia => "kgm2",
            Dimension::TorquePerVolt => "Nm/V",
            Dimension::ForcePerVolt => "N/V",
            Dimension::Acceleration => "m/s2",
            Dimension::Pressure => "Pa",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.si_unit())
    }
}

/// Fixed conversion from a milligram-force reading to newtons (mg·g₀ with
/// g₀ = 9.81 m/s²). File formats use it for thrust columns and mg/V slopes;
/// it is a unit definition, independent of the manifest's gravity setting.
pub const MG_TO_NEWTON: f64 = 9.81e-6;

/// Recognized unit tokens: (token, dimension, SI factor).
const UNITS: &[(&str, Dimension, f64)] = &[
    ("Nm", Dimension::Torque, 1.0),
    ("mNm", Dimension::Torque, 1e-3),
    ("uNm", Dimension::Torque, 1e-6),
    ("nNm", Dimension::Torque, 1e-9),
    ("Nm/rad", Dimension::Stiffness, 1.0),
    ("mNm/rad", Dimension::Stiffness, 1e-3),
    ("uNm/rad", Dimension::Stiffness, 1e-6),
    ("nNm/rad", Dimension::Stiffness, 1e-9),
    ("Nms/rad", Dimension::Damping, 1.0),
    ("Nm*s/rad", Dimension::Damping, 1.0),
    ("mNms/rad", Dimension::Damping, 1e-3),
    ("uNms/rad", Dimension::Damping, 1e-6),
    ("uNm*s/rad", Dimension::Damping, 1e-6),
    ("nNms/rad", Dimension::Damping, 1e-9),
    ("nNm*s/rad", Dimension::Damping, 1e-9),
    ("Nm/(rad*s)", Dimension::TrimGain, 1.0),
    ("uNm/(rad*s)", Dimension::TrimGain, 1e-6),
    ("kg", Dimension::Mass, 1.0),
    ("g", Dimension::Mass, 1e-3),
    ("mg", Dimension::Mass, 1e-6),
    ("ug", Dimension::Mass, 1e-9),
    ("m", Dimension::Length, 1.0),
    ("cm", Dimension::Length, 1e-2),
    ("mm", Dimension::Length, 1e-3),
    ("um", Dimension::Length, 1e-6),
    ("rad", Dimension::Angle, 1.0),
    ("mrad", Dimension::Angle, 1e-3),
    ("deg", Dimension::Angle, PI / 180.0),
    ("rad/s", Dimension::AngularRate, 1.0),
    ("deg/s", Dimension::AngularRate, PI / 180.0),
    ("V", Dimension::Voltage, 1.0),
    ("kV", Dimension::Voltage, 1e3),
    ("mV", Dimension::Voltage, 1e-3),
    ("Hz", Dimension::Frequency, 1.0),
    ("kHz", Dimension::Frequency, 1e3),
    ("s", Dimension::Time, 1.0),
    ("ms", Dimension::Time, 1e-3),
    ("N", Dimension::Force, 1.0),
    ("mN", Dimension::Force, 1e-3),
    ("uN", Dimension::Force, 1e-6),
    ("kgm2", Dimension::Inertia, 1.0),
    ("kg*m^2", Dimension::Inertia, 1.0),
    ("gmm2", Dimension::Inertia, 1e-9),
    ("Nm/V", Dimension::TorquePerVolt, 1.0),
    ("mNm/V", Dimension::TorquePerVolt, 1e-3),
    ("uNm/V", Dimension::TorquePerVolt, 1e-6),
    ("nNm/V", Dimension::TorquePerVolt, 1e-9),
    ("N/V", Dimension::ForcePerVolt, 1.0),
    ("mN/V", Dimension::ForcePerVolt, 1e-3),
    ("uN/V", Dimension::ForcePerVolt, 1e-6),
    ("mg/V", Dimension::ForcePerVolt, MG_TO_NEWTON),
    ("m/s2", Dimension::Acceleration, 1.0),
    ("m/s^2", Dimension::Acceleration, 1.0),
    ("Pa", Dimension::Pressure, 1.0),
    ("kPa", Dimension::Pressure, 1e3),
    ("MPa", Dimension::Pressure, 1e6),
    ("GPa", Dimension::Pressure, 1e9),
];

/// Unit parsing failure, reported with the offending input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum UnitError {
    #[error("`{0}` is not of the form `<number> <unit>`")]
    Malformed(String),
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),
    #[error("`{input}` has unit of {found} where {expected} was expected")]
    WrongDimension { input: String, expected: Dimension, found: Dimension },
    #[error("`{0}` is not a finite number")]
    NotFinite(String),
}

/// Parses `"<number> <unit>"` into an SI value and its dimension.
pub fn parse_quantity(input: &str) -> Result<(f64, Dimension), UnitError> {
    let normalized = input.trim().replace('µ', "u").replace('·', "*");
    let mut parts = normalized.split_whitespace();
    let (number, unit) = match (parts.next(), parts.next(), parts.next()) {
        (Some(n), Some(u), None) => (n, u),
        _ => return Err(UnitError::Malformed(input.to_string())),
    };
    let value: f64 = number.parse().map_err(|_| UnitError::Malformed(input.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::NotFinite(input.to_string()));
    }
    for (token, dimension, factor) in UNITS {
        if *token == unit {
            return Ok((value * factor, *dimension));
        }
    }
    Err(UnitError::UnknownUnit(unit.to_string()))
}

/// Parses a quantity and checks it has the expected dimension, returning the
/// SI value.
pub fn parse_as(input: &str, expected: Dimension) -> Result<f64, UnitError> {
    let (value, found) = parse_quantity(input)?;
    if found != expected {
        return Err(UnitError::WrongDimension { input: input.to_string(), expected, found });
    }
    Ok(value)
}

/// Formats an SI value with its canonical unit token. `f64`'s shortest
/// round-trippable representation keeps write→read exact.
pub fn format_si(value: f64, dimension: Dimension) -> String {
    format!("{} {}", value, dimension.si_unit())
}
