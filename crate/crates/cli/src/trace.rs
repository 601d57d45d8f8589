//! Angle-trace CSV files.
//!
//! Format (one header line, one row per sample):
//!
//! ```csv
//! time_s,theta_x_rad,theta_y_rad,thrust_mg
//! 0,0,0,180.0
//! 0.01,0.0012,-0.0003,179.8
//! ```
//!
//! The `thrust_mg` column is optional; when present it holds the scale
//! reading in milligrams (converted to newtons in memory). Values are written
//! with `f64`'s shortest round-trippable formatting, so write→read is exact.

use std::fs;
use std::path::Path;

use flexgim_core::dynamics::{AngleTrace, TraceSample};

use crate::units::MG_TO_NEWTON;
use crate::{Error, Result};

const HEADER: &str = "time_s,theta_x_rad,theta_y_rad";
const HEADER_WITH_THRUST: &str = "time_s,theta_x_rad,theta_y_rad,thrust_mg";

/// Writes a trace as CSV. The thrust column appears iff the trace carries a
/// thrust channel.
pub fn write_trace(path: &Path, trace: &AngleTrace) -> Result<()> {
    let mut out = String::new();
    let with_thrust = trace.has_thrust();
    out.push_str(if with_thrust { HEADER_WITH_THRUST } else { HEADER });
    out.push('\n');
    for s in trace.samples() {
        if let Some(thrust) = s.thrust {
            let mg = thrust / MG_TO_NEWTON;
            out.push_str(&format!("{},{},{},{}\n", s.time, s.roll, s.pitch, mg));
        } else {
            out.push_str(&format!("{},{},{}\n", s.time, s.roll, s.pitch));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a trace CSV, inferring the sample rate from the first time step and
/// validating monotone, uniform timestamps.
pub fn read_trace(path: &Path) -> Result<AngleTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::Parse {
        path: path.into(),
        line: 1,
        message: "empty file".into(),
    })?;
    let with_thrust = match header.trim_end() {
        HEADER_WITH_THRUST => true,
        HEADER => false,
        other => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("unrecognized header `{other}`"),
            })
        }
    };

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if with_thrust { 4 } else { 3 };
        if fields.len() != expected {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.into(),
                line: line_no,
                message: format!("invalid {name} `{field}`"),
            })
        };
        let time = parse(fields[0], "time_s")?;
        let roll = parse(fields[1], "theta_x_rad")?;
        let pitch = parse(fields[2], "theta_y_rad")?;
        let thrust = if with_thrust {
            Some(parse(fields[3], "thrust_mg")? * MG_TO_NEWTON)
        } else {
            None
        };
        samples.push(TraceSample { time, roll, pitch, thrust });
    }

    if samples.len() < 2 {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: "trace needs at least two samples".into(),
        });
    }
    let sample_rate = 1.0 / (samples[1].time - samples[0].time);
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::Parse {
            path: path.into(),
            line: 3,
            message: "time stamps must be strictly increasing".into(),
        });
    }
    AngleTrace::new(sample_rate, samples).map_err(|e| Error::Parse {
        path: path.into(),
        line: 1,
        message: e.to_string(),
    })
}
