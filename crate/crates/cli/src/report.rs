//! Report files and measurement-point files.
//!
//! Fits and campaign records go to JSON (field names carry the unit, values
//! are SI); the calibration result is a small TOML with unit-tagged strings
//! like the manifest; calibration and free-flight points are plain CSV. The
//! `report` stage renders plot-ready CSV tables from the JSON reports.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use flexgim_core::estimation::{
    CalibrationPoint, CouplingReport, MappingFit, SensitivityFit, ThrustReport, ValidationReport,
};

use crate::units::{format_si, parse_as, Dimension, MG_TO_NEWTON};
use crate::{Error, Result, FORMAT_VERSION};

// ---------------------------------------------------------------------------
// generic JSON plumbing

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Report {
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Report {
        path: path.into(),
        message: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// calibration file (TOML, unit-tagged)

/// Calibration result for both axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub roll: SensitivityFit,
    pub pitch: SensitivityFit,
}

#[derive(Serialize, Deserialize)]
struct RawCalibration {
    format_version: u32,
    roll: RawSensitivity,
    pitch: RawSensitivity,
}

#[derive(Serialize, Deserialize)]
struct RawSensitivity {
    sensitivity: String,
    intercept: String,
    r_squared: f64,
    n_points: usize,
}

fn raw_sensitivity(fit: &SensitivityFit) -> RawSensitivity {
    RawSensitivity {
        sensitivity: format_si(fit.sensitivity, Dimension::Stiffness),
        intercept: format_si(fit.intercept, Dimension::Torque),
        r_squared: fit.r_squared,
        n_points: fit.n_points,
    }
}

pub fn write_calibration(path: &Path, calibration: &Calibration) -> Result<()> {
    let raw = RawCalibration {
        format_version: FORMAT_VERSION,
        roll: raw_sensitivity(&calibration.roll),
        pitch: raw_sensitivity(&calibration.pitch),
    };
    let text = toml::to_string_pretty(&raw).map_err(|e| Error::Report {
        path: path.into(),
        message: e.to_string(),
    })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_calibration(path: &Path) -> Result<Calibration> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawCalibration = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: 0,
        message: e.to_string(),
    })?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            message: format!("unsupported format_version {}", raw.format_version),
        });
    }
    let fit = |r: &RawSensitivity, key: &str| -> Result<SensitivityFit> {
        Ok(SensitivityFit {
            sensitivity: parse_as(&r.sensitivity, Dimension::Stiffness).map_err(|e| Error::Parse {
                path: path.into(),
                line: 0,
                message: format!("{key}.sensitivity: {e}"),
            })?,
            intercept: parse_as(&r.intercept, Dimension::Torque).map_err(|e| Error::Parse {
                path: path.into(),
                line: 0,
                message: format!("{key}.intercept: {e}"),
            })?,
            r_squared: r.r_squared,
            n_points: r.n_points,
        })
    };
    Ok(Calibration { roll: fit(&raw.roll, "roll")?, pitch: fit(&raw.pitch, "pitch")? })
}

// ---------------------------------------------------------------------------
// campaign index (simulate stage output)

/// Index of one simulated campaign: which commands ran and where their traces
/// landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignIndex {
    pub format_version: u32,
    pub seed: u64,
    pub amplitude_v: f64,
    pub bias_rail_v: f64,
    pub trials: Vec<TrialEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub index: usize,
    pub roll_differential_v: f64,
    pub pitch_offset_v: f64,
    /// Trace file path relative to the index file, absent when the command
    /// was skipped for clipping.
    pub trace_file: Option<String>,
    pub clipped: bool,
}

// ---------------------------------------------------------------------------
// mapping report (JSON)

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub slope_nm_per_v: f64,
    pub intercept_nm: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl From<MappingFit> for FitRecord {
    fn from(fit: MappingFit) -> Self {
        FitRecord {
            slope_nm_per_v: fit.slope,
            intercept_nm: fit.intercept,
            r_squared: fit.r_squared,
            n_points: fit.n_points,
        }
    }
}

impl From<FitRecord> for MappingFit {
    fn from(r: FitRecord) -> Self {
        MappingFit {
            slope: r.slope_nm_per_v,
            intercept: r.intercept_nm,
            r_squared: r.r_squared,
            n_points: r.n_points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub roll_sensitivity_nm_per_rad: f64,
    pub pitch_sensitivity_nm_per_rad: f64,
}

/// One analyzed trial: command, steady-state means, and derived torques with
/// their fitted values and residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub roll_differential_v: f64,
    pub pitch_offset_v: f64,
    pub trace_file: String,
    pub mean_roll_rad: f64,
    pub mean_pitch_rad: f64,
    pub mean_thrust_n: Option<f64>,
    pub settled: bool,
    pub torque_roll_nm: f64,
    pub torque_pitch_nm: f64,
    pub fitted_roll_nm: f64,
    pub fitted_pitch_nm: f64,
    pub residual_roll_nm: f64,
    pub residual_pitch_nm: f64,
}

/// Full voltage→torque mapping analysis of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingReport {
    pub format_version: u32,
    pub seed: u64,
    pub amplitude_v: f64,
    pub bias_rail_v: f64,
    pub calibration: CalibrationSummary,
    pub roll_fit: FitRecord,
    pub pitch_fit: FitRecord,
    pub trials: Vec<TrialRecord>,
}

// ---------------------------------------------------------------------------
// coupling / thrust / validation / trim files (JSON)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub roll_differential_v: f64,
    pub pitch_offset_v: f64,
    pub residual_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub max_abs_residual_nm: f64,
    pub actuated_range_nm: f64,
    pub percent_of_range: f64,
    pub residual_grid: Vec<ResidualRecord>,
}

impl From<CouplingReport> for CouplingRecord {
    fn from(r: CouplingReport) -> Self {
        CouplingRecord {
            max_abs_residual_nm: r.max_abs_residual,
            actuated_range_nm: r.actuated_range,
            percent_of_range: r.percent_of_range,
            residual_grid: r
                .residual_grid
                .into_iter()
                .map(|p| ResidualRecord {
                    roll_differential_v: p.roll_differential,
                    pitch_offset_v: p.pitch_offset,
                    residual_nm: p.residual,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingFile {
    pub format_version: u32,
    pub roll: CouplingRecord,
    pub pitch: CouplingRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThrustFile {
    pub format_version: u32,
    pub mean_thrust_n: f64,
    pub max_percent_deviation: f64,
    pub slope_pitch_n_per_v: f64,
    pub slope_roll_n_per_v: f64,
    /// Same slopes in the scale's native milligram-force units.
    pub slope_pitch_mg_per_v: f64,
    pub slope_roll_mg_per_v: f64,
}

impl From<ThrustReport> for ThrustFile {
    fn from(r: ThrustReport) -> Self {
        ThrustFile {
            format_version: FORMAT_VERSION,
            mean_thrust_n: r.mean_thrust,
            max_percent_deviation: r.max_percent_deviation,
            slope_pitch_n_per_v: r.slope_pitch,
            slope_roll_n_per_v: r.slope_roll,
            slope_pitch_mg_per_v: r.slope_pitch / MG_TO_NEWTON,
            slope_roll_mg_per_v: r.slope_roll / MG_TO_NEWTON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRecord {
    pub percent_error: f64,
    pub device_slope_nm_per_v: f64,
    pub freeflight_slope_nm_per_v: f64,
    pub n_points: usize,
}

impl From<ValidationReport> for ValidationRecord {
    fn from(r: ValidationReport) -> Self {
        ValidationRecord {
            percent_error: r.percent_error,
            device_slope_nm_per_v: r.device_slope,
            freeflight_slope_nm_per_v: r.freeflight_slope,
            n_points: r.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationFile {
    pub format_version: u32,
    pub roll: Option<ValidationRecord>,
    pub pitch: Option<ValidationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimFile {
    pub format_version: u32,
    pub bias_roll_nm: f64,
    pub bias_pitch_nm: f64,
    pub trim_voltage_roll_v: Option<f64>,
    pub trim_voltage_pitch_v: Option<f64>,
    pub converged_at_s: f64,
}

// ---------------------------------------------------------------------------
// calibration-points and free-flight CSV files

/// Calibration points grouped by axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalibrationPoints {
    pub roll: Vec<CalibrationPoint>,
    pub pitch: Vec<CalibrationPoint>,
}

const POINTS_HEADER: &str = "axis,applied_torque_nm,measured_angle_rad";

pub fn write_calibration_points(path: &Path, points: &CalibrationPoints) -> Result<()> {
    let mut out = String::from(POINTS_HEADER);
    out.push('\n');
    for (axis, list) in [("roll", &points.roll), ("pitch", &points.pitch)] {
        for p in list {
            out.push_str(&format!("{axis},{},{}\n", p.applied_torque, p.measured_angle));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_calibration_points(path: &Path) -> Result<CalibrationPoints> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = CalibrationPoints::default();
    for (line, fields) in csv_rows(path, &text, POINTS_HEADER, 3)? {
        let torque = parse_field(path, line, fields[1], "applied_torque_nm")?;
        let angle = parse_field(path, line, fields[2], "measured_angle_rad")?;
        let point = CalibrationPoint { applied_torque: torque, measured_angle: angle };
        match fields[0].trim() {
            "roll" => points.roll.push(point),
            "pitch" => points.pitch.push(point),
            other => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("axis must be roll or pitch, got `{other}`"),
                })
            }
        }
    }
    Ok(points)
}

/// Free-flight (trim voltage, offset torque) points grouped by axis.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FreeFlightPoints {
    pub roll: Vec<(f64, f64)>,
    pub pitch: Vec<(f64, f64)>,
}

const FREEFLIGHT_HEADER: &str = "axis,trim_voltage_v,offset_torque_nm";

pub fn write_freeflight_points(path: &Path, points: &FreeFlightPoints) -> Result<()> {
    let mut out = String::from(FREEFLIGHT_HEADER);
    out.push('\n');
    for (axis, list) in [("roll", &points.roll), ("pitch", &points.pitch)] {
        for (voltage, torque) in list {
            out.push_str(&format!("{axis},{voltage},{torque}\n"));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_freeflight_points(path: &Path) -> Result<FreeFlightPoints> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = FreeFlightPoints::default();
    for (line, fields) in csv_rows(path, &text, FREEFLIGHT_HEADER, 3)? {
        let voltage = parse_field(path, line, fields[1], "trim_voltage_v")?;
        let torque = parse_field(path, line, fields[2], "offset_torque_nm")?;
        match fields[0].trim() {
            "roll" => points.roll.push((voltage, torque)),
            "pitch" => points.pitch.push((voltage, torque)),
            other => {
                return Err(Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("axis must be roll or pitch, got `{other}`"),
                })
            }
        }
    }
    Ok(points)
}

type CsvRow<'a> = (usize, Vec<&'a str>);

fn csv_rows<'a>(
    path: &Path,
    text: &'a str,
    header: &str,
    fields: usize,
) -> Result<Vec<CsvRow<'a>>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == header => {}
        Some((_, first)) => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("expected header `{header}`, found `{first}`"),
            })
        }
        None => {
            return Err(Error::Parse { path: path.into(), line: 1, message: "empty file".into() })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let line_no = idx + 1;
        if cols.len() != fields {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                message: format!("expected {fields} fields, found {}", cols.len()),
            });
        }
        rows.push((line_no, cols));
    }
    Ok(rows)
}

fn parse_field(path: &Path, line: usize, field: &str, name: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        message: format!("invalid {name} `{field}`"),
    })
}

// ---------------------------------------------------------------------------
// plot-ready tables

/// Renders the figure tables from the analysis reports: per-axis torque vs
/// voltage (with the cross-axis voltage as a color key), per-axis residual
/// grids, and thrust vs voltage.
pub fn render_plot_tables(
    mapping: &MappingReport,
    coupling: Option<&CouplingFile>,
    thrust: Option<&ThrustFile>,
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut roll = String::from(
        "roll_differential_v,pitch_offset_v,measured_roll_nm,fitted_roll_nm,residual_roll_nm\n",
    );
    let mut pitch = String::from(
        "pitch_offset_v,roll_differential_v,measured_pitch_nm,fitted_pitch_nm,residual_pitch_nm\n",
    );
    for t in &mapping.trials {
        roll.push_str(&format!(
            "{},{},{},{},{}\n",
            t.roll_differential_v, t.pitch_offset_v, t.torque_roll_nm, t.fitted_roll_nm, t.residual_roll_nm
        ));
        pitch.push_str(&format!(
            "{},{},{},{},{}\n",
            t.pitch_offset_v, t.roll_differential_v, t.torque_pitch_nm, t.fitted_pitch_nm, t.residual_pitch_nm
        ));
    }
    let roll_path = out_dir.join("roll_mapping.csv");
    fs::write(&roll_path, roll).map_err(|e| Error::io(&roll_path, e))?;
    let pitch_path = out_dir.join("pitch_mapping.csv");
    fs::write(&pitch_path, pitch).map_err(|e| Error::io(&pitch_path, e))?;

    if let Some(coupling) = coupling {
        for (name, record) in [("roll", &coupling.roll), ("pitch", &coupling.pitch)] {
            let mut grid = String::from("roll_differential_v,pitch_offset_v,residual_nm\n");
            for p in &record.residual_grid {
                grid.push_str(&format!(
                    "{},{},{}\n",
                    p.roll_differential_v, p.pitch_offset_v, p.residual_nm
                ));
            }
            let path = out_dir.join(format!("{name}_residual_grid.csv"));
            fs::write(&path, grid).map_err(|e| Error::io(&path, e))?;
        }
    }

    if thrust.is_some() {
        let mut table =
            String::from("roll_differential_v,pitch_offset_v,thrust_n,thrust_mg\n");
        for t in &mapping.trials {
            if let Some(f) = t.mean_thrust_n {
                table.push_str(&format!(
                    "{},{},{},{}\n",
                    t.roll_differential_v,
                    t.pitch_offset_v,
                    f,
                    f / MG_TO_NEWTON
                ));
            }
        }
        let path = out_dir.join("thrust.csv");
        fs::write(&path, table).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn calibration_toml_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("calibration.toml");
        let calibration = Calibration {
            roll: SensitivityFit {
                sensitivity: 1.518e-6,
                intercept: -2.3e-9,
                r_squared: 0.999_987,
                n_points: 6,
            },
            pitch: SensitivityFit {
                sensitivity: 1.882e-6,
                intercept: 1.1e-9,
                r_squared: 0.999_991,
                n_points: 6,
            },
        };
        write_calibration(&path, &calibration).unwrap();
        let back = read_calibration(&path).unwrap();
        assert_eq!(calibration, back);
    }

    #[test]
    fn mapping_report_json_roundtrip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mapping.json");
        let report = MappingReport {
            format_version: FORMAT_VERSION,
            seed: 42,
            amplitude_v: 88.0,
            bias_rail_v: 250.0,
            calibration: CalibrationSummary {
                roll_sensitivity_nm_per_rad: 1.518e-6,
                pitch_sensitivity_nm_per_rad: 1.882e-6,
            },
            roll_fit: FitRecord {
                slope_nm_per_v: 0.247e-6,
                intercept_nm: 1.3e-9,
                r_squared: 0.999_999_95,
                n_points: 33,
            },
            pitch_fit: FitRecord {
                slope_nm_per_v: 0.162e-6,
                intercept_nm: -4.4e-10,
                r_squared: 0.999_999_9,
                n_points: 33,
            },
            trials: vec![TrialRecord {
                index: 0,
                roll_differential_v: -50.0,
                pitch_offset_v: -10.0,
                trace_file: "trials/trial_000.csv".into(),
                mean_roll_rad: -0.0123456789,
                mean_pitch_rad: -0.0016,
                mean_thrust_n: Some(1.7653e-3),
                settled: true,
                torque_roll_nm: -12.35e-6,
                torque_pitch_nm: -1.62e-6,
                fitted_roll_nm: -12.35e-6,
                fitted_pitch_nm: -1.62e-6,
                residual_roll_nm: 0.0,
                residual_pitch_nm: 0.0,
            }],
        };
        save_json(&path, &report).unwrap();
        let back: MappingReport = load_json(&path).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn points_csv_roundtrip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("points.csv");
        let points = CalibrationPoints {
            roll: vec![
                CalibrationPoint { applied_torque: 1.248e-6, measured_angle: 0.8221 },
                CalibrationPoint { applied_torque: -1.248e-6, measured_angle: -0.8221 },
            ],
            pitch: vec![
                CalibrationPoint { applied_torque: -0.981e-6, measured_angle: -0.5212 },
                CalibrationPoint { applied_torque: 0.981e-6, measured_angle: 0.5212 },
            ],
        };
        write_calibration_points(&path, &points).unwrap();
        let back = read_calibration_points(&path).unwrap();
        assert_eq!(points, back);
    }

    #[test]
    fn freeflight_csv_roundtrip_and_bad_axis() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("freeflight.csv");
        let points = FreeFlightPoints {
            roll: vec![(-20.0, 0.0), (-17.0, 1.248e-6)],
            pitch: vec![(7.5, 0.0), (5.0, -0.981e-6)],
        };
        write_freeflight_points(&path, &points).unwrap();
        assert_eq!(read_freeflight_points(&path).unwrap(), points);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "axis,trim_voltage_v,offset_torque_nm\nyaw,0,0\n").unwrap();
        let err = read_freeflight_points(&bad).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
