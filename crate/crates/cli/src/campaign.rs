//! Campaign stages: simulate, calibrate, map, coupling, thrust, validate,
//! trim.
//!
//! Each stage is file-mediated — it reads the previous stage's files and
//! writes its own — so recorded hardware data can replace any simulated
//! stage. Trials simulate in parallel; file names and contents depend only on
//! the manifest and seed, never on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use flexgim_core::dynamics::{
    derive_trial_seed, run_trim_controller, simulate_applied_torque, simulate_trial, SimOptions,
    TrimSettings,
};
use flexgim_core::estimation::{
    coupling_error, fit_sensitivity, fit_voltage_torque_mapping, steady_state_mean,
    thrust_analysis, validate_mapping, CalibrationPoint, TorqueAxis,
};
use flexgim_core::model::{wing_signal_envelope, ActuationCommand, TorqueVector};

use crate::manifest::Manifest;
use crate::report::{
    load_json, save_json, write_calibration, write_calibration_points, Calibration,
    CalibrationPoints, CalibrationSummary, CampaignIndex, CouplingFile, FreeFlightPoints,
    MappingReport, ThrustFile, TrialEntry, TrialRecord, TrimFile, ValidationFile,
    ValidationRecord,
};
use crate::trace::{read_trace, write_trace};
use crate::{Error, Result, FORMAT_VERSION};

/// File names each stage writes under the campaign output directory.
pub mod files {
    pub const CAMPAIGN_INDEX: &str = "campaign.json";
    pub const TRIALS_DIR: &str = "trials";
    pub const CALIBRATION: &str = "calibration.toml";
    pub const CALIBRATION_POINTS: &str = "calibration_points.csv";
    pub const MAPPING: &str = "mapping.json";
    pub const COUPLING: &str = "coupling.json";
    pub const THRUST: &str = "thrust.json";
    pub const VALIDATION: &str = "validation.json";
    pub const TRIM: &str = "trim.json";
    pub const TRIM_TRACE: &str = "trim_trace.csv";
    pub const REPORT_DIR: &str = "report";
}

fn sim_options(manifest: &Manifest) -> SimOptions {
    SimOptions { dt: manifest.protocol.dt, tilt_correction: manifest.protocol.tilt_correction }
}

/// Simulates every unexcluded grid command, writing one trace file per trial
/// plus the campaign index. Clipped commands are listed, warned about, and
/// skipped.
pub fn run_simulate(manifest: &Manifest, out_dir: &Path, verbose: bool) -> Result<CampaignIndex> {
    let trials_dir = out_dir.join(files::TRIALS_DIR);
    fs::create_dir_all(&trials_dir).map_err(|e| Error::io(&trials_dir, e))?;
    let opts = sim_options(manifest);
    let commands = manifest.commands();

    let entries: Vec<Result<TrialEntry>> = commands
        .par_iter()
        .enumerate()
        .map(|(index, cmd)| -> Result<TrialEntry> {
            let envelope = wing_signal_envelope(cmd)?;
            if envelope.clipped {
                eprintln!(
                    "warning: trial {index} (ΔV = {} V, V_off = {} V) clips the drive rails; skipped",
                    cmd.roll_differential, cmd.pitch_offset
                );
                return Ok(TrialEntry {
                    index,
                    roll_differential_v: cmd.roll_differential,
                    pitch_offset_v: cmd.pitch_offset,
                    trace_file: None,
                    clipped: true,
                });
            }
            let seed = derive_trial_seed(manifest.seed, index as u64);
            let trace = simulate_trial(
                &manifest.plant,
                &manifest.gimbal,
                cmd,
                manifest.protocol.duration,
                manifest.protocol.sample_rate,
                seed,
                &opts,
            )?;
            let file_name = format!("{}/trial_{index:03}.csv", files::TRIALS_DIR);
            write_trace(&out_dir.join(&file_name), &trace)?;
            Ok(TrialEntry {
                index,
                roll_differential_v: cmd.roll_differential,
                pitch_offset_v: cmd.pitch_offset,
                trace_file: Some(file_name),
                clipped: false,
            })
        })
        .collect();

    let trials = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let index = CampaignIndex {
        format_version: FORMAT_VERSION,
        seed: manifest.seed,
        amplitude_v: manifest.command.amplitude,
        bias_rail_v: manifest.command.bias_rail,
        trials,
    };
    save_json(&out_dir.join(files::CAMPAIGN_INDEX), &index)?;
    if verbose {
        let run = index.trials.iter().filter(|t| !t.clipped).count();
        eprintln!("simulate: {run} trials written, {} skipped", index.trials.len() - run);
    }
    Ok(index)
}

/// Runs the static-calibration protocol in simulation: known torques applied
/// about each axis, steady deflections fitted to a line. Writes the points
/// CSV and the calibration file.
pub fn synthesize_calibration(manifest: &Manifest, out_dir: &Path) -> Result<Calibration> {
    let opts = sim_options(manifest);
    let span = calibration_span(manifest);
    let levels = [-1.0, -0.5, 0.5, 1.0];

    let mut points = CalibrationPoints::default();
    for axis in [TorqueAxis::Roll, TorqueAxis::Pitch] {
        for level in levels {
            let torque = match axis {
                TorqueAxis::Roll => TorqueVector::new(level * span.0, 0.0),
                TorqueAxis::Pitch => TorqueVector::new(0.0, level * span.1),
            };
            let trace = simulate_applied_torque(
                &manifest.gimbal,
                torque,
                manifest.plant.tether_stiffness,
                manifest.protocol.duration,
                manifest.protocol.sample_rate,
                &opts,
            )?;
            let steady = steady_state_mean(
                &trace,
                manifest.protocol.window,
                manifest.protocol.duration,
                manifest.protocol.settle_tolerance,
            )?;
            match axis {
                TorqueAxis::Roll => points.roll.push(CalibrationPoint {
                    applied_torque: torque.roll,
                    measured_angle: steady.roll,
                }),
                TorqueAxis::Pitch => points.pitch.push(CalibrationPoint {
                    applied_torque: torque.pitch,
                    measured_angle: steady.pitch,
                }),
            }
        }
    }
    let calibration = Calibration {
        roll: fit_sensitivity(&points.roll)?,
        pitch: fit_sensitivity(&points.pitch)?,
    };
    write_calibration_points(&out_dir.join(files::CALIBRATION_POINTS), &points)?;
    write_calibration(&out_dir.join(files::CALIBRATION), &calibration)?;
    Ok(calibration)
}

/// Torque span the synthetic calibration sweeps per axis: the largest torque
/// the plant can put on each axis over the commanded grid.
fn calibration_span(manifest: &Manifest) -> (f64, f64) {
    let mut roll: f64 = 0.0;
    let mut pitch: f64 = 0.0;
    for cmd in manifest.commands() {
        let p = &manifest.plant;
        let r = p.roll_gain * cmd.roll_differential
            + p.cross_gain_roll_from_pitch * cmd.pitch_offset
            + p.roll_bias;
        let q = p.pitch_gain * cmd.pitch_offset
            + p.cross_gain_pitch_from_roll * cmd.roll_differential
            + p.pitch_bias;
        roll = roll.max(r.abs());
        pitch = pitch.max(q.abs());
    }
    // a quiet plant still gets calibrated over a small nominal span
    (roll.max(1e-7), pitch.max(1e-7))
}

/// Computes steady-state means and calibrated torques for every simulated
/// trial, then fits the per-axis voltage→torque mapping.
pub fn run_map(
    manifest: &Manifest,
    campaign_dir: &Path,
    calibration: &Calibration,
) -> Result<MappingReport> {
    let index: CampaignIndex = load_json(&campaign_dir.join(files::CAMPAIGN_INDEX))?;

    let mut records = Vec::new();
    let mut fit_input = Vec::new();
    for entry in &index.trials {
        let Some(file) = &entry.trace_file else { continue };
        let trace = read_trace(&campaign_dir.join(file))?;
        let steady = steady_state_mean(
            &trace,
            manifest.protocol.window,
            manifest.protocol.duration,
            manifest.protocol.settle_tolerance,
        )?;
        let torque = TorqueVector::new(
            calibration.roll.sensitivity * steady.roll,
            calibration.pitch.sensitivity * steady.pitch,
        );
        let cmd = ActuationCommand::new(index.amplitude_v, entry.roll_differential_v, entry.pitch_offset_v)
            .with_bias_rail(index.bias_rail_v);
        fit_input.push((cmd, torque));
        records.push(TrialRecord {
            index: entry.index,
            roll_differential_v: entry.roll_differential_v,
            pitch_offset_v: entry.pitch_offset_v,
            trace_file: file.clone(),
            mean_roll_rad: steady.roll,
            mean_pitch_rad: steady.pitch,
            mean_thrust_n: steady.thrust,
            settled: steady.settled,
            torque_roll_nm: torque.roll,
            torque_pitch_nm: torque.pitch,
            fitted_roll_nm: 0.0,
            fitted_pitch_nm: 0.0,
            residual_roll_nm: 0.0,
            residual_pitch_nm: 0.0,
        });
    }

    let fits = fit_voltage_torque_mapping(&fit_input)?;
    for r in &mut records {
        r.fitted_roll_nm = fits.roll.predict(r.roll_differential_v);
        r.fitted_pitch_nm = fits.pitch.predict(r.pitch_offset_v);
        r.residual_roll_nm = r.torque_roll_nm - r.fitted_roll_nm;
        r.residual_pitch_nm = r.torque_pitch_nm - r.fitted_pitch_nm;
    }

    Ok(MappingReport {
        format_version: FORMAT_VERSION,
        seed: index.seed,
        amplitude_v: index.amplitude_v,
        bias_rail_v: index.bias_rail_v,
        calibration: CalibrationSummary {
            roll_sensitivity_nm_per_rad: calibration.roll.sensitivity,
            pitch_sensitivity_nm_per_rad: calibration.pitch.sensitivity,
        },
        roll_fit: fits.roll.into(),
        pitch_fit: fits.pitch.into(),
        trials: records,
    })
}

fn report_trials(report: &MappingReport) -> Vec<(ActuationCommand, TorqueVector)> {
    report
        .trials
        .iter()
        .map(|t| {
            (
                ActuationCommand::new(report.amplitude_v, t.roll_differential_v, t.pitch_offset_v)
                    .with_bias_rail(report.bias_rail_v),
                TorqueVector::new(t.torque_roll_nm, t.torque_pitch_nm),
            )
        })
        .collect()
}

/// Cross-axis coupling residuals for both axes of a mapping report.
pub fn run_coupling(report: &MappingReport) -> Result<CouplingFile> {
    let trials = report_trials(report);
    let roll = coupling_error(&trials, &report.roll_fit.into(), TorqueAxis::Roll)?;
    let pitch = coupling_error(&trials, &report.pitch_fit.into(), TorqueAxis::Pitch)?;
    Ok(CouplingFile { format_version: FORMAT_VERSION, roll: roll.into(), pitch: pitch.into() })
}

/// Thrust statistics over a mapping report's trials.
pub fn run_thrust(report: &MappingReport) -> Result<ThrustFile> {
    let trials: Vec<(ActuationCommand, Option<f64>)> = report
        .trials
        .iter()
        .map(|t| {
            (
                ActuationCommand::new(report.amplitude_v, t.roll_differential_v, t.pitch_offset_v)
                    .with_bias_rail(report.bias_rail_v),
                t.mean_thrust_n,
            )
        })
        .collect();
    Ok(thrust_analysis(&trials)?.into())
}

/// Device-vs-free-flight validation for whichever axes have points.
pub fn run_validate(report: &MappingReport, points: &FreeFlightPoints) -> Result<ValidationFile> {
    if points.roll.is_empty() && points.pitch.is_empty() {
        return Err(flexgim_core::estimation::EstimationError::TooFewSamples {
            minimum: 2,
            actual: 0,
        }
        .into());
    }
    let run = |fit: &crate::report::FitRecord, pts: &[(f64, f64)]| -> Result<Option<ValidationRecord>> {
        if pts.is_empty() {
            return Ok(None);
        }
        let report = validate_mapping(&(*fit).into(), pts)?;
        Ok(Some(report.into()))
    };
    Ok(ValidationFile {
        format_version: FORMAT_VERSION,
        roll: run(&report.roll_fit, &points.roll)?,
        pitch: run(&report.pitch_fit, &points.pitch)?,
    })
}

/// Runs the integral trim loop against the manifest plant and writes the
/// closed-loop trace alongside the result.
pub fn run_trim(manifest: &Manifest, out_dir: &Path) -> Result<TrimFile> {
    let settings = TrimSettings {
        duration: manifest.trim.duration,
        angle_tolerance: manifest.trim.angle_tolerance,
        rate_tolerance: manifest.trim.rate_tolerance,
        hold_time: manifest.trim.hold_time,
        sample_rate: manifest.protocol.sample_rate,
    };
    let outcome = run_trim_controller(
        &manifest.plant,
        &manifest.gimbal,
        &manifest.trim.gains,
        &settings,
        manifest.seed,
        &sim_options(manifest),
    )?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_trace(&out_dir.join(files::TRIM_TRACE), &outcome.trace)?;
    let file = TrimFile {
        format_version: FORMAT_VERSION,
        bias_roll_nm: outcome.bias.roll,
        bias_pitch_nm: outcome.bias.pitch,
        trim_voltage_roll_v: outcome.trim_voltage_roll,
        trim_voltage_pitch_v: outcome.trim_voltage_pitch,
        converged_at_s: outcome.converged_at,
    };
    save_json(&out_dir.join(files::TRIM), &file)?;
    Ok(file)
}

/// The full chain: simulate → calibrate → map → coupling → thrust → report
/// tables, all under one output directory.
pub fn run_campaign(manifest: &Manifest, out_dir: &Path, verbose: bool) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    run_simulate(manifest, out_dir, verbose)?;
    let calibration = synthesize_calibration(manifest, out_dir)?;
    if verbose {
        eprintln!(
            "calibrate: k_s roll = {} N·m/rad, pitch = {} N·m/rad",
            calibration.roll.sensitivity, calibration.pitch.sensitivity
        );
    }
    let mapping = run_map(manifest, out_dir, &calibration)?;
    save_json(&out_dir.join(files::MAPPING), &mapping)?;
    let coupling = run_coupling(&mapping)?;
    save_json(&out_dir.join(files::COUPLING), &coupling)?;
    let thrust = run_thrust(&mapping)?;
    save_json(&out_dir.join(files::THRUST), &thrust)?;
    crate::report::render_plot_tables(
        &mapping,
        Some(&coupling),
        Some(&thrust),
        &out_dir.join(files::REPORT_DIR),
    )?;
    if verbose {
        eprintln!(
            "map: roll slope = {} N·m/V (R² = {}), pitch slope = {} N·m/V (R² = {})",
            mapping.roll_fit.slope_nm_per_v,
            mapping.roll_fit.r_squared,
            mapping.pitch_fit.slope_nm_per_v,
            mapping.pitch_fit.r_squared
        );
        eprintln!(
            "coupling: roll {}% of range, pitch {}% of range",
            coupling.roll.percent_of_range, coupling.pitch.percent_of_range
        );
        eprintln!(
            "thrust: mean {} N, max deviation {}%",
            thrust.mean_thrust_n, thrust.max_percent_deviation
        );
    }
    Ok(())
}

/// Default output directory: `$FLEXGIM_OUT` or `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("FLEXGIM_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}
