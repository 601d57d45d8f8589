//! Campaign manifest: device, robot, plant, voltage grid, and protocol.
//!
//! The manifest is a flat TOML file in which every physical quantity carries
//! an explicit unit (`flexure_stiffness = "1.4 uNm/rad"`). Grid exclusions are
//! data, not code, so other robots' actuator limits can be expressed without
//! touching the toolkit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use flexgim_core::dynamics::{Gimbal, PlantModel, TrimGains};
use flexgim_core::model::{ActuationCommand, GimbalAxisParams, RobotParams};

use crate::units::{format_si, parse_as, Dimension};
use crate::{Error, Result, FORMAT_VERSION};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawManifest {
    format_version: u32,
    seed: u64,
    #[serde(default)]
    gravity: Option<String>,
    device: RawDevice,
    robot: RawRobot,
    plant: RawPlant,
    command: RawCommand,
    grid: RawGrid,
    protocol: RawProtocol,
    #[serde(default)]
    trim: Option<RawTrim>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDevice {
    roll: RawAxis,
    pitch: RawAxis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawAxis {
    flexure_stiffness: String,
    counterweight_mass: String,
    counterweight_arm: String,
    damping: String,
    axis_inertia: String,
    #[serde(default)]
    robot_offset: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawRobot {
    mass: String,
    inertia: [String; 3],
    wing_moment_arm_roll: String,
    wing_moment_arm_pitch: String,
    flap_frequency: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawPlant {
    roll_gain: String,
    pitch_gain: String,
    roll_bias: String,
    pitch_bias: String,
    cross_gain_roll_from_pitch: String,
    cross_gain_pitch_from_roll: String,
    thrust_at_hover: String,
    thrust_slope_pitch: String,
    thrust_slope_roll: String,
    tether_stiffness: String,
    #[serde(default)]
    torque_noise_sigma: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawCommand {
    amplitude: String,
    #[serde(default)]
    bias_rail: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGrid {
    roll_differential: Vec<String>,
    pitch_offset: Vec<String>,
    #[serde(default)]
    exclusions: Vec<[String; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawProtocol {
    duration: String,
    window: String,
    sample_rate: String,
    #[serde(default)]
    dt: Option<String>,
    #[serde(default)]
    settle_tolerance: Option<String>,
    #[serde(default)]
    tilt_correction: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawTrim {
    ki_roll: String,
    ki_pitch: String,
    #[serde(default)]
    duration: Option<String>,
    #[serde(default)]
    angle_tolerance: Option<String>,
    #[serde(default)]
    rate_tolerance: Option<String>,
    #[serde(default)]
    hold_time: Option<String>,
}

/// Base drive parameters shared by every grid command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseCommand {
    /// Sinusoid amplitude V_amp, V.
    pub amplitude: f64,
    /// Bias rail V_bias, V.
    pub bias_rail: f64,
}

/// The commanded voltage grid with its exclusion list.
#[derive(Debug, Clone, PartialEq)]
pub struct VoltageGrid {
    pub roll_differential: Vec<f64>,
    pub pitch_offset: Vec<f64>,
    pub exclusions: Vec<(f64, f64)>,
}

impl VoltageGrid {
    /// Commands in deterministic row-major order over the declared lists
    /// (outer loop roll differential, inner loop pitch offset), exclusions
    /// removed.
    pub fn commands(&self, base: &BaseCommand) -> Vec<ActuationCommand> {
        let mut out = Vec::new();
        for &dv in &self.roll_differential {
            for &voff in &self.pitch_offset {
                if self.exclusions.iter().any(|&(e_dv, e_voff)| e_dv == dv && e_voff == voff) {
                    continue;
                }
                out.push(
                    ActuationCommand::new(base.amplitude, dv, voff).with_bias_rail(base.bias_rail),
                );
            }
        }
        out
    }
}

/// Trial timing and measurement protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    /// Commanded trial length, s.
    pub duration: f64,
    /// Averaging window at the end of each trial, s.
    pub window: f64,
    /// Trace sampling rate, Hz.
    pub sample_rate: f64,
    /// Integrator step, s.
    pub dt: f64,
    /// Peak-to-peak angle over the window that still counts as settled, rad.
    pub settle_tolerance: f64,
    /// Record thrust·cos θx·cos θy instead of raw plant thrust.
    pub tilt_correction: bool,
}

/// Trim-loop gains and convergence criteria.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimConfig {
    pub gains: TrimGains,
    pub duration: f64,
    pub angle_tolerance: f64,
    pub rate_tolerance: f64,
    pub hold_time: f64,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            gains: TrimGains::default(),
            duration: 10.0,
            angle_tolerance: 1e-4,
            rate_tolerance: 1e-3,
            hold_time: 0.5,
        }
    }
}

/// Fully resolved campaign manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub gimbal: Gimbal,
    pub plant: PlantModel,
    pub command: BaseCommand,
    pub grid: VoltageGrid,
    pub protocol: Protocol,
    pub trim: TrimConfig,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: RawManifest = toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.into(),
            message: e.to_string(),
        })?;
        resolve(raw, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let raw = self.to_raw();
        let text = toml::to_string_pretty(&raw).map_err(|e| Error::Manifest {
            path: path.into(),
            message: e.to_string(),
        })?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Grid commands in deterministic order.
    pub fn commands(&self) -> Vec<ActuationCommand> {
        self.grid.commands(&self.command)
    }

    /// Ideal-balance mode: no tilt correction and no damping beyond the
    /// bare balance equations.
    pub fn apply_strict_paper(&mut self) {
        self.protocol.tilt_correction = false;
        self.gimbal.roll_axis.damping = 0.0;
        self.gimbal.pitch_axis.damping = 0.0;
    }

    fn to_raw(&self) -> RawManifest {
        let axis = |a: &GimbalAxisParams| RawAxis {
            flexure_stiffness: format_si(a.flexure_stiffness, Dimension::Stiffness),
            counterweight_mass: format_si(a.counterweight_mass, Dimension::Mass),
            counterweight_arm: format_si(a.counterweight_arm, Dimension::Length),
            damping: format_si(a.damping, Dimension::Damping),
            axis_inertia: format_si(a.axis_inertia, Dimension::Inertia),
            robot_offset: Some(format_si(a.robot_offset, Dimension::Length)),
        };
        RawManifest {
            format_version: self.format_version,
            seed: self.seed,
            gravity: Some(format_si(self.gimbal.gravity, Dimension::Acceleration)),
            device: RawDevice {
                roll: axis(&self.gimbal.roll_axis),
                pitch: axis(&self.gimbal.pitch_axis),
            },
            robot: RawRobot {
                mass: format_si(self.gimbal.robot.mass, Dimension::Mass),
                inertia: [
                    format_si(self.gimbal.robot.inertia[0], Dimension::Inertia),
                    format_si(self.gimbal.robot.inertia[1], Dimension::Inertia),
                    format_si(self.gimbal.robot.inertia[2], Dimension::Inertia),
                ],
                wing_moment_arm_roll: format_si(self.gimbal.robot.wing_moment_arm_roll, Dimension::Length),
                wing_moment_arm_pitch: format_si(self.gimbal.robot.wing_moment_arm_pitch, Dimension::Length),
                flap_frequency: format_si(self.gimbal.robot.flap_frequency, Dimension::Frequency),
            },
            plant: RawPlant {
                roll_gain: format_si(self.plant.roll_gain, Dimension::TorquePerVolt),
                pitch_gain: format_si(self.plant.pitch_gain, Dimension::TorquePerVolt),
                roll_bias: format_si(self.plant.roll_bias, Dimension::Torque),
                pitch_bias: format_si(self.plant.pitch_bias, Dimension::Torque),
                cross_gain_roll_from_pitch: format_si(self.plant.cross_gain_roll_from_pitch, Dimension::TorquePerVolt),
                cross_gain_pitch_from_roll: format_si(self.plant.cross_gain_pitch_from_roll, Dimension::TorquePerVolt),
                thrust_at_hover: format_si(self.plant.thrust_at_hover, Dimension::Force),
                thrust_slope_pitch: format_si(self.plant.thrust_slope_pitch, Dimension::ForcePerVolt),
                thrust_slope_roll: format_si(self.plant.thrust_slope_roll, Dimension::ForcePerVolt),
                tether_stiffness: format_si(self.plant.tether_stiffness, Dimension::Stiffness),
                torque_noise_sigma: Some(format_si(self.plant.torque_noise_sigma, Dimension::Torque)),
            },
            command: RawCommand {
                amplitude: format_si(self.command.amplitude, Dimension::Voltage),
                bias_rail: Some(format_si(self.command.bias_rail, Dimension::Voltage)),
            },
            grid: RawGrid {
                roll_differential: self
                    .grid
                    .roll_differential
                    .iter()
                    .map(|v| format_si(*v, Dimension::Voltage))
                    .collect(),
                pitch_offset: self
                    .grid
                    .pitch_offset
                    .iter()
                    .map(|v| format_si(*v, Dimension::Voltage))
                    .collect(),
                exclusions: self
                    .grid
                    .exclusions
                    .iter()
                    .map(|(dv, voff)| {
                        [format_si(*dv, Dimension::Voltage), format_si(*voff, Dimension::Voltage)]
                    })
                    .collect(),
            },
            protocol: RawProtocol {
                duration: format_si(self.protocol.duration, Dimension::Time),
                window: format_si(self.protocol.window, Dimension::Time),
                sample_rate: format_si(self.protocol.sample_rate, Dimension::Frequency),
                dt: Some(format_si(self.protocol.dt, Dimension::Time)),
                settle_tolerance: Some(format_si(self.protocol.settle_tolerance, Dimension::Angle)),
                tilt_correction: Some(self.protocol.tilt_correction),
            },
            trim: Some(RawTrim {
                ki_roll: format_si(self.trim.gains.ki_roll, Dimension::TrimGain),
                ki_pitch: format_si(self.trim.gains.ki_pitch, Dimension::TrimGain),
                duration: Some(format_si(self.trim.duration, Dimension::Time)),
                angle_tolerance: Some(format_si(self.trim.angle_tolerance, Dimension::Angle)),
                rate_tolerance: Some(format_si(self.trim.rate_tolerance, Dimension::AngularRate)),
                hold_time: Some(format_si(self.trim.hold_time, Dimension::Time)),
            }),
        }
    }
}

fn resolve(raw: RawManifest, path: &Path) -> Result<Manifest> {
    let err = |message: String| Error::Manifest { path: path.into(), message };
    let quantity = |key: &str, text: &str, dim: Dimension| -> Result<f64> {
        parse_as(text, dim).map_err(|e| err(format!("{key}: {e}")))
    };

    if raw.format_version != FORMAT_VERSION {
        return Err(err(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            raw.format_version
        )));
    }

    let gravity = match &raw.gravity {
        Some(text) => quantity("gravity", text, Dimension::Acceleration)?,
        None => flexgim_core::model::STANDARD_GRAVITY,
    };

    let axis = |key: &str, a: &RawAxis| -> Result<GimbalAxisParams> {
        let params = GimbalAxisParams {
            flexure_stiffness: quantity(&format!("{key}.flexure_stiffness"), &a.flexure_stiffness, Dimension::Stiffness)?,
            counterweight_mass: quantity(&format!("{key}.counterweight_mass"), &a.counterweight_mass, Dimension::Mass)?,
            counterweight_arm: quantity(&format!("{key}.counterweight_arm"), &a.counterweight_arm, Dimension::Length)?,
            damping: quantity(&format!("{key}.damping"), &a.damping, Dimension::Damping)?,
            axis_inertia: quantity(&format!("{key}.axis_inertia"), &a.axis_inertia, Dimension::Inertia)?,
            robot_offset: match &a.robot_offset {
                Some(text) => quantity(&format!("{key}.robot_offset"), text, Dimension::Length)?,
                None => 0.0,
            },
        };
        params.validate().map_err(|e| err(format!("{key}: {e}")))?;
        Ok(params)
    };

    let robot = RobotParams {
        mass: quantity("robot.mass", &raw.robot.mass, Dimension::Mass)?,
        inertia: [
            quantity("robot.inertia[0]", &raw.robot.inertia[0], Dimension::Inertia)?,
            quantity("robot.inertia[1]", &raw.robot.inertia[1], Dimension::Inertia)?,
            quantity("robot.inertia[2]", &raw.robot.inertia[2], Dimension::Inertia)?,
        ],
        wing_moment_arm_roll: quantity("robot.wing_moment_arm_roll", &raw.robot.wing_moment_arm_roll, Dimension::Length)?,
        wing_moment_arm_pitch: quantity("robot.wing_moment_arm_pitch", &raw.robot.wing_moment_arm_pitch, Dimension::Length)?,
        flap_frequency: quantity("robot.flap_frequency", &raw.robot.flap_frequency, Dimension::Frequency)?,
    };
    robot.validate().map_err(|e| err(format!("robot: {e}")))?;

    let gimbal = Gimbal {
        roll_axis: axis("device.roll", &raw.device.roll)?,
        pitch_axis: axis("device.pitch", &raw.device.pitch)?,
        robot,
        gravity,
    };

    let plant = PlantModel {
        roll_gain: quantity("plant.roll_gain", &raw.plant.roll_gain, Dimension::TorquePerVolt)?,
        pitch_gain: quantity("plant.pitch_gain", &raw.plant.pitch_gain, Dimension::TorquePerVolt)?,
        roll_bias: quantity("plant.roll_bias", &raw.plant.roll_bias, Dimension::Torque)?,
        pitch_bias: quantity("plant.pitch_bias", &raw.plant.pitch_bias, Dimension::Torque)?,
        cross_gain_roll_from_pitch: quantity("plant.cross_gain_roll_from_pitch", &raw.plant.cross_gain_roll_from_pitch, Dimension::TorquePerVolt)?,
        cross_gain_pitch_from_roll: quantity("plant.cross_gain_pitch_from_roll", &raw.plant.cross_gain_pitch_from_roll, Dimension::TorquePerVolt)?,
        thrust_at_hover: quantity("plant.thrust_at_hover", &raw.plant.thrust_at_hover, Dimension::Force)?,
        thrust_slope_pitch: quantity("plant.thrust_slope_pitch", &raw.plant.thrust_slope_pitch, Dimension::ForcePerVolt)?,
        thrust_slope_roll: quantity("plant.thrust_slope_roll", &raw.plant.thrust_slope_roll, Dimension::ForcePerVolt)?,
        tether_stiffness: quantity("plant.tether_stiffness", &raw.plant.tether_stiffness, Dimension::Stiffness)?,
        torque_noise_sigma: match &raw.plant.torque_noise_sigma {
            Some(text) => quantity("plant.torque_noise_sigma", text, Dimension::Torque)?,
            None => 0.0,
        },
    };
    plant.validate().map_err(|e| err(format!("plant: {e}")))?;

    let command = BaseCommand {
        amplitude: quantity("command.amplitude", &raw.command.amplitude, Dimension::Voltage)?,
        bias_rail: match &raw.command.bias_rail {
            Some(text) => quantity("command.bias_rail", text, Dimension::Voltage)?,
            None => flexgim_core::model::DEFAULT_BIAS_RAIL,
        },
    };
    if command.amplitude <= 0.0 {
        return Err(err(format!("command.amplitude must be positive, got {}", command.amplitude)));
    }

    let volt_list = |key: &str, list: &[String]| -> Result<Vec<f64>> {
        list.iter().map(|text| quantity(key, text, Dimension::Voltage)).collect()
    };
    let grid = VoltageGrid {
        roll_differential: volt_list("grid.roll_differential", &raw.grid.roll_differential)?,
        pitch_offset: volt_list("grid.pitch_offset", &raw.grid.pitch_offset)?,
        exclusions: raw
            .grid
            .exclusions
            .iter()
            .map(|pair| {
                Ok((
                    quantity("grid.exclusions", &pair[0], Dimension::Voltage)?,
                    quantity("grid.exclusions", &pair[1], Dimension::Voltage)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if grid.roll_differential.is_empty() || grid.pitch_offset.is_empty() {
        return Err(err("grid voltage lists must be nonempty".into()));
    }
    for &(dv, voff) in &grid.exclusions {
        let in_product = grid.roll_differential.contains(&dv) && grid.pitch_offset.contains(&voff);
        if !in_product {
            return Err(err(format!(
                "exclusion ({dv} V, {voff} V) is not a grid point"
            )));
        }
    }

    let protocol = Protocol {
        duration: quantity("protocol.duration", &raw.protocol.duration, Dimension::Time)?,
        window: quantity("protocol.window", &raw.protocol.window, Dimension::Time)?,
        sample_rate: quantity("protocol.sample_rate", &raw.protocol.sample_rate, Dimension::Frequency)?,
        dt: match &raw.protocol.dt {
            Some(text) => quantity("protocol.dt", text, Dimension::Time)?,
            None => 1e-4,
        },
        settle_tolerance: match &raw.protocol.settle_tolerance {
            Some(text) => quantity("protocol.settle_tolerance", text, Dimension::Angle)?,
            None => 0.01,
        },
        tilt_correction: raw.protocol.tilt_correction.unwrap_or(true),
    };
    if protocol.window >= protocol.duration {
        return Err(err(format!(
            "protocol.window ({} s) must be shorter than protocol.duration ({} s)",
            protocol.window, protocol.duration
        )));
    }
    for (name, v) in [
        ("protocol.duration", protocol.duration),
        ("protocol.window", protocol.window),
        ("protocol.sample_rate", protocol.sample_rate),
        ("protocol.dt", protocol.dt),
        ("protocol.settle_tolerance", protocol.settle_tolerance),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(err(format!("{name} must be positive, got {v}")));
        }
    }

    let trim = match &raw.trim {
        Some(t) => {
            let defaults = TrimConfig::default();
            TrimConfig {
                gains: TrimGains {
                    ki_roll: quantity("trim.ki_roll", &t.ki_roll, Dimension::TrimGain)?,
                    ki_pitch: quantity("trim.ki_pitch", &t.ki_pitch, Dimension::TrimGain)?,
                },
                duration: match &t.duration {
                    Some(text) => quantity("trim.duration", text, Dimension::Time)?,
                    None => defaults.duration,
                },
                angle_tolerance: match &t.angle_tolerance {
                    Some(text) => quantity("trim.angle_tolerance", text, Dimension::Angle)?,
                    None => defaults.angle_tolerance,
                },
                rate_tolerance: match &t.rate_tolerance {
                    Some(text) => quantity("trim.rate_tolerance", text, Dimension::AngularRate)?,
                    None => defaults.rate_tolerance,
                },
                hold_time: match &t.hold_time {
                    Some(text) => quantity("trim.hold_time", text, Dimension::Time)?,
                    None => defaults.hold_time,
                },
            }
        }
        None => TrimConfig::default(),
    };

    Ok(Manifest {
        format_version: raw.format_version,
        seed: raw.seed,
        gimbal,
        plant,
        command,
        grid,
        protocol,
        trim,
    })
}
