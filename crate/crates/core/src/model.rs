//! Domain types and closed-form formulas for the flexured-gimbal sensor.
//!
//! The device suspends a flapping-wing robot on two compliant flexure axes.
//! Each axis behaves as a torsional spring, so a stroke-averaged applied
//! torque maps to a static angular deflection through the axis sensitivity
//! `k_s` (τ = k_s·θ). This module holds the mechanical parameter types and
//! the pure formulas; time-domain behavior lives in [`crate::dynamics`].
//!
//! Sign conventions, fixed project-wide: positive roll is right wing down,
//! positive pitch is nose up, positive roll differential raises the wing-1
//! drive amplitude.

use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

/// Standard gravitational acceleration in m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Default small-angle validity bound in rad (≈15°).
///
/// Beyond this deflection the sin θ restoring term departs from the linear
/// model by more than 1%, so τ = k_s·θ conversions are refused.
pub const DEFAULT_LINEAR_RANGE: f64 = 0.26;

/// Errors produced by the model formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelError {
    /// A parameter violated its invariant (non-positive, negative, …).
    InvalidParameter { name: &'static str, value: f64 },
    /// Effective sensitivity came out non-positive: the device cannot hold
    /// the robot upright.
    DegenerateSensitivity { sensitivity: f64 },
    /// A per-wing drive amplitude came out non-positive.
    InvalidCommand { wing: u8, amplitude: f64 },
    /// A deflection outside the small-angle validity bound.
    OutOfLinearRange { angle: f64, bound: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            ModelError::DegenerateSensitivity { sensitivity } => {
                write!(f, "degenerate sensitivity {sensitivity} N·m/rad (must be > 0)")
            }
            ModelError::InvalidCommand { wing, amplitude } => {
                write!(f, "wing {wing} amplitude {amplitude} V is not positive")
            }
            ModelError::OutOfLinearRange { angle, bound } => {
                write!(f, "deflection {angle} rad outside linear range ±{bound} rad")
            }
        }
    }
}

impl core::error::Error for ModelError {}

fn ensure_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value })
    }
}

fn ensure_non_negative(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value })
    }
}

fn ensure_finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value })
    }
}

/// Rectangular flexure hinge geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexureGeometry {
    /// Young's modulus of the flexible layer, Pa.
    pub youngs_modulus: f64,
    /// Thickness of the flexible layer, m.
    pub thickness: f64,
    /// Width of the hinge, m.
    pub width: f64,
    /// Length of the hinge along the bend, m.
    pub length: f64,
}

impl FlexureGeometry {
    pub fn new(youngs_modulus: f64, thickness: f64, width: f64, length: f64) -> Result<Self, ModelError> {
        let geom = FlexureGeometry { youngs_modulus, thickness, width, length };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_positive("youngs_modulus", self.youngs_modulus)?;
        ensure_positive("thickness", self.thickness)?;
        ensure_positive("width", self.width)?;
        ensure_positive("length", self.length)?;
        if self.thickness > self.width {
            return Err(ModelError::InvalidParameter { name: "thickness > width", value: self.thickness });
        }
        if self.thickness > self.length {
            return Err(ModelError::InvalidParameter { name: "thickness > length", value: self.thickness });
        }
        Ok(())
    }
}

/// Mechanical parameters of one gimbal axis.
///
/// The damping symbol is named `damping` (c_d) rather than `b` to avoid a
/// collision with the wing moment arm of [`RobotParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GimbalAxisParams {
    /// Flexure torsional stiffness k_f, N·m/rad.
    pub flexure_stiffness: f64,
    /// Counterweight mass m_b, kg.
    pub counterweight_mass: f64,
    /// Counterweight lever arm l_b below the axis, m.
    pub counterweight_arm: f64,
    /// Torsional damping c_d from the glycerin rod, N·m·s/rad.
    pub damping: f64,
    /// Moment of inertia about the axis, kg·m².
    pub axis_inertia: f64,
    /// Height of the robot mass above the axis l_R, m (0 when the flexure
    /// axes intersect the robot center of mass).
    pub robot_offset: f64,
}

impl GimbalAxisParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_non_negative("flexure_stiffness", self.flexure_stiffness)?;
        ensure_non_negative("counterweight_mass", self.counterweight_mass)?;
        ensure_non_negative("counterweight_arm", self.counterweight_arm)?;
        ensure_non_negative("damping", self.damping)?;
        ensure_positive("axis_inertia", self.axis_inertia)?;
        ensure_finite("robot_offset", self.robot_offset)?;
        Ok(())
    }

    /// Damping coefficient giving the requested damping ratio ζ against this
    /// axis's sensitivity: c_d = 2ζ√(I·k_s).
    pub fn damping_for_ratio(&self, zeta: f64, gravity: f64) -> Result<f64, ModelError> {
        let k_s = device_sensitivity(self, gravity)?;
        Ok(2.0 * zeta * (self.axis_inertia * k_s).sqrt())
    }
}

impl Default for GimbalAxisParams {
    /// Roll-axis flavored defaults: k_s ≈ 1.518 µN·m/rad split between the
    /// flexure and a 60 mg counterweight at 0.2 mm, damped to ζ ≈ 0.7.
    fn default() -> Self {
        GimbalAxisParams {
            flexure_stiffness: 1.400_28e-6,
            counterweight_mass: 60e-6,
            counterweight_arm: 2e-4,
            damping: 1.157e-7,
            axis_inertia: 4.5e-9,
            robot_offset: 0.0,
        }
    }
}

/// Parameters of the mounted flapping-wing robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    /// Robot mass m_R, kg.
    pub mass: f64,
    /// Diagonal body inertia (J1, J2, J3), kg·m².
    pub inertia: [f64; 3],
    /// Lever arm b from the center of mass to the wings' aerodynamic center,
    /// front view, m. A wing thrust imbalance (T1 − T2) acts through it in roll.
    pub wing_moment_arm_roll: f64,
    /// Lever arm d from the center of mass to the aerodynamic center, side
    /// view, m. Total thrust acts through it in pitch.
    pub wing_moment_arm_pitch: f64,
    /// Wingbeat frequency, Hz.
    pub flap_frequency: f64,
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_positive("mass", self.mass)?;
        for (i, j) in self.inertia.iter().enumerate() {
            if !(*j > 0.0 && j.is_finite()) {
                let names = ["inertia[0]", "inertia[1]", "inertia[2]"];
                return Err(ModelError::InvalidParameter { name: names[i], value: *j });
            }
        }
        ensure_positive("wing_moment_arm_roll", self.wing_moment_arm_roll)?;
        ensure_positive("wing_moment_arm_pitch", self.wing_moment_arm_pitch)?;
        ensure_positive("flap_frequency", self.flap_frequency)?;
        Ok(())
    }
}

impl Default for RobotParams {
    /// A 180 mg robot flapping at 180 beats per second.
    fn default() -> Self {
        RobotParams {
            mass: 1.8e-4,
            inertia: [4.5e-9, 4.5e-9, 9.0e-9],
            wing_moment_arm_roll: 5e-3,
            wing_moment_arm_pitch: 5e-3,
            flap_frequency: 180.0,
        }
    }
}

/// Offsets of the robot and balance masses from the flexure axes.
///
/// The zero vector represents perfect center-of-mass alignment, which the
/// mounting procedure aims for.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MountingGeometry {
    /// Horizontal distance p between the roll flexure and the robot COM, m.
    pub com_offset_roll: f64,
    /// Horizontal distance q between the roll flexure and the balance mass, m.
    pub balance_offset_roll: f64,
    /// Horizontal distance r between the pitch flexure and the robot COM, m.
    pub com_offset_pitch: f64,
    /// Horizontal distance s between the pitch flexure and the balance mass, m.
    pub balance_offset_pitch: f64,
    /// Balance mass m_b, kg.
    pub balance_mass: f64,
}

impl MountingGeometry {
    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_finite("com_offset_roll", self.com_offset_roll)?;
        ensure_finite("balance_offset_roll", self.balance_offset_roll)?;
        ensure_finite("com_offset_pitch", self.com_offset_pitch)?;
        ensure_finite("balance_offset_pitch", self.balance_offset_pitch)?;
        ensure_non_negative("balance_mass", self.balance_mass)?;
        Ok(())
    }
}

/// Voltage-domain control input for the two-wing drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationCommand {
    /// Base sinusoid amplitude V_amp, V.
    pub amplitude: f64,
    /// Roll differential ΔV = V_amp1 − V_amp2, V.
    pub roll_differential: f64,
    /// Pitch offset V_off shifting the signal mean, V.
    pub pitch_offset: f64,
    /// Bias rail V_bias; the analog drive floats in [0, V_bias], V.
    pub bias_rail: f64,
}

/// Default drive bias rail, V.
pub const DEFAULT_BIAS_RAIL: f64 = 250.0;

impl ActuationCommand {
    /// Command with the default 250 V bias rail.
    pub fn new(amplitude: f64, roll_differential: f64, pitch_offset: f64) -> Self {
        ActuationCommand {
            amplitude,
            roll_differential,
            pitch_offset,
            bias_rail: DEFAULT_BIAS_RAIL,
        }
    }

    pub fn with_bias_rail(mut self, bias_rail: f64) -> Self {
        self.bias_rail = bias_rail;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        ensure_positive("amplitude", self.amplitude)?;
        ensure_finite("roll_differential", self.roll_differential)?;
        ensure_finite("pitch_offset", self.pitch_offset)?;
        ensure_positive("bias_rail", self.bias_rail)?;
        Ok(())
    }
}

/// Stroke-averaged torque about the two flexure axes, N·m.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TorqueVector {
    pub roll: f64,
    pub pitch: f64,
}

impl TorqueVector {
    pub fn new(roll: f64, pitch: f64) -> Self {
        TorqueVector { roll, pitch }
    }
}

/// Amplitude and mean of one wing's sinusoidal drive signal, V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingSignal {
    pub amplitude: f64,
    pub mean: f64,
}

impl WingSignal {
    /// True when the signal excursion mean ± amplitude leaves [0, rail].
    fn clips(&self, rail: f64) -> bool {
        self.mean + self.amplitude > rail || self.mean - self.amplitude < 0.0
    }
}

/// Per-wing drive envelope derived from an [`ActuationCommand`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingEnvelope {
    pub wing1: WingSignal,
    pub wing2: WingSignal,
    /// True when either wing's excursion hits the 0/V_bias rails.
    pub clipped: bool,
}

/// Bending stiffness of a rectangular flexure hinge: E·t³·w / (12·L), N·m/rad.
///
/// # Examples
///
/// ```
/// use flexgim_core::model::{flexure_stiffness, FlexureGeometry};
/// let geom = FlexureGeometry::new(2.5e9, 12e-6, 3e-3, 500e-6).unwrap();
/// let k = flexure_stiffness(&geom).unwrap();
/// assert!((k - 2.16e-6).abs() < 1e-12);
/// ```
pub fn flexure_stiffness(geom: &FlexureGeometry) -> Result<f64, ModelError> {
    geom.validate()?;
    let t3 = geom.thickness * geom.thickness * geom.thickness;
    Ok(geom.youngs_modulus * t3 * geom.width / (12.0 * geom.length))
}

/// Effective sensitivity of one axis: k_s = m_b·g·l_b + k_f, N·m/rad.
///
/// The counterweight term carries g, which the small-angle derivation needs
/// for dimensional consistency with the flexure term.
pub fn device_sensitivity(axis: &GimbalAxisParams, gravity: f64) -> Result<f64, ModelError> {
    axis.validate()?;
    ensure_positive("gravity", gravity)?;
    let k_s = axis.counterweight_mass * gravity * axis.counterweight_arm + axis.flexure_stiffness;
    if k_s > 0.0 {
        Ok(k_s)
    } else {
        Err(ModelError::DegenerateSensitivity { sensitivity: k_s })
    }
}

/// Torque from a calibration mass hung on a lever: m·g·lever, N·m.
///
/// The sign follows the lever: a positive lever produces a positive torque.
pub fn weight_torque(mass: f64, lever: f64, gravity: f64) -> Result<f64, ModelError> {
    ensure_non_negative("mass", mass)?;
    ensure_finite("lever", lever)?;
    ensure_positive("gravity", gravity)?;
    Ok(mass * gravity * lever)
}

/// Per-wing drive amplitudes and means for a command, with the rail-clipping
/// decision.
///
/// Wing 1 drives at V_amp + ΔV/2 and wing 2 at V_amp − ΔV/2; both share the
/// mean V_bias/2 + V_off. The command clips when any wing's excursion leaves
/// [0, V_bias].
pub fn wing_signal_envelope(cmd: &ActuationCommand) -> Result<WingEnvelope, ModelError> {
    cmd.validate()?;
    let half_dv = cmd.roll_differential / 2.0;
    let mean = cmd.bias_rail / 2.0 + cmd.pitch_offset;
    let wing1 = WingSignal { amplitude: cmd.amplitude + half_dv, mean };
    let wing2 = WingSignal { amplitude: cmd.amplitude - half_dv, mean };
    if wing1.amplitude <= 0.0 {
        return Err(ModelError::InvalidCommand { wing: 1, amplitude: wing1.amplitude });
    }
    if wing2.amplitude <= 0.0 {
        return Err(ModelError::InvalidCommand { wing: 2, amplitude: wing2.amplitude });
    }
    let clipped = wing1.clips(cmd.bias_rail) || wing2.clips(cmd.bias_rail);
    Ok(WingEnvelope { wing1, wing2, clipped })
}

/// Torque read from a static deflection: τ = k_s·θ.
///
/// Refuses deflections beyond `max_angle` (see [`DEFAULT_LINEAR_RANGE`]),
/// where the linear spring model no longer holds.
pub fn torque_from_deflection(angle: f64, sensitivity: f64, max_angle: f64) -> Result<f64, ModelError> {
    ensure_positive("sensitivity", sensitivity)?;
    ensure_positive("max_angle", max_angle)?;
    ensure_finite("angle", angle)?;
    if angle.abs() > max_angle {
        return Err(ModelError::OutOfLinearRange { angle, bound: max_angle });
    }
    Ok(sensitivity * angle)
}

/// Deflection produced by a static torque: θ = τ/k_s. Exact inverse of
/// [`torque_from_deflection`].
pub fn deflection_from_torque(torque: f64, sensitivity: f64, max_angle: f64) -> Result<f64, ModelError> {
    ensure_positive("sensitivity", sensitivity)?;
    ensure_positive("max_angle", max_angle)?;
    ensure_finite("torque", torque)?;
    let angle = torque / sensitivity;
    if angle.abs() > max_angle {
        return Err(ModelError::OutOfLinearRange { angle, bound: max_angle });
    }
    Ok(angle)
}
