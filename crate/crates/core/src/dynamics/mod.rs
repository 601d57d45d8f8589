//! Ground-truth plant and time-domain simulation of the gimbal-mounted robot.
//!
//! The plant maps a drive command to stroke-averaged roll/pitch torques and
//! thrust — this is the hidden linear model the measurement campaign tries to
//! recover. The simulation integrates the two flexure axes under that torque
//! with fixed-step RK4, producing the angle traces the estimation module
//! consumes. An integral trimming controller closes the loop to recover bias
//! torques.

mod integrator;
mod kinematics;
mod sim;
mod trim;

pub use integrator::{rk4_step, step_rk4};
pub use kinematics::{
    euler_rate_matrix, euler_rate_matrix_inverse, inverse_euler_rates, mat3_mul, mat3_vec_mul,
    SINGULARITY_MARGIN,
};
pub use sim::{simulate_applied_torque, simulate_trial, SimOptions};
pub use trim::{run_trim_controller, TrimOutcome, TrimSettings};

use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{
    wing_signal_envelope, ActuationCommand, GimbalAxisParams, ModelError, RobotParams,
    TorqueVector,
};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

/// Errors produced by the plant and simulation layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DynamicsError {
    /// The command clips the drive rails; the plant refuses it.
    RejectedCommand { roll_differential: f64, pitch_offset: f64 },
    /// The integrated state stopped being finite at the given time.
    Divergence { time: f64 },
    /// Pitch angle too close to the ±90° Euler singularity.
    Singularity { pitch_angle: f64 },
    /// The trim loop did not settle within its allotted duration.
    ConvergenceFailure { residual_angle: f64, residual_rate: f64 },
    /// A malformed trace or parameter.
    InvalidParameter { name: &'static str, value: f64 },
    /// An underlying model-type invariant failed.
    Model(ModelError),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::RejectedCommand { roll_differential, pitch_offset } => write!(
                f,
                "command (ΔV = {roll_differential} V, V_off = {pitch_offset} V) clips the drive rails"
            ),
            DynamicsError::Divergence { time } => {
                write!(f, "simulation diverged at t = {time} s")
            }
            DynamicsError::Singularity { pitch_angle } => {
                write!(f, "pitch angle {pitch_angle} rad too close to the Euler singularity")
            }
            DynamicsError::ConvergenceFailure { residual_angle, residual_rate } => write!(
                f,
                "trim loop failed to converge (residual angle {residual_angle} rad, rate {residual_rate} rad/s)"
            ),
            DynamicsError::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
            DynamicsError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DynamicsError {}

impl From<ModelError> for DynamicsError {
    fn from(e: ModelError) -> Self {
        DynamicsError::Model(e)
    }
}

/// Hidden ground-truth mapping from drive voltages to stroke-averaged torque
/// and thrust.
///
/// Torques are linear in the command with a fixed bias and a cross-axis
/// leakage term per axis; thrust is linear in both commands around a hover
/// value. The tether acts as a weak torsional spring on each axis, and the
/// per-trial measurement noise is zero-mean Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantModel {
    /// Roll torque per volt of roll differential, N·m/V.
    pub roll_gain: f64,
    /// Pitch torque per volt of pitch offset, N·m/V.
    pub pitch_gain: f64,
    /// Manufacturing bias torque in roll, N·m.
    pub roll_bias: f64,
    /// Manufacturing bias torque in pitch, N·m.
    pub pitch_bias: f64,
    /// Roll torque leaked per volt of pitch offset, N·m/V.
    pub cross_gain_roll_from_pitch: f64,
    /// Pitch torque leaked per volt of roll differential, N·m/V.
    pub cross_gain_pitch_from_roll: f64,
    /// Stroke-averaged thrust at the hover command, N.
    pub thrust_at_hover: f64,
    /// Thrust change per volt of pitch offset, N/V.
    pub thrust_slope_pitch: f64,
    /// Thrust change per volt of roll differential, N/V.
    pub thrust_slope_roll: f64,
    /// Tether torsional stiffness per axis, N·m/rad.
    pub tether_stiffness: f64,
    /// Per-trial, stroke-averaged torque noise σ, N·m. The same σ is applied
    /// to the thrust channel.
    pub torque_noise_sigma: f64,
}

impl PlantModel {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("roll_gain", self.roll_gain),
            ("pitch_gain", self.pitch_gain),
            ("roll_bias", self.roll_bias),
            ("pitch_bias", self.pitch_bias),
            ("cross_gain_roll_from_pitch", self.cross_gain_roll_from_pitch),
            ("cross_gain_pitch_from_roll", self.cross_gain_pitch_from_roll),
            ("thrust_slope_pitch", self.thrust_slope_pitch),
            ("thrust_slope_roll", self.thrust_slope_roll),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(DynamicsError::InvalidParameter { name, value });
            }
        }
        if !(self.thrust_at_hover > 0.0 && self.thrust_at_hover.is_finite()) {
            return Err(DynamicsError::InvalidParameter {
                name: "thrust_at_hover",
                value: self.thrust_at_hover,
            });
        }
        if !(self.tether_stiffness >= 0.0 && self.tether_stiffness.is_finite()) {
            return Err(DynamicsError::InvalidParameter {
                name: "tether_stiffness",
                value: self.tether_stiffness,
            });
        }
        if !(self.torque_noise_sigma >= 0.0 && self.torque_noise_sigma.is_finite()) {
            return Err(DynamicsError::InvalidParameter {
                name: "torque_noise_sigma",
                value: self.torque_noise_sigma,
            });
        }
        Ok(())
    }
}

impl Default for PlantModel {
    /// Gains back-computed from the reference device's coupling percentages,
    /// hover thrust equal to a 180 mg robot's weight, no bias, no cross
    /// leakage, no tether, no noise.
    fn default() -> Self {
        PlantModel {
            roll_gain: 0.247e-6,
            pitch_gain: 0.162e-6,
            roll_bias: 0.0,
            pitch_bias: 0.0,
            cross_gain_roll_from_pitch: 0.0,
            cross_gain_pitch_from_roll: 0.0,
            thrust_at_hover: 1.8e-4 * crate::model::STANDARD_GRAVITY,
            thrust_slope_pitch: -0.257e-6 * crate::model::STANDARD_GRAVITY,
            thrust_slope_roll: -0.078e-6 * crate::model::STANDARD_GRAVITY,
            tether_stiffness: 0.0,
            torque_noise_sigma: 0.0,
        }
    }
}

/// Angular state of the two flexure axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GimbalState {
    /// Roll angle θx, rad.
    pub roll: f64,
    /// Pitch angle θy, rad.
    pub pitch: f64,
    /// Roll rate, rad/s.
    pub roll_rate: f64,
    /// Pitch rate, rad/s.
    pub pitch_rate: f64,
}

impl GimbalState {
    pub fn is_finite(&self) -> bool {
        self.roll.is_finite()
            && self.pitch.is_finite()
            && self.roll_rate.is_finite()
            && self.pitch_rate.is_finite()
    }
}

/// Full attitude state in zyx Euler angles with body rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttitudeState {
    /// Euler angles (θx roll, θy pitch, θz yaw), rad, zyx order.
    pub angles: [f64; 3],
    /// Body angular rates (ω1, ω2, ω3), rad/s.
    pub rates: [f64; 3],
}

impl AttitudeState {
    /// Attitude of the mounted robot: yaw is locked by the gimbal (θz = 0)
    /// and the body rates follow from ω = W⁻¹(θ)·θ̇.
    pub fn from_gimbal(state: &GimbalState) -> Result<Self, DynamicsError> {
        let angles = [state.roll, state.pitch, 0.0];
        let rates = kinematics::inverse_euler_rates(
            angles,
            [state.roll_rate, state.pitch_rate, 0.0],
        )?;
        Ok(AttitudeState { angles, rates })
    }
}

/// Integral gains of the trimming controller, N·m/(rad·s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimGains {
    pub ki_roll: f64,
    pub ki_pitch: f64,
}

impl TrimGains {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.ki_roll >= 0.0 && self.ki_roll.is_finite()) {
            return Err(DynamicsError::InvalidParameter { name: "ki_roll", value: self.ki_roll });
        }
        if !(self.ki_pitch >= 0.0 && self.ki_pitch.is_finite()) {
            return Err(DynamicsError::InvalidParameter { name: "ki_pitch", value: self.ki_pitch });
        }
        Ok(())
    }
}

impl Default for TrimGains {
    /// Pitch gain 3× the roll gain: pitch must hold station first for the
    /// roll readout to stay on its own axis.
    fn default() -> Self {
        TrimGains { ki_roll: 4e-6, ki_pitch: 1.2e-5 }
    }
}

/// The assembled sensor: both axes, the mounted robot, and local gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gimbal {
    pub roll_axis: GimbalAxisParams,
    pub pitch_axis: GimbalAxisParams,
    pub robot: RobotParams,
    /// Gravitational acceleration, m/s².
    pub gravity: f64,
}

impl Gimbal {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.roll_axis.validate()?;
        self.pitch_axis.validate()?;
        self.robot.validate()?;
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err(DynamicsError::InvalidParameter { name: "gravity", value: self.gravity });
        }
        Ok(())
    }
}

impl Default for Gimbal {
    fn default() -> Self {
        // pitch flexure stiffened so k_s lands on the measured pitch value
        let pitch_axis = GimbalAxisParams {
            flexure_stiffness: 1.764_28e-6,
            ..GimbalAxisParams::default()
        };
        Gimbal {
            roll_axis: GimbalAxisParams::default(),
            pitch_axis,
            robot: RobotParams::default(),
            gravity: crate::model::STANDARD_GRAVITY,
        }
    }
}

/// One motion-capture sample of the mounted robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    /// Time since trial start, s.
    pub time: f64,
    /// Roll angle θx, rad.
    pub roll: f64,
    /// Pitch angle θy, rad.
    pub pitch: f64,
    /// Vertical force on the scale, N, when the scale channel was recorded.
    pub thrust: Option<f64>,
}

/// Uniformly sampled time series of roll/pitch angles (plus optional thrust).
#[derive(Debug, Clone, PartialEq)]
pub struct AngleTrace {
    sample_rate: f64,
    samples: Vec<TraceSample>,
}

/// Tolerance on sample spacing uniformity, s.
pub const TRACE_SPACING_TOLERANCE: f64 = 1e-9;

impl AngleTrace {
    /// Validates strictly increasing, uniformly spaced timestamps (within
    /// [`TRACE_SPACING_TOLERANCE`]) and a consistent thrust channel.
    pub fn new(sample_rate: f64, samples: Vec<TraceSample>) -> Result<Self, DynamicsError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(DynamicsError::InvalidParameter { name: "sample_rate", value: sample_rate });
        }
        if samples.is_empty() {
            return Err(DynamicsError::InvalidParameter { name: "samples.len", value: 0.0 });
        }
        let dt = 1.0 / sample_rate;
        let has_thrust = samples[0].thrust.is_some();
        for (i, s) in samples.iter().enumerate() {
            if !(s.time.is_finite() && s.roll.is_finite() && s.pitch.is_finite()) {
                return Err(DynamicsError::InvalidParameter { name: "sample", value: s.time });
            }
            if s.thrust.is_some() != has_thrust {
                return Err(DynamicsError::InvalidParameter {
                    name: "thrust channel must be all-or-none",
                    value: s.time,
                });
            }
            if i > 0 {
                let step = s.time - samples[i - 1].time;
                if step <= 0.0 {
                    return Err(DynamicsError::InvalidParameter {
                        name: "non-monotone time",
                        value: s.time,
                    });
                }
                if (step - dt).abs() > TRACE_SPACING_TOLERANCE {
                    return Err(DynamicsError::InvalidParameter {
                        name: "non-uniform sample spacing",
                        value: step,
                    });
                }
            }
        }
        Ok(AngleTrace { sample_rate, samples })
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time spanned from the first to the last sample, s.
    pub fn duration(&self) -> f64 {
        self.samples.last().map(|s| s.time).unwrap_or(0.0)
            - self.samples.first().map(|s| s.time).unwrap_or(0.0)
    }

    pub fn has_thrust(&self) -> bool {
        self.samples.first().map(|s| s.thrust.is_some()).unwrap_or(false)
    }
}

/// Stroke-averaged plant response to one command.
///
/// Returns the (roll, pitch) torque and the thrust the robot produces, with
/// the per-trial noise draw applied. Deterministic for a fixed seed. Clipped
/// commands are rejected — callers screen with
/// [`wing_signal_envelope`](crate::model::wing_signal_envelope).
pub fn plant_output(
    plant: &PlantModel,
    cmd: &ActuationCommand,
    seed: u64,
) -> Result<(TorqueVector, f64), DynamicsError> {
    let envelope = wing_signal_envelope(cmd)?;
    if envelope.clipped {
        return Err(DynamicsError::RejectedCommand {
            roll_differential: cmd.roll_differential,
            pitch_offset: cmd.pitch_offset,
        });
    }
    let dv = cmd.roll_differential;
    let voff = cmd.pitch_offset;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        plant.torque_noise_sigma * z
    };

    let roll = plant.roll_gain * dv + plant.cross_gain_roll_from_pitch * voff + plant.roll_bias + noise();
    let pitch = plant.pitch_gain * voff + plant.cross_gain_pitch_from_roll * dv + plant.pitch_bias + noise();
    let thrust = plant.thrust_at_hover
        + plant.thrust_slope_pitch * voff
        + plant.thrust_slope_roll * dv
        + noise();
    Ok((TorqueVector::new(roll, pitch), thrust))
}

/// Net torque about one flexure axis for an applied stroke-averaged torque.
///
/// Returns τ − [m_b·g·l_b·sin θ − m_R·g·l_R·sin θ + k_f·θ + c_d·θ̇]: the
/// counterweight below the axis restores, a robot mass above the axis (l_R)
/// destabilizes, and the flexure spring and glycerin damper oppose motion.
/// With l_R = 0 the robot-gravity term vanishes, matching a device whose
/// flexure axes intersect the robot's center of mass.
pub fn gimbal_net_torque(
    axis: &GimbalAxisParams,
    robot_mass: f64,
    angle: f64,
    rate: f64,
    applied: f64,
    gravity: f64,
) -> f64 {
    let restoring = axis.counterweight_mass * gravity * axis.counterweight_arm * angle.sin()
        - robot_mass * gravity * axis.robot_offset * angle.sin()
        + axis.flexure_stiffness * angle
        + axis.damping * rate;
    applied - restoring
}

/// Angular accelerations (θ̈x, θ̈y) of the mounted robot under per-wing
/// thrusts T1, T2 and externally supplied trim torques.
///
/// Small-angle equations about the roll flexure axis Ox and pitch flexure
/// axis Oy:
///
/// ```text
/// J1·θ̈x =  (T1 − T2)·b − m_R·g·p + m_b·g·q − k_f·θx − c_d·θ̇x + trim.roll
/// J2·θ̈y = −(T1 + T2)·d + m_R·g·r − m_b·g·s − k_f·θy − c_d·θ̇y + trim.pitch
/// ```
///
/// The damping terms are not part of the ideal balance equations; they model
/// the glycerin rod, without which the device never settles.
#[allow(clippy::too_many_arguments)]
pub fn mounted_robot_accel(
    robot: &RobotParams,
    mount: &crate::model::MountingGeometry,
    roll_axis: &GimbalAxisParams,
    pitch_axis: &GimbalAxisParams,
    thrust_wing1: f64,
    thrust_wing2: f64,
    state: &GimbalState,
    trim: TorqueVector,
    gravity: f64,
) -> (f64, f64) {
    let roll_torque = (thrust_wing1 - thrust_wing2) * robot.wing_moment_arm_roll
        - robot.mass * gravity * mount.com_offset_roll
        + mount.balance_mass * gravity * mount.balance_offset_roll
        - roll_axis.flexure_stiffness * state.roll
        - roll_axis.damping * state.roll_rate
        + trim.roll;
    let pitch_torque = -(thrust_wing1 + thrust_wing2) * robot.wing_moment_arm_pitch
        + robot.mass * gravity * mount.com_offset_pitch
        - mount.balance_mass * gravity * mount.balance_offset_pitch
        - pitch_axis.flexure_stiffness * state.pitch
        - pitch_axis.damping * state.pitch_rate
        + trim.pitch;
    (roll_torque / robot.inertia[0], pitch_torque / robot.inertia[1])
}

/// Derives a per-trial seed from a campaign seed and trial index so trials
/// get independent, reproducible noise streams.
pub fn derive_trial_seed(campaign_seed: u64, trial_index: u64) -> u64 {
    // splitmix64 over the combined value
    let mut z = campaign_seed ^ trial_index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
