//! Trial simulation: constant stroke-averaged input integrated through the
//! two flexure axes.

use alloc::vec::Vec;

use super::integrator::step_rk4;
use super::{
    gimbal_net_torque, plant_output, AngleTrace, DynamicsError, Gimbal, GimbalState, PlantModel,
    TraceSample,
};
use crate::model::{ActuationCommand, TorqueVector};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

/// Angle magnitude treated as a blow-up by the divergence guard, rad.
const DIVERGENCE_ANGLE: f64 = 1e6;

/// Integrator and measurement-model switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Integrator step, s. The default gives ≥40 steps per natural period at
    /// reference parameters.
    pub dt: f64,
    /// Scale the recorded thrust by cos θx·cos θy — the vertical component
    /// seen by the balance when the robot tilts. Disable to mimic an
    /// axis-independent thrust readout.
    pub tilt_correction: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { dt: 1e-4, tilt_correction: true }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::InvalidParameter { name: "dt", value: self.dt });
        }
        Ok(())
    }
}

/// Simulates one 3-second-style trial: the plant's stroke-averaged response
/// to `cmd` drives both axes, the tether spring pulls each axis back, and the
/// angles are sampled at `sample_rate`.
///
/// The thrust channel records the plant thrust (tilt-corrected unless
/// disabled). Deterministic for a fixed seed.
pub fn simulate_trial(
    plant: &PlantModel,
    gimbal: &Gimbal,
    cmd: &ActuationCommand,
    duration: f64,
    sample_rate: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<AngleTrace, DynamicsError> {
    plant.validate()?;
    let (torque, thrust) = plant_output(plant, cmd, seed)?;
    integrate_axes(
        gimbal,
        torque,
        plant.tether_stiffness,
        duration,
        sample_rate,
        opts,
        Some(thrust),
    )
}

/// Simulates the static-calibration protocol: a known constant torque applied
/// about each axis (a mass hung on a lever), no plant, no thrust channel.
pub fn simulate_applied_torque(
    gimbal: &Gimbal,
    applied: TorqueVector,
    tether_stiffness: f64,
    duration: f64,
    sample_rate: f64,
    opts: &SimOptions,
) -> Result<AngleTrace, DynamicsError> {
    if !(tether_stiffness >= 0.0 && tether_stiffness.is_finite()) {
        return Err(DynamicsError::InvalidParameter {
            name: "tether_stiffness",
            value: tether_stiffness,
        });
    }
    integrate_axes(gimbal, applied, tether_stiffness, duration, sample_rate, opts, None)
}

fn integrate_axes(
    gimbal: &Gimbal,
    applied: TorqueVector,
    tether_stiffness: f64,
    duration: f64,
    sample_rate: f64,
    opts: &SimOptions,
    thrust: Option<f64>,
) -> Result<AngleTrace, DynamicsError> {
    gimbal.validate()?;
    opts.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(DynamicsError::InvalidParameter { name: "duration", value: duration });
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(DynamicsError::InvalidParameter { name: "sample_rate", value: sample_rate });
    }

    let accel = |s: &GimbalState| {
        let roll_net = gimbal_net_torque(
            &gimbal.roll_axis,
            gimbal.robot.mass,
            s.roll,
            s.roll_rate,
            applied.roll,
            gimbal.gravity,
        ) - tether_stiffness * s.roll;
        let pitch_net = gimbal_net_torque(
            &gimbal.pitch_axis,
            gimbal.robot.mass,
            s.pitch,
            s.pitch_rate,
            applied.pitch,
            gimbal.gravity,
        ) - tether_stiffness * s.pitch;
        (
            roll_net / gimbal.roll_axis.axis_inertia,
            pitch_net / gimbal.pitch_axis.axis_inertia,
        )
    };

    let sample_dt = 1.0 / sample_rate;
    let substeps = (sample_dt / opts.dt).round().max(1.0) as usize;
    let step_dt = sample_dt / substeps as f64;
    let n_samples = (duration * sample_rate).round() as usize + 1;

    let mut samples = Vec::with_capacity(n_samples);
    let mut state = GimbalState::default();
    for k in 0..n_samples {
        let t = k as f64 / sample_rate;
        if !state.is_finite() || state.roll.abs() > DIVERGENCE_ANGLE || state.pitch.abs() > DIVERGENCE_ANGLE {
            return Err(DynamicsError::Divergence { time: t });
        }
        let recorded_thrust = thrust.map(|f| {
            if opts.tilt_correction {
                f * state.roll.cos() * state.pitch.cos()
            } else {
                f
            }
        });
        samples.push(TraceSample { time: t, roll: state.roll, pitch: state.pitch, thrust: recorded_thrust });
        if k + 1 < n_samples {
            for _ in 0..substeps {
                state = step_rk4(&state, accel, step_dt);
            }
        }
    }
    AngleTrace::new(sample_rate, samples)
}
