//! Integral trimming controller.
//!
//! With the robot mounted and the wings at the hover command, any residual
//! angle is driven by the manufacturing bias torques. A per-axis integral
//! feedback torque −Ki·∫θ dt steers the angle to zero; once the loop settles
//! the integral term holds exactly the bias torque, which is the quantity we
//! are after.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::integrator::rk4_step;
use super::sim::SimOptions;
use super::{
    gimbal_net_torque, AngleTrace, DynamicsError, Gimbal, PlantModel, TraceSample, TrimGains,
};
use crate::model::TorqueVector;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

const DIVERGENCE_ANGLE: f64 = 1e6;

/// Convergence criteria and trace resolution for a trim run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimSettings {
    /// Maximum simulated time before giving up, s.
    pub duration: f64,
    /// Angle magnitude counted as settled, rad.
    pub angle_tolerance: f64,
    /// Rate magnitude counted as settled, rad/s.
    pub rate_tolerance: f64,
    /// Time both axes must stay within tolerance, s.
    pub hold_time: f64,
    /// Trace sampling rate, Hz (also the convergence-check cadence).
    pub sample_rate: f64,
}

impl Default for TrimSettings {
    fn default() -> Self {
        TrimSettings {
            duration: 10.0,
            angle_tolerance: 1e-4,
            rate_tolerance: 1e-3,
            hold_time: 0.5,
            sample_rate: 100.0,
        }
    }
}

impl TrimSettings {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("duration", self.duration),
            ("angle_tolerance", self.angle_tolerance),
            ("rate_tolerance", self.rate_tolerance),
            ("hold_time", self.hold_time),
            ("sample_rate", self.sample_rate),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DynamicsError::InvalidParameter { name, value });
            }
        }
        if self.hold_time >= self.duration {
            return Err(DynamicsError::InvalidParameter {
                name: "hold_time must be < duration",
                value: self.hold_time,
            });
        }
        Ok(())
    }
}

/// Result of a converged trim run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimOutcome {
    /// Recovered bias torques, N·m.
    pub bias: TorqueVector,
    /// Bias expressed as the equivalent roll differential through the plant
    /// roll gain, V. `None` when the gain is zero.
    pub trim_voltage_roll: Option<f64>,
    /// Bias expressed as the equivalent pitch offset, V.
    pub trim_voltage_pitch: Option<f64>,
    /// Time at which the hold window completed, s.
    pub converged_at: f64,
    /// Closed-loop angle trace up to convergence.
    pub trace: AngleTrace,
}

/// Runs the closed trim loop against the plant's bias torques and returns the
/// integral terms as bias estimates once both axes have held within tolerance
/// for the hold window.
///
/// The controller adds −Ki·∫θ dt to each axis. At steady state (θ = θ̈ = 0)
/// that term carries the full bias torque, so the estimate is exact up to the
/// residual deflection allowed by the tolerances.
pub fn run_trim_controller(
    plant: &PlantModel,
    gimbal: &Gimbal,
    gains: &TrimGains,
    settings: &TrimSettings,
    seed: u64,
    opts: &SimOptions,
) -> Result<TrimOutcome, DynamicsError> {
    plant.validate()?;
    gimbal.validate()?;
    gains.validate()?;
    settings.validate()?;
    opts.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        plant.torque_noise_sigma * z
    };
    let bias_roll = plant.roll_bias + noise();
    let bias_pitch = plant.pitch_bias + noise();

    let k_t = plant.tether_stiffness;
    // state layout: [θx, θ̇x, ∫θx, θy, θ̇y, ∫θy]
    let deriv = |y: &[f64; 6]| -> [f64; 6] {
        let roll_net = gimbal_net_torque(
            &gimbal.roll_axis,
            gimbal.robot.mass,
            y[0],
            y[1],
            bias_roll,
            gimbal.gravity,
        ) - k_t * y[0]
            - gains.ki_roll * y[2];
        let pitch_net = gimbal_net_torque(
            &gimbal.pitch_axis,
            gimbal.robot.mass,
            y[3],
            y[4],
            bias_pitch,
            gimbal.gravity,
        ) - k_t * y[3]
            - gains.ki_pitch * y[5];
        [
            y[1],
            roll_net / gimbal.roll_axis.axis_inertia,
            y[0],
            y[4],
            pitch_net / gimbal.pitch_axis.axis_inertia,
            y[3],
        ]
    };

    let sample_dt = 1.0 / settings.sample_rate;
    let substeps = (sample_dt / opts.dt).round().max(1.0) as usize;
    let step_dt = sample_dt / substeps as f64;
    let n_samples = (settings.duration * settings.sample_rate).round() as usize + 1;
    let hold_samples = (settings.hold_time * settings.sample_rate).round() as usize;

    let mut y = [0.0_f64; 6];
    let mut samples = Vec::new();
    let mut held = 0usize;
    for k in 0..n_samples {
        let t = k as f64 / settings.sample_rate;
        if y.iter().any(|v| !v.is_finite()) || y[0].abs() > DIVERGENCE_ANGLE || y[3].abs() > DIVERGENCE_ANGLE {
            return Err(DynamicsError::Divergence { time: t });
        }
        samples.push(TraceSample { time: t, roll: y[0], pitch: y[3], thrust: None });

        let within = y[0].abs() < settings.angle_tolerance
            && y[3].abs() < settings.angle_tolerance
            && y[1].abs() < settings.rate_tolerance
            && y[4].abs() < settings.rate_tolerance;
        held = if within { held + 1 } else { 0 };
        if held >= hold_samples {
            let bias = TorqueVector::new(gains.ki_roll * y[2], gains.ki_pitch * y[5]);
            let voltage = |est: f64, gain: f64| if gain != 0.0 { Some(est / gain) } else { None };
            return Ok(TrimOutcome {
                bias,
                trim_voltage_roll: voltage(bias.roll, plant.roll_gain),
                trim_voltage_pitch: voltage(bias.pitch, plant.pitch_gain),
                converged_at: t,
                trace: AngleTrace::new(settings.sample_rate, samples)?,
            });
        }
        for _ in 0..substeps {
            y = rk4_step(&y, deriv, step_dt);
        }
    }
    Err(DynamicsError::ConvergenceFailure {
        residual_angle: y[0].abs().max(y[3].abs()),
        residual_rate: y[1].abs().max(y[4].abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate_trial;
    use crate::model::ActuationCommand;

    #[test]
    fn zero_bias_reports_zero() {
        let out = run_trim_controller(
            &PlantModel::default(),
            &Gimbal::default(),
            &TrimGains::default(),
            &TrimSettings::default(),
            3,
            &SimOptions::default(),
        )
        .unwrap();
        assert!(out.bias.roll.abs() < 1e-9);
        assert!(out.bias.pitch.abs() < 1e-9);
        assert!((out.converged_at - 0.5).abs() < 0.02);
    }

    #[test]
    fn recovers_injected_roll_bias() {
        let plant = PlantModel { roll_bias: 1.0e-6, ..PlantModel::default() };
        let out = run_trim_controller(
            &plant,
            &Gimbal::default(),
            &TrimGains::default(),
            &TrimSettings::default(),
            3,
            &SimOptions::default(),
        )
        .unwrap();
        assert!((out.bias.roll - 1.0e-6).abs() / 1.0e-6 < 0.01, "bias = {}", out.bias.roll);
        let final_roll = out.trace.samples().last().unwrap().roll;
        assert!(final_roll.abs() < 1e-3);
    }

    #[test]
    fn bias_converts_to_trim_voltage() {
        // a bias equal to 34 V through the roll gain reads back as 34 V
        let plant = PlantModel { roll_bias: 0.247e-6 * 34.0, ..PlantModel::default() };
        let out = run_trim_controller(
            &plant,
            &Gimbal::default(),
            &TrimGains::default(),
            &TrimSettings::default(),
            3,
            &SimOptions::default(),
        )
        .unwrap();
        let v = out.trim_voltage_roll.unwrap();
        assert!((v - 34.0).abs() < 0.34, "v = {v}");
    }

    #[test]
    fn unstable_gains_are_caught() {
        // far beyond the c·k/I stability bound
        let gains = TrimGains { ki_roll: 1.0, ki_pitch: 1.0 };
        let plant = PlantModel { roll_bias: 1e-6, ..PlantModel::default() };
        let err = run_trim_controller(
            &plant,
            &Gimbal::default(),
            &gains,
            &TrimSettings::default(),
            3,
            &SimOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            DynamicsError::Divergence { .. } | DynamicsError::ConvergenceFailure { .. }
        ));
    }

    #[test]
    fn trim_fixed_point_cancels_bias() {
        let plant = PlantModel { roll_bias: 2.5e-6, pitch_bias: -1.2e-6, ..PlantModel::default() };
        let gimbal = Gimbal::default();
        let out = run_trim_controller(
            &plant,
            &gimbal,
            &TrimGains::default(),
            &TrimSettings::default(),
            3,
            &SimOptions::default(),
        )
        .unwrap();
        // apply the estimates as bias negation and fly the hover command:
        // the residual deflection must stay inside the trim tolerance
        let trimmed = PlantModel {
            roll_bias: plant.roll_bias - out.bias.roll,
            pitch_bias: plant.pitch_bias - out.bias.pitch,
            ..plant
        };
        let trace = simulate_trial(
            &trimmed,
            &gimbal,
            &ActuationCommand::new(88.0, 0.0, 0.0),
            3.0,
            100.0,
            9,
            &SimOptions::default(),
        )
        .unwrap();
        for s in trace.samples() {
            assert!(s.roll.abs() < 2e-4 && s.pitch.abs() < 2e-4, "residual at t = {}", s.time);
        }
    }
}
