//! Fitted quantities and error metrics of the measurement campaign.
//!
//! Everything here is a pure function from measured data to a fit or report:
//! steady-state extraction from traces, the calibration sensitivity fit, the
//! voltage→torque mapping, cross-axis coupling residuals, thrust trends, the
//! inertial bias-torque estimator, and the free-flight validation comparison.
//!
//! All straight-line fits are ordinary least squares with a free intercept.
//! The intercept doubles as a residual-bias diagnostic: a trimmed robot
//! should pass near zero but rarely does exactly.

use alloc::vec::Vec;
use core::fmt;

use crate::dynamics::{inverse_euler_rates, AngleTrace, DynamicsError};
use crate::model::{ActuationCommand, TorqueVector};

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

/// Errors produced by the estimation routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimationError {
    /// Trace shorter than the protocol requires.
    InsufficientData { required: f64, available: f64 },
    /// Not enough samples or trials for the requested estimate.
    TooFewSamples { minimum: usize, actual: usize },
    /// The regressor has no spread; no line can be fit.
    RankDeficient,
    /// Calibration torques must include both rotation directions.
    OneSidedTorques,
    /// A trial is missing its thrust channel.
    MissingThrust,
    /// The fitted line spans no torque range; percentages are undefined.
    DegenerateRange,
    /// Free-flight points coincide; no line can be drawn through them.
    CoincidentPoints,
    /// Attitude too close to the Euler singularity for rate reconstruction.
    Singularity { pitch_angle: f64 },
    /// Invalid argument (non-positive rate, bad window, …).
    InvalidParameter { name: &'static str, value: f64 },
}

impl fmt::Display for EstimationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimationError::InsufficientData { required, available } => {
                write!(f, "trace covers {available} s but {required} s are required")
            }
            EstimationError::TooFewSamples { minimum, actual } => {
                write!(f, "need at least {minimum} samples, got {actual}")
            }
            EstimationError::RankDeficient => write!(f, "regressor values are all identical"),
            EstimationError::OneSidedTorques => {
                write!(f, "calibration requires torques in both directions")
            }
            EstimationError::MissingThrust => write!(f, "trial has no thrust channel"),
            EstimationError::DegenerateRange => write!(f, "fitted torque range is zero"),
            EstimationError::CoincidentPoints => write!(f, "free-flight points coincide"),
            EstimationError::Singularity { pitch_angle } => {
                write!(f, "pitch angle {pitch_angle} rad too close to the Euler singularity")
            }
            EstimationError::InvalidParameter { name, value } => {
                write!(f, "invalid parameter {name} = {value}")
            }
        }
    }
}

impl core::error::Error for EstimationError {}

impl From<DynamicsError> for EstimationError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Singularity { pitch_angle } => EstimationError::Singularity { pitch_angle },
            _ => EstimationError::InvalidParameter { name: "dynamics", value: f64::NAN },
        }
    }
}

/// Ordinary least squares of y on x with a free intercept.
///
/// R² is computed as SS_explained / (SS_explained + SS_residual), which is
/// the textbook coefficient of determination for an intercept fit and lies
/// in [0, 1] by construction. A perfectly constant dataset (zero residual,
/// zero spread in y) reports R² = 1.
fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), EstimationError> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(EstimationError::TooFewSamples { minimum: 2, actual: n });
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(EstimationError::RankDeficient);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_explained = slope * slope * sxx;
    let mut ss_residual = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - (slope * x + intercept);
        ss_residual += r * r;
    }
    let denom = ss_explained + ss_residual;
    let r_squared = if denom == 0.0 { 1.0 } else { ss_explained / denom };
    Ok((slope, intercept, r_squared))
}

/// Steady-state means of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Mean roll angle over the window, rad.
    pub roll: f64,
    /// Mean pitch angle over the window, rad.
    pub pitch: f64,
    /// Mean thrust over the window, N, when the trace carries it.
    pub thrust: Option<f64>,
    /// False when the window's peak-to-peak angle exceeds the settle
    /// tolerance on either axis.
    pub settled: bool,
}

/// Averages the final `window` seconds of a trial trace.
///
/// The trace must span at least `total` seconds (the commanded trial length);
/// the mean is taken over the last `window` seconds so the robot has had
/// `total − window` seconds to reach a steady angle.
pub fn steady_state_mean(
    trace: &AngleTrace,
    window: f64,
    total: f64,
    settle_tolerance: f64,
) -> Result<SteadyState, EstimationError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(EstimationError::InvalidParameter { name: "window", value: window });
    }
    if !(total >= window && total.is_finite()) {
        return Err(EstimationError::InvalidParameter { name: "total", value: total });
    }
    if !(settle_tolerance > 0.0 && settle_tolerance.is_finite()) {
        return Err(EstimationError::InvalidParameter {
            name: "settle_tolerance",
            value: settle_tolerance,
        });
    }
    let duration = trace.duration();
    if duration + 1e-9 < total {
        return Err(EstimationError::InsufficientData { required: total, available: duration });
    }
    let t_end = trace.samples().last().expect("validated non-empty").time;
    let cutoff = t_end - window - 1e-9;
    let tail: Vec<_> = trace.samples().iter().filter(|s| s.time >= cutoff).collect();
    let n = tail.len() as f64;

    let mut roll_sum = 0.0;
    let mut pitch_sum = 0.0;
    let mut thrust_sum = 0.0;
    let (mut roll_min, mut roll_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut pitch_min, mut pitch_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &tail {
        roll_sum += s.roll;
        pitch_sum += s.pitch;
        thrust_sum += s.thrust.unwrap_or(0.0);
        roll_min = roll_min.min(s.roll);
        roll_max = roll_max.max(s.roll);
        pitch_min = pitch_min.min(s.pitch);
        pitch_max = pitch_max.max(s.pitch);
    }
    let settled =
        (roll_max - roll_min) <= settle_tolerance && (pitch_max - pitch_min) <= settle_tolerance;
    Ok(SteadyState {
        roll: roll_sum / n,
        pitch: pitch_sum / n,
        thrust: trace.has_thrust().then(|| thrust_sum / n),
        settled,
    })
}

/// One applied-torque/measured-angle pair from the calibration protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPoint {
    /// Known torque hung on the axis (signed), N·m.
    pub applied_torque: f64,
    /// Resulting static deflection, rad.
    pub measured_angle: f64,
}

/// Least-squares sensitivity of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityFit {
    /// Fitted sensitivity k_s = dτ/dθ, N·m/rad.
    pub sensitivity: f64,
    /// Torque intercept, N·m — a mounting-bias diagnostic, ideally zero.
    pub intercept: f64,
    /// Coefficient of determination ∈ [0, 1].
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits torque against angle over the calibration points, returning the slope
/// as the axis sensitivity.
///
/// The point set must exercise both rotation directions (torques of both
/// signs), as the calibration protocol demands.
pub fn fit_sensitivity(points: &[CalibrationPoint]) -> Result<SensitivityFit, EstimationError> {
    if points.len() < 2 {
        return Err(EstimationError::TooFewSamples { minimum: 2, actual: points.len() });
    }
    let has_positive = points.iter().any(|p| p.applied_torque > 0.0);
    let has_negative = points.iter().any(|p| p.applied_torque < 0.0);
    if !(has_positive && has_negative) {
        return Err(EstimationError::OneSidedTorques);
    }
    let angles: Vec<f64> = points.iter().map(|p| p.measured_angle).collect();
    let torques: Vec<f64> = points.iter().map(|p| p.applied_torque).collect();
    let (slope, intercept, r_squared) = linear_fit(&angles, &torques)?;
    Ok(SensitivityFit { sensitivity: slope, intercept, r_squared, n_points: points.len() })
}

/// Least-squares line of measured torque against one axis's command voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingFit {
    /// Torque per volt, N·m/V.
    pub slope: f64,
    /// Torque at zero command, N·m.
    pub intercept: f64,
    /// Coefficient of determination ∈ [0, 1].
    pub r_squared: f64,
    pub n_points: usize,
}

impl MappingFit {
    /// Torque the fitted line predicts at a voltage.
    pub fn predict(&self, voltage: f64) -> f64 {
        self.slope * voltage + self.intercept
    }
}

/// The two per-axis mapping fits of one campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingFits {
    pub roll: MappingFit,
    pub pitch: MappingFit,
}

/// Selects which axis of a trial set an operation works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorqueAxis {
    Roll,
    Pitch,
}

impl TorqueAxis {
    /// The command voltage that actuates this axis.
    pub fn voltage(&self, cmd: &ActuationCommand) -> f64 {
        match self {
            TorqueAxis::Roll => cmd.roll_differential,
            TorqueAxis::Pitch => cmd.pitch_offset,
        }
    }

    /// The measured torque component on this axis.
    pub fn torque(&self, tau: &TorqueVector) -> f64 {
        match self {
            TorqueAxis::Roll => tau.roll,
            TorqueAxis::Pitch => tau.pitch,
        }
    }
}

/// Fits each axis's measured torque against its own command voltage, pooling
/// all settings of the other axis as repeated measurements.
pub fn fit_voltage_torque_mapping(
    trials: &[(ActuationCommand, TorqueVector)],
) -> Result<MappingFits, EstimationError> {
    let fit_axis = |axis: TorqueAxis| -> Result<MappingFit, EstimationError> {
        let xs: Vec<f64> = trials.iter().map(|(cmd, _)| axis.voltage(cmd)).collect();
        let ys: Vec<f64> = trials.iter().map(|(_, tau)| axis.torque(tau)).collect();
        let (slope, intercept, r_squared) = linear_fit(&xs, &ys)?;
        Ok(MappingFit { slope, intercept, r_squared, n_points: trials.len() })
    };
    Ok(MappingFits { roll: fit_axis(TorqueAxis::Roll)?, pitch: fit_axis(TorqueAxis::Pitch)? })
}

/// Residual of one trial against the single-axis trendline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub roll_differential: f64,
    pub pitch_offset: f64,
    /// measured − fitted torque, N·m.
    pub residual: f64,
}

/// Cross-axis coupling metrics for one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// Largest trendline residual magnitude, N·m.
    pub max_abs_residual: f64,
    /// Span of the fitted line over the commanded grid, N·m.
    pub actuated_range: f64,
    /// 100 · max_abs_residual / actuated_range.
    pub percent_of_range: f64,
    /// Per-command residuals for plotting.
    pub residual_grid: Vec<ResidualPoint>,
}

/// Residuals of the measured torques against one axis's mapping fit,
/// expressed relative to the actuated torque range.
///
/// The range uses the fitted line over the commanded voltages rather than
/// measured extrema, which keeps the metric insensitive to single-trial
/// noise.
pub fn coupling_error(
    trials: &[(ActuationCommand, TorqueVector)],
    fit: &MappingFit,
    axis: TorqueAxis,
) -> Result<CouplingReport, EstimationError> {
    if trials.is_empty() {
        return Err(EstimationError::TooFewSamples { minimum: 1, actual: 0 });
    }
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    let mut max_abs_residual = 0.0_f64;
    let mut residual_grid = Vec::with_capacity(trials.len());
    for (cmd, tau) in trials {
        let v = axis.voltage(cmd);
        v_min = v_min.min(v);
        v_max = v_max.max(v);
        let residual = axis.torque(tau) - fit.predict(v);
        max_abs_residual = max_abs_residual.max(residual.abs());
        residual_grid.push(ResidualPoint {
            roll_differential: cmd.roll_differential,
            pitch_offset: cmd.pitch_offset,
            residual,
        });
    }
    let actuated_range = fit.slope.abs() * (v_max - v_min);
    if actuated_range <= 0.0 || !actuated_range.is_finite() {
        return Err(EstimationError::DegenerateRange);
    }
    Ok(CouplingReport {
        max_abs_residual,
        actuated_range,
        percent_of_range: 100.0 * max_abs_residual / actuated_range,
        residual_grid,
    })
}

/// Thrust statistics over a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThrustReport {
    /// Mean thrust over all trials, N.
    pub mean_thrust: f64,
    /// Largest deviation from the mean, as a percentage of the mean.
    pub max_percent_deviation: f64,
    /// Thrust trend against pitch offset, N/V.
    pub slope_pitch: f64,
    /// Thrust trend against roll differential, N/V.
    pub slope_roll: f64,
}

/// Mean thrust, worst-case percentage deviation, and the independent thrust
/// trends against each command voltage.
pub fn thrust_analysis(
    trials: &[(ActuationCommand, Option<f64>)],
) -> Result<ThrustReport, EstimationError> {
    if trials.iter().any(|(_, t)| t.is_none()) {
        return Err(EstimationError::MissingThrust);
    }
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for (cmd, _) in trials {
        let key = (cmd.roll_differential, cmd.pitch_offset);
        if !distinct.contains(&key) {
            distinct.push(key);
        }
    }
    if distinct.len() < 3 {
        return Err(EstimationError::TooFewSamples { minimum: 3, actual: distinct.len() });
    }
    let thrusts: Vec<f64> = trials.iter().map(|(_, t)| t.expect("checked above")).collect();
    let mean = thrusts.iter().sum::<f64>() / thrusts.len() as f64;
    if mean == 0.0 {
        return Err(EstimationError::DegenerateRange);
    }
    let max_dev = thrusts.iter().map(|t| (t - mean).abs()).fold(0.0_f64, f64::max);
    let voffs: Vec<f64> = trials.iter().map(|(c, _)| c.pitch_offset).collect();
    let dvs: Vec<f64> = trials.iter().map(|(c, _)| c.roll_differential).collect();
    let (slope_pitch, _, _) = linear_fit(&voffs, &thrusts)?;
    let (slope_roll, _, _) = linear_fit(&dvs, &thrusts)?;
    Ok(ThrustReport {
        mean_thrust: mean,
        max_percent_deviation: 100.0 * max_dev / mean.abs(),
        slope_pitch,
        slope_roll,
    })
}

/// How the inertial bias estimator treats the rigid-body equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMethod {
    /// τ̂ = J·ω̂̇ — valid when ω × Jω vanishes (mounted regime, ω3 = 0 and
    /// matched roll/pitch inertia).
    DiagonalJ,
    /// τ̂ = J·ω̂̇ + ω̂ × Jω̂ — the full Euler equation.
    Full,
}

/// Bias torque recovered from an attitude time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasTorqueEstimate {
    /// Body-frame bias torque, N·m.
    pub tau: [f64; 3],
    pub method: BiasMethod,
}

/// Recovers the constant body torque driving an attitude trace.
///
/// Euler-angle rates come from central differences; body rates through
/// W⁻¹(θ); the angular acceleration from a 5-point quadratic
/// (Savitzky–Golay) derivative, which keeps the double differentiation from
/// amplifying sample noise. The estimate is the mean over all interior
/// samples.
pub fn estimate_bias_torque(
    sample_rate: f64,
    angles: &[[f64; 3]],
    inertia: [f64; 3],
    method: BiasMethod,
) -> Result<BiasTorqueEstimate, EstimationError> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(EstimationError::InvalidParameter { name: "sample_rate", value: sample_rate });
    }
    for (i, j) in inertia.iter().enumerate() {
        if !(*j > 0.0 && j.is_finite()) {
            let names = ["inertia[0]", "inertia[1]", "inertia[2]"];
            return Err(EstimationError::InvalidParameter { name: names[i], value: *j });
        }
    }
    let n = angles.len();
    if n < 7 {
        return Err(EstimationError::TooFewSamples { minimum: 7, actual: n });
    }
    let dt = 1.0 / sample_rate;

    // body rates at interior samples k ∈ [1, n−2]
    let mut omega = Vec::with_capacity(n - 2);
    for k in 1..n - 1 {
        let mut euler_rate = [0.0; 3];
        for i in 0..3 {
            euler_rate[i] = (angles[k + 1][i] - angles[k - 1][i]) / (2.0 * dt);
        }
        omega.push(inverse_euler_rates(angles[k], euler_rate)?);
    }

    // 5-point quadratic derivative of ω, then the torque from the Euler
    // equation, averaged over every sample where the stencil fits
    let m = omega.len();
    let mut tau_sum = [0.0; 3];
    let mut count = 0usize;
    for k in 2..m - 2 {
        let mut omega_dot = [0.0; 3];
        for i in 0..3 {
            omega_dot[i] = (-2.0 * omega[k - 2][i] - omega[k - 1][i]
                + omega[k + 1][i]
                + 2.0 * omega[k + 2][i])
                / (10.0 * dt);
        }
        let w = omega[k];
        let j_w = [inertia[0] * w[0], inertia[1] * w[1], inertia[2] * w[2]];
        let mut tau = [
            inertia[0] * omega_dot[0],
            inertia[1] * omega_dot[1],
            inertia[2] * omega_dot[2],
        ];
        if method == BiasMethod::Full {
            tau[0] += w[1] * j_w[2] - w[2] * j_w[1];
            tau[1] += w[2] * j_w[0] - w[0] * j_w[2];
            tau[2] += w[0] * j_w[1] - w[1] * j_w[0];
        }
        for i in 0..3 {
            tau_sum[i] += tau[i];
        }
        count += 1;
    }
    let nf = count as f64;
    Ok(BiasTorqueEstimate {
        tau: [tau_sum[0] / nf, tau_sum[1] / nf, tau_sum[2] / nf],
        method,
    })
}

/// Device-vs-free-flight comparison for one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// Worst relative discrepancy between the device line and the free-flight
    /// line over the shared voltage range, %.
    pub percent_error: f64,
    pub device_slope: f64,
    pub freeflight_slope: f64,
    pub n_points: usize,
}

/// Compares a device mapping fit against free-flight ground truth.
///
/// Each free-flight point pairs a trim voltage with the known offset-weight
/// torque it had to cancel. A line through those points is the ground-truth
/// mapping; the reported error is the largest gap between the two lines over
/// the free-flight voltage span, relative to the largest ground-truth torque
/// magnitude on that span.
pub fn validate_mapping(
    device: &MappingFit,
    points: &[(f64, f64)],
) -> Result<ValidationReport, EstimationError> {
    if points.len() < 2 {
        return Err(EstimationError::TooFewSamples { minimum: 2, actual: points.len() });
    }
    let volts: Vec<f64> = points.iter().map(|p| p.0).collect();
    let torques: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (ff_slope, ff_intercept, _) = match linear_fit(&volts, &torques) {
        Err(EstimationError::RankDeficient) => return Err(EstimationError::CoincidentPoints),
        other => other?,
    };
    let v_lo = volts.iter().cloned().fold(f64::INFINITY, f64::min);
    let v_hi = volts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let freeflight = |v: f64| ff_slope * v + ff_intercept;
    // both curves are lines, so the largest gap sits at an endpoint
    let gap_lo = (device.predict(v_lo) - freeflight(v_lo)).abs();
    let gap_hi = (device.predict(v_hi) - freeflight(v_hi)).abs();
    let scale = freeflight(v_lo).abs().max(freeflight(v_hi).abs());
    if scale == 0.0 {
        return Err(EstimationError::DegenerateRange);
    }
    Ok(ValidationReport {
        percent_error: 100.0 * gap_lo.max(gap_hi) / scale,
        device_slope: device.slope,
        freeflight_slope: ff_slope,
        n_points: points.len(),
    })
}
