//! Property-based invariants of the model, kinematics, and fitting layers.

use flexgim_core::dynamics::{
    euler_rate_matrix, euler_rate_matrix_inverse, mat3_mul, plant_output, PlantModel,
};
use flexgim_core::estimation::{
    coupling_error, fit_sensitivity, fit_voltage_torque_mapping, CalibrationPoint, TorqueAxis,
};
use flexgim_core::model::{
    deflection_from_torque, flexure_stiffness, torque_from_deflection, weight_torque,
    wing_signal_envelope, ActuationCommand, FlexureGeometry, TorqueVector, DEFAULT_LINEAR_RANGE,
};
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = FlexureGeometry> {
    (1e8..1e10_f64, 1e-6..1e-4_f64, 1e-3..1e-2_f64, 1e-4..1e-2_f64).prop_map(|(e, t, w, l)| {
        FlexureGeometry {
            youngs_modulus: e,
            thickness: t,
            width: w.max(t * 2.0),
            length: l.max(t * 2.0),
        }
    })
}

proptest! {
    #[test]
    fn flexure_stiffness_scaling_laws(geom in geometry()) {
        let base = flexure_stiffness(&geom).unwrap();

        let wide = FlexureGeometry { width: geom.width * 2.0, ..geom };
        prop_assert_eq!(flexure_stiffness(&wide).unwrap(), base * 2.0);

        let stiff = FlexureGeometry { youngs_modulus: geom.youngs_modulus * 2.0, ..geom };
        prop_assert_eq!(flexure_stiffness(&stiff).unwrap(), base * 2.0);

        let long = FlexureGeometry { length: geom.length * 2.0, ..geom };
        prop_assert_eq!(flexure_stiffness(&long).unwrap(), base / 2.0);

        let thick = FlexureGeometry { thickness: geom.thickness * 2.0, ..geom };
        let ratio = flexure_stiffness(&thick).unwrap() / base;
        prop_assert!((ratio - 8.0).abs() < 1e-12);
    }

    #[test]
    fn deflection_torque_roundtrip(
        torque in -1e-5..1e-5_f64,
        sensitivity in 1e-7..1e-4_f64,
    ) {
        prop_assume!((torque / sensitivity).abs() <= DEFAULT_LINEAR_RANGE);
        let angle = deflection_from_torque(torque, sensitivity, DEFAULT_LINEAR_RANGE).unwrap();
        let back = torque_from_deflection(angle, sensitivity, DEFAULT_LINEAR_RANGE).unwrap();
        if torque != 0.0 {
            prop_assert!((back - torque).abs() / torque.abs() < 1e-12);
        } else {
            prop_assert_eq!(back, 0.0);
        }
    }

    #[test]
    fn clip_decision_mirror_symmetry(
        amp_halves in 1..400i32,
        dv_halves in -300..300i32,
        voff_halves in -100..100i32,
    ) {
        // half-volt grids keep every arithmetic step exact in binary
        let amp = amp_halves as f64 * 0.5;
        let dv = dv_halves as f64 * 0.5;
        let voff = voff_halves as f64 * 0.5;
        let cmd = ActuationCommand::new(amp, dv, voff);
        let mirror = ActuationCommand::new(amp, -dv, -voff);
        match (wing_signal_envelope(&cmd), wing_signal_envelope(&mirror)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.clipped, b.clipped),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "asymmetric validity: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn weight_torque_is_bilinear(
        mass in 0.0..1e-3_f64,
        lever in -1e-2..1e-2_f64,
    ) {
        let base = weight_torque(mass, lever, 9.81).unwrap();
        prop_assert_eq!(weight_torque(mass * 2.0, lever, 9.81).unwrap(), base * 2.0);
        prop_assert_eq!(weight_torque(mass, lever * 2.0, 9.81).unwrap(), base * 2.0);
    }

    #[test]
    fn sensitivity_fit_invariant_under_order_and_sign(
        k in 1e-7..1e-5_f64,
        angles in proptest::collection::vec(-0.2..0.2_f64, 4..12),
    ) {
        let has_both = angles.iter().any(|&a| a > 1e-3) && angles.iter().any(|&a| a < -1e-3);
        prop_assume!(has_both);
        let points: Vec<CalibrationPoint> = angles
            .iter()
            .map(|&a| CalibrationPoint { applied_torque: k * a, measured_angle: a })
            .collect();
        let fit = fit_sensitivity(&points).unwrap();

        let mut reversed = points.clone();
        reversed.reverse();
        let fit_rev = fit_sensitivity(&reversed).unwrap();
        prop_assert!((fit.sensitivity - fit_rev.sensitivity).abs() <= 1e-12 * fit.sensitivity.abs());

        let flipped: Vec<CalibrationPoint> = points
            .iter()
            .map(|p| CalibrationPoint { applied_torque: -p.applied_torque, measured_angle: -p.measured_angle })
            .collect();
        let fit_flip = fit_sensitivity(&flipped).unwrap();
        prop_assert!((fit.sensitivity - fit_flip.sensitivity).abs() <= 1e-12 * fit.sensitivity.abs());
    }

    #[test]
    fn r_squared_stays_in_unit_interval(
        k in -1e-5..1e-5_f64,
        noise in proptest::collection::vec(-1e-6..1e-6_f64, 5..20),
    ) {
        let points: Vec<CalibrationPoint> = noise
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let angle = -0.2 + 0.04 * i as f64;
                CalibrationPoint { applied_torque: k * angle + n + 1e-9, measured_angle: angle }
            })
            .collect();
        let has_both = points.iter().any(|p| p.applied_torque > 0.0)
            && points.iter().any(|p| p.applied_torque < 0.0);
        prop_assume!(has_both);
        let fit = fit_sensitivity(&points).unwrap();
        prop_assert!((0.0..=1.0).contains(&fit.r_squared), "R² = {}", fit.r_squared);
    }

    #[test]
    fn oracle_mapping_roundtrip(
        roll_gain in 1e-8..1e-6_f64,
        pitch_gain in 1e-8..1e-6_f64,
        roll_bias in -1e-6..1e-6_f64,
        pitch_bias in -1e-6..1e-6_f64,
        cross_roll in -1e-8..1e-8_f64,
        cross_pitch in -1e-8..1e-8_f64,
    ) {
        // a noiseless linear plant on the command grid must be recovered
        // exactly: slopes to relative 1e-9, residuals equal to the cross-gain
        // contribution
        let plant = PlantModel {
            roll_gain,
            pitch_gain,
            roll_bias,
            pitch_bias,
            cross_gain_roll_from_pitch: cross_roll,
            cross_gain_pitch_from_roll: cross_pitch,
            ..PlantModel::default()
        };
        let mut trials = Vec::new();
        for dv in [-50.0, -30.0, -15.0, 0.0, 15.0, 30.0, 50.0] {
            for voff in [-10.0, -5.0, 0.0, 5.0, 10.0] {
                let cmd = ActuationCommand::new(88.0, dv, voff);
                let (tau, _) = plant_output(&plant, &cmd, 0).unwrap();
                trials.push((cmd, tau));
            }
        }
        let fits = fit_voltage_torque_mapping(&trials).unwrap();
        prop_assert!((fits.roll.slope - roll_gain).abs() / roll_gain < 1e-9);
        prop_assert!((fits.pitch.slope - pitch_gain).abs() / pitch_gain < 1e-9);

        let report = coupling_error(&trials, &fits.roll, TorqueAxis::Roll).unwrap();
        for p in &report.residual_grid {
            let expected = cross_roll * p.pitch_offset;
            prop_assert!((p.residual - expected).abs() < 1e-15 + 1e-6 * expected.abs());
        }
    }

    #[test]
    fn coupling_percent_invariant_under_torque_scaling(
        scale_exp in -3..4i32,
        cross in 1e-9..1e-7_f64,
    ) {
        let scale = 2.0_f64.powi(scale_exp);
        let base_plant = PlantModel {
            roll_gain: 0.247e-6,
            cross_gain_roll_from_pitch: cross,
            ..PlantModel::default()
        };
        let build = |s: f64| {
            let plant = PlantModel {
                roll_gain: base_plant.roll_gain * s,
                cross_gain_roll_from_pitch: base_plant.cross_gain_roll_from_pitch * s,
                ..base_plant
            };
            let mut trials = Vec::new();
            for dv in [-50.0, -30.0, -15.0, 0.0, 15.0, 30.0, 50.0] {
                for voff in [-10.0, -5.0, 0.0, 5.0, 10.0] {
                    let cmd = ActuationCommand::new(88.0, dv, voff);
                    let (tau, _) = plant_output(&plant, &cmd, 0).unwrap();
                    trials.push((cmd, tau));
                }
            }
            let fits = fit_voltage_torque_mapping(&trials).unwrap();
            coupling_error(&trials, &fits.roll, TorqueAxis::Roll).unwrap()
        };
        let unscaled = build(1.0);
        let scaled = build(scale);
        // powers of two scale every torque exactly, so the ratio is preserved
        prop_assert!((unscaled.percent_of_range - scaled.percent_of_range).abs() < 1e-9);
    }

    #[test]
    fn euler_rate_matrix_inverts(
        roll in -3.1..3.1_f64,
        pitch in -1.47..1.47_f64,
        yaw in -3.1..3.1_f64,
    ) {
        let angles = [roll, pitch, yaw];
        let w = euler_rate_matrix(angles).unwrap();
        let w_inv = euler_rate_matrix_inverse(angles).unwrap();
        let prod = mat3_mul(&w, &w_inv);
        for (i, row) in prod.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn settled_flag_monotone_in_tolerance(
        amplitude in 0.0..0.05_f64,
        tol_a in 1e-4..0.1_f64,
        tol_b in 1e-4..0.1_f64,
    ) {
        use flexgim_core::dynamics::{AngleTrace, TraceSample};
        use flexgim_core::estimation::steady_state_mean;
        let samples: Vec<TraceSample> = (0..301)
            .map(|k| {
                let t = k as f64 / 100.0;
                TraceSample { time: t, roll: amplitude * (40.0 * t).sin(), pitch: 0.0, thrust: None }
            })
            .collect();
        let trace = AngleTrace::new(100.0, samples).unwrap();
        let (lo, hi) = if tol_a <= tol_b { (tol_a, tol_b) } else { (tol_b, tol_a) };
        let strict = steady_state_mean(&trace, 0.5, 3.0, lo).unwrap();
        let loose = steady_state_mean(&trace, 0.5, 3.0, hi).unwrap();
        // tightening the tolerance can only withdraw the settled flag
        prop_assert!(!strict.settled || loose.settled);
    }

    #[test]
    fn gravity_balanced_axis_produces_no_torque(theta in -1.5..1.5_f64) {
        use flexgim_core::dynamics::gimbal_net_torque;
        use flexgim_core::model::GimbalAxisParams;
        let axis = GimbalAxisParams {
            flexure_stiffness: 0.0,
            counterweight_mass: 2e-4,
            counterweight_arm: 3e-3,
            damping: 0.0,
            robot_offset: 3e-3,
            ..GimbalAxisParams::default()
        };
        let net = gimbal_net_torque(&axis, 2e-4, theta, 0.0, 0.0, 9.81);
        prop_assert!(net.abs() < 1e-20);
    }
}

#[test]
fn mapping_oracle_thrust_channel_is_linear() {
    // deterministic spot check that the thrust trend matches the plant slopes
    let plant = PlantModel::default();
    let mut trials = Vec::new();
    for dv in [-50.0, 0.0, 50.0] {
        for voff in [-10.0, 0.0, 10.0] {
            let cmd = ActuationCommand::new(88.0, dv, voff);
            let (_, thrust) = plant_output(&plant, &cmd, 0).unwrap();
            trials.push((cmd, Some(thrust)));
        }
    }
    let report = flexgim_core::estimation::thrust_analysis(&trials).unwrap();
    assert!((report.slope_pitch - plant.thrust_slope_pitch).abs() / plant.thrust_slope_pitch.abs() < 1e-9);
    assert!((report.slope_roll - plant.thrust_slope_roll).abs() / plant.thrust_slope_roll.abs() < 1e-9);
}

#[test]
fn torque_vector_components_are_independent() {
    let tau = TorqueVector::new(1.0e-6, -2.0e-6);
    assert_eq!(tau.roll, 1.0e-6);
    assert_eq!(tau.pitch, -2.0e-6);
}
