//! Euler-angle kinematics for the zyx (yaw–pitch–roll) convention.
//!
//! W(θ) maps body angular rates ω to Euler-angle rates θ̇ = W(θ)·ω. The
//! matrix is singular at pitch ±90°; both directions of the map refuse
//! attitudes within [`SINGULARITY_MARGIN`] of it.

use core::f64::consts::FRAC_PI_2;

use super::DynamicsError;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float as _;

/// Guard band ε around the pitch singularity, rad.
pub const SINGULARITY_MARGIN: f64 = 1e-3;

fn check_pitch(pitch: f64) -> Result<(), DynamicsError> {
    if !pitch.is_finite() || pitch.abs() >= FRAC_PI_2 - SINGULARITY_MARGIN {
        Err(DynamicsError::Singularity { pitch_angle: pitch })
    } else {
        Ok(())
    }
}

/// W(θ) such that θ̇ = W(θ)·ω, for Euler angles (θx, θy, θz).
pub fn euler_rate_matrix(angles: [f64; 3]) -> Result<[[f64; 3]; 3], DynamicsError> {
    let (roll, pitch) = (angles[0], angles[1]);
    check_pitch(pitch)?;
    let (sr, cr) = (roll.sin(), roll.cos());
    let (sp, cp) = (pitch.sin(), pitch.cos());
    let tp = sp / cp;
    Ok([
        [1.0, sr * tp, cr * tp],
        [0.0, cr, -sr],
        [0.0, sr / cp, cr / cp],
    ])
}

/// W⁻¹(θ) such that ω = W⁻¹(θ)·θ̇. Closed form, no numeric inversion.
pub fn euler_rate_matrix_inverse(angles: [f64; 3]) -> Result<[[f64; 3]; 3], DynamicsError> {
    let (roll, pitch) = (angles[0], angles[1]);
    check_pitch(pitch)?;
    let (sr, cr) = (roll.sin(), roll.cos());
    let (sp, cp) = (pitch.sin(), pitch.cos());
    Ok([
        [1.0, 0.0, -sp],
        [0.0, cr, sr * cp],
        [0.0, -sr, cr * cp],
    ])
}

/// Body angular rates from Euler-angle rates: ω = W⁻¹(θ)·θ̇.
pub fn inverse_euler_rates(angles: [f64; 3], euler_rates: [f64; 3]) -> Result<[f64; 3], DynamicsError> {
    let w_inv = euler_rate_matrix_inverse(angles)?;
    Ok(mat3_vec_mul(&w_inv, &euler_rates))
}

/// 3×3 matrix product a·b.
pub fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Matrix–vector product m·v.
pub fn mat3_vec_mul(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn max_abs_diff(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst
    }

    const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn identity_at_zero_attitude() {
        let w = euler_rate_matrix([0.0; 3]).unwrap();
        assert_eq!(w, IDENTITY);
    }

    #[test]
    fn quarter_roll_rows() {
        let w = euler_rate_matrix([FRAC_PI_2, 0.0, 0.0]).unwrap();
        let expect_row2 = [0.0, 0.0, -1.0];
        let expect_row3 = [0.0, 1.0, 0.0];
        for j in 0..3 {
            assert!((w[1][j] - expect_row2[j]).abs() < 1e-15);
            assert!((w[2][j] - expect_row3[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn product_with_inverse_is_identity() {
        let attitudes = [
            [0.3, 0.4, -1.2],
            [-1.0, 1.2, 0.5],
            [2.9, -1.4, PI],
            [0.0, 1.48, 0.0],
        ];
        for angles in attitudes {
            let w = euler_rate_matrix(angles).unwrap();
            let w_inv = euler_rate_matrix_inverse(angles).unwrap();
            let prod = mat3_mul(&w, &w_inv);
            assert!(max_abs_diff(&prod, &IDENTITY) < 1e-12, "at {angles:?}");
        }
    }

    #[test]
    fn determinant_is_secant_of_pitch() {
        let angles = [0.7, -0.9, 0.2];
        let w = euler_rate_matrix(angles).unwrap();
        let det = w[0][0] * (w[1][1] * w[2][2] - w[1][2] * w[2][1])
            - w[0][1] * (w[1][0] * w[2][2] - w[1][2] * w[2][0])
            + w[0][2] * (w[1][0] * w[2][1] - w[1][1] * w[2][0]);
        let expected = 1.0 / angles[1].cos();
        assert!((det - expected).abs() / expected.abs() < 1e-12);
    }

    #[test]
    fn singularity_is_rejected() {
        for pitch in [FRAC_PI_2, -FRAC_PI_2, FRAC_PI_2 - 0.5e-3, 2.0] {
            assert!(matches!(
                euler_rate_matrix([0.0, pitch, 0.0]),
                Err(DynamicsError::Singularity { .. })
            ));
            assert!(matches!(
                inverse_euler_rates([0.0, pitch, 0.0], [0.0; 3]),
                Err(DynamicsError::Singularity { .. })
            ));
        }
    }

    #[test]
    fn body_rates_roundtrip_euler_rates() {
        let angles = [0.2, -0.6, 1.1];
        let euler_rates = [0.4, -0.1, 0.9];
        let omega = inverse_euler_rates(angles, euler_rates).unwrap();
        let w = euler_rate_matrix(angles).unwrap();
        let back = mat3_vec_mul(&w, &omega);
        for i in 0..3 {
            assert!((back[i] - euler_rates[i]).abs() < 1e-13);
        }
    }
}
