//! Fixed-step classical Runge–Kutta integration.

use super::GimbalState;

/// One classical 4th-order Runge–Kutta step of ẏ = f(y).
///
/// The derivative function must be autonomous; command torques are constant
/// over a trial so nothing here depends on time.
pub fn rk4_step<const N: usize, F>(y: &[f64; N], f: F, dt: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let k1 = f(y);
    let k2 = f(&offset(y, &k1, dt / 2.0));
    let k3 = f(&offset(y, &k2, dt / 2.0));
    let k4 = f(&offset(y, &k3, dt));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn offset<const N: usize>(y: &[f64; N], k: &[f64; N], h: f64) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

/// RK4 update of the two-axis gimbal state under an acceleration law
/// (θ̈x, θ̈y) = accel(state).
pub fn step_rk4<F>(state: &GimbalState, accel: F, dt: f64) -> GimbalState
where
    F: Fn(&GimbalState) -> (f64, f64),
{
    let y = [state.roll, state.roll_rate, state.pitch, state.pitch_rate];
    let next = rk4_step(
        &y,
        |y| {
            let s = GimbalState { roll: y[0], roll_rate: y[1], pitch: y[2], pitch_rate: y[3] };
            let (ax, ay) = accel(&s);
            [y[1], ax, y[3], ay]
        },
        dt,
    );
    GimbalState { roll: next[0], roll_rate: next[1], pitch: next[2], pitch_rate: next[3] }
}
