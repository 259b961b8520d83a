//! Torque layer: online estimation of the channel gains `(a, b)` and the
//! sliding-mode wheel torque law that uses those estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematic::VelocityCommand;
use crate::models::WheelTorques;
use crate::switching::saturated_sign;

/// Estimates of `a` or `b` at or below this are treated as learner divergence.
pub const EPS_C: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("parameter estimate collapsed: a_hat = {a_hat}, b_hat = {b_hat} (must exceed {EPS_C})")]
pub struct ParameterUnderflow {
    pub a_hat: f64,
    pub b_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LearnerState {
    /// `(a_hat, b_hat)`
    pub c_hat: [f64; 2],
    /// internal model of `(v, w)`
    pub z_hat: [f64; 2],
    pub ev_integral: [f64; 2],
}

impl LearnerState {
    /// Starts on the surface: the internal model equals the measurement and
    /// the integral is empty.
    pub fn initial(c_hat: [f64; 2], measured: [f64; 2]) -> Self {
        Self {
            c_hat,
            z_hat: measured,
            ev_integral: [0.0; 2],
        }
    }

    pub fn velocity_error(&self, measured: [f64; 2]) -> [f64; 2] {
        [self.z_hat[0] - measured[0], self.z_hat[1] - measured[1]]
    }
}

/// Diagonal learner gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerGains {
    pub k4: [f64; 2],
    pub k5: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlidingGains {
    pub c_a: f64,
    pub c_b: f64,
    /// Width of a linear band around zero replacing `sgn`; `0` keeps the
    /// discontinuous law.
    #[serde(default)]
    pub boundary_layer: f64,
}

/// `S = k4 * integral(e_v) + e_v`.
pub fn surface(ev: [f64; 2], ev_integral: [f64; 2], k4: &LearnerGains) -> [f64; 2] {
    [
        k4.k4[0] * ev_integral[0] + ev[0],
        k4.k4[1] * ev_integral[1] + ev[1],
    ]
}

/// `(d z_hat/dt, d c_hat/dt)` with the torques acting as `diag(tau_a, tau_b)`.
pub fn learner_rates(
    s: [f64; 2],
    ev: [f64; 2],
    tau: (f64, f64),
    c_hat: [f64; 2],
    gains: &LearnerGains,
) -> ([f64; 2], [f64; 2]) {
    let tau = [tau.0, tau.1];
    let mut dz = [0.0; 2];
    let mut dc = [0.0; 2];
    for k in 0..2 {
        dz[k] = tau[k] * c_hat[k] - gains.k4[k] * ev[k] - gains.k5[k] * s[k];
        dc[k] = -tau[k] * gains.k4[k] * s[k];
    }
    (dz, dc)
}

/// Sliding-mode wheel torques.
///
/// `vel_err` is `(v_cmd - v, w_cmd - w)`.
pub fn torque_command(
    cmd_rate: (f64, f64),
    vel_err: (f64, f64),
    c_hat: [f64; 2],
    g: &SlidingGains,
) -> Result<WheelTorques, ParameterUnderflow> {
    let [a_hat, b_hat] = c_hat;
    if a_hat.abs() <= EPS_C || b_hat.abs() <= EPS_C {
        return Err(ParameterUnderflow { a_hat, b_hat });
    }
    let linear = (cmd_rate.0 + g.c_a * saturated_sign(vel_err.0, g.boundary_layer)) / (2.0 * a_hat);
    let angular = (cmd_rate.1 + g.c_b * saturated_sign(vel_err.1, g.boundary_layer)) / (2.0 * b_hat);
    Ok(WheelTorques {
        left: linear - angular,
        right: linear + angular,
    })
}

/// The same law with the gain estimates frozen (no learning).
pub fn fixed_parameter_controller(
    cmd_rate: (f64, f64),
    vel_err: (f64, f64),
    frozen_c: [f64; 2],
    g: &SlidingGains,
) -> Result<WheelTorques, ParameterUnderflow> {
    torque_command(cmd_rate, vel_err, frozen_c, g)
}

/// Backward difference of the velocity command; zero when there is no
/// previous command.
pub fn command_rate(prev: Option<&VelocityCommand>, cmd: &VelocityCommand, dt: f64) -> (f64, f64) {
    match prev {
        Some(p) => ((cmd.v - p.v) / dt, (cmd.w - p.w) / dt),
        None => (0.0, 0.0),
    }
}
