//! Kinematic tracking layer: formation errors in the body frame, the
//! shunting neuron that filters the driving error, and the two velocity
//! command laws (shunting-filtered and plain backstepping).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::EstimatorState;
use crate::models::{BodyVelocity, Pose, PoseRate};

/// Desired position of a follower relative to the leader, inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FormationOffset {
    pub dx: f64,
    pub dy: f64,
}

/// Tracking error expressed in the follower's body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyError {
    /// driving (along-heading) error
    pub ex: f64,
    /// lateral error
    pub ey: f64,
    pub eth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShuntingState {
    pub vs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ShuntingParamsError {
    #[error("shunting parameters must be positive (A = {decay}, B = {upper}, D = {lower})")]
    NotPositive { decay: f64, upper: f64, lower: f64 },
    #[error("shunting bounds must be symmetric (B = {upper}, D = {lower})")]
    Asymmetric { upper: f64, lower: f64 },
}

/// Passive decay `A` and activity bounds `B` (upper) and `D` (lower).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShuntingParams {
    #[serde(rename = "A")]
    pub decay: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    #[serde(rename = "D")]
    pub lower: f64,
}

impl ShuntingParams {
    pub fn new(decay: f64, upper: f64, lower: f64) -> Result<Self, ShuntingParamsError> {
        let p = Self { decay, upper, lower };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ShuntingParamsError> {
        if !(self.decay > 0.0 && self.upper > 0.0 && self.lower > 0.0) {
            return Err(ShuntingParamsError::NotPositive {
                decay: self.decay,
                upper: self.upper,
                lower: self.lower,
            });
        }
        if self.upper != self.lower {
            return Err(ShuntingParamsError::Asymmetric {
                upper: self.upper,
                lower: self.lower,
            });
        }
        Ok(())
    }

    /// Fixed point of the neuron for a constant input.
    pub fn equilibrium(&self, u: f64) -> f64 {
        self.upper * u / (self.decay + u.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityCommand {
    pub v: f64,
    pub w: f64,
}

/// `(x_ir - x_i - dx, y_ir - y_i - dy, theta_ir - theta_i)`.
pub fn inertial_error(est: &EstimatorState, pose: &Pose, offset: &FormationOffset) -> [f64; 3] {
    [
        est.pose.x - pose.x - offset.dx,
        est.pose.y - pose.y - offset.dy,
        est.pose.theta - pose.theta,
    ]
}

pub fn to_body_frame(err: &[f64; 3], theta: f64) -> BodyError {
    let (s, c) = theta.sin_cos();
    BodyError {
        ex: c * err[0] + s * err[1],
        ey: -s * err[0] + c * err[1],
        eth: err[2],
    }
}

/// `dvs/dt = -(A + |u|) vs + B u`, the symmetric-bound shunting equation.
pub fn shunting_rate(state: &ShuntingState, u: f64, p: &ShuntingParams) -> f64 {
    -(p.decay + u.abs()) * state.vs + p.upper * u
}

pub fn bioinspired_command(
    est: &EstimatorState,
    be: &BodyError,
    vs: &ShuntingState,
    g: &KinematicGains,
) -> VelocityCommand {
    VelocityCommand {
        v: est.v * be.eth.cos() + g.k1 * vs.vs,
        w: angular_command(est, be, g),
    }
}

/// Same as [`bioinspired_command`] with the raw driving error in place of
/// the neuron output.
pub fn backstepping_command(est: &EstimatorState, be: &BodyError, g: &KinematicGains) -> VelocityCommand {
    VelocityCommand {
        v: est.v * be.eth.cos() + g.k1 * be.ex,
        w: angular_command(est, be, g),
    }
}

fn angular_command(est: &EstimatorState, be: &BodyError, g: &KinematicGains) -> f64 {
    est.w + g.k2 * est.v * be.ey + g.k3 * est.v * be.eth.sin()
}

/// Right-hand side of the body-frame error dynamics, including the terms
/// that appear when the estimate's pose rate departs from unicycle motion
/// at the estimated velocities. Used to check simulation traces.
pub fn error_dynamics_oracle(
    be: &BodyError,
    actual: &BodyVelocity,
    est: &EstimatorState,
    est_rate: &PoseRate,
    theta: f64,
) -> BodyError {
    let (s, c) = theta.sin_cos();
    let (s_r, c_r) = est.pose.theta.sin_cos();
    let gap_x = est_rate.dx - est.v * c_r;
    let gap_y = est_rate.dy - est.v * s_r;
    let omega_x = gap_x * c + gap_y * s;
    let omega_y = gap_y * c - gap_x * s;
    let omega_th = est_rate.dtheta - est.w;
    BodyError {
        ex: actual.w * be.ey - actual.v + est.v * be.eth.cos() + omega_x,
        ey: -actual.w * be.ex + est.v * be.eth.sin() + omega_y,
        eth: est.w - actual.w + omega_th,
    }
}
