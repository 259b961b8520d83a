//! Ground-truth plant: unicycle kinematics, the reduced two-channel
//! velocity dynamics, bounded disturbances and the virtual leader.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speeds at or below this make the leader heading and turn rate undefined.
pub const EPS_SPEED: f64 = 1e-6;

/// Planar pose. Heading is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }
}

/// First-order prediction of a unicycle pose moving at `(v, w)`.
pub fn dead_reckon(pose: &Pose, v: f64, w: f64, tau: f64) -> Pose {
    let (s, c) = pose.theta.sin_cos();
    Pose::new(pose.x + v * c * tau, pose.y + v * s * tau, pose.theta + w * tau)
}

/// Time derivative of a [`Pose`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PoseRate {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub v: f64,
    pub w: f64,
}

impl BodyVelocity {
    pub const fn new(v: f64, w: f64) -> Self {
        Self { v, w }
    }
}

/// Channel gains of the reduced dynamics: `a = 1/(m r)`, `b = l/(I r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelTorques {
    pub left: f64,
    pub right: f64,
}

impl WheelTorques {
    /// `(tau_R + tau_L, tau_R - tau_L)`: a positive angular channel turns
    /// the robot counter-clockwise.
    pub fn channels(&self) -> (f64, f64) {
        (self.right + self.left, self.right - self.left)
    }
}

/// One bounded disturbance signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Disturbance {
    Constant {
        amplitude: f64,
    },
    Sinusoid {
        amplitude: f64,
        /// rad/s
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Disturbance {
    pub const NONE: Disturbance = Disturbance::Constant { amplitude: 0.0 };

    pub fn amplitude(&self) -> f64 {
        match *self {
            Disturbance::Constant { amplitude } | Disturbance::Sinusoid { amplitude, .. } => amplitude,
        }
    }
}

/// Disturbances on the linear and angular channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub linear: Disturbance,
    pub angular: Disturbance,
}

impl DisturbanceSpec {
    pub const NONE: DisturbanceSpec = DisturbanceSpec {
        linear: Disturbance::NONE,
        angular: Disturbance::NONE,
    };

    pub fn values(&self, t: f64) -> (f64, f64) {
        (disturbance_value(&self.linear, t), disturbance_value(&self.angular, t))
    }
}

pub fn disturbance_value(spec: &Disturbance, t: f64) -> f64 {
    match *spec {
        Disturbance::Constant { amplitude } => amplitude,
        Disturbance::Sinusoid {
            amplitude,
            frequency,
            phase,
        } => amplitude * (frequency * t + phase).cos(),
    }
}

pub fn kinematics_rate(pose: &Pose, vel: &BodyVelocity) -> PoseRate {
    let (s, c) = pose.theta.sin_cos();
    PoseRate {
        dx: vel.v * c,
        dy: vel.v * s,
        dtheta: vel.w,
    }
}

/// `dv/dt = tau_a * a + d1`, `dw/dt = tau_b * b + d2`.
pub fn dynamics_rate(
    _vel: &BodyVelocity,
    torques: &WheelTorques,
    params: &RobotParams,
    disturbance: (f64, f64),
) -> BodyVelocity {
    let (tau_a, tau_b) = torques.channels();
    BodyVelocity {
        v: tau_a * params.a + disturbance.0,
        w: tau_b * params.b + disturbance.1,
    }
}

/// `c0 + c1 t + c2 cos(c3 t + c4)` with analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSignal {
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl AxisSignal {
    /// Value and first three derivatives at `t`.
    pub fn eval(&self, t: f64) -> [f64; 4] {
        let phi = self.frequency * t + self.phase;
        let (s, c) = phi.sin_cos();
        let w = self.frequency;
        [
            self.offset + self.rate * t + self.amplitude * c,
            self.rate - self.amplitude * w * s,
            -self.amplitude * w * w * c,
            self.amplitude * w * w * w * s,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderTrajectory {
    pub x: AxisSignal,
    pub y: AxisSignal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeaderReference {
    pub pose: Pose,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("leader speed {speed:e} m/s at t = {t} s is too small to define heading and turn rate")]
pub struct TrajectoryError {
    pub t: f64,
    pub speed: f64,
}

impl LeaderTrajectory {
    pub fn reference(&self, t: f64) -> Result<LeaderReference, TrajectoryError> {
        leader_reference(self, t)
    }

    /// `(dv_r/dt, dw_r/dt)`; bounds on these feed the estimator gain check.
    pub fn velocity_rates(&self, t: f64) -> Result<(f64, f64), TrajectoryError> {
        let [_, xd, xdd, xddd] = self.x.eval(t);
        let [_, yd, ydd, yddd] = self.y.eval(t);
        let s2 = xd * xd + yd * yd;
        let speed = s2.sqrt();
        if speed <= EPS_SPEED {
            return Err(TrajectoryError { t, speed });
        }
        let dv = (xd * xdd + yd * ydd) / speed;
        let num = ydd * xd - xdd * yd;
        let dnum = yddd * xd - xddd * yd;
        let ds2 = 2.0 * (xd * xdd + yd * ydd);
        let dw = (dnum * s2 - num * ds2) / (s2 * s2);
        Ok((dv, dw))
    }
}

pub fn leader_reference(traj: &LeaderTrajectory, t: f64) -> Result<LeaderReference, TrajectoryError> {
    let [x, xd, xdd, _] = traj.x.eval(t);
    let [y, yd, ydd, _] = traj.y.eval(t);
    let s2 = xd * xd + yd * yd;
    let speed = s2.sqrt();
    if speed <= EPS_SPEED {
        return Err(TrajectoryError { t, speed });
    }
    Ok(LeaderReference {
        pose: Pose::new(x, y, yd.atan2(xd)),
        v: speed,
        w: (ydd * xd - xdd * yd) / s2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn demo_trajectory() -> LeaderTrajectory {
        LeaderTrajectory {
            x: AxisSignal {
                rate: 1.0,
                ..Default::default()
            },
            y: AxisSignal {
                offset: 3.0,
                amplitude: 0.4,
                frequency: 1.0,
                phase: -FRAC_PI_2,
                ..Default::default()
            },
        }
    }

    #[test]
    fn kinematics_examples() {
        let r = kinematics_rate(&Pose::new(0.0, 0.0, 0.0), &BodyVelocity::new(1.0, 0.0));
        assert_eq!(r, PoseRate { dx: 1.0, dy: 0.0, dtheta: 0.0 });

        let r = kinematics_rate(&Pose::new(0.0, 0.0, FRAC_PI_2), &BodyVelocity::new(2.0, 0.5));
        assert!(close(r.dx, 0.0, 1e-15) && close(r.dy, 2.0, 1e-15) && r.dtheta == 0.5);

        let r = kinematics_rate(&Pose::new(1.0, 2.0, 0.7), &BodyVelocity::default());
        assert_eq!(r, PoseRate::default());
    }

    #[test]
    fn dynamics_examples() {
        let params = RobotParams { a: 0.4, b: 10.0 };
        let tau = WheelTorques { left: 2.5, right: 2.5 };
        let r = dynamics_rate(&BodyVelocity::default(), &tau, &params, (0.1, 0.0));
        assert!(close(r.v, 2.1, 1e-12));
        assert_eq!(r.w, 0.0);

        let zero = dynamics_rate(
            &BodyVelocity::default(),
            &WheelTorques::default(),
            &params,
            (0.0, 0.0),
        );
        assert_eq!(zero, BodyVelocity::default());
    }

    #[test]
    fn disturbance_examples() {
        let c = Disturbance::Constant { amplitude: 0.1 };
        assert_eq!(disturbance_value(&c, 0.0), 0.1);
        assert_eq!(disturbance_value(&c, 123.4), 0.1);
        let s = Disturbance::Sinusoid {
            amplitude: 0.1,
            frequency: 1.0,
            phase: 0.0,
        };
        assert_eq!(disturbance_value(&s, 0.0), 0.1);
        assert!(close(disturbance_value(&s, FRAC_PI_2), 0.0, 1e-15));
    }

    #[test]
    fn straight_line_reference() {
        let traj = LeaderTrajectory {
            x: AxisSignal {
                rate: 1.0,
                ..Default::default()
            },
            y: AxisSignal {
                offset: 3.0,
                ..Default::default()
            },
        };
        let r = traj.reference(2.5).unwrap();
        assert_eq!(r.pose, Pose::new(2.5, 3.0, 0.0));
        assert_eq!((r.v, r.w), (1.0, 0.0));
    }

    #[test]
    fn demo_reference_at_start() {
        let r = demo_trajectory().reference(0.0).unwrap();
        assert!(close(r.v, 1.16f64.sqrt(), 1e-12));
        assert!(close(r.w, 0.0, 1e-12));
        assert!(close(r.pose.y, 3.0, 1e-12));
        assert!(close(r.pose.theta, 0.4f64.atan(), 1e-12));
    }

    #[test]
    fn unit_circle_reference() {
        let traj = LeaderTrajectory {
            x: AxisSignal {
                amplitude: 1.0,
                frequency: 1.0,
                ..Default::default()
            },
            y: AxisSignal {
                amplitude: 1.0,
                frequency: 1.0,
                phase: -FRAC_PI_2,
                ..Default::default()
            },
        };
        for k in 0..20 {
            let t = k as f64 * PI / 7.0;
            let r = traj.reference(t).unwrap();
            assert!(close(r.v, 1.0, 1e-12) && close(r.w, 1.0, 1e-12));
        }
    }

    #[test]
    fn stationary_leader_is_rejected() {
        let traj = LeaderTrajectory {
            x: AxisSignal::default(),
            y: AxisSignal::default(),
        };
        assert!(traj.reference(1.0).is_err());
        assert!(traj.velocity_rates(1.0).is_err());
    }

    #[test]
    fn velocity_rates_match_finite_differences() {
        let traj = demo_trajectory();
        let h = 1e-5;
        for k in 0..40 {
            let t = 0.37 * k as f64;
            let (dv, dw) = traj.velocity_rates(t).unwrap();
            let p = traj.reference(t + h).unwrap();
            let m = traj.reference(t - h).unwrap();
            assert!(close(dv, (p.v - m.v) / (2.0 * h), 1e-7));
            assert!(close(dw, (p.w - m.w) / (2.0 * h), 1e-7));
        }
    }
}
