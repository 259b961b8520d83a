use crate::dynamic::{command_rate, learner_rates, surface, torque_command, LearnerState};
use crate::estimator::{
    consensus_pose_error, consensus_velocity_errors, pose_estimator_rate, velocity_estimator_rate_switched,
    EstimatorState, NeighborView,
};
use crate::integrate::rk4_step;
use crate::kinematic::{
    backstepping_command, bioinspired_command, inertial_error, shunting_rate, to_body_frame, BodyError,
    ShuntingState, VelocityCommand,
};
use crate::models::{dynamics_rate, kinematics_rate, BodyVelocity, LeaderReference, Pose, PoseRate, WheelTorques};
use crate::switching::{saturated_sign, sgn};

use super::parallel::{map_indexed, Parallelism};
use super::scenario::{EstimatorSwitching, ScenarioConfig};
use super::SimError;

const STATE_LEN: usize = 17;

/// Continuous state of one follower and its controllers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub pose: Pose,
    pub vel: BodyVelocity,
    pub est: EstimatorState,
    pub shunting: ShuntingState,
    pub learner: LearnerState,
}

impl RobotState {
    fn to_array(self) -> [f64; STATE_LEN] {
        let l = &self.learner;
        [
            self.pose.x,
            self.pose.y,
            self.pose.theta,
            self.vel.v,
            self.vel.w,
            self.est.pose.x,
            self.est.pose.y,
            self.est.pose.theta,
            self.est.v,
            self.est.w,
            self.shunting.vs,
            l.z_hat[0],
            l.z_hat[1],
            l.c_hat[0],
            l.c_hat[1],
            l.ev_integral[0],
            l.ev_integral[1],
        ]
    }

    fn from_array(a: &[f64; STATE_LEN]) -> Self {
        Self {
            pose: Pose::new(a[0], a[1], a[2]),
            vel: BodyVelocity::new(a[3], a[4]),
            est: EstimatorState {
                pose: Pose::new(a[5], a[6], a[7]),
                v: a[8],
                w: a[9],
            },
            shunting: ShuntingState { vs: a[10] },
            learner: LearnerState {
                z_hat: [a[11], a[12]],
                c_hat: [a[13], a[14]],
                ev_integral: [a[15], a[16]],
            },
        }
    }

    pub fn measured(&self) -> [f64; 2] {
        [self.vel.v, self.vel.w]
    }
}

/// Whole-team state at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub robots: Vec<RobotState>,
    pub prev_cmd: Vec<Option<VelocityCommand>>,
}

impl SimState {
    pub fn initial(config: &ScenarioConfig) -> Self {
        let robots = config
            .robots
            .iter()
            .map(|r| {
                let vel = r.initial_velocity;
                RobotState {
                    pose: r.initial_pose,
                    vel,
                    est: EstimatorState::initial(r.initial_pose),
                    shunting: ShuntingState::default(),
                    learner: LearnerState::initial(config.initial_c_hat, [vel.v, vel.w]),
                }
            })
            .collect::<Vec<_>>();
        Self {
            step: 0,
            prev_cmd: vec![None; robots.len()],
            robots,
        }
    }

    pub fn time(&self, config: &ScenarioConfig) -> f64 {
        self.step as f64 * config.dt
    }
}

/// What one follower computes at the start of a step. Everything except
/// the robot's own state is held fixed while the step is integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub view: NeighborView,
    pub pose_error: [f64; 3],
    pub est_rate: PoseRate,
    pub velocity_errors: (f64, f64),
    pub switch: (f64, f64),
    pub body_error: BodyError,
    pub cmd: VelocityCommand,
    pub cmd_rate: (f64, f64),
    pub torques: WheelTorques,
    pub surface: [f64; 2],
    pub disturbance: (f64, f64),
}

/// Control computation for follower `i` against the previous-step snapshot.
pub fn evaluate_robot(
    config: &ScenarioConfig,
    state: &SimState,
    snapshot: &[EstimatorState],
    leader: &LeaderReference,
    i: usize,
) -> Result<Evaluation, SimError> {
    let t = state.time(config);
    let robot = &state.robots[i];
    let rc = &config.robots[i];
    let gains = &rc.estimator;

    let view = NeighborView::gather(&config.topology, i, snapshot, leader);
    let pose_error = consensus_pose_error(&robot.est, &view);
    let est_rate = pose_estimator_rate(&robot.est, &pose_error, gains);
    let velocity_errors = consensus_velocity_errors(&robot.est, &view);
    let switch = match config.estimator_switching {
        EstimatorSwitching::Explicit => (sgn(velocity_errors.0), sgn(velocity_errors.1)),
        EstimatorSwitching::Implicit => {
            let weight = view.self_weight() * config.dt;
            (
                saturated_sign(velocity_errors.0, weight * gains.k_a1),
                saturated_sign(velocity_errors.1, weight * gains.k_a2),
            )
        }
    };

    let body_error = to_body_frame(&inertial_error(&robot.est, &robot.pose, &rc.offset), robot.pose.theta);
    let cmd = if config.variant.uses_shunting() {
        bioinspired_command(&robot.est, &body_error, &robot.shunting, &config.kinematic)
    } else {
        backstepping_command(&robot.est, &body_error, &config.kinematic)
    };
    let cmd_rate = command_rate(state.prev_cmd[i].as_ref(), &cmd, config.dt);
    let vel_err = (cmd.v - robot.vel.v, cmd.w - robot.vel.w);
    let torques = torque_command(cmd_rate, vel_err, robot.learner.c_hat, &config.sliding)
        .map_err(|source| SimError::ParameterUnderflow { robot: i + 1, t, source })?;

    let ev = robot.learner.velocity_error(robot.measured());
    Ok(Evaluation {
        view,
        pose_error,
        est_rate,
        velocity_errors,
        switch,
        body_error,
        cmd,
        cmd_rate,
        torques,
        surface: surface(ev, robot.learner.ev_integral, &config.learner),
        disturbance: config.disturbance.values(t),
    })
}

fn robot_rates(
    config: &ScenarioConfig,
    i: usize,
    eval: &Evaluation,
    t0: f64,
    t: f64,
    s: &RobotState,
) -> [f64; STATE_LEN] {
    let rc = &config.robots[i];
    let pose_rate = kinematics_rate(&s.pose, &s.vel);
    let vel_rate = dynamics_rate(&s.vel, &eval.torques, &config.plant, config.disturbance.values(t));

    let view = if t > t0 {
        eval.view.predicted(t - t0)
    } else {
        eval.view.clone()
    };
    let pose_error = consensus_pose_error(&s.est, &view);
    let est_rate = pose_estimator_rate(&s.est, &pose_error, &rc.estimator);
    let est_vel_rate = velocity_estimator_rate_switched(
        consensus_velocity_errors(&s.est, &view),
        eval.switch,
        &rc.estimator,
    );

    let be = to_body_frame(&inertial_error(&s.est, &s.pose, &rc.offset), s.pose.theta);
    let vs_rate = shunting_rate(&s.shunting, be.ex, &config.shunting);

    let ev = s.learner.velocity_error(s.measured());
    let sf = surface(ev, s.learner.ev_integral, &config.learner);
    let (dz, mut dc) = learner_rates(sf, ev, eval.torques.channels(), s.learner.c_hat, &config.learner);
    if !config.variant.learns() {
        dc = [0.0; 2];
    }

    [
        pose_rate.dx,
        pose_rate.dy,
        pose_rate.dtheta,
        vel_rate.v,
        vel_rate.w,
        est_rate.dx,
        est_rate.dy,
        est_rate.dtheta,
        est_vel_rate.0,
        est_vel_rate.1,
        vs_rate,
        dz[0],
        dz[1],
        dc[0],
        dc[1],
        ev[0],
        ev[1],
    ]
}

/// Evaluates every follower at the current grid time.
pub fn evaluate(
    config: &ScenarioConfig,
    state: &SimState,
    parallelism: Parallelism,
) -> Result<(LeaderReference, Vec<Evaluation>), SimError> {
    let t = state.time(config);
    let leader = config
        .leader
        .reference(t)
        .map_err(|source| SimError::Trajectory { t, source })?;
    let snapshot: Vec<EstimatorState> = state.robots.iter().map(|r| r.est).collect();
    let evals = map_indexed(parallelism, state.robots.len(), |i| {
        evaluate_robot(config, state, &snapshot, &leader, i)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok((leader, evals))
}

/// Integrates every follower over one step with its evaluation held.
pub fn advance(config: &ScenarioConfig, state: &SimState, evals: &[Evaluation], parallelism: Parallelism) -> SimState {
    let t = state.time(config);
    let dt = config.dt;
    let robots = map_indexed(parallelism, state.robots.len(), |i| {
        let y0 = state.robots[i].to_array();
        let y1 = rk4_step(&y0, t, dt, |ts, y| {
            robot_rates(config, i, &evals[i], t, ts, &RobotState::from_array(y))
        });
        RobotState::from_array(&y1)
    });
    SimState {
        step: state.step + 1,
        robots,
        prev_cmd: evals.iter().map(|e| Some(e.cmd)).collect(),
    }
}

/// One closed-loop step: evaluate against the snapshot, then integrate.
pub fn step(config: &ScenarioConfig, state: &SimState, parallelism: Parallelism) -> Result<SimState, SimError> {
    let (_, evals) = evaluate(config, state, parallelism)?;
    Ok(advance(config, state, &evals, parallelism))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_array_roundtrip() {
        let s = RobotState {
            pose: Pose::new(1.0, 2.0, 3.0),
            vel: BodyVelocity::new(4.0, 5.0),
            est: EstimatorState {
                pose: Pose::new(6.0, 7.0, 8.0),
                v: 9.0,
                w: 10.0,
            },
            shunting: ShuntingState { vs: 11.0 },
            learner: LearnerState {
                z_hat: [12.0, 13.0],
                c_hat: [14.0, 15.0],
                ev_integral: [16.0, 17.0],
            },
        };
        assert_eq!(RobotState::from_array(&s.to_array()), s);
    }
}
