//! Fixed-step closed-loop simulation of the leader, the followers, their
//! estimators and both control layers.
//!
//! Within a step every follower first evaluates its estimator, command and
//! torque against the previous-step snapshot of the team, then integrates
//! its own continuous state with classical RK4. Inside the step, snapshot
//! poses of the leader and neighbours are dead-reckoned along their own
//! velocities. Switching terms and torques are held
//! constant across the RK4 stages.

mod parallel;
mod report;
mod scenario;
mod step;

use thiserror::Error;

use crate::dynamic::{LearnerState, ParameterUnderflow};
use crate::estimator::EstimatorState;
use crate::kinematic::{BodyError, VelocityCommand};
use crate::models::{BodyVelocity, LeaderReference, Pose, PoseRate, TrajectoryError, WheelTorques};

pub use parallel::{map_indexed, Parallelism, MIN_PARALLEL_TEAM};
pub use report::{
    compare_variants, total_velocity_error, write_metrics, write_trace_csv, Comparison, MetricsReport,
    RobotMetrics, TRACE_COLUMNS,
};
pub use scenario::{ConfigIssue, EstimatorSwitching, RobotConfig, ScenarioConfig, Variant, MAX_DT};
pub use step::{advance, evaluate, evaluate_robot, step, Evaluation, RobotState, SimState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("robot {robot} at t = {t} s: {source}")]
    ParameterUnderflow {
        /// 1-based, as in traces
        robot: usize,
        t: f64,
        #[source]
        source: ParameterUnderflow,
    },
    #[error("leader trajectory at t = {t} s: {source}")]
    Trajectory {
        t: f64,
        #[source]
        source: TrajectoryError,
    },
    #[error("invalid scenario: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidConfig(Vec<ConfigIssue>),
}

/// Logged state of one follower.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotRecord {
    pub pose: Pose,
    pub vel: BodyVelocity,
    pub est: EstimatorState,
    pub est_rate: PoseRate,
    pub body_error: BodyError,
    pub cmd: VelocityCommand,
    pub torques: WheelTorques,
    pub learner: LearnerState,
    pub surface: [f64; 2],
    pub vs: f64,
    pub disturbance: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub leader: LeaderReference,
    pub robots: Vec<RobotRecord>,
}

pub type Trace = Vec<TraceRecord>;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Trace,
    pub metrics: MetricsReport,
}

fn record(t: f64, leader: LeaderReference, state: &SimState, evals: &[Evaluation]) -> TraceRecord {
    TraceRecord {
        t,
        leader,
        robots: state
            .robots
            .iter()
            .zip(evals)
            .map(|(r, e)| RobotRecord {
                pose: r.pose,
                vel: r.vel,
                est: r.est,
                est_rate: e.est_rate,
                body_error: e.body_error,
                cmd: e.cmd,
                torques: e.torques,
                learner: r.learner,
                surface: e.surface,
                vs: r.shunting.vs,
                disturbance: e.disturbance,
            })
            .collect(),
    }
}

/// Runs the scenario over its horizon. Records every `decimation` steps and
/// always the final grid time.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput, SimError> {
    run_with(config, Parallelism::default())
}

pub fn run_with(config: &ScenarioConfig, parallelism: Parallelism) -> Result<RunOutput, SimError> {
    let parallelism = parallelism.for_team(config.robots.len());
    config.validate().map_err(SimError::InvalidConfig)?;
    let steps = config.steps();
    let mut state = SimState::initial(config);
    let mut trace = Vec::with_capacity(steps / config.decimation + 2);
    loop {
        let (leader, evals) = evaluate(config, &state, parallelism)?;
        let k = state.step;
        if k.is_multiple_of(config.decimation) || k == steps {
            trace.push(record(state.time(config), leader, &state, &evals));
        }
        if k == steps {
            break;
        }
        state = advance(config, &state, &evals, parallelism);
    }
    let metrics = MetricsReport::from_trace(config, &trace);
    Ok(RunOutput { trace, metrics })
}
