use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamic::{LearnerGains, SlidingGains, EPS_C};
use crate::estimator::{gain_sufficiency_warning, EstimatorGains};
use crate::graph::{self, Topology};
use crate::kinematic::{FormationOffset, KinematicGains, ShuntingParams};
use crate::models::{BodyVelocity, DisturbanceSpec, LeaderTrajectory, Pose, RobotParams};

/// Largest admissible integration step, s.
pub const MAX_DT: f64 = 0.01;
/// Grid used when checking the leader trajectory over the horizon.
pub const TRAJECTORY_CHECK_SAMPLES: usize = 2001;

/// Controller combination under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "backstepping")]
    Backstepping,
    #[serde(rename = "bioinspired")]
    Bioinspired,
    #[serde(rename = "backstepping+learning")]
    BacksteppingLearning,
    #[serde(rename = "bioinspired+learning")]
    BioinspiredLearning,
}

impl Variant {
    /// Comparison column order.
    pub const ALL: [Variant; 4] = [
        Variant::Backstepping,
        Variant::Bioinspired,
        Variant::BacksteppingLearning,
        Variant::BioinspiredLearning,
    ];

    pub fn uses_shunting(self) -> bool {
        matches!(self, Variant::Bioinspired | Variant::BioinspiredLearning)
    }

    pub fn learns(self) -> bool {
        matches!(self, Variant::BacksteppingLearning | Variant::BioinspiredLearning)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Backstepping => "backstepping",
            Variant::Bioinspired => "bioinspired",
            Variant::BacksteppingLearning => "backstepping+learning",
            Variant::BioinspiredLearning => "bioinspired+learning",
        }
    }

    /// Name usable inside file names.
    pub fn slug(self) -> &'static str {
        match self {
            Variant::Backstepping => "backstepping",
            Variant::Bioinspired => "bioinspired",
            Variant::BacksteppingLearning => "backstepping_learning",
            Variant::BioinspiredLearning => "bioinspired_learning",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s || v.slug() == s)
            .ok_or_else(|| {
                format!(
                    "unknown variant `{s}` (expected one of: {})",
                    Variant::ALL.map(Variant::name).join(", ")
                )
            })
    }
}

/// How the estimator's sign terms are held over one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorSwitching {
    /// Saturated sign of width `dt * k_a * (degree + leader link)`: the
    /// implicit-Euler treatment, which lands the consensus velocity error
    /// on zero instead of chattering around it.
    #[default]
    Implicit,
    /// Plain `sgn` evaluated at the step start.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub offset: FormationOffset,
    pub initial_pose: Pose,
    pub initial_velocity: BodyVelocity,
    pub estimator: EstimatorGains,
}

/// Complete, validated description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub robots: Vec<RobotConfig>,
    pub kinematic: KinematicGains,
    pub shunting: ShuntingParams,
    pub sliding: SlidingGains,
    pub learner: LearnerGains,
    /// Starting `(a_hat, b_hat)`; frozen at this value in the non-learning variants.
    pub initial_c_hat: [f64; 2],
    pub plant: RobotParams,
    pub disturbance: DisturbanceSpec,
    pub leader: LeaderTrajectory,
    pub dt: f64,
    pub horizon: f64,
    pub decimation: usize,
    pub variant: Variant,
    pub estimator_switching: EstimatorSwitching,
}

/// A violated invariant, anchored to the config key that carries it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

fn positive(key: &str, value: f64, issues: &mut Vec<ConfigIssue>) {
    if !(value > 0.0 && value.is_finite()) {
        issues.push(ConfigIssue::new(
            key,
            format!("{value} is invalid; gains must be positive design constants"),
        ));
    }
}

impl ScenarioConfig {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Default start for a follower: its formation slot behind the leader's
    /// initial pose, displaced by (-2 m, +1 m, +0.3 rad).
    pub fn perturbed_start(leader: &LeaderTrajectory, offset: &FormationOffset) -> Option<Pose> {
        let r = leader.reference(0.0).ok()?;
        Some(Pose::new(
            r.pose.x - offset.dx - 2.0,
            r.pose.y - offset.dy + 1.0,
            r.pose.theta + 0.3,
        ))
    }

    /// Checks every invariant; returns non-fatal warnings on success.
    pub fn validate(&self) -> Result<Vec<String>, Vec<ConfigIssue>> {
        let mut issues = Vec::new();

        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            issues.push(ConfigIssue::new(
                "simulation.dt",
                format!("dt = {} must lie in (0, {MAX_DT}]", self.dt),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            issues.push(ConfigIssue::new("simulation.horizon", "horizon must be positive"));
        } else if self.dt > 0.0 {
            let n = (self.horizon / self.dt).round();
            if (n * self.dt - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) || n < 1.0 {
                issues.push(ConfigIssue::new(
                    "simulation.horizon",
                    format!("horizon {} is not a whole number of steps of {}", self.horizon, self.dt),
                ));
            }
        }
        if self.decimation == 0 {
            issues.push(ConfigIssue::new("simulation.decimation", "decimation must be at least 1"));
        }

        let report = graph::validate(&self.topology);
        for failure in report.failures() {
            issues.push(ConfigIssue::new(
                "topology",
                format!("{failure} (the follower graph must be connected with leader access)"),
            ));
        }
        if self.robots.len() != self.topology.len() {
            issues.push(ConfigIssue::new(
                "robots",
                format!(
                    "{} robots configured but the topology has {} followers",
                    self.robots.len(),
                    self.topology.len()
                ),
            ));
        }

        for (i, r) in self.robots.iter().enumerate() {
            for (name, value) in r.estimator.named() {
                let mut found = Vec::new();
                positive(&format!("estimator.{name}"), value, &mut found);
                for issue in found {
                    if !issues.contains(&issue) {
                        issues.push(issue);
                    }
                }
            }
            let p = &r.initial_pose;
            let v = &r.initial_velocity;
            if ![p.x, p.y, p.theta, v.v, v.w, r.offset.dx, r.offset.dy]
                .iter()
                .all(|x| x.is_finite())
            {
                issues.push(ConfigIssue::new(format!("robots.{}", i + 1), "non-finite initial state"));
            }
        }

        positive("kinematic.k1", self.kinematic.k1, &mut issues);
        positive("kinematic.k2", self.kinematic.k2, &mut issues);
        positive("kinematic.k3", self.kinematic.k3, &mut issues);
        if let Err(e) = self.shunting.check() {
            issues.push(ConfigIssue::new("shunting", e.to_string()));
        }
        positive("dynamic.c_a", self.sliding.c_a, &mut issues);
        positive("dynamic.c_b", self.sliding.c_b, &mut issues);
        if !(self.sliding.boundary_layer >= 0.0) {
            issues.push(ConfigIssue::new("dynamic.boundary_layer", "boundary layer must be >= 0"));
        }
        for k in 0..2 {
            positive("dynamic.k4", self.learner.k4[k], &mut issues);
            positive("dynamic.k5", self.learner.k5[k], &mut issues);
        }
        if !self.initial_c_hat.iter().all(|&c| c > EPS_C) {
            issues.push(ConfigIssue::new(
                "dynamic.initial_c_hat",
                format!("initial estimates must exceed {EPS_C}"),
            ));
        }
        positive("plant.a", self.plant.a, &mut issues);
        positive("plant.b", self.plant.b, &mut issues);

        let (gamma1, gamma2) = match self.leader_bounds() {
            Ok(bounds) => bounds,
            Err(message) => {
                issues.push(ConfigIssue::new("leader", message));
                (0.0, 0.0)
            }
        };

        if !issues.is_empty() {
            return Err(issues);
        }

        let gains: Vec<_> = self.robots.iter().map(|r| r.estimator).collect();
        Ok(gain_sufficiency_warning(&gains, gamma1, gamma2, self.topology.len())
            .into_iter()
            .map(|w| w.to_string())
            .collect())
    }

    /// Samples the horizon and returns `(max |dv_r/dt|, max |dw_r/dt|)`;
    /// fails if the leader's forward speed is not strictly positive.
    pub fn leader_bounds(&self) -> Result<(f64, f64), String> {
        let horizon = if self.horizon.is_finite() && self.horizon > 0.0 {
            self.horizon
        } else {
            0.0
        };
        let mut gamma = (0.0f64, 0.0f64);
        for k in 0..TRAJECTORY_CHECK_SAMPLES {
            let t = horizon * k as f64 / (TRAJECTORY_CHECK_SAMPLES - 1) as f64;
            let r = self
                .leader
                .reference(t)
                .map_err(|e| format!("{e}; the leader's linear velocity must stay positive"))?;
            if !(r.v > 0.0) {
                return Err(format!("leader speed {} at t = {t} is not positive", r.v));
            }
            let (dv, dw) = self.leader.velocity_rates(t).map_err(|e| e.to_string())?;
            gamma.0 = gamma.0.max(dv.abs());
            gamma.1 = gamma.1.max(dw.abs());
        }
        Ok(gamma)
    }
}
