//! Distributed estimation of the leader's pose and velocities.
//!
//! Each follower only sees the estimates of its graph neighbours and, if it
//! has a leader link, the leader itself. The pose estimate is driven by its
//! own velocity estimates plus a consensus correction; the velocity
//! estimates use a variable-structure (sign + linear) law, so no neighbour
//! derivatives are ever exchanged.

use serde::{Deserialize, Serialize};

use crate::graph::Topology;
use crate::models::{dead_reckon, LeaderReference, Pose, PoseRate};
use crate::switching::sgn;

/// One follower's estimate of the leader.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatorState {
    pub pose: Pose,
    pub v: f64,
    pub w: f64,
}

impl EstimatorState {
    /// Starts at the robot's own pose with zero velocity estimates, so the
    /// velocity estimate rises monotonically toward the leader's.
    pub fn initial(own_pose: Pose) -> Self {
        Self {
            pose: own_pose,
            v: 0.0,
            w: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorGains {
    pub k_x: f64,
    pub k_y: f64,
    pub k_theta: f64,
    pub k_a1: f64,
    pub k_b1: f64,
    pub k_a2: f64,
    pub k_b2: f64,
}

impl EstimatorGains {
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("k_x", self.k_x),
            ("k_y", self.k_y),
            ("k_theta", self.k_theta),
            ("k_a1", self.k_a1),
            ("k_b1", self.k_b1),
            ("k_a2", self.k_a2),
            ("k_b2", self.k_b2),
        ]
    }
}

/// Everything follower `i` may read during one step: its neighbours'
/// estimates and, only when linked, the leader.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborView {
    pub neighbors: Vec<(usize, EstimatorState)>,
    pub leader: Option<LeaderReference>,
}

impl NeighborView {
    pub fn gather(
        topology: &Topology,
        i: usize,
        snapshot: &[EstimatorState],
        leader: &LeaderReference,
    ) -> Self {
        Self {
            neighbors: topology.neighbors(i).map(|j| (j, snapshot[j])).collect(),
            leader: topology.has_leader_link(i).then_some(*leader),
        }
    }

    /// The same view `tau` seconds later, each pose dead-reckoned along its
    /// own velocities. Used inside an integration step so that held
    /// neighbour data does not lag the robot's own moving estimate.
    pub fn predicted(&self, tau: f64) -> Self {
        Self {
            neighbors: self
                .neighbors
                .iter()
                .map(|&(j, e)| {
                    (
                        j,
                        EstimatorState {
                            pose: dead_reckon(&e.pose, e.v, e.w, tau),
                            ..e
                        },
                    )
                })
                .collect(),
            leader: self.leader.map(|l| LeaderReference {
                pose: dead_reckon(&l.pose, l.v, l.w, tau),
                ..l
            }),
        }
    }

    /// `sum_j a_ij + a_ir`: how strongly the robot's own estimate enters its
    /// consensus errors.
    pub fn self_weight(&self) -> f64 {
        self.neighbors.len() as f64 + if self.leader.is_some() { 1.0 } else { 0.0 }
    }
}

pub fn consensus_pose_error(own: &EstimatorState, view: &NeighborView) -> [f64; 3] {
    let mut e = [0.0; 3];
    let mut add = |other: &Pose| {
        e[0] += own.pose.x - other.x;
        e[1] += own.pose.y - other.y;
        e[2] += own.pose.theta - other.theta;
    };
    for (_, n) in &view.neighbors {
        add(&n.pose);
    }
    if let Some(leader) = &view.leader {
        add(&leader.pose);
    }
    e
}

pub fn pose_estimator_rate(own: &EstimatorState, pose_err: &[f64; 3], gains: &EstimatorGains) -> PoseRate {
    let (s, c) = own.pose.theta.sin_cos();
    PoseRate {
        dx: own.v * c - gains.k_x * pose_err[0],
        dy: own.v * s - gains.k_y * pose_err[1],
        dtheta: own.w - gains.k_theta * pose_err[2],
    }
}

/// `(e_v, e_w)`.
pub fn consensus_velocity_errors(own: &EstimatorState, view: &NeighborView) -> (f64, f64) {
    let mut ev = 0.0;
    let mut ew = 0.0;
    for (_, n) in &view.neighbors {
        ev += own.v - n.v;
        ew += own.w - n.w;
    }
    if let Some(leader) = &view.leader {
        ev += own.v - leader.v;
        ew += own.w - leader.w;
    }
    (ev, ew)
}

/// Variable-structure velocity update with `sgn(0) = 0`.
pub fn velocity_estimator_rate(errs: (f64, f64), gains: &EstimatorGains) -> (f64, f64) {
    velocity_estimator_rate_switched(errs, (sgn(errs.0), sgn(errs.1)), gains)
}

/// Same law with the switching values supplied by the caller, e.g. held
/// over an integration step.
pub fn velocity_estimator_rate_switched(
    errs: (f64, f64),
    switch: (f64, f64),
    gains: &EstimatorGains,
) -> (f64, f64) {
    (
        -gains.k_a1 * switch.0 - gains.k_b1 * errs.0,
        -gains.k_a2 * switch.1 - gains.k_b2 * errs.1,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainWarning {
    pub channel: &'static str,
    pub gain: f64,
    pub required: f64,
}

impl std::fmt::Display for GainWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {} is below {:.6} (leader acceleration bound x sqrt(n)); velocity estimates are only guaranteed bounded, not convergent",
            self.channel, self.gain, self.required
        )
    }
}

/// Flags switching gains too small to dominate the leader's accelerations.
///
/// `gamma1`, `gamma2` bound `|dv_r/dt|` and `|dw_r/dt|`; `gains` is the
/// per-robot gain list so the minimum is taken across the team.
pub fn gain_sufficiency_warning(
    gains: &[EstimatorGains],
    gamma1: f64,
    gamma2: f64,
    n: usize,
) -> Vec<GainWarning> {
    let root_n = (n as f64).sqrt();
    let min_a1 = gains.iter().map(|g| g.k_a1).fold(f64::INFINITY, f64::min);
    let min_a2 = gains.iter().map(|g| g.k_a2).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    if min_a1 < gamma1 * root_n {
        out.push(GainWarning {
            channel: "k_a1",
            gain: min_a1,
            required: gamma1 * root_n,
        });
    }
    if min_a2 < gamma2 * root_n {
        out.push(GainWarning {
            channel: "k_a2",
            gain: min_a2,
            required: gamma2 * root_n,
        });
    }
    out
}
