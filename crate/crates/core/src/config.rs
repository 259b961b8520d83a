//! Scenario files: TOML, with the demo constants as defaults.
//!
//! Only `[topology]` is mandatory. Unknown keys are rejected so that a
//! misspelt gain never silently falls back to its default.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamic::{LearnerGains, SlidingGains};
use crate::estimator::EstimatorGains;
use crate::graph::Topology;
use crate::kinematic::{FormationOffset, KinematicGains, ShuntingParams};
use crate::models::{AxisSignal, BodyVelocity, Disturbance, DisturbanceSpec, LeaderTrajectory, Pose, RobotParams};
use crate::sim::{ConfigIssue, EstimatorSwitching, RobotConfig, ScenarioConfig, Variant};

/// The three-follower reference scenario shipped with the crate.
pub const DEMO_CONFIG: &str = include_str!("../scenarios/demo.toml");

/// Formation offsets used when a three-follower file has no `[[robots]]`.
pub const DEFAULT_OFFSETS: [[f64; 2]; 3] = [[3.0, 0.0], [4.0, 5.0], [4.0, -5.0]];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub dt: f64,
    pub horizon: f64,
    pub decimation: usize,
    pub variant: Variant,
    pub estimator_switching: EstimatorSwitching,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 20.0,
            decimation: 10,
            variant: Variant::BioinspiredLearning,
            estimator_switching: EstimatorSwitching::Implicit,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub adjacency: Vec<Vec<f64>>,
    pub leader_links: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub a: f64,
    pub b: f64,
    pub disturbance: DisturbanceSpec,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            a: 0.4,
            b: 10.0,
            disturbance: DisturbanceSpec {
                linear: Disturbance::Constant { amplitude: 0.1 },
                angular: Disturbance::Sinusoid {
                    amplitude: 0.1,
                    frequency: 1.0,
                    phase: 0.0,
                },
            },
        }
    }
}

/// Estimator gains; `k_a2`/`k_b2` default to `k_a1`/`k_b1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_p: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_a1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_b1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_a2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_b2: Option<f64>,
}

impl EstimatorSection {
    fn resolve(&self, base: Option<&EstimatorGains>) -> EstimatorGains {
        let k_p = self.k_p.or(base.map(|b| [b.k_x, b.k_y, b.k_theta])).unwrap_or([15.0; 3]);
        let k_a1 = self.k_a1.or(base.map(|b| b.k_a1)).unwrap_or(25.0);
        let k_b1 = self.k_b1.or(base.map(|b| b.k_b1)).unwrap_or(1.0);
        EstimatorGains {
            k_x: k_p[0],
            k_y: k_p[1],
            k_theta: k_p[2],
            k_a1,
            k_b1,
            k_a2: self.k_a2.or(base.map(|b| b.k_a2)).unwrap_or(k_a1),
            k_b2: self.k_b2.or(base.map(|b| b.k_b2)).unwrap_or(k_b1),
        }
    }

    fn full(g: &EstimatorGains) -> Self {
        Self {
            k_p: Some([g.k_x, g.k_y, g.k_theta]),
            k_a1: Some(g.k_a1),
            k_b1: Some(g.k_b1),
            k_a2: Some(g.k_a2),
            k_b2: Some(g.k_b2),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicSection {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Default for KinematicSection {
    fn default() -> Self {
        Self {
            k1: 2.0,
            k2: 3.0,
            k3: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShuntingSection {
    #[serde(rename = "A")]
    pub decay: f64,
    #[serde(rename = "B")]
    pub upper: f64,
    /// Defaults to `B`.
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
}

impl Default for ShuntingSection {
    fn default() -> Self {
        Self {
            decay: 2.0,
            upper: 2.0,
            lower: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicSection {
    pub c_a: f64,
    pub c_b: f64,
    pub boundary_layer: f64,
    pub k4: [f64; 2],
    pub k5: [f64; 2],
    pub initial_c_hat: [f64; 2],
}

impl Default for DynamicSection {
    fn default() -> Self {
        Self {
            c_a: 3.0,
            c_b: 3.0,
            boundary_layer: 0.0,
            k4: [6.0, 50.0],
            k5: [25.0, 50.0],
            initial_c_hat: [0.1, 1.0],
        }
    }
}

fn demo_leader() -> LeaderTrajectory {
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

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSection {
    pub offset: [f64; 2],
    /// `[x, y, theta]`; defaults to the perturbed formation slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pose: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_velocity: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorSection>,
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub simulation: SimulationSection,
    pub topology: TopologySection,
    #[serde(default = "demo_leader")]
    pub leader: LeaderTrajectory,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub estimator: EstimatorSection,
    #[serde(default)]
    pub kinematic: KinematicSection,
    #[serde(default)]
    pub shunting: ShuntingSection,
    #[serde(default)]
    pub dynamic: DynamicSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub robots: Vec<RobotSection>,
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub variant: Option<Variant>,
    pub decimation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedIssue {
    pub line: Option<usize>,
    pub issue: ConfigIssue,
}

impl fmt::Display for LocatedIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.issue),
            None => write!(f, "{}", self.issue),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}: invalid scenario\n{}", .issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid {
        origin: String,
        issues: Vec<LocatedIssue>,
    },
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub warnings: Vec<String>,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// 1-based line of `key` (dotted path) in `src`, falling back to its section
/// header.
fn locate(src: &str, key: &str) -> Option<usize> {
    let (section, name) = match key.rsplit_once('.') {
        Some((s, n)) => (s, n),
        None => (key, ""),
    };
    let mut current = String::new();
    let mut header = None;
    for (idx, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section || (name.is_empty() && current == key) {
                header.get_or_insert(idx + 1);
            }
            continue;
        }
        let matches_key = |k: &str| {
            line.strip_prefix(k)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        };
        if current == section && !name.is_empty() && matches_key(name) {
            return Some(idx + 1);
        }
        if current.is_empty() && matches_key(key) {
            return Some(idx + 1);
        }
        if current.is_empty() && name.is_empty() && matches_key(section) {
            return Some(idx + 1);
        }
    }
    header
}

impl ScenarioFile {
    pub fn parse(src: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(src, s.start));
            ConfigError::Parse {
                origin: origin.to_string(),
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.simulation.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.simulation.horizon = h;
        }
        if let Some(v) = o.variant {
            self.simulation.variant = v;
        }
        if let Some(d) = o.decimation {
            self.simulation.decimation = d;
        }
    }

    /// Builds the domain config. Structural problems are reported here;
    /// invariant checks happen in [`ScenarioConfig::validate`].
    pub fn resolve(&self) -> Result<ScenarioConfig, Vec<ConfigIssue>> {
        let mut issues = Vec::new();
        let topology = Topology::new(&self.topology.adjacency, &self.topology.leader_links)
            .map_err(|e| issues.push(ConfigIssue { key: "topology".into(), message: e.to_string() }))
            .ok();

        let base = self.estimator.resolve(None);
        let robot_sections: Vec<RobotSection> = if self.robots.is_empty() {
            match topology.as_ref().map(Topology::len) {
                Some(3) => DEFAULT_OFFSETS
                    .iter()
                    .map(|&offset| RobotSection {
                        offset,
                        initial_pose: None,
                        initial_velocity: None,
                        estimator: None,
                    })
                    .collect(),
                _ => {
                    issues.push(ConfigIssue {
                        key: "robots".into(),
                        message: "[[robots]] entries with offsets are required unless the topology has 3 followers"
                            .into(),
                    });
                    Vec::new()
                }
            }
        } else {
            self.robots.clone()
        };

        let robots = robot_sections
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let offset = FormationOffset {
                    dx: r.offset[0],
                    dy: r.offset[1],
                };
                let initial_pose = match r.initial_pose {
                    Some([x, y, th]) => Pose::new(x, y, th),
                    None => ScenarioConfig::perturbed_start(&self.leader, &offset).unwrap_or_else(|| {
                        issues.push(ConfigIssue {
                            key: format!("robots.{}", i + 1),
                            message: "no initial_pose given and the leader's start heading is undefined".into(),
                        });
                        Pose::default()
                    }),
                };
                let [v, w] = r.initial_velocity.unwrap_or([0.0, 0.0]);
                RobotConfig {
                    offset,
                    initial_pose,
                    initial_velocity: BodyVelocity::new(v, w),
                    estimator: r.estimator.map_or(base, |e| e.resolve(Some(&base))),
                }
            })
            .collect();

        let Some(topology) = topology else {
            return Err(issues);
        };
        if !issues.is_empty() {
            return Err(issues);
        }
        let s = &self.simulation;
        Ok(ScenarioConfig {
            topology,
            robots,
            kinematic: KinematicGains {
                k1: self.kinematic.k1,
                k2: self.kinematic.k2,
                k3: self.kinematic.k3,
            },
            shunting: ShuntingParams {
                decay: self.shunting.decay,
                upper: self.shunting.upper,
                lower: self.shunting.lower.unwrap_or(self.shunting.upper),
            },
            sliding: SlidingGains {
                c_a: self.dynamic.c_a,
                c_b: self.dynamic.c_b,
                boundary_layer: self.dynamic.boundary_layer,
            },
            learner: LearnerGains {
                k4: self.dynamic.k4,
                k5: self.dynamic.k5,
            },
            initial_c_hat: self.dynamic.initial_c_hat,
            plant: RobotParams {
                a: self.plant.a,
                b: self.plant.b,
            },
            disturbance: self.plant.disturbance,
            leader: self.leader,
            dt: s.dt,
            horizon: s.horizon,
            decimation: s.decimation,
            variant: s.variant,
            estimator_switching: s.estimator_switching,
        })
    }

    /// Fully-specified file equivalent to `config` (all defaults spelled out).
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let base = config.robots.first().map(|r| r.estimator);
        Self {
            simulation: SimulationSection {
                dt: config.dt,
                horizon: config.horizon,
                decimation: config.decimation,
                variant: config.variant,
                estimator_switching: config.estimator_switching,
            },
            topology: TopologySection {
                adjacency: config.topology.adjacency_rows(),
                leader_links: config.topology.leader_link_values(),
            },
            leader: config.leader,
            plant: PlantSection {
                a: config.plant.a,
                b: config.plant.b,
                disturbance: config.disturbance,
            },
            estimator: base.as_ref().map(EstimatorSection::full).unwrap_or_default(),
            kinematic: KinematicSection {
                k1: config.kinematic.k1,
                k2: config.kinematic.k2,
                k3: config.kinematic.k3,
            },
            shunting: ShuntingSection {
                decay: config.shunting.decay,
                upper: config.shunting.upper,
                lower: Some(config.shunting.lower),
            },
            dynamic: DynamicSection {
                c_a: config.sliding.c_a,
                c_b: config.sliding.c_b,
                boundary_layer: config.sliding.boundary_layer,
                k4: config.learner.k4,
                k5: config.learner.k5,
                initial_c_hat: config.initial_c_hat,
            },
            robots: config
                .robots
                .iter()
                .map(|r| RobotSection {
                    offset: [r.offset.dx, r.offset.dy],
                    initial_pose: Some([r.initial_pose.x, r.initial_pose.y, r.initial_pose.theta]),
                    initial_velocity: Some([r.initial_velocity.v, r.initial_velocity.w]),
                    estimator: (Some(r.estimator) != base).then(|| EstimatorSection::full(&r.estimator)),
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }
}

/// Parses, applies overrides, resolves defaults and validates.
pub fn load_config_str(src: &str, origin: &str, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let mut file = ScenarioFile::parse(src, origin)?;
    file.apply(overrides);
    let located = |issues: Vec<ConfigIssue>| ConfigError::Invalid {
        origin: origin.to_string(),
        issues: issues
            .into_iter()
            .map(|issue| LocatedIssue {
                line: locate(src, &issue.key),
                issue,
            })
            .collect(),
    };
    let config = file.resolve().map_err(located)?;
    let warnings = config.validate().map_err(located)?;
    Ok(LoadedConfig { config, warnings })
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config_str(&src, &path.display().to_string(), overrides)
}

/// The built-in three-follower scenario.
pub fn demo_config(overrides: &Overrides) -> LoadedConfig {
    load_config_str(DEMO_CONFIG, "demo", overrides).expect("embedded demo scenario is valid")
}
