//! Distributed leader-follower formation control for unicycle robots.
//!
//! Each follower estimates the leader's pose and velocities from its graph
//! neighbours ([`estimator`]), turns the formation error into velocity
//! commands filtered by a shunting neuron ([`kinematic`]), and realises those
//! commands with a sliding-mode torque law whose channel gains are learned
//! online ([`dynamic`]). [`sim`] closes the loop at a fixed step and
//! produces traces and metrics; [`config`] reads scenario files.

pub mod config;
pub mod dynamic;
pub mod estimator;
pub mod graph;
pub mod integrate;
pub mod kinematic;
pub mod models;
pub mod sim;
pub mod switching;

pub use config::{demo_config, load_config, load_config_str, ConfigError, LoadedConfig, Overrides};
pub use sim::{compare_variants, run, run_with, Parallelism, RunOutput, ScenarioConfig, SimError, Variant};
