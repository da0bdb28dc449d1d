//! Simulation and automatic design of shepherding swarms.
//!
//! The crate bundles a 2D simulator of e-puck-like robots with a fixed
//! sensor/actuator interface, two kinds of shepherd control software
//! (probabilistic finite-state machines and a feed-forward network), reactive
//! sheep, the design methods that tune them under an episode budget, and the
//! rank statistics used to compare methods.

pub mod campaign;
pub mod controller;
pub mod error;
pub mod missions;
pub mod model;
pub mod nn;
pub mod optim;
pub mod pfsm;
pub mod rm3;
pub mod rng;
pub mod sim;
pub mod stats;

pub use controller::{load_controller, Controller, ControllerFile, ShepherdController};
pub use error::{Error, Result};
pub use missions::{all_scenarios, build_scenario, Mission, ObjectiveSense, ScenarioSpec};
pub use model::{ArenaSpec, Circle, ColorSignal, FloorColor, Pose, RobotBody, RobotKind, Vec2};
pub use nn::NnGenome;
pub use optim::{Budget, Evaluator, SimEvaluator};
pub use pfsm::sheep::{SheepConfig, SheepVariant};
pub use pfsm::PfsmConfig;
pub use rm3::{Actuation, SensorReadings};
pub use rng::RngStream;
pub use sim::{run_episode, EpisodeResult};
pub use stats::{friedman_eliminate, friedman_test, RankSummary};
