//! Probabilistic finite-state machines built from parametric modules.
//!
//! A machine has up to four states, each running one low-level behavior, and
//! up to four outgoing transitions per state. A transition whose condition is
//! fulfilled fires with its probability β.

mod behavior;
mod generate;
pub mod rwalk;
pub mod sheep;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ColorSignal, Hue};
use crate::rm3::{Actuation, SensorReadings};
use crate::rng::RngStream;

pub use behavior::{behavior_output, steer_toward, transition_fires, BehaviorMemory};
pub use generate::{mutate_pfsm, mutate_pfsm_traced, sample_pfsm, EditKind};

pub const MAX_STATES: usize = 4;
pub const MAX_TRANSITIONS: usize = 4;
pub const TAU_MIN: u32 = 1;
pub const TAU_MAX: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "kebab-case")]
pub enum BehaviorSpec {
    /// Straight motion; on obstacles, turn in place for up to `tau` cycles.
    Exploration { tau: u32, led: ColorSignal },
    Stop { led: ColorSignal },
    ColorFollowing { color: Hue, led: ColorSignal },
    ColorElusion { color: Hue, led: ColorSignal },
    /// Circular motion at `theta` rad/s, `theta` in `(-π, π] \ {0}`.
    Circling { theta: f64, led: ColorSignal },
}

impl BehaviorSpec {
    pub fn led(&self) -> ColorSignal {
        match *self {
            BehaviorSpec::Exploration { led, .. }
            | BehaviorSpec::Stop { led }
            | BehaviorSpec::ColorFollowing { led, .. }
            | BehaviorSpec::ColorElusion { led, .. }
            | BehaviorSpec::Circling { led, .. } => led,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BehaviorSpec::Exploration { .. } => "exploration",
            BehaviorSpec::Stop { .. } => "stop",
            BehaviorSpec::ColorFollowing { .. } => "color-following",
            BehaviorSpec::ColorElusion { .. } => "color-elusion",
            BehaviorSpec::Circling { .. } => "circling",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BehaviorSpec::Exploration { tau, .. } if !(TAU_MIN..=TAU_MAX).contains(&tau) => Err(
                Error::Format(format!("exploration tau {tau} outside [{TAU_MIN}, {TAU_MAX}]")),
            ),
            BehaviorSpec::Circling { theta, .. } if !valid_theta(theta) => Err(Error::Format(
                format!("circling theta {theta} outside (-pi, pi] or zero"),
            )),
            _ => Ok(()),
        }
    }
}

pub(crate) fn valid_theta(theta: f64) -> bool {
    theta.is_finite() && theta > -PI && theta <= PI && theta != 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum ConditionSpec {
    BlackFloor { beta: f64 },
    GrayFloor { beta: f64 },
    WhiteFloor { beta: f64 },
    FixedProbability { beta: f64 },
    ColorDetection { color: Hue, beta: f64 },
}

impl ConditionSpec {
    pub fn beta(&self) -> f64 {
        match *self {
            ConditionSpec::BlackFloor { beta }
            | ConditionSpec::GrayFloor { beta }
            | ConditionSpec::WhiteFloor { beta }
            | ConditionSpec::FixedProbability { beta }
            | ConditionSpec::ColorDetection { beta, .. } => beta,
        }
    }

    pub(crate) fn beta_mut(&mut self) -> &mut f64 {
        match self {
            ConditionSpec::BlackFloor { beta }
            | ConditionSpec::GrayFloor { beta }
            | ConditionSpec::WhiteFloor { beta }
            | ConditionSpec::FixedProbability { beta }
            | ConditionSpec::ColorDetection { beta, .. } => beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    #[serde(flatten)]
    pub condition: ConditionSpec,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfsmState {
    #[serde(flatten)]
    pub behavior: BehaviorSpec,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

/// A validated machine. State 0 is the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PfsmDoc", into = "PfsmDoc")]
pub struct PfsmConfig {
    states: Vec<PfsmState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PfsmDoc {
    states: Vec<PfsmState>,
}

impl TryFrom<PfsmDoc> for PfsmConfig {
    type Error = Error;
    fn try_from(doc: PfsmDoc) -> Result<Self> {
        PfsmConfig::new(doc.states)
    }
}

impl From<PfsmConfig> for PfsmDoc {
    fn from(c: PfsmConfig) -> Self {
        PfsmDoc { states: c.states }
    }
}

impl PfsmConfig {
    pub fn new(states: Vec<PfsmState>) -> Result<Self> {
        let config = Self { states };
        config.validate()?;
        Ok(config)
    }

    /// Single-state machine without transitions.
    pub fn single(behavior: BehaviorSpec) -> Self {
        Self {
            states: vec![PfsmState {
                behavior,
                transitions: Vec::new(),
            }],
        }
    }

    pub fn states(&self) -> &[PfsmState] {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.states.len();
        if n == 0 || n > MAX_STATES {
            return Err(Error::Format(format!(
                "machine has {n} states, expected 1 to {MAX_STATES}"
            )));
        }
        for (i, s) in self.states.iter().enumerate() {
            s.behavior.validate()?;
            if s.transitions.len() > MAX_TRANSITIONS {
                return Err(Error::Format(format!(
                    "state {i} has {} transitions, at most {MAX_TRANSITIONS} allowed",
                    s.transitions.len()
                )));
            }
            for t in &s.transitions {
                if t.target >= n {
                    return Err(Error::Format(format!(
                        "state {i} has a transition to missing state {}",
                        t.target
                    )));
                }
                if t.target == i {
                    return Err(Error::Format(format!("state {i} has a self-transition")));
                }
                let beta = t.condition.beta();
                if !(0.0..=1.0).contains(&beta) {
                    return Err(Error::Format(format!(
                        "transition probability {beta} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfsmExecState {
    pub current: usize,
    pub memory: BehaviorMemory,
}

/// One control cycle: evaluate the current state's transitions in order,
/// take the first that fires, then run the (possibly new) state's behavior.
pub fn pfsm_step(
    config: &PfsmConfig,
    exec: &mut PfsmExecState,
    readings: &SensorReadings,
    rng: &mut RngStream,
) -> Actuation {
    debug_assert!(exec.current < config.states.len());
    let state = &config.states[exec.current];
    for t in &state.transitions {
        if transition_fires(&t.condition, readings, rng) {
            exec.current = t.target;
            exec.memory = BehaviorMemory::default();
            break;
        }
    }
    behavior_output(
        &config.states[exec.current].behavior,
        readings,
        &mut exec.memory,
        rng,
    )
}
