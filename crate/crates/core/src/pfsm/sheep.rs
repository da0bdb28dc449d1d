//! Reactive sheep controllers.
//!
//! All three variants share one fixed machine: a permanent halt on white
//! floor, color reactions, a short proximity nudge, and standstill otherwise.
//! The variants differ in which colors they react to.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{ColorSignal, FloorColor, Hue};
use crate::rm3::{Actuation, SensorReadings, MAX_WHEEL_SPEED, PROX_ANGLES};

use super::behavior::{steer_toward, OBSTACLE_THRESHOLD};

/// Cycles a sheep keeps moving after a proximity stimulus disappears.
pub const NUDGE_CYCLES: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SheepVariant {
    /// Attracted to magenta.
    C1,
    /// Repelled by cyan.
    C2,
    /// Attracted to magenta and repelled by cyan.
    C3,
}

impl SheepVariant {
    pub const ALL: [SheepVariant; 3] = [SheepVariant::C1, SheepVariant::C2, SheepVariant::C3];

    pub fn attracted(self) -> bool {
        matches!(self, SheepVariant::C1 | SheepVariant::C3)
    }

    pub fn repelled(self) -> bool {
        matches!(self, SheepVariant::C2 | SheepVariant::C3)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SheepVariant::C1 => "c1",
            SheepVariant::C2 => "c2",
            SheepVariant::C3 => "c3",
        }
    }
}

impl fmt::Display for SheepVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SheepVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "c1" | "attraction" => Ok(SheepVariant::C1),
            "c2" | "repulsion" => Ok(SheepVariant::C2),
            "c3" | "attraction-repulsion" => Ok(SheepVariant::C3),
            other => Err(Error::InvalidArgument(format!("unknown sheep variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheepConfig {
    pub variant: SheepVariant,
    /// When both colors are visible to a C3 sheep, flee cyan first.
    #[serde(default = "default_true")]
    pub repulsion_first: bool,
}

fn default_true() -> bool {
    true
}

impl SheepConfig {
    pub fn new(variant: SheepVariant) -> Self {
        Self {
            variant,
            repulsion_first: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SheepMemory {
    pub halted: bool,
    pub nudge_countdown: u8,
}

/// One control cycle of a sheep.
pub fn sheep_step(config: &SheepConfig, readings: &SensorReadings, memory: &mut SheepMemory) -> Actuation {
    if memory.halted || readings.any_ground(FloorColor::White) {
        memory.halted = true;
        return Actuation::stopped(ColorSignal::None);
    }
    let led = ColorSignal::Yellow;
    let flee = config.variant.repelled() && readings.sees(Hue::Cyan);
    let approach = config.variant.attracted() && readings.sees(Hue::Magenta);
    let flee_action = || steer_toward(readings.color_vector(Hue::Cyan).angle + PI, MAX_WHEEL_SPEED);
    let approach_action = || steer_toward(readings.color_vector(Hue::Magenta).angle, MAX_WHEEL_SPEED);

    let color_reaction = match (flee, approach) {
        (true, true) if config.repulsion_first => Some(flee_action()),
        (true, true) => Some(approach_action()),
        (true, false) => Some(flee_action()),
        (false, true) => Some(approach_action()),
        (false, false) => None,
    };
    if let Some((l, r)) = color_reaction {
        memory.nudge_countdown = 0;
        return Actuation::new(l, r, led);
    }

    let (strongest, value) = readings.strongest_prox();
    if value > OBSTACLE_THRESHOLD {
        memory.nudge_countdown = NUDGE_CYCLES;
        let (l, r) = steer_toward(PROX_ANGLES[strongest] + PI, MAX_WHEEL_SPEED);
        return Actuation::new(l, r, led);
    }
    if memory.nudge_countdown > 0 {
        memory.nudge_countdown -= 1;
        return Actuation::new(MAX_WHEEL_SPEED, MAX_WHEEL_SPEED, led);
    }
    Actuation::stopped(led)
}
