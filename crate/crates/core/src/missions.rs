//! Missions, scenario construction and objective functions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{arena_regular_octagon, ArenaSpec, Circle, FloorColor, FloorRegion, Vec2, ARENA_AREA};
use crate::pfsm::sheep::{SheepConfig, SheepVariant};

pub const N_SHEPHERDS: usize = 5;
pub const N_SHEEP: usize = 10;
/// Mission length in control cycles (120 s at 10 Hz).
pub const EPISODE_CYCLES: u32 = 1200;
/// Radius of the central spawn disk, meters.
pub const CENTRAL_SPAWN_RADIUS: f64 = 0.60;
/// Area of each Herding goal region, square meters.
pub const GOAL_AREA: f64 = 0.3;
/// Distance of the Herding goal centers from the arena center, meters.
pub const GOAL_DISTANCE: f64 = 0.60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mission {
    Aggregation,
    Dispersion,
    Herding,
}

impl Mission {
    pub const ALL: [Mission; 3] = [Mission::Aggregation, Mission::Dispersion, Mission::Herding];

    pub fn sense(self) -> ObjectiveSense {
        match self {
            Mission::Aggregation | Mission::Herding => ObjectiveSense::Minimize,
            Mission::Dispersion => ObjectiveSense::Maximize,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mission::Aggregation => "aggregation",
            Mission::Dispersion => "dispersion",
            Mission::Herding => "herding",
        }
    }
}

impl fmt::Display for Mission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mission {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aggregation" => Ok(Mission::Aggregation),
            "dispersion" => Ok(Mission::Dispersion),
            "herding" => Ok(Mission::Herding),
            other => Err(Error::InvalidArgument(format!("unknown mission '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

impl ObjectiveSense {
    /// Maps an objective to a cost where lower is always better.
    #[inline]
    pub fn cost(self, objective: f64) -> f64 {
        match self {
            ObjectiveSense::Minimize => objective,
            ObjectiveSense::Maximize => -objective,
        }
    }

    /// Whether `a` is strictly better than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        self.cost(a) < self.cost(b)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveSense::Minimize => "minimize",
            ObjectiveSense::Maximize => "maximize",
        }
    }
}

impl FromStr for ObjectiveSense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimize" | "min" => Ok(ObjectiveSense::Minimize),
            "maximize" | "max" => Ok(ObjectiveSense::Maximize),
            other => Err(Error::InvalidInput(format!("unknown objective sense '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Placement {
    WholeArena,
    CentralDisk { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub mission: Mission,
    pub sheep: SheepConfig,
    pub n_shepherds: usize,
    pub n_sheep: usize,
    pub duration: u32,
    pub arena: ArenaSpec,
    pub placement: Placement,
}

impl ScenarioSpec {
    pub fn sense(&self) -> ObjectiveSense {
        self.mission.sense()
    }

    pub fn variant(&self) -> SheepVariant {
        self.sheep.variant
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.mission, self.sheep.variant)
    }

    pub fn goal_regions(&self) -> Vec<Circle> {
        self.arena.white_regions().copied().collect()
    }

    /// Objective reported when a controller faults.
    pub fn worst_objective(&self) -> f64 {
        match self.mission {
            Mission::Aggregation => self.arena.diameter(),
            Mission::Dispersion => 0.0,
            Mission::Herding => self.n_sheep as f64,
        }
    }

    /// Mission objective from the final sheep state.
    pub fn objective(&self, sheep_positions: &[Vec2], halted: &[bool]) -> Result<f64> {
        match self.mission {
            Mission::Aggregation | Mission::Dispersion => f1_centroid_spread(sheep_positions),
            Mission::Herding => Ok(herding_objective(sheep_positions, halted, &self.goal_regions()) as f64),
        }
    }
}

/// Goal regions of the Herding arena: four white circles of 0.3 m² centered
/// 0.60 m from the arena center, each facing an octagon edge.
pub fn herding_goals() -> [Circle; 4] {
    let radius = (GOAL_AREA / PI).sqrt();
    std::array::from_fn(|k| Circle {
        center: Vec2::from_angle(PI / 8.0 + k as f64 * PI / 2.0) * GOAL_DISTANCE,
        radius,
    })
}

pub fn build_scenario(mission: Mission, variant: SheepVariant) -> ScenarioSpec {
    let mut arena = arena_regular_octagon(ARENA_AREA).expect("positive area");
    let placement = match mission {
        Mission::Aggregation => Placement::WholeArena,
        Mission::Dispersion | Mission::Herding => Placement::CentralDisk {
            radius: CENTRAL_SPAWN_RADIUS,
        },
    };
    if mission == Mission::Herding {
        for shape in herding_goals() {
            arena
                .add_region(FloorRegion {
                    shape,
                    color: FloorColor::White,
                })
                .expect("goal regions fit inside the arena");
        }
    }
    ScenarioSpec {
        mission,
        sheep: SheepConfig::new(variant),
        n_shepherds: N_SHEPHERDS,
        n_sheep: N_SHEEP,
        duration: EPISODE_CYCLES,
        arena,
        placement,
    }
}

/// All nine mission × sheep pairings.
pub fn all_scenarios() -> Vec<ScenarioSpec> {
    Mission::ALL
        .into_iter()
        .flat_map(|m| SheepVariant::ALL.into_iter().map(move |v| build_scenario(m, v)))
        .collect()
}

/// Mean distance from each position to the centroid of all positions.
pub fn f1_centroid_spread(positions: &[Vec2]) -> Result<f64> {
    if positions.is_empty() {
        return Err(Error::InvalidArgument("no positions".into()));
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite position".into()));
    }
    let n = positions.len() as f64;
    // offsets from the first point keep coincident inputs exactly at zero
    let origin = positions[0];
    let mean_offset = positions.iter().fold(Vec2::ZERO, |acc, &p| acc + (p - origin)) * (1.0 / n);
    Ok(positions.iter().map(|&p| ((p - origin) - mean_offset).norm()).sum::<f64>() / n)
}

/// Number of positions lying in none of the (closed) regions.
pub fn f2_sheep_outside(positions: &[Vec2], regions: &[Circle]) -> usize {
    positions
        .iter()
        .filter(|&&p| !regions.iter().any(|c| c.contains(p)))
        .count()
}

/// Herding score: sheep neither inside a goal region nor halted on one.
///
/// Sheep halt as soon as a ground probe touches white floor, which can leave
/// the body center a few millimeters short of the region; white floor exists
/// only in goal regions, so a halted sheep has reached a goal.
pub fn herding_objective(positions: &[Vec2], halted: &[bool], regions: &[Circle]) -> usize {
    positions
        .iter()
        .zip(halted.iter().copied().chain(std::iter::repeat(false)))
        .filter(|&(&p, h)| !h && !regions.iter().any(|c| c.contains(p)))
        .count()
}
