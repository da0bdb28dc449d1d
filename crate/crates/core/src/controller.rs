//! Controller abstraction and controller files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{encode_inputs, forward, NnGenome};
use crate::pfsm::rwalk::{rwalk_step, RwalkMemory};
use crate::pfsm::sheep::{sheep_step, SheepConfig, SheepMemory};
use crate::pfsm::{pfsm_step, PfsmConfig, PfsmExecState};
use crate::rm3::{Actuation, SensorReadings};
use crate::rng::RngStream;

/// Control software for one robot kind. Per-robot state lives in `Memory`.
pub trait Controller: Sync {
    type Memory: Clone + Default + Send;

    fn control(&self, readings: &SensorReadings, memory: &mut Self::Memory, rng: &mut RngStream) -> Actuation;

    /// Whether the robot has permanently stopped.
    fn halted(&self, _memory: &Self::Memory) -> bool {
        false
    }
}

impl Controller for PfsmConfig {
    type Memory = PfsmExecState;
    fn control(&self, r: &SensorReadings, m: &mut PfsmExecState, rng: &mut RngStream) -> Actuation {
        pfsm_step(self, m, r, rng)
    }
}

impl Controller for NnGenome {
    type Memory = ();
    fn control(&self, r: &SensorReadings, _: &mut (), _: &mut RngStream) -> Actuation {
        forward(self, &encode_inputs(r))
    }
}

impl Controller for SheepConfig {
    type Memory = SheepMemory;
    fn control(&self, r: &SensorReadings, m: &mut SheepMemory, _: &mut RngStream) -> Actuation {
        sheep_step(self, r, m)
    }
    fn halted(&self, m: &SheepMemory) -> bool {
        m.halted
    }
}

/// The ballistic random walk baseline.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RandomWalk;

impl Controller for RandomWalk {
    type Memory = RwalkMemory;
    fn control(&self, r: &SensorReadings, m: &mut RwalkMemory, rng: &mut RngStream) -> Actuation {
        rwalk_step(r, m, rng)
    }
}

/// Both wheels stopped, LED off.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Idle;

impl Controller for Idle {
    type Memory = ();
    fn control(&self, _: &SensorReadings, _: &mut (), _: &mut RngStream) -> Actuation {
        Actuation::default()
    }
}

/// Any shepherd controller the tools can load.
#[derive(Debug, Clone, PartialEq)]
pub enum ShepherdController {
    Pfsm(PfsmConfig),
    Network(NnGenome),
    RandomWalk,
    Idle,
}

#[derive(Debug, Clone, Default)]
pub enum ShepherdMemory {
    #[default]
    Fresh,
    Pfsm(PfsmExecState),
    RandomWalk(RwalkMemory),
}

impl Controller for ShepherdController {
    type Memory = ShepherdMemory;

    fn control(&self, r: &SensorReadings, m: &mut ShepherdMemory, rng: &mut RngStream) -> Actuation {
        match self {
            ShepherdController::Pfsm(c) => {
                if !matches!(m, ShepherdMemory::Pfsm(_)) {
                    *m = ShepherdMemory::Pfsm(PfsmExecState::default());
                }
                let ShepherdMemory::Pfsm(exec) = m else { unreachable!() };
                c.control(r, exec, rng)
            }
            ShepherdController::Network(g) => g.control(r, &mut (), rng),
            ShepherdController::RandomWalk => {
                if !matches!(m, ShepherdMemory::RandomWalk(_)) {
                    *m = ShepherdMemory::RandomWalk(RwalkMemory::default());
                }
                let ShepherdMemory::RandomWalk(mem) = m else { unreachable!() };
                RandomWalk.control(r, mem, rng)
            }
            ShepherdController::Idle => Actuation::default(),
        }
    }
}

pub const CONTROLLER_FORMAT_VERSION: u32 = 1;

/// On-disk controller document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControllerFile {
    Pfsm {
        version: u32,
        #[serde(flatten)]
        machine: PfsmConfig,
    },
    Genome {
        version: u32,
        weights: NnGenome,
    },
}

impl ControllerFile {
    pub fn pfsm(machine: PfsmConfig) -> Self {
        ControllerFile::Pfsm {
            version: CONTROLLER_FORMAT_VERSION,
            machine,
        }
    }

    pub fn genome(weights: NnGenome) -> Self {
        ControllerFile::Genome {
            version: CONTROLLER_FORMAT_VERSION,
            weights,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ControllerFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("controller file: {e}")))?;
        let version = match &file {
            ControllerFile::Pfsm { version, .. } | ControllerFile::Genome { version, .. } => *version,
        };
        if version != CONTROLLER_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported controller format version {version}")));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("controller serializes")
    }

    pub fn into_controller(self) -> ShepherdController {
        match self {
            ControllerFile::Pfsm { machine, .. } => ShepherdController::Pfsm(machine),
            ControllerFile::Genome { weights, .. } => ShepherdController::Network(weights),
        }
    }
}

/// Resolves a built-in baseline name (`rwalk`, `idle`) or loads a controller
/// file.
pub fn load_controller(spec: &str) -> Result<ShepherdController> {
    match spec {
        "rwalk" | "r-walk" => return Ok(ShepherdController::RandomWalk),
        "idle" => return Ok(ShepherdController::Idle),
        _ => {}
    }
    let text = std::fs::read_to_string(Path::new(spec))?;
    Ok(ControllerFile::parse(&text)?.into_controller())
}
