//! Campaign orchestration: design runs, assessment runs, observation export
//! and cross-scenario rank summaries.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{load_controller, ControllerFile, ShepherdController};
use crate::error::{Error, Result};
use crate::missions::{build_scenario, all_scenarios, Mission, ObjectiveSense, ScenarioSpec};
use crate::optim::{
    evolve, iterated_race, Budget, EvoHistory, EvoSettings, RaceHistory, RaceSettings, SimEvaluator,
    ASSESSMENT_SEED_BIT,
};
use crate::pfsm::sheep::SheepVariant;
use crate::rng::{derive_seed, label, RngStream};
use crate::sim::run_episode;
use crate::stats::{rank_summary, RankSummary};

pub const CAMPAIGN_FORMAT_VERSION: u32 = 1;
/// Smallest budget accepted for a design run.
pub const MIN_DESIGN_BUDGET: u64 = 1000;

/// The automatic design methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignMethod {
    Pistacchio,
    Evocmy,
}

impl DesignMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignMethod::Pistacchio => "pistacchio",
            DesignMethod::Evocmy => "evocmy",
        }
    }
}

impl std::str::FromStr for DesignMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pistacchio" => Ok(DesignMethod::Pistacchio),
            "evocmy" => Ok(DesignMethod::Evocmy),
            other => Err(Error::InvalidArgument(format!("unknown design method '{other}'"))),
        }
    }
}

/// A method taking part in a campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Design(DesignMethod),
    RandomWalk,
    File { name: String, path: PathBuf },
}

impl Method {
    pub fn name(&self) -> &str {
        match self {
            Method::Design(m) => m.as_str(),
            Method::RandomWalk => "rwalk",
            Method::File { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodEntry {
    Builtin(String),
    File { name: String, controller: PathBuf },
}

impl MethodEntry {
    pub fn resolve(&self) -> Result<Method> {
        match self {
            MethodEntry::Builtin(s) => match s.to_ascii_lowercase().as_str() {
                "pistacchio" => Ok(Method::Design(DesignMethod::Pistacchio)),
                "evocmy" => Ok(Method::Design(DesignMethod::Evocmy)),
                "rwalk" | "r-walk" => Ok(Method::RandomWalk),
                other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
            },
            MethodEntry::File { name, controller } => Ok(Method::File {
                name: name.clone(),
                path: controller.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioEntry {
    /// `mission-variant`, e.g. `herding-c3`.
    Named(String),
    Full(Box<ScenarioSpec>),
}

impl ScenarioEntry {
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        match self {
            ScenarioEntry::Named(s) => parse_scenario_name(s),
            ScenarioEntry::Full(spec) => Ok((**spec).clone()),
        }
    }
}

/// Builds a standard scenario from `mission-variant` or `mission/variant`.
pub fn parse_scenario_name(name: &str) -> Result<ScenarioSpec> {
    let (m, v) = name
        .split_once(['-', '/'])
        .ok_or_else(|| Error::InvalidConfig(format!("scenario '{name}' is not mission-variant")))?;
    let mission: Mission = m.parse().map_err(|_| Error::InvalidConfig(format!("unknown mission in '{name}'")))?;
    let variant: SheepVariant = v.parse().map_err(|_| Error::InvalidConfig(format!("unknown sheep in '{name}'")))?;
    Ok(build_scenario(mission, variant))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub version: u32,
    pub methods: Vec<MethodEntry>,
    /// Defaults to all nine scenarios.
    #[serde(default)]
    pub scenarios: Option<Vec<ScenarioEntry>>,
    /// Episodes per design run.
    pub budget: u64,
    pub designs_per_scenario: usize,
    pub assessments_per_design: usize,
    /// Assessments of each fixed controller per scenario; defaults to
    /// `designs_per_scenario * assessments_per_design`.
    #[serde(default)]
    pub fixed_assessments: Option<usize>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub race: RaceSettings,
    #[serde(default)]
    pub evo: EvoSettings,
}

fn default_alpha() -> f64 {
    0.05
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: CampaignConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("campaign config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn fixed_count(&self) -> usize {
        self.fixed_assessments
            .unwrap_or(self.designs_per_scenario * self.assessments_per_design)
    }

    pub fn resolved_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(MethodEntry::resolve).collect()
    }

    pub fn resolved_scenarios(&self) -> Result<Vec<ScenarioSpec>> {
        match &self.scenarios {
            None => Ok(all_scenarios()),
            Some(list) => list.iter().map(ScenarioEntry::resolve).collect(),
        }
    }

    /// Observations each method contributes to each scenario.
    pub fn observations_per_cell(&self, method: &Method) -> usize {
        match method {
            Method::Design(_) => self.designs_per_scenario * self.assessments_per_design,
            _ => self.fixed_count(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CAMPAIGN_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!("unsupported campaign version {}", self.version)));
        }
        let methods = self.resolved_methods()?;
        if methods.is_empty() {
            return Err(Error::InvalidConfig("no methods".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &methods {
            if !seen.insert(m.name().to_string()) {
                return Err(Error::InvalidConfig(format!("duplicate method '{}'", m.name())));
            }
        }
        let scenarios = self.resolved_scenarios()?;
        if scenarios.is_empty() {
            return Err(Error::InvalidConfig("no scenarios".into()));
        }
        let mut names = std::collections::HashSet::new();
        for s in &scenarios {
            if !names.insert(s.name()) {
                return Err(Error::InvalidConfig(format!("duplicate scenario '{}'", s.name())));
            }
        }
        let automatic = methods.iter().any(|m| matches!(m, Method::Design(_)));
        if automatic {
            if self.designs_per_scenario == 0 || self.assessments_per_design == 0 {
                return Err(Error::InvalidConfig("designs and assessments must be positive".into()));
            }
            if self.budget < MIN_DESIGN_BUDGET {
                return Err(Error::InvalidConfig(format!(
                    "design budget must be at least {MIN_DESIGN_BUDGET} episodes"
                )));
            }
            self.evo.validate()?;
        }
        let counts: Vec<usize> = methods.iter().map(|m| self.observations_per_cell(m)).collect();
        if counts[0] == 0 {
            return Err(Error::InvalidConfig("no observations per scenario".into()));
        }
        if counts.iter().any(|&c| c != counts[0]) {
            return Err(Error::InvalidConfig(format!(
                "unbalanced observations per scenario: {counts:?}"
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) || self.alpha == 0.0 {
            return Err(Error::InvalidConfig("alpha must be in (0, 1)".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }
}

/// One objective measurement, as written to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub method: String,
    pub mission: Mission,
    pub sheep: SheepVariant,
    pub design_idx: usize,
    pub seed: u64,
    pub objective: f64,
    pub sense: ObjectiveSense,
}

pub fn write_observations<W: Write>(out: W, rows: &[Observation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observations<R: std::io::Read>(input: R) -> Result<Vec<Observation>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidInput(format!("observations: {e}"))))
        .collect()
}

/// Seed of the `index`-th assessment episode derived from `seed`.
pub fn assessment_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, &[label("assess"), index]) | ASSESSMENT_SEED_BIT
}

/// Runs `n` assessment episodes; returns (seed, objective) pairs.
pub fn assess(controller: &ShepherdController, scenario: &ScenarioSpec, n: usize, seed: u64) -> Result<Vec<(u64, f64)>> {
    let seeds: Vec<u64> = (0..n as u64).map(|i| assessment_seed(seed, i)).collect();
    assess_seeds(controller, scenario, &seeds)
}

fn assess_seeds(controller: &ShepherdController, scenario: &ScenarioSpec, seeds: &[u64]) -> Result<Vec<(u64, f64)>> {
    seeds
        .par_iter()
        .map(|&s| run_episode(scenario, controller, s).map(|r| (s, r.objective)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "optimizer", content = "iterations", rename_all = "lowercase")]
pub enum DesignHistory {
    Race(Vec<RaceHistory>),
    Evolution(Vec<EvoHistory>),
}

/// Record of one design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignManifest {
    pub method: DesignMethod,
    pub scenario: String,
    pub seed: u64,
    pub budget: u64,
    pub consumed: u64,
    /// Mean objective of the returned controller during design.
    pub best_mean: Option<f64>,
    pub elapsed_seconds: f64,
    pub controller: String,
    pub race: Option<RaceSettings>,
    pub evo: Option<EvoSettings>,
    pub history: DesignHistory,
}

/// Runs one automatic design.
pub fn design(
    method: DesignMethod,
    scenario: &ScenarioSpec,
    budget: u64,
    seed: u64,
    race: &RaceSettings,
    evo: &EvoSettings,
) -> Result<(ControllerFile, DesignManifest)> {
    if budget < MIN_DESIGN_BUDGET {
        return Err(Error::InvalidConfig(format!(
            "design budget must be at least {MIN_DESIGN_BUDGET} episodes"
        )));
    }
    let started = Instant::now();
    let evaluator = SimEvaluator::new(scenario.clone());
    let mut allowance = Budget::new(budget);
    let mut rng = RngStream::new(seed);
    let (file, best_mean, history) = match method {
        DesignMethod::Pistacchio => {
            let out = iterated_race(&evaluator, &mut allowance, &mut rng, race)?;
            let mean = Some(out.best_mean).filter(|m| m.is_finite());
            (ControllerFile::pfsm(out.best), mean, DesignHistory::Race(out.history))
        }
        DesignMethod::Evocmy => {
            let out = evolve(&evaluator, &mut allowance, &mut rng, evo)?;
            (ControllerFile::genome(out.best), out.best_fitness, DesignHistory::Evolution(out.history))
        }
    };
    let manifest = DesignManifest {
        method,
        scenario: scenario.name(),
        seed,
        budget,
        consumed: allowance.consumed(),
        best_mean,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        controller: String::new(),
        race: (method == DesignMethod::Pistacchio).then(|| race.clone()),
        evo: (method == DesignMethod::Evocmy).then_some(*evo),
        history,
    };
    Ok((file, manifest))
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `stem.json` (controller) and `stem.manifest.json` into `dir`. The
/// controller goes last, so its presence marks a finished design.
pub fn write_design(dir: &Path, stem: &str, file: &ControllerFile, manifest: &DesignManifest) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let controller_path = dir.join(format!("{stem}.json"));
    let mut manifest = manifest.clone();
    manifest.controller = format!("{stem}.json");
    write_atomic(
        &dir.join(format!("{stem}.manifest.json")),
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    write_atomic(&controller_path, &file.to_json())?;
    Ok(controller_path)
}

/// Seed of design run `index` for a method and scenario.
pub fn design_run_seed(master: u64, method: &str, scenario: &str, index: usize) -> u64 {
    derive_seed(master, &[label("design"), label(method), label(scenario), index as u64])
}

/// Assessment seed of replicate `replicate` in a scenario; every method sees
/// the same seed in the same block.
pub fn block_seed(master: u64, scenario: &str, replicate: usize) -> u64 {
    derive_seed(master, &[label("assess"), label(scenario), replicate as u64]) | ASSESSMENT_SEED_BIT
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub observations: Vec<Observation>,
    /// Present when the campaign compares at least two methods.
    pub summary: Option<RankSummary>,
    pub csv_path: PathBuf,
}

pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const SUMMARY_FILE: &str = "ranks.json";

/// Runs every design and assessment of `config` and writes the artifacts.
/// Finished designs found in the output directory are reused.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| run_campaign_inner(config)),
        None => run_campaign_inner(config),
    }
}

fn run_campaign_inner(config: &CampaignConfig) -> Result<CampaignOutcome> {
    let methods = config.resolved_methods()?;
    let scenarios = config.resolved_scenarios()?;
    fs::create_dir_all(&config.output_dir)?;
    let mut rows = Vec::new();
    for method in &methods {
        for scenario in &scenarios {
            rows.extend(run_cell(config, method, scenario)?);
        }
    }
    let csv_path = config.output_dir.join(OBSERVATIONS_FILE);
    let mut buf = Vec::new();
    write_observations(&mut buf, &rows)?;
    write_atomic(&csv_path, std::str::from_utf8(&buf).expect("csv is utf-8"))?;

    let summary = if methods.len() >= 2 {
        let s = friedman_rank_summary(&rows, config.alpha)?;
        write_atomic(&config.output_dir.join(SUMMARY_FILE), &serde_json::to_string_pretty(&s)?)?;
        Some(s)
    } else {
        None
    };
    Ok(CampaignOutcome {
        observations: rows,
        summary,
        csv_path,
    })
}

fn run_cell(config: &CampaignConfig, method: &Method, scenario: &ScenarioSpec) -> Result<Vec<Observation>> {
    let name = scenario.name();
    let row = |design_idx: usize, (seed, objective): (u64, f64)| Observation {
        method: method.name().to_string(),
        mission: scenario.mission,
        sheep: scenario.variant(),
        design_idx,
        seed,
        objective,
        sense: scenario.sense(),
    };
    let mut rows = Vec::new();
    match method {
        Method::Design(dm) => {
            let dir = config.output_dir.join("controllers").join(dm.as_str()).join(&name);
            let per = config.assessments_per_design;
            for i in 0..config.designs_per_scenario {
                let stem = format!("design-{i}");
                let path = dir.join(format!("{stem}.json"));
                let controller = if path.exists() {
                    ControllerFile::parse(&fs::read_to_string(&path)?)?.into_controller()
                } else {
                    let seed = design_run_seed(config.master_seed, dm.as_str(), &name, i);
                    let (file, manifest) = design(*dm, scenario, config.budget, seed, &config.race, &config.evo)?;
                    write_design(&dir, &stem, &file, &manifest)?;
                    file.into_controller()
                };
                let seeds: Vec<u64> = (i * per..(i + 1) * per)
                    .map(|r| block_seed(config.master_seed, &name, r))
                    .collect();
                rows.extend(assess_seeds(&controller, scenario, &seeds)?.into_iter().map(|o| row(i, o)));
            }
        }
        Method::RandomWalk | Method::File { .. } => {
            let controller = match method {
                Method::File { path, .. } => load_controller(&path.to_string_lossy())?,
                _ => ShepherdController::RandomWalk,
            };
            let seeds: Vec<u64> = (0..config.fixed_count())
                .map(|r| block_seed(config.master_seed, &name, r))
                .collect();
            rows.extend(assess_seeds(&controller, scenario, &seeds)?.into_iter().map(|o| row(0, o)));
        }
    }
    Ok(rows)
}

/// Ranks methods within blocks of (scenario, replicate index) and
/// summarizes mean ranks with confidence intervals.
pub fn friedman_rank_summary(observations: &[Observation], alpha: f64) -> Result<RankSummary> {
    let mut methods: Vec<String> = Vec::new();
    let mut scenarios: Vec<(Mission, SheepVariant)> = Vec::new();
    let mut cells: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
    for o in observations {
        if o.mission.sense() != o.sense {
            return Err(Error::InvalidInput(format!("sense {} does not match mission {}", o.sense.as_str(), o.mission)));
        }
        let m = match methods.iter().position(|x| *x == o.method) {
            Some(i) => i,
            None => {
                methods.push(o.method.clone());
                methods.len() - 1
            }
        };
        let key = (o.mission, o.sheep);
        let s = match scenarios.iter().position(|x| *x == key) {
            Some(i) => i,
            None => {
                scenarios.push(key);
                scenarios.len() - 1
            }
        };
        cells.entry((s, m)).or_default().push(o.sense.cost(o.objective));
    }
    if methods.len() < 2 {
        return Err(Error::InvalidInput("need observations of at least two methods".into()));
    }
    let mut blocks = Vec::new();
    for (s, key) in scenarios.iter().enumerate() {
        let counts: Vec<usize> = (0..methods.len())
            .map(|m| cells.get(&(s, m)).map_or(0, Vec::len))
            .collect();
        if counts.iter().any(|&c| c != counts[0]) || counts[0] == 0 {
            return Err(Error::InvalidInput(format!(
                "unbalanced observations in {}-{}: {counts:?}",
                key.0, key.1
            )));
        }
        for r in 0..counts[0] {
            blocks.push((0..methods.len()).map(|m| cells[&(s, m)][r]).collect::<Vec<f64>>());
        }
    }
    rank_summary(&blocks, &methods, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(method: &str, mission: Mission, objective: f64) -> Observation {
        Observation {
            method: method.into(),
            mission,
            sheep: SheepVariant::C1,
            design_idx: 0,
            seed: 0,
            objective,
            sense: mission.sense(),
        }
    }

    #[test]
    fn scenario_names_parse() {
        let s = parse_scenario_name("herding-c3").unwrap();
        assert_eq!(s.mission, Mission::Herding);
        assert_eq!(s.variant(), SheepVariant::C3);
        assert!(parse_scenario_name("herding/c2").is_ok());
        assert!(parse_scenario_name("flocking-c1").is_err());
    }

    #[test]
    fn sense_adjusted_ranking() {
        // dispersion is maximized: the larger spread ranks first
        let rows: Vec<Observation> = (0..12)
            .flat_map(|_| [obs("a", Mission::Dispersion, 0.5), obs("b", Mission::Dispersion, 0.2)])
            .collect();
        let s = friedman_rank_summary(&rows, 0.05).unwrap();
        assert_eq!(s.get("a").unwrap().mean_rank, 1.0);
        assert_eq!(s.get("b").unwrap().mean_rank, 2.0);
        assert!(s.disjoint("a", "b"));
    }

    #[test]
    fn unbalanced_rejected() {
        let mut rows = vec![obs("a", Mission::Herding, 1.0), obs("b", Mission::Herding, 2.0)];
        rows.push(obs("a", Mission::Herding, 3.0));
        assert!(matches!(friedman_rank_summary(&rows, 0.05), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![obs("pistacchio", Mission::Aggregation, 0.123456789), obs("rwalk", Mission::Herding, 7.0)];
        let mut buf = Vec::new();
        write_observations(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,mission,sheep,design_idx,seed,objective,sense\n"));
        assert_eq!(read_observations(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn assessment_seeds_have_top_bit() {
        for i in 0..100 {
            assert_ne!(assessment_seed(5, i) & ASSESSMENT_SEED_BIT, 0);
            assert_ne!(block_seed(5, "herding-c1", i as usize) & ASSESSMENT_SEED_BIT, 0);
        }
    }
}
