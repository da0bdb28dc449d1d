//! Deterministic episode execution.
//!
//! Each control cycle senses every robot from the same pre-step snapshot,
//! queries the controllers in index order, integrates differential-drive
//! kinematics for one period, then pushes overlapping disks apart.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::missions::{Placement, ScenarioSpec};
use crate::model::{normalize_heading, ArenaSpec, ColorSignal, Pose, RobotBody, RobotKind, Vec2};
use crate::rm3::{clamp_actuation, sense, Actuation, PROX_RANGE};
use crate::rng::RngStream;

/// Control period, seconds.
pub const CONTROL_PERIOD: f64 = 0.1;
/// Overlaps at or below this depth (meters) count as resolved.
pub const COLLISION_TOLERANCE: f64 = 1e-7;
/// Extra separation added when a pair is pushed apart, so that small
/// knock-on displacements inside a cluster do not re-create contacts.
pub const COLLISION_SKIN: f64 = 5e-5;
pub const MAX_COLLISION_PASSES: usize = 100;
pub const MAX_PLACEMENT_REJECTIONS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct WorldState {
    pub arena: ArenaSpec,
    /// Shepherds first, then sheep.
    pub robots: Vec<RobotBody>,
    pub n_shepherds: usize,
    pub tick: u32,
    pub rng: RngStream,
}

impl WorldState {
    pub fn shepherds(&self) -> &[RobotBody] {
        &self.robots[..self.n_shepherds]
    }

    pub fn sheep(&self) -> &[RobotBody] {
        &self.robots[self.n_shepherds..]
    }

    pub fn sheep_positions(&self) -> Vec<Vec2> {
        self.sheep().iter().map(|r| r.position()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub objective: f64,
    pub seed: u64,
    pub final_sheep_positions: Vec<Vec2>,
    pub halted: Vec<bool>,
    /// Set when a controller produced a non-finite actuation.
    pub controller_fault: bool,
    pub episodes_consumed: u32,
}

/// Signals a controller that returned a non-finite actuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControllerFault {
    pub robot: usize,
}

fn sample_candidate(scenario: &ScenarioSpec, rng: &mut RngStream) -> Vec2 {
    match scenario.placement {
        Placement::WholeArena => {
            let r = scenario.arena.diameter() / 2.0;
            Vec2::new(rng.uniform_range(-r, r), rng.uniform_range(-r, r))
        }
        Placement::CentralDisk { radius } => Vec2::new(
            rng.uniform_range(-radius, radius),
            rng.uniform_range(-radius, radius),
        ),
    }
}

/// Places shepherds then sheep by rejection sampling.
///
/// A position is accepted when it lies in the placement area, keeps the body
/// plus the proximity range clear of walls and of already placed robots, and
/// keeps the body off colored floor. Nothing is sensed at tick 0, so
/// unstimulated sheep stay put.
pub fn init_episode(scenario: &ScenarioSpec, seed: u64) -> Result<WorldState> {
    let mut rng = RngStream::new(seed);
    let n = scenario.n_shepherds + scenario.n_sheep;
    let mut robots: Vec<RobotBody> = Vec::with_capacity(n);
    let radius = crate::model::ROBOT_RADIUS;
    let clearance = 2.0 * radius + PROX_RANGE;
    let mut rejections = 0usize;
    while robots.len() < n {
        let p = sample_candidate(scenario, &mut rng);
        let ok = match scenario.placement {
            Placement::WholeArena => true,
            Placement::CentralDisk { radius: disk } => p.norm() <= disk,
        } && scenario.arena.contains_with_margin(p, radius + PROX_RANGE)
            && scenario
                .arena
                .regions()
                .iter()
                .all(|r| (p - r.shape.center).norm() > r.shape.radius + radius)
            && robots
                .iter()
                .all(|o| (o.position() - p).norm_sq() >= clearance * clearance);
        if !ok {
            rejections += 1;
            if rejections >= MAX_PLACEMENT_REJECTIONS {
                return Err(Error::PlacementInfeasible(rejections));
            }
            continue;
        }
        let heading = rng.uniform_range(0.0, std::f64::consts::TAU);
        let kind = if robots.len() < scenario.n_shepherds {
            RobotKind::Shepherd
        } else {
            RobotKind::Sheep
        };
        robots.push(RobotBody::new(kind, Pose::new(p.x, p.y, heading)));
    }
    Ok(WorldState {
        arena: scenario.arena.clone(),
        robots,
        n_shepherds: scenario.n_shepherds,
        tick: 0,
        // the placement stream continues as the episode stream
        rng,
    })
}

/// Pushes overlapping robots apart and back inside the arena.
///
/// Up to 100 passes; each pass separates every overlapping pair symmetrically
/// along the line of centers, to a gap of `COLLISION_SKIN` (a halted robot does not move, its partner takes
/// the whole displacement) and then projects robots that cross a wall back
/// onto it along the wall normal, which keeps the tangential motion.
pub fn resolve_collisions(arena: &ArenaSpec, robots: &mut [RobotBody]) {
    let mut broad = BroadPhase::default();
    broad.rebuild(arena, robots);
    for _ in 0..MAX_COLLISION_PASSES {
        let mut moved = false;
        for &(i, j) in &broad.pairs {
            let (a, b) = (&robots[i], &robots[j]);
            let delta = b.position() - a.position();
            let min = a.radius + b.radius;
            let d2 = delta.norm_sq();
            if d2 >= min * min {
                continue;
            }
            let d = d2.sqrt();
            let overlap = min - d;
            if overlap <= COLLISION_TOLERANCE {
                continue;
            }
            let push = overlap + COLLISION_SKIN;
            let dir = if d > 0.0 { delta * (1.0 / d) } else { Vec2::new(1.0, 0.0) };
            let (share_a, share_b) = match (a.halted, b.halted) {
                (true, false) => (0.0, 1.0),
                (false, true) => (1.0, 0.0),
                _ => (0.5, 0.5),
            };
            robots[i].pose.position -= dir * (push * share_a);
            robots[j].pose.position += dir * (push * share_b);
            moved = true;
        }
        for &i in &broad.near_wall {
            let r = &mut robots[i];
            for w in arena.walls() {
                let excess = w.signed_distance(r.pose.position) + r.radius;
                if excess > 0.0 {
                    r.pose.position -= w.normal * excess;
                    moved |= excess > COLLISION_TOLERANCE;
                }
            }
        }
        if !moved {
            break;
        }
        if broad.stale(robots) {
            broad.rebuild(arena, robots);
        }
    }
}

/// Contact candidates for collision passes. Pairs and walls farther apart
/// than `BROAD_MARGIN` cannot touch until some robot drifts by half the
/// margin, at which point the lists are rebuilt; skipping them therefore
/// changes nothing.
#[derive(Default)]
struct BroadPhase {
    pairs: Vec<(usize, usize)>,
    near_wall: Vec<usize>,
    anchors: Vec<Vec2>,
}

const BROAD_MARGIN: f64 = 0.02;

impl BroadPhase {
    fn rebuild(&mut self, arena: &ArenaSpec, robots: &[RobotBody]) {
        self.pairs.clear();
        self.near_wall.clear();
        self.anchors.clear();
        let inradius = arena.inradius();
        for (i, a) in robots.iter().enumerate() {
            self.anchors.push(a.position());
            for (j, b) in robots.iter().enumerate().skip(i + 1) {
                if a.halted && b.halted {
                    continue;
                }
                let reach = a.radius + b.radius + BROAD_MARGIN;
                if (b.position() - a.position()).norm_sq() < reach * reach {
                    self.pairs.push((i, j));
                }
            }
            // inradius - |p| bounds the distance to every wall from below
            let clear = inradius - a.position().norm() - a.radius >= BROAD_MARGIN;
            if !a.halted
                && !clear
                && arena
                    .walls()
                    .iter()
                    .any(|w| w.signed_distance(a.position()) + a.radius > -BROAD_MARGIN)
            {
                self.near_wall.push(i);
            }
        }
    }

    fn stale(&self, robots: &[RobotBody]) -> bool {
        let limit = 0.5 * BROAD_MARGIN;
        robots
            .iter()
            .zip(&self.anchors)
            .any(|(r, &a)| (r.position() - a).norm_sq() >= limit * limit)
    }
}

/// Differential-drive kinematics over one control period.
#[inline]
pub fn integrate(body: &mut RobotBody, act: &Actuation, dt: f64) {
    let v = 0.5 * (act.v_left + act.v_right);
    let omega = (act.v_right - act.v_left) / body.axle_length;
    let h = body.pose.heading;
    body.pose.position += Vec2::new(h.cos(), h.sin()) * (v * dt);
    body.pose.heading = normalize_heading(h + omega * dt);
}

/// A running episode: the world plus per-robot controller memory.
pub struct Episode<'a, S: Controller, H: Controller> {
    pub world: WorldState,
    shepherd: &'a S,
    sheep: &'a H,
    shepherd_memory: Vec<S::Memory>,
    sheep_memory: Vec<H::Memory>,
    actuations: Vec<Actuation>,
    newly_halted: Vec<bool>,
}

impl<'a, S: Controller, H: Controller> Episode<'a, S, H> {
    pub fn new(world: WorldState, shepherd: &'a S, sheep: &'a H) -> Self {
        let n_sheep = world.robots.len() - world.n_shepherds;
        let n = world.robots.len();
        Self {
            shepherd_memory: vec![S::Memory::default(); world.n_shepherds],
            sheep_memory: vec![H::Memory::default(); n_sheep],
            actuations: vec![Actuation::default(); n],
            newly_halted: vec![false; n],
            world,
            shepherd,
            sheep,
        }
    }

    /// One control cycle.
    pub fn step(&mut self) -> std::result::Result<(), ControllerFault> {
        let w = &mut self.world;
        let ns = w.n_shepherds;
        for i in 0..w.robots.len() {
            self.newly_halted[i] = false;
            if w.robots[i].halted {
                self.actuations[i] = Actuation::stopped(ColorSignal::None);
                continue;
            }
            let readings = sense(&w.arena, &w.robots, i);
            let raw = if i < ns {
                self.shepherd
                    .control(&readings, &mut self.shepherd_memory[i], &mut w.rng)
            } else {
                let mem = &mut self.sheep_memory[i - ns];
                let a = self.sheep.control(&readings, mem, &mut w.rng);
                self.newly_halted[i] = self.sheep.halted(mem);
                a
            };
            if !raw.is_finite() {
                return Err(ControllerFault { robot: i });
            }
            self.actuations[i] = clamp_actuation(raw).map_err(|_| ControllerFault { robot: i })?;
        }
        for (i, body) in w.robots.iter_mut().enumerate() {
            if body.halted {
                continue;
            }
            if self.newly_halted[i] {
                body.halted = true;
                body.led = ColorSignal::None;
                continue;
            }
            let act = self.actuations[i];
            integrate(body, &act, CONTROL_PERIOD);
            body.led = act.led;
        }
        resolve_collisions(&w.arena, &mut w.robots);
        w.tick += 1;
        Ok(())
    }
}

/// Runs a full episode with explicit shepherd and sheep controllers.
///
/// `observer` is called with the world after initialization and after every
/// cycle.
pub fn run_episode_with<S: Controller, H: Controller>(
    scenario: &ScenarioSpec,
    shepherd: &S,
    sheep: &H,
    seed: u64,
    mut observer: Option<&mut dyn FnMut(&WorldState)>,
) -> Result<EpisodeResult> {
    let world = init_episode(scenario, seed)?;
    let mut episode = Episode::new(world, shepherd, sheep);
    if let Some(obs) = observer.as_mut() {
        obs(&episode.world);
    }
    let mut fault = false;
    for _ in 0..scenario.duration {
        if episode.step().is_err() {
            fault = true;
            break;
        }
        if let Some(obs) = observer.as_mut() {
            obs(&episode.world);
        }
    }
    let world = &episode.world;
    let positions = world.sheep_positions();
    let halted: Vec<bool> = world.sheep().iter().map(|r| r.halted).collect();
    let objective = if fault {
        scenario.worst_objective()
    } else {
        scenario.objective(&positions, &halted)?
    };
    Ok(EpisodeResult {
        objective,
        seed,
        final_sheep_positions: positions,
        halted,
        controller_fault: fault,
        episodes_consumed: 1,
    })
}

/// Runs a full episode with the scenario's sheep controller.
pub fn run_episode<S: Controller>(scenario: &ScenarioSpec, shepherd: &S, seed: u64) -> Result<EpisodeResult> {
    run_episode_with(scenario, shepherd, &scenario.sheep, seed, None)
}

/// Writes a per-cycle trace as CSV: `tick,robot,kind,x,y,heading,led`.
pub fn write_trace<S: Controller, W: Write>(
    scenario: &ScenarioSpec,
    shepherd: &S,
    seed: u64,
    out: W,
) -> Result<EpisodeResult> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["tick", "robot", "kind", "x", "y", "heading", "led"])?;
    let mut failure: Option<csv::Error> = None;
    let mut obs = |w: &WorldState| {
        if failure.is_some() {
            return;
        }
        for (i, r) in w.robots.iter().enumerate() {
            let kind = match r.kind {
                RobotKind::Shepherd => "shepherd",
                RobotKind::Sheep => "sheep",
            };
            let rec = [
                w.tick.to_string(),
                i.to_string(),
                kind.to_string(),
                format!("{:.6}", r.pose.position.x),
                format!("{:.6}", r.pose.position.y),
                format!("{:.6}", r.pose.heading),
                r.led.as_str().to_string(),
            ];
            if let Err(e) = writer.write_record(&rec) {
                failure = Some(e);
                return;
            }
        }
    };
    let result = run_episode_with(scenario, shepherd, &scenario.sheep, seed, Some(&mut obs))?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    writer.flush()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{Idle, RandomWalk};
    use crate::missions::{build_scenario, Mission};
    use crate::model::arena_regular_octagon;
    use crate::pfsm::sheep::SheepVariant;
    use approx::assert_relative_eq;

    fn body(x: f64, y: f64, h: f64) -> RobotBody {
        RobotBody::new(RobotKind::Shepherd, Pose::new(x, y, h))
    }

    #[test]
    fn straight_motion() {
        let mut b = body(0.0, 0.0, 0.0);
        integrate(&mut b, &Actuation::new(0.12, 0.12, ColorSignal::None), CONTROL_PERIOD);
        assert_relative_eq!(b.pose.position.x, 0.012, epsilon = 1e-15);
        assert_eq!(b.pose.position.y, 0.0);
    }

    #[test]
    fn pure_rotation() {
        let mut b = body(0.1, 0.2, 0.5);
        integrate(&mut b, &Actuation::new(-0.1, 0.1, ColorSignal::None), CONTROL_PERIOD);
        assert_eq!(b.pose.position, Vec2::new(0.1, 0.2));
        assert_relative_eq!(b.pose.heading, 0.5 + 2.0 * 0.1 / b.axle_length * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_pair_resolution() {
        let arena = arena_regular_octagon(2.8).unwrap();
        let mut robots = [body(0.0, 0.0, 0.0), body(0.06, 0.0, 0.0)];
        resolve_collisions(&arena, &mut robots);
        // 0.01 overlap: each moves half of it, plus half the skin
        let half = 0.5 * (0.01 + COLLISION_SKIN);
        assert_relative_eq!(robots[0].pose.position.x, -half, epsilon = 1e-12);
        assert_relative_eq!(robots[1].pose.position.x, 0.06 + half, epsilon = 1e-12);
        assert_relative_eq!(robots[0].pose.position.x, -0.005, epsilon = 1e-4);
    }

    #[test]
    fn halted_robot_is_immovable() {
        let arena = arena_regular_octagon(2.8).unwrap();
        let mut robots = [body(0.0, 0.0, 0.0), body(0.06, 0.0, 0.0)];
        robots[0].halted = true;
        resolve_collisions(&arena, &mut robots);
        assert_eq!(robots[0].pose.position, Vec2::ZERO);
        assert_relative_eq!(robots[1].pose.position.x, 0.07 + COLLISION_SKIN, epsilon = 1e-12);
    }

    #[test]
    fn wall_projection_keeps_tangential_motion() {
        let arena = arena_regular_octagon(2.8).unwrap();
        let w = arena.walls()[0];
        let tangent = Vec2::new(-w.normal.y, w.normal.x);
        let inside = w.normal * (w.offset - 0.035);
        let p = inside + w.normal * 0.01 + tangent * 0.05;
        let mut robots = [body(p.x, p.y, 0.0)];
        resolve_collisions(&arena, &mut robots);
        let q = robots[0].pose.position;
        assert_relative_eq!(w.signed_distance(q), -0.035, epsilon = 1e-12);
        assert_relative_eq!((q - inside).dot(tangent), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn fixed_point_when_separated() {
        let arena = arena_regular_octagon(2.8).unwrap();
        let mut robots = [body(0.0, 0.0, 0.0), body(0.2, 0.0, 1.0)];
        let before = robots;
        resolve_collisions(&arena, &mut robots);
        assert_eq!(robots, before);
    }

    #[test]
    fn placement_rules() {
        for m in Mission::ALL {
            let s = build_scenario(m, SheepVariant::C1);
            for seed in 0..100 {
                let w = init_episode(&s, seed).unwrap();
                assert_eq!(w.robots.len(), 15);
                assert!(w.robots[..5].iter().all(|r| r.kind == RobotKind::Shepherd && r.led == ColorSignal::None));
                assert!(w.robots[5..].iter().all(|r| r.kind == RobotKind::Sheep && r.led == ColorSignal::Yellow));
                for (i, a) in w.robots.iter().enumerate() {
                    assert!(s.arena.contains_with_margin(a.position(), a.radius));
                    for b in &w.robots[i + 1..] {
                        assert!((a.position() - b.position()).norm() > a.radius + b.radius);
                    }
                    if m != Mission::Aggregation {
                        assert!(a.position().norm() <= 0.60);
                    }
                }
            }
        }
    }

    #[test]
    fn placement_is_seeded() {
        let s = build_scenario(Mission::Dispersion, SheepVariant::C2);
        let a = init_episode(&s, 17).unwrap();
        let b = init_episode(&s, 17).unwrap();
        assert_eq!(a.robots, b.robots);
        let c = init_episode(&s, 18).unwrap();
        assert_ne!(a.robots, c.robots);
    }

    #[test]
    fn placement_infeasible() {
        let mut s = build_scenario(Mission::Dispersion, SheepVariant::C2);
        s.placement = Placement::CentralDisk { radius: 0.05 };
        assert!(matches!(init_episode(&s, 1), Err(Error::PlacementInfeasible(_))));
    }

    #[test]
    fn idle_shepherds_leave_sheep_in_place() {
        for m in Mission::ALL {
            let s = build_scenario(m, SheepVariant::C3);
            let start = init_episode(&s, 5).unwrap().sheep_positions();
            let r = run_episode(&s, &Idle, 5).unwrap();
            assert_eq!(r.final_sheep_positions, start);
        }
    }

    #[test]
    fn episode_is_deterministic() {
        let s = build_scenario(Mission::Aggregation, SheepVariant::C1);
        let a = run_episode(&s, &RandomWalk, 3).unwrap();
        let b = run_episode(&s, &RandomWalk, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    struct Faulty;
    impl Controller for Faulty {
        type Memory = ();
        fn control(&self, _: &crate::rm3::SensorReadings, _: &mut (), _: &mut RngStream) -> Actuation {
            Actuation::new(f64::NAN, 0.0, ColorSignal::None)
        }
    }

    #[test]
    fn controller_fault_scores_worst_case() {
        for m in Mission::ALL {
            let s = build_scenario(m, SheepVariant::C1);
            let r = run_episode(&s, &Faulty, 1).unwrap();
            assert!(r.controller_fault);
            assert_eq!(r.objective, s.worst_objective());
        }
    }

    #[test]
    fn trace_has_one_row_per_robot_and_tick() {
        let mut s = build_scenario(Mission::Herding, SheepVariant::C2);
        s.duration = 10;
        let mut buf = Vec::new();
        write_trace(&s, &RandomWalk, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 11 * 15);
        assert!(text.starts_with("tick,robot,kind,x,y,heading,led"));
    }
}
