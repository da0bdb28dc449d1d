//! Sensor and actuator contract between control software and the robot body.
//!
//! Controllers only ever see a [`SensorReadings`] and only ever produce an
//! [`Actuation`]. Readings are built from an immutable snapshot of the world,
//! so every robot in a control cycle senses the same state.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArenaSpec, ColorSignal, FloorColor, Hue, RobotBody, Vec2};

/// Maximum wheel speed, m/s.
pub const MAX_WHEEL_SPEED: f64 = 0.12;
/// Proximity sensing range measured from the body surface, meters.
pub const PROX_RANGE: f64 = 0.03;
/// Half-width of each proximity sensor's acceptance cone.
pub const PROX_CONE_HALF_WIDTH: f64 = 15.0 * std::f64::consts::PI / 180.0;
/// Omnidirectional camera range, center to center, meters.
pub const CAMERA_RANGE: f64 = 0.40;
/// Offset of the ground probes from the body center, meters.
pub const GROUND_PROBE_OFFSET: f64 = 0.03;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Body-frame angles of the eight proximity sensors, counter-clockwise from
/// the heading.
pub const PROX_ANGLES: [f64; 8] = [
    17.5 * DEG,
    49.0 * DEG,
    90.0 * DEG,
    150.0 * DEG,
    210.0 * DEG,
    270.0 * DEG,
    311.0 * DEG,
    342.5 * DEG,
];

/// Sensors facing forward (±17.5° and ±49°).
pub const FRONT_SENSORS: [usize; 4] = [0, 1, 6, 7];

/// Body-frame angles of the three ground probes.
pub const GROUND_PROBE_ANGLES: [f64; 3] = [-30.0 * DEG, 0.0, 30.0 * DEG];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColorVector {
    pub present: bool,
    /// Body-frame direction in `[0, 2π)`.
    pub angle: f64,
    /// 1.0 when present, else 0.0.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReadings {
    pub prox: [f64; 8],
    pub gnd: [FloorColor; 3],
    /// Perception of cyan, magenta and yellow, in that order.
    pub cam: [bool; 3],
    pub v_color: [ColorVector; 3],
}

impl Default for SensorReadings {
    fn default() -> Self {
        Self {
            prox: [0.0; 8],
            gnd: [FloorColor::Gray; 3],
            cam: [false; 3],
            v_color: [ColorVector::default(); 3],
        }
    }
}

impl SensorReadings {
    #[inline]
    pub fn sees(&self, hue: Hue) -> bool {
        self.cam[hue.channel()]
    }

    #[inline]
    pub fn color_vector(&self, hue: Hue) -> &ColorVector {
        &self.v_color[hue.channel()]
    }

    #[inline]
    pub fn front_obstacle(&self, threshold: f64) -> bool {
        FRONT_SENSORS.iter().any(|&i| self.prox[i] > threshold)
    }

    #[inline]
    pub fn any_ground(&self, color: FloorColor) -> bool {
        self.gnd.contains(&color)
    }

    /// Index and value of the strongest proximity reading.
    pub fn strongest_prox(&self) -> (usize, f64) {
        self.prox
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    /// Sets the perception of one color from a body-frame direction.
    pub fn perceive(&mut self, hue: Hue, angle: f64) {
        let c = hue.channel();
        self.cam[c] = true;
        self.v_color[c] = ColorVector {
            present: true,
            angle: crate::model::normalize_heading(angle),
            magnitude: 1.0,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Actuation {
    pub v_left: f64,
    pub v_right: f64,
    pub led: ColorSignal,
}

impl Actuation {
    pub const fn new(v_left: f64, v_right: f64, led: ColorSignal) -> Self {
        Self {
            v_left,
            v_right,
            led,
        }
    }

    pub const fn stopped(led: ColorSignal) -> Self {
        Self::new(0.0, 0.0, led)
    }

    pub fn is_finite(&self) -> bool {
        self.v_left.is_finite() && self.v_right.is_finite()
    }
}

/// Clamps both wheel speeds into `[-0.12, 0.12]` m/s.
pub fn clamp_actuation(raw: Actuation) -> Result<Actuation> {
    if raw.v_left.is_nan() || raw.v_right.is_nan() {
        return Err(Error::InvalidActuation(format!(
            "wheel velocity is NaN ({}, {})",
            raw.v_left, raw.v_right
        )));
    }
    Ok(Actuation {
        v_left: raw.v_left.clamp(-MAX_WHEEL_SPEED, MAX_WHEEL_SPEED),
        v_right: raw.v_right.clamp(-MAX_WHEEL_SPEED, MAX_WHEEL_SPEED),
        led: raw.led,
    })
}

#[inline]
fn falloff(surface_distance: f64) -> f64 {
    (1.0 - surface_distance.max(0.0) / PROX_RANGE).max(0.0)
}

/// Eight proximity readings for robot `idx`.
///
/// Each sensor reports `1 - d / 0.03` for the nearest surface (robot or wall)
/// inside its ±15° cone, where `d` is the surface-to-surface distance.
pub fn sense_proximity(arena: &ArenaSpec, robots: &[RobotBody], idx: usize) -> [f64; 8] {
    proximity(arena, robots, idx, Vec2::from_angle(robots[idx].pose.heading))
}

fn proximity(arena: &ArenaSpec, robots: &[RobotBody], idx: usize, facing: Vec2) -> [f64; 8] {
    let me = &robots[idx];
    let p = me.position();
    // world-frame sensor directions
    let dirs = sensor_directions().map(|(c, s)| Vec2::new(c * facing.x - s * facing.y, s * facing.x + c * facing.y));
    let (cos_w, sin_w) = (PROX_CONE_HALF_WIDTH.cos(), PROX_CONE_HALF_WIDTH.sin());
    let mut prox = [0.0f64; 8];

    for (j, other) in robots.iter().enumerate() {
        if j == idx {
            continue;
        }
        let delta = other.position() - p;
        let reach = me.radius + other.radius + PROX_RANGE;
        let dist_sq = delta.norm_sq();
        if dist_sq >= reach * reach {
            continue;
        }
        let dist = dist_sq.sqrt();
        let reading = falloff(dist - me.radius - other.radius);
        if reading <= 0.0 || dist == 0.0 {
            continue;
        }
        // a sensor sees the disk when the bearing lies within the cone
        // half-width plus the disk's angular half-extent asin(r / dist);
        // compare cosines instead of angles
        let sin_e = (other.radius / dist).min(1.0);
        let cos_e = (1.0 - sin_e * sin_e).sqrt();
        let threshold = cos_w * cos_e - sin_w * sin_e;
        let u = delta * (1.0 / dist);
        for (s, d) in dirs.iter().enumerate() {
            if u.dot(*d) >= threshold {
                prox[s] = prox[s].max(reading);
            }
        }
    }

    for wall in arena.walls() {
        let dist = -wall.signed_distance(p);
        if dist - me.radius >= PROX_RANGE {
            continue;
        }
        for (s, d) in dirs.iter().enumerate() {
            // cosine of the angle between the wall normal and the closest
            // ray inside the cone
            let c = wall.normal.dot(*d);
            let cos_off = if c >= cos_w {
                1.0
            } else {
                c * cos_w + (1.0 - c * c).max(0.0).sqrt() * sin_w
            };
            if cos_off <= 0.0 {
                continue;
            }
            let along_ray = dist.max(0.0) / cos_off;
            prox[s] = prox[s].max(falloff(along_ray - me.radius));
        }
    }
    prox
}

/// Cosine and sine of each proximity sensor angle.
fn sensor_directions() -> [(f64, f64); 8] {
    static DIRS: OnceLock<[(f64, f64); 8]> = OnceLock::new();
    *DIRS.get_or_init(|| PROX_ANGLES.map(|a| (a.cos(), a.sin())))
}

/// Floor color under the three ground probes; probes outside the arena read
/// the default color.
pub fn sense_ground(arena: &ArenaSpec, robot: &RobotBody) -> [FloorColor; 3] {
    ground(arena, robot, Vec2::from_angle(robot.pose.heading))
}

fn ground(arena: &ArenaSpec, robot: &RobotBody, facing: Vec2) -> [FloorColor; 3] {
    let p = robot.position();
    let ahead = facing * GROUND_PROBE_OFFSET;
    // probes at ±30°: rotate the forward offset by cos 30° = √3/2, sin 30° = 1/2
    let c = 0.5 * 3f64.sqrt();
    let right = Vec2::new(c * ahead.x + 0.5 * ahead.y, c * ahead.y - 0.5 * ahead.x);
    let left = Vec2::new(c * ahead.x - 0.5 * ahead.y, c * ahead.y + 0.5 * ahead.x);
    [right, ahead, left].map(|o| arena.color_unchecked(p + o))
}

/// Color perception for robot `idx`: for each of C, M, Y, the direction of
/// the sum of unit vectors toward every other robot showing that color within
/// 0.40 m.
pub fn sense_camera(robots: &[RobotBody], idx: usize) -> ([bool; 3], [ColorVector; 3]) {
    let me = &robots[idx];
    let p = me.position();
    let mut sums = [Vec2::ZERO; 3];
    let mut seen = [false; 3];
    let range_sq = CAMERA_RANGE * CAMERA_RANGE;
    for (j, other) in robots.iter().enumerate() {
        if j == idx {
            continue;
        }
        let Some(c) = other.led.channel() else {
            continue;
        };
        let delta = other.position() - p;
        let d2 = delta.norm_sq();
        if d2 > range_sq {
            continue;
        }
        seen[c] = true;
        if d2 > 0.0 {
            sums[c] += delta * (1.0 / d2.sqrt());
        }
    }
    let mut vectors = [ColorVector::default(); 3];
    for c in 0..3 {
        if seen[c] {
            let s = sums[c];
            let angle = if s.x == 0.0 && s.y == 0.0 {
                0.0
            } else {
                me.pose.to_body_angle(s.angle())
            };
            vectors[c] = ColorVector {
                present: true,
                angle,
                magnitude: 1.0,
            };
        }
    }
    (seen, vectors)
}

/// Full sensor readings for robot `idx` from a world snapshot.
pub fn sense(arena: &ArenaSpec, robots: &[RobotBody], idx: usize) -> SensorReadings {
    let facing = Vec2::from_angle(robots[idx].pose.heading);
    let prox = proximity(arena, robots, idx, facing);
    let gnd = ground(arena, &robots[idx], facing);
    let (cam, v_color) = sense_camera(robots, idx);
    SensorReadings {
        prox,
        gnd,
        cam,
        v_color,
    }
}
