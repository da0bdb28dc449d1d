use std::f64::consts::PI;

use crate::model::{wrap_signed, FloorColor, AXLE_LENGTH};
use crate::rm3::{Actuation, SensorReadings, MAX_WHEEL_SPEED, PROX_ANGLES};
use crate::rng::RngStream;

use super::{BehaviorSpec, ConditionSpec};

/// Proximity level that counts as an obstacle in front.
pub const OBSTACLE_THRESHOLD: f64 = 0.1;
/// Heading-error gain of the proportional steering controller, rad/s per rad.
pub const STEER_GAIN: f64 = 3.0;
/// Forward speed while circling, m/s.
pub const CIRCLING_SPEED: f64 = 0.06;
const AVOID_FORWARD_GAIN: f64 = 0.06;
const AVOID_TURN_GAIN: f64 = 0.08;

/// Scratch state of the running behavior. Reset on every state change.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BehaviorMemory {
    /// Remaining cycles of an in-place turn.
    pub turn_countdown: u32,
    /// +1 turns counter-clockwise, -1 clockwise.
    pub turn_sign: i8,
}

/// Wheel speeds steering toward a body-frame direction.
///
/// Forward speed scales with the cosine of the heading error (never backward)
/// and the turn rate is proportional to the error.
pub fn steer_toward(body_angle: f64, speed: f64) -> (f64, f64) {
    let err = wrap_signed(body_angle);
    let forward = speed * err.cos().max(0.0);
    let half_diff = (STEER_GAIN * err * AXLE_LENGTH / 2.0).clamp(-MAX_WHEEL_SPEED, MAX_WHEEL_SPEED);
    (forward - half_diff, forward + half_diff)
}

fn turn_in_place(sign: i8) -> (f64, f64) {
    let s = sign as f64 * MAX_WHEEL_SPEED;
    (-s, s)
}

/// Sign of the in-place turn that faces away from whatever the proximity
/// sensors see; 0 when left and right are balanced.
fn away_sign(readings: &SensorReadings) -> i8 {
    let lateral: f64 = readings
        .prox
        .iter()
        .zip(PROX_ANGLES.iter())
        .map(|(v, a)| v * a.sin())
        .sum();
    if lateral > 0.0 {
        -1
    } else if lateral < 0.0 {
        1
    } else {
        0
    }
}

/// Repulsive wheel-speed correction from the proximity readings.
fn avoidance(readings: &SensorReadings) -> (f64, f64) {
    let (mut fx, mut fy) = (0.0, 0.0);
    for (v, a) in readings.prox.iter().zip(PROX_ANGLES.iter()) {
        if *v > 0.0 {
            let (s, c) = a.sin_cos();
            fx += v * c;
            fy += v * s;
        }
    }
    let forward = -AVOID_FORWARD_GAIN * fx;
    let turn = AVOID_TURN_GAIN * fy;
    (forward + turn, forward - turn)
}

fn exploration(tau: u32, readings: &SensorReadings, memory: &mut BehaviorMemory, rng: &mut RngStream) -> (f64, f64) {
    if memory.turn_countdown == 0 && readings.front_obstacle(OBSTACLE_THRESHOLD) {
        let cycles = rng.int_inclusive(0, tau);
        if cycles > 0 {
            let mut sign = away_sign(readings);
            if sign == 0 {
                sign = if rng.bernoulli(0.5) { 1 } else { -1 };
            }
            memory.turn_countdown = cycles;
            memory.turn_sign = sign;
        }
    }
    if memory.turn_countdown > 0 {
        memory.turn_countdown -= 1;
        turn_in_place(memory.turn_sign)
    } else {
        (MAX_WHEEL_SPEED, MAX_WHEEL_SPEED)
    }
}

/// Wheel commands and LED of one low-level behavior, before clamping.
pub fn behavior_output(
    spec: &BehaviorSpec,
    readings: &SensorReadings,
    memory: &mut BehaviorMemory,
    rng: &mut RngStream,
) -> Actuation {
    let (l, r) = match *spec {
        BehaviorSpec::Exploration { tau, .. } => exploration(tau, readings, memory, rng),
        BehaviorSpec::Stop { .. } => (0.0, 0.0),
        BehaviorSpec::ColorFollowing { color, .. } => {
            if readings.sees(color) {
                steer_toward(readings.color_vector(color).angle, MAX_WHEEL_SPEED)
            } else {
                exploration(super::TAU_MAX / 2, readings, memory, rng)
            }
        }
        BehaviorSpec::ColorElusion { color, .. } => {
            if readings.sees(color) {
                steer_toward(readings.color_vector(color).angle + PI, MAX_WHEEL_SPEED)
            } else {
                exploration(super::TAU_MAX / 2, readings, memory, rng)
            }
        }
        BehaviorSpec::Circling { theta, .. } => {
            let half_diff = theta * AXLE_LENGTH / 2.0;
            (CIRCLING_SPEED - half_diff, CIRCLING_SPEED + half_diff)
        }
    };
    let (al, ar) = avoidance(readings);
    Actuation::new(l + al, r + ar, spec.led())
}

/// Whether a transition fires this cycle. Draws from `rng` only when the
/// condition is fulfilled.
pub fn transition_fires(cond: &ConditionSpec, readings: &SensorReadings, rng: &mut RngStream) -> bool {
    let fulfilled = match *cond {
        ConditionSpec::BlackFloor { .. } => readings.any_ground(FloorColor::Black),
        ConditionSpec::GrayFloor { .. } => readings.any_ground(FloorColor::Gray),
        ConditionSpec::WhiteFloor { .. } => readings.any_ground(FloorColor::White),
        ConditionSpec::FixedProbability { .. } => true,
        ConditionSpec::ColorDetection { color, .. } => readings.sees(color),
    };
    fulfilled && rng.bernoulli(cond.beta())
}
