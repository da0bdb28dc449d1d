//! Ballistic random walk used as the lower-bound baseline.

use std::f64::consts::PI;

use crate::model::{ColorSignal, AXLE_LENGTH};
use crate::rm3::{Actuation, SensorReadings, MAX_WHEEL_SPEED};
use crate::rng::RngStream;
use crate::sim::CONTROL_PERIOD;

use super::behavior::OBSTACLE_THRESHOLD;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RwalkMemory {
    pub turn_countdown: u32,
    pub turn_sign: i8,
}

/// Heading change per cycle of an in-place turn at full wheel speed.
pub fn max_turn_per_cycle() -> f64 {
    2.0 * MAX_WHEEL_SPEED / AXLE_LENGTH * CONTROL_PERIOD
}

/// Straight motion at full speed; on an obstacle ahead, rotate in place by a
/// heading change drawn uniformly in `[-π, π]`, then resume.
pub fn rwalk_step(readings: &SensorReadings, memory: &mut RwalkMemory, rng: &mut RngStream) -> Actuation {
    if memory.turn_countdown == 0 && readings.front_obstacle(OBSTACLE_THRESHOLD) {
        let change = rng.uniform_range(-PI, PI);
        let cycles = (change.abs() / max_turn_per_cycle()).ceil() as u32;
        memory.turn_countdown = cycles.max(1);
        memory.turn_sign = if change >= 0.0 { 1 } else { -1 };
    }
    if memory.turn_countdown > 0 {
        memory.turn_countdown -= 1;
        let s = memory.turn_sign as f64 * MAX_WHEEL_SPEED;
        return Actuation::new(-s, s, ColorSignal::None);
    }
    Actuation::new(MAX_WHEEL_SPEED, MAX_WHEEL_SPEED, ColorSignal::None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_in_open_space() {
        let a = rwalk_step(&SensorReadings::default(), &mut RwalkMemory::default(), &mut RngStream::new(0));
        assert_eq!(a, Actuation::new(0.12, 0.12, ColorSignal::None));
    }

    #[test]
    fn turns_at_walls() {
        let mut r = SensorReadings::default();
        r.prox[0] = 0.8;
        r.prox[7] = 0.8;
        let mut m = RwalkMemory::default();
        let a = rwalk_step(&r, &mut m, &mut RngStream::new(1));
        assert_eq!(a.v_left, -a.v_right);
        assert_ne!(a.v_left, 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut r = SensorReadings::default();
        r.prox[1] = 0.5;
        let run = |seed| {
            let mut m = RwalkMemory::default();
            let mut rng = RngStream::new(seed);
            (0..50).map(|_| rwalk_step(&r, &mut m, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
    }

    #[test]
    fn turn_duration_covers_drawn_angle() {
        let mut r = SensorReadings::default();
        r.prox[0] = 0.5;
        let mut rng = RngStream::new(10);
        for _ in 0..1000 {
            let mut m = RwalkMemory::default();
            rwalk_step(&r, &mut m, &mut rng);
            // remaining + the cycle just spent
            let total = (m.turn_countdown + 1) as f64 * max_turn_per_cycle();
            assert!(total <= PI + max_turn_per_cycle());
        }
    }
}
