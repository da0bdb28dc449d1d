//! Single-layer feed-forward network controller.
//!
//! 24 inputs (8 proximity, 3 ground, 12 color projections, bias) are fully
//! connected to 8 logistic outputs: four drive the wheels as two differences,
//! four select the LED color by argmax.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ColorSignal, FloorColor};
use crate::rm3::{Actuation, SensorReadings, MAX_WHEEL_SPEED};
use crate::rng::RngStream;

pub const N_INPUTS: usize = 24;
pub const N_OUTPUTS: usize = 8;
pub const N_WEIGHTS: usize = N_INPUTS * N_OUTPUTS;
pub const WEIGHT_LIMIT: f64 = 5.0;
pub const MUTATION_PROBABILITY: f64 = 0.1;
pub const MUTATION_STD_DEV: f64 = 1.0;

/// Body-frame directions onto which each color vector is projected.
pub const PROJECTION_ANGLES: [f64; 4] = [PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0];

pub type NnInput = [f64; N_INPUTS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NnGenome {
    weights: Vec<f64>,
}

impl TryFrom<Vec<f64>> for NnGenome {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        NnGenome::new(w)
    }
}

impl From<NnGenome> for Vec<f64> {
    fn from(g: NnGenome) -> Self {
        g.weights
    }
}

impl NnGenome {
    /// Requires exactly 192 finite weights in `[-5, 5]`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != N_WEIGHTS {
            return Err(Error::InvalidArgument(format!(
                "genome needs {N_WEIGHTS} weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights
            .iter()
            .find(|w| !w.is_finite() || w.abs() > WEIGHT_LIMIT)
        {
            return Err(Error::InvalidArgument(format!(
                "weight {w} outside [-{WEIGHT_LIMIT}, {WEIGHT_LIMIT}]"
            )));
        }
        Ok(Self { weights })
    }

    pub fn zeros() -> Self {
        Self {
            weights: vec![0.0; N_WEIGHTS],
        }
    }

    pub fn random(rng: &mut RngStream) -> Self {
        Self {
            weights: (0..N_WEIGHTS)
                .map(|_| rng.uniform_range(-WEIGHT_LIMIT, WEIGHT_LIMIT))
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight from input `a` to output `b`, both zero based.
    #[inline]
    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[output * N_INPUTS + input]
    }

    pub fn set_weight(&mut self, input: usize, output: usize, value: f64) {
        self.weights[output * N_INPUTS + input] = value.clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
    }
}

fn ground_code(c: FloorColor) -> f64 {
    match c {
        FloorColor::Black => 0.0,
        FloorColor::Gray => 0.5,
        FloorColor::White => 1.0,
    }
}

pub fn encode_inputs(readings: &SensorReadings) -> NnInput {
    let mut input = [0.0; N_INPUTS];
    input[..8].copy_from_slice(&readings.prox);
    for (j, g) in readings.gnd.iter().enumerate() {
        input[8 + j] = ground_code(*g);
    }
    for c in 0..3 {
        let v = &readings.v_color[c];
        if readings.cam[c] {
            for (d, dir) in PROJECTION_ANGLES.iter().enumerate() {
                input[11 + 4 * c + d] = (v.magnitude * (v.angle - dir).cos()).clamp(0.0, 1.0);
            }
        }
    }
    input[N_INPUTS - 1] = 1.0;
    input
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn activations(genome: &NnGenome, input: &NnInput) -> [f64; N_OUTPUTS] {
    std::array::from_fn(|b| {
        let row = &genome.weights[b * N_INPUTS..(b + 1) * N_INPUTS];
        logistic(row.iter().zip(input.iter()).map(|(w, x)| w * x).sum())
    })
}

pub fn decode_outputs(o: &[f64; N_OUTPUTS]) -> Actuation {
    let mut best = 4;
    for b in 5..8 {
        if o[b] > o[best] {
            best = b;
        }
    }
    Actuation {
        v_left: MAX_WHEEL_SPEED * (o[0] - o[1]),
        v_right: MAX_WHEEL_SPEED * (o[2] - o[3]),
        led: ColorSignal::ALL[best - 4],
    }
}

pub fn forward(genome: &NnGenome, input: &NnInput) -> Actuation {
    decode_outputs(&activations(genome, input))
}

/// Gaussian perturbation of each weight with probability 0.1; at least one
/// weight always changes.
pub fn mutate_genome(genome: &NnGenome, rng: &mut RngStream) -> NnGenome {
    let mut out = genome.clone();
    let mut changed = false;
    for w in out.weights.iter_mut() {
        if rng.bernoulli(MUTATION_PROBABILITY) {
            let new = (*w + rng.normal(0.0, MUTATION_STD_DEV)).clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
            changed |= new != *w;
            *w = new;
        }
    }
    while !changed {
        let i = rng.index(N_WEIGHTS);
        let old = out.weights[i];
        let new = (old + rng.normal(0.0, MUTATION_STD_DEV)).clamp(-WEIGHT_LIMIT, WEIGHT_LIMIT);
        if new != old {
            out.weights[i] = new;
            changed = true;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hue;
    use approx::assert_relative_eq;

    #[test]
    fn rest_state_encoding() {
        let x = encode_inputs(&SensorReadings::default());
        let mut expected = [0.0; 24];
        expected[8..11].copy_from_slice(&[0.5; 3]);
        expected[23] = 1.0;
        assert_eq!(x, expected);
    }

    #[test]
    fn projection_of_diagonal_signal() {
        let mut r = SensorReadings::default();
        r.perceive(Hue::Magenta, PI / 4.0);
        let x = encode_inputs(&r);
        let block = &x[15..19];
        for (v, e) in block.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert!((v - e).abs() < 1e-12, "{block:?}");
        }
        assert!(x[11..15].iter().all(|&v| v == 0.0));
        assert!(x[19..23].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn white_floor_encoding() {
        let mut r = SensorReadings::default();
        r.gnd = [FloorColor::White; 3];
        assert_eq!(&encode_inputs(&r)[8..11], &[1.0, 1.0, 1.0]);
        r.gnd = [FloorColor::Black; 3];
        assert_eq!(&encode_inputs(&r)[8..11], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_genome_is_stationary() {
        let a = forward(&NnGenome::zeros(), &encode_inputs(&SensorReadings::default()));
        assert_eq!(a, Actuation::new(0.0, 0.0, ColorSignal::None));
    }

    #[test]
    fn saturated_bias_drives_left_wheel() {
        let mut g = NnGenome::zeros();
        g.set_weight(23, 0, 5.0);
        g.set_weight(23, 1, -5.0);
        let a = forward(&g, &encode_inputs(&SensorReadings::default()));
        // 0.12 * (σ(5) - σ(-5)) = 0.12 * 0.98661...
        assert_relative_eq!(a.v_left, 0.12 * (logistic(5.0) - logistic(-5.0)), epsilon = 1e-15);
        assert!((a.v_left - 0.12).abs() < 2e-3);
        assert_eq!(a.v_right, 0.0);
    }

    #[test]
    fn led_argmax_with_lowest_index_ties() {
        let mut o = [0.5; 8];
        assert_eq!(decode_outputs(&o).led, ColorSignal::None);
        o[6] = 0.9;
        o[7] = 0.9;
        assert_eq!(decode_outputs(&o).led, ColorSignal::Magenta);
        o[5] = 0.95;
        assert_eq!(decode_outputs(&o).led, ColorSignal::Cyan);
    }

    #[test]
    fn rejects_wrong_weight_count() {
        assert!(NnGenome::new(vec![0.0; 191]).is_err());
        assert!(NnGenome::new(vec![0.0; 193]).is_err());
        assert!(NnGenome::new(vec![5.1; 192]).is_err());
        assert!(NnGenome::new(vec![-5.0; 192]).is_ok());
        assert!(serde_json::from_str::<NnGenome>("[1.0, 2.0]").is_err());
    }

    #[test]
    fn mutation_changes_and_stays_bounded() {
        let mut rng = RngStream::new(12);
        let mut g = NnGenome::random(&mut rng);
        for _ in 0..10_000 {
            let m = mutate_genome(&g, &mut rng);
            assert_ne!(m, g);
            assert!(m.weights().iter().all(|w| w.abs() <= WEIGHT_LIMIT));
            g = m;
        }
    }

    #[test]
    fn saturated_genome_still_changes() {
        let g = NnGenome::new(vec![5.0; 192]).unwrap();
        let mut rng = RngStream::new(1);
        for _ in 0..100 {
            assert_ne!(mutate_genome(&g, &mut rng), g);
        }
    }

    #[test]
    fn mutation_rate() {
        let mut rng = RngStream::new(99);
        let g = NnGenome::zeros();
        let mut perturbed = 0usize;
        let rounds = 521; // ≈ 10⁵ weights
        for _ in 0..rounds {
            let m = mutate_genome(&g, &mut rng);
            perturbed += m.weights().iter().filter(|&&w| w != 0.0).count();
        }
        let frac = perturbed as f64 / (rounds * N_WEIGHTS) as f64;
        assert!((frac - 0.1).abs() < 0.01, "{frac}");
    }
}
