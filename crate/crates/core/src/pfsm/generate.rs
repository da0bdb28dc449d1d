//! Random sampling and single-edit mutation of machines.

use std::f64::consts::PI;

use crate::model::{ColorSignal, Hue};
use crate::rng::RngStream;

use super::{
    valid_theta, BehaviorSpec, ConditionSpec, PfsmConfig, PfsmState, Transition, MAX_STATES,
    MAX_TRANSITIONS, TAU_MAX, TAU_MIN,
};

/// Perturbation scale as a fraction of each numeric parameter's range.
const PERTURB_FRACTION: f64 = 0.1;

fn random_led(rng: &mut RngStream) -> ColorSignal {
    ColorSignal::ALL[rng.index(4)]
}

fn random_hue(rng: &mut RngStream) -> Hue {
    Hue::ALL[rng.index(3)]
}

fn random_theta(rng: &mut RngStream) -> f64 {
    loop {
        // (-π, π]
        let t = PI - 2.0 * PI * rng.uniform();
        if valid_theta(t) {
            return t;
        }
    }
}

pub(crate) fn random_behavior(rng: &mut RngStream) -> BehaviorSpec {
    match rng.index(5) {
        0 => BehaviorSpec::Exploration {
            tau: rng.int_inclusive(TAU_MIN, TAU_MAX),
            led: random_led(rng),
        },
        1 => BehaviorSpec::Stop { led: random_led(rng) },
        2 => BehaviorSpec::ColorFollowing {
            color: random_hue(rng),
            led: random_led(rng),
        },
        3 => BehaviorSpec::ColorElusion {
            color: random_hue(rng),
            led: random_led(rng),
        },
        _ => BehaviorSpec::Circling {
            theta: random_theta(rng),
            led: random_led(rng),
        },
    }
}

pub(crate) fn random_condition(rng: &mut RngStream) -> ConditionSpec {
    let beta = rng.uniform_range(0.0, 1.0);
    match rng.index(5) {
        0 => ConditionSpec::BlackFloor { beta },
        1 => ConditionSpec::GrayFloor { beta },
        2 => ConditionSpec::WhiteFloor { beta },
        3 => ConditionSpec::FixedProbability { beta },
        _ => ConditionSpec::ColorDetection {
            color: random_hue(rng),
            beta,
        },
    }
}

fn random_target(source: usize, n_states: usize, rng: &mut RngStream) -> usize {
    debug_assert!(n_states > 1);
    let t = rng.index(n_states - 1);
    if t >= source {
        t + 1
    } else {
        t
    }
}

/// Uniformly random machine: 1 to 4 states, each with 0 to 4 transitions.
pub fn sample_pfsm(rng: &mut RngStream) -> PfsmConfig {
    let n = rng.index(MAX_STATES) + 1;
    let mut states: Vec<PfsmState> = (0..n)
        .map(|_| PfsmState {
            behavior: random_behavior(rng),
            transitions: Vec::new(),
        })
        .collect();
    if n > 1 {
        for (i, s) in states.iter_mut().enumerate() {
            let k = rng.index(MAX_TRANSITIONS + 1);
            s.transitions = (0..k)
                .map(|_| Transition {
                    condition: random_condition(rng),
                    target: random_target(i, n, rng),
                })
                .collect();
        }
    }
    let config = PfsmConfig { states };
    debug_assert!(config.validate().is_ok());
    config
}

/// The kinds of single edit applied by [`mutate_pfsm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditKind {
    PerturbNumeric,
    ChangeColor,
    ReplaceModule,
    AddState,
    RemoveState,
    AddTransition,
    RemoveTransition,
    RetargetTransition,
}

impl EditKind {
    pub const ALL: [EditKind; 8] = [
        EditKind::PerturbNumeric,
        EditKind::ChangeColor,
        EditKind::ReplaceModule,
        EditKind::AddState,
        EditKind::RemoveState,
        EditKind::AddTransition,
        EditKind::RemoveTransition,
        EditKind::RetargetTransition,
    ];
}

/// Reference to one numeric parameter.
enum NumericSlot {
    Tau(usize),
    Theta(usize),
    Beta(usize, usize),
}

/// Reference to one color parameter.
enum ColorSlot {
    Led(usize),
    BehaviorHue(usize),
    ConditionHue(usize, usize),
}

fn numeric_slots(c: &PfsmConfig) -> Vec<NumericSlot> {
    let mut out = Vec::new();
    for (i, s) in c.states.iter().enumerate() {
        match s.behavior {
            BehaviorSpec::Exploration { .. } => out.push(NumericSlot::Tau(i)),
            BehaviorSpec::Circling { .. } => out.push(NumericSlot::Theta(i)),
            _ => {}
        }
        for t in 0..s.transitions.len() {
            out.push(NumericSlot::Beta(i, t));
        }
    }
    out
}

fn color_slots(c: &PfsmConfig) -> Vec<ColorSlot> {
    let mut out = Vec::new();
    for (i, s) in c.states.iter().enumerate() {
        out.push(ColorSlot::Led(i));
        if matches!(
            s.behavior,
            BehaviorSpec::ColorFollowing { .. } | BehaviorSpec::ColorElusion { .. }
        ) {
            out.push(ColorSlot::BehaviorHue(i));
        }
        for (t, tr) in s.transitions.iter().enumerate() {
            if matches!(tr.condition, ConditionSpec::ColorDetection { .. }) {
                out.push(ColorSlot::ConditionHue(i, t));
            }
        }
    }
    out
}

fn applicable(c: &PfsmConfig, kind: EditKind) -> bool {
    let n = c.states.len();
    match kind {
        EditKind::PerturbNumeric => !numeric_slots(c).is_empty(),
        EditKind::ChangeColor | EditKind::ReplaceModule => true,
        EditKind::AddState => n < MAX_STATES,
        EditKind::RemoveState => n > 1,
        EditKind::AddTransition => {
            n > 1 && c.states.iter().any(|s| s.transitions.len() < MAX_TRANSITIONS)
        }
        EditKind::RemoveTransition => c.states.iter().any(|s| !s.transitions.is_empty()),
        EditKind::RetargetTransition => n > 2 && c.states.iter().any(|s| !s.transitions.is_empty()),
    }
}

fn different_led(current: ColorSignal, rng: &mut RngStream) -> ColorSignal {
    let others: Vec<_> = ColorSignal::ALL.into_iter().filter(|&c| c != current).collect();
    others[rng.index(others.len())]
}

fn different_hue(current: Hue, rng: &mut RngStream) -> Hue {
    let others: Vec<_> = Hue::ALL.into_iter().filter(|&c| c != current).collect();
    others[rng.index(others.len())]
}

fn perturb(c: &mut PfsmConfig, rng: &mut RngStream) {
    let slots = numeric_slots(c);
    match slots[rng.index(slots.len())] {
        NumericSlot::Tau(i) => {
            if let BehaviorSpec::Exploration { tau, .. } = &mut c.states[i].behavior {
                let sigma = PERTURB_FRACTION * (TAU_MAX - TAU_MIN) as f64;
                let old = *tau;
                let mut new = (old as f64 + rng.normal(0.0, sigma))
                    .round()
                    .clamp(TAU_MIN as f64, TAU_MAX as f64) as u32;
                if new == old {
                    new = if old == TAU_MAX { old - 1 } else { old + 1 };
                }
                *tau = new;
            }
        }
        NumericSlot::Theta(i) => {
            if let BehaviorSpec::Circling { theta, .. } = &mut c.states[i].behavior {
                let sigma = PERTURB_FRACTION * 2.0 * PI;
                let old = *theta;
                loop {
                    let t = (old + rng.normal(0.0, sigma)).clamp(-PI + 1e-9, PI);
                    if valid_theta(t) && t != old {
                        *theta = t;
                        break;
                    }
                }
            }
        }
        NumericSlot::Beta(i, t) => {
            let beta = c.states[i].transitions[t].condition.beta_mut();
            let old = *beta;
            loop {
                let b = (old + rng.normal(0.0, PERTURB_FRACTION)).clamp(0.0, 1.0);
                if b != old {
                    *beta = b;
                    break;
                }
            }
        }
    }
}

fn set_led(b: &mut BehaviorSpec, value: ColorSignal) {
    match b {
        BehaviorSpec::Exploration { led, .. }
        | BehaviorSpec::Stop { led }
        | BehaviorSpec::ColorFollowing { led, .. }
        | BehaviorSpec::ColorElusion { led, .. }
        | BehaviorSpec::Circling { led, .. } => *led = value,
    }
}

fn change_color(c: &mut PfsmConfig, rng: &mut RngStream) {
    let slots = color_slots(c);
    match slots[rng.index(slots.len())] {
        ColorSlot::Led(i) => {
            let b = &mut c.states[i].behavior;
            let new = different_led(b.led(), rng);
            set_led(b, new);
        }
        ColorSlot::BehaviorHue(i) => {
            if let BehaviorSpec::ColorFollowing { color, .. } | BehaviorSpec::ColorElusion { color, .. } =
                &mut c.states[i].behavior
            {
                *color = different_hue(*color, rng);
            }
        }
        ColorSlot::ConditionHue(i, t) => {
            if let ConditionSpec::ColorDetection { color, .. } = &mut c.states[i].transitions[t].condition {
                *color = different_hue(*color, rng);
            }
        }
    }
}

fn same_module<T>(a: &T, b: &T) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Swaps one behavior or condition for a fresh module of a different kind.
fn replace_module(c: &mut PfsmConfig, rng: &mut RngStream) {
    let n_transitions: usize = c.states.iter().map(|s| s.transitions.len()).sum();
    let pick = rng.index(c.states.len() + n_transitions);
    if pick < c.states.len() {
        let old = c.states[pick].behavior;
        let mut new = random_behavior(rng);
        while same_module(&new, &old) {
            new = random_behavior(rng);
        }
        set_led(&mut new, old.led());
        c.states[pick].behavior = new;
    } else {
        let mut k = pick - c.states.len();
        for s in &mut c.states {
            if k < s.transitions.len() {
                let old = s.transitions[k].condition;
                let mut new = random_condition(rng);
                while same_module(&new, &old) {
                    new = random_condition(rng);
                }
                *new.beta_mut() = old.beta();
                s.transitions[k].condition = new;
                return;
            }
            k -= s.transitions.len();
        }
    }
}

fn remove_state(c: &mut PfsmConfig, rng: &mut RngStream) {
    let k = rng.index(c.states.len());
    c.states.remove(k);
    for s in &mut c.states {
        s.transitions.retain(|t| t.target != k);
        for t in &mut s.transitions {
            if t.target > k {
                t.target -= 1;
            }
        }
    }
}

fn pick_state(c: &PfsmConfig, rng: &mut RngStream, pred: impl Fn(&PfsmState) -> bool) -> usize {
    let eligible: Vec<usize> = (0..c.states.len()).filter(|&i| pred(&c.states[i])).collect();
    eligible[rng.index(eligible.len())]
}

fn apply(c: &mut PfsmConfig, kind: EditKind, rng: &mut RngStream) {
    let n = c.states.len();
    match kind {
        EditKind::PerturbNumeric => perturb(c, rng),
        EditKind::ChangeColor => change_color(c, rng),
        EditKind::ReplaceModule => replace_module(c, rng),
        EditKind::AddState => c.states.push(PfsmState {
            behavior: random_behavior(rng),
            transitions: Vec::new(),
        }),
        EditKind::RemoveState => remove_state(c, rng),
        EditKind::AddTransition => {
            let i = pick_state(c, rng, |s| s.transitions.len() < MAX_TRANSITIONS);
            let t = Transition {
                condition: random_condition(rng),
                target: random_target(i, n, rng),
            };
            c.states[i].transitions.push(t);
        }
        EditKind::RemoveTransition => {
            let i = pick_state(c, rng, |s| !s.transitions.is_empty());
            let t = rng.index(c.states[i].transitions.len());
            c.states[i].transitions.remove(t);
        }
        EditKind::RetargetTransition => {
            let i = pick_state(c, rng, |s| !s.transitions.is_empty());
            let t = rng.index(c.states[i].transitions.len());
            let old = c.states[i].transitions[t].target;
            let mut new = random_target(i, n, rng);
            while new == old {
                new = random_target(i, n, rng);
            }
            c.states[i].transitions[t].target = new;
        }
    }
}

/// Applies exactly one uniformly chosen applicable edit.
pub fn mutate_pfsm(config: &PfsmConfig, rng: &mut RngStream) -> PfsmConfig {
    mutate_pfsm_traced(config, rng).0
}

/// Like [`mutate_pfsm`], also reporting which edit was applied.
pub fn mutate_pfsm_traced(config: &PfsmConfig, rng: &mut RngStream) -> (PfsmConfig, EditKind) {
    let kind = loop {
        let k = EditKind::ALL[rng.index(EditKind::ALL.len())];
        if applicable(config, k) {
            break k;
        }
    };
    let mut out = config.clone();
    apply(&mut out, kind, rng);
    debug_assert!(out.validate().is_ok(), "{kind:?} produced an invalid machine");
    (out, kind)
}
