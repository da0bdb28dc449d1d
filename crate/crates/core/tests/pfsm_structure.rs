use std::mem::discriminant;

use shepherd_core::pfsm::{mutate_pfsm, mutate_pfsm_traced, sample_pfsm, EditKind, PfsmState, Transition};
use shepherd_core::pfsm::{BehaviorSpec, ConditionSpec, MAX_STATES, MAX_TRANSITIONS, TAU_MAX, TAU_MIN};
use shepherd_core::{PfsmConfig, RngStream};

fn check_structure(c: &PfsmConfig) {
    let n = c.n_states();
    assert!((1..=MAX_STATES).contains(&n));
    for (i, s) in c.states().iter().enumerate() {
        assert!(s.transitions.len() <= MAX_TRANSITIONS);
        for t in &s.transitions {
            assert_ne!(t.target, i, "self-transition");
            assert!(t.target < n);
            assert!((0.0..=1.0).contains(&t.condition.beta()));
        }
        match s.behavior {
            BehaviorSpec::Exploration { tau, .. } => assert!((TAU_MIN..=TAU_MAX).contains(&tau)),
            BehaviorSpec::Circling { theta, .. } => {
                assert!(theta > -std::f64::consts::PI && theta <= std::f64::consts::PI && theta != 0.0)
            }
            _ => {}
        }
    }
}

/// Leaves of a behavior or condition that differ, given the same module kind.
fn behavior_diffs(a: &BehaviorSpec, b: &BehaviorSpec) -> usize {
    use BehaviorSpec::*;
    let led = usize::from(a.led() != b.led());
    led + match (a, b) {
        (Exploration { tau: x, .. }, Exploration { tau: y, .. }) => usize::from(x != y),
        (Circling { theta: x, .. }, Circling { theta: y, .. }) => usize::from(x != y),
        (ColorFollowing { color: x, .. }, ColorFollowing { color: y, .. })
        | (ColorElusion { color: x, .. }, ColorElusion { color: y, .. }) => usize::from(x != y),
        _ => 0,
    }
}

fn condition_diffs(a: &ConditionSpec, b: &ConditionSpec) -> usize {
    let hue = match (a, b) {
        (ConditionSpec::ColorDetection { color: x, .. }, ConditionSpec::ColorDetection { color: y, .. }) => {
            usize::from(x != y)
        }
        _ => 0,
    };
    hue + usize::from(a.beta() != b.beta())
}

/// Counts parameter edits, module swaps and retargets between two machines
/// of identical shape.
fn same_shape_diff(a: &PfsmConfig, b: &PfsmConfig) -> (usize, usize, usize) {
    let (mut params, mut modules, mut targets) = (0, 0, 0);
    for (sa, sb) in a.states().iter().zip(b.states()) {
        if discriminant(&sa.behavior) != discriminant(&sb.behavior) {
            modules += 1;
        } else {
            params += behavior_diffs(&sa.behavior, &sb.behavior);
        }
        for (ta, tb) in sa.transitions.iter().zip(&sb.transitions) {
            if discriminant(&ta.condition) != discriminant(&tb.condition) {
                modules += 1;
            } else {
                params += condition_diffs(&ta.condition, &tb.condition);
            }
            targets += usize::from(ta.target != tb.target);
        }
    }
    (params, modules, targets)
}

fn shape(c: &PfsmConfig) -> Vec<usize> {
    c.states().iter().map(|s| s.transitions.len()).collect()
}

/// Reference removal of state `k`: drop it, drop transitions into it and
/// shift the remaining targets.
fn without_state(c: &PfsmConfig, k: usize) -> Vec<PfsmState> {
    c.states()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, s)| PfsmState {
            behavior: s.behavior,
            transitions: s
                .transitions
                .iter()
                .filter(|t| t.target != k)
                .map(|t| Transition {
                    condition: t.condition,
                    target: if t.target > k { t.target - 1 } else { t.target },
                })
                .collect(),
        })
        .collect()
}

fn assert_single_edit(before: &PfsmConfig, after: &PfsmConfig, kind: EditKind) {
    let (n0, n1) = (before.n_states(), after.n_states());
    match kind {
        EditKind::PerturbNumeric | EditKind::ChangeColor => {
            assert_eq!(shape(before), shape(after));
            assert_eq!(same_shape_diff(before, after), (1, 0, 0), "{kind:?}");
        }
        EditKind::ReplaceModule => {
            assert_eq!(shape(before), shape(after));
            assert_eq!(same_shape_diff(before, after), (0, 1, 0));
        }
        EditKind::RetargetTransition => {
            assert_eq!(shape(before), shape(after));
            assert_eq!(same_shape_diff(before, after), (0, 0, 1));
        }
        EditKind::AddState => {
            assert_eq!(n1, n0 + 1);
            assert_eq!(&after.states()[..n0], before.states());
            assert!(after.states()[n0].transitions.is_empty());
        }
        EditKind::RemoveState => {
            assert_eq!(n1 + 1, n0);
            assert!((0..n0).any(|k| without_state(before, k) == after.states()));
        }
        EditKind::AddTransition => {
            assert_eq!(n0, n1);
            let grown: Vec<usize> = (0..n0)
                .filter(|&i| after.states()[i].transitions.len() == before.states()[i].transitions.len() + 1)
                .collect();
            assert_eq!(grown.len(), 1);
            let i = grown[0];
            for k in 0..n0 {
                let (a, b) = (&before.states()[k], &after.states()[k]);
                assert_eq!(a.behavior, b.behavior);
                if k == i {
                    assert_eq!(a.transitions[..], b.transitions[..a.transitions.len()]);
                } else {
                    assert_eq!(a.transitions, b.transitions);
                }
            }
        }
        EditKind::RemoveTransition => {
            assert_eq!(n0, n1);
            let mut changed = 0;
            for k in 0..n0 {
                let (a, b) = (&before.states()[k], &after.states()[k]);
                assert_eq!(a.behavior, b.behavior);
                if a.transitions != b.transitions {
                    changed += 1;
                    assert_eq!(b.transitions.len() + 1, a.transitions.len());
                    assert!((0..a.transitions.len()).any(|t| {
                        let mut v = a.transitions.clone();
                        v.remove(t);
                        v == b.transitions
                    }));
                }
            }
            assert_eq!(changed, 1);
        }
    }
}

#[test]
fn sampled_and_mutated_machines_are_well_formed() {
    let mut rng = RngStream::new(2024);
    for _ in 0..10_000 {
        let c = sample_pfsm(&mut rng);
        check_structure(&c);
        check_structure(&mutate_pfsm(&c, &mut rng));
    }
}

#[test]
fn every_mutation_is_one_edit() {
    let mut rng = RngStream::new(7);
    let mut seen = Vec::new();
    let mut c = sample_pfsm(&mut rng);
    for step in 0..10_000 {
        let (m, kind) = mutate_pfsm_traced(&c, &mut rng);
        check_structure(&m);
        assert_single_edit(&c, &m, kind);
        if !seen.contains(&kind) {
            seen.push(kind);
        }
        // random walk through machine space, with restarts
        c = if step % 50 == 49 { sample_pfsm(&mut rng) } else { m };
    }
    assert_eq!(seen.len(), EditKind::ALL.len());
}

#[test]
fn mutation_is_seeded() {
    let mut a = RngStream::new(3);
    let mut b = RngStream::new(3);
    let c = sample_pfsm(&mut a);
    assert_eq!(c, sample_pfsm(&mut b));
    for _ in 0..100 {
        assert_eq!(mutate_pfsm(&c, &mut a), mutate_pfsm(&c, &mut b));
    }
}

#[test]
fn machine_files_roundtrip() {
    let mut rng = RngStream::new(11);
    for _ in 0..500 {
        let c = sample_pfsm(&mut rng);
        let back: PfsmConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
