use proptest::prelude::*;

use shepherd_core::controller::Idle;
use shepherd_core::missions::{f1_centroid_spread, f2_sheep_outside, herding_goals, herding_objective};
use shepherd_core::sim::{init_episode, Episode};
use shepherd_core::{build_scenario, Circle, Mission, RngStream, SheepVariant, Vec2};

/// Textbook centroid spread, summing coordinates directly.
fn f1_reference(ps: &[Vec2]) -> f64 {
    let n = ps.len() as f64;
    let cx = ps.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = ps.iter().map(|p| p.y).sum::<f64>() / n;
    ps.iter().map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()).sum::<f64>() / n
}

fn f2_reference(ps: &[Vec2], regions: &[Circle]) -> usize {
    let mut outside = 0;
    for p in ps {
        let mut inside = false;
        for c in regions {
            let (dx, dy) = (p.x - c.center.x, p.y - c.center.y);
            if dx * dx + dy * dy <= c.radius * c.radius {
                inside = true;
            }
        }
        if !inside {
            outside += 1;
        }
    }
    outside
}

fn points(rng: &mut RngStream, n: usize, r: f64) -> Vec<Vec2> {
    (0..n)
        .map(|_| Vec2::new(rng.uniform_range(-r, r), rng.uniform_range(-r, r)))
        .collect()
}

#[test]
fn objectives_match_brute_force() {
    let mut rng = RngStream::new(1);
    let goals = herding_goals();
    for _ in 0..1000 {
        let ps = points(&mut rng, 10, 1.0);
        let f1 = f1_centroid_spread(&ps).unwrap();
        assert!((f1 - f1_reference(&ps)).abs() <= 1e-12);
        assert_eq!(f2_sheep_outside(&ps, &goals), f2_reference(&ps, &goals));
    }
}

#[test]
fn f1_symmetric_layouts() {
    // regular decagon of radius 0.5 around an arbitrary center
    let c = Vec2::new(0.2, -0.1);
    let ring: Vec<Vec2> = (0..10)
        .map(|k| c + Vec2::from_angle(k as f64 * std::f64::consts::TAU / 10.0) * 0.5)
        .collect();
    assert!((f1_centroid_spread(&ring).unwrap() - 0.5).abs() < 1e-12);
    let pair = [Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.8)];
    assert_eq!(f1_centroid_spread(&pair).unwrap(), 0.4);
}

#[test]
fn f2_bounds_and_boundary() {
    let goals = herding_goals();
    assert_eq!(f2_sheep_outside(&[Vec2::ZERO; 10], &goals), 10);
    let inside: Vec<Vec2> = (0..10).map(|k| goals[k % 4].center).collect();
    assert_eq!(f2_sheep_outside(&inside, &goals), 0);
    let g = goals[2];
    let rim = g.center + Vec2::new(g.radius, 0.0);
    assert_eq!(f2_sheep_outside(&[rim], &[g]), 0);
    assert_eq!(f2_sheep_outside(&[rim + Vec2::new(1e-9, 0.0)], &[g]), 1);
}

#[test]
fn herding_fixture_with_all_sheep_home_scores_zero() {
    let scenario = build_scenario(Mission::Herding, SheepVariant::C3);
    let mut world = init_episode(&scenario, 3).unwrap();
    let goals = herding_goals();
    let ns = world.n_shepherds;
    for (j, sheep) in world.robots[ns..].iter_mut().enumerate() {
        let g = goals[j % 4];
        let offset = if j < 4 { Vec2::ZERO } else { Vec2::from_angle(j as f64) * 0.12 };
        sheep.pose.position = g.center + offset;
    }
    let mut episode = Episode::new(world, &Idle, &scenario.sheep);
    for _ in 0..scenario.duration {
        episode.step().unwrap();
    }
    let w = &episode.world;
    let halted: Vec<bool> = w.sheep().iter().map(|r| r.halted).collect();
    assert!(halted.iter().all(|&h| h), "sheep on white floor halt");
    assert_eq!(scenario.objective(&w.sheep_positions(), &halted).unwrap(), 0.0);
}

fn point() -> impl Strategy<Value = (f64, f64)> {
    (-1.0f64..1.0, -1.0f64..1.0)
}

proptest! {
    #[test]
    fn f1_translation_invariant(ps in prop::collection::vec(point(), 1..20), dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let ps: Vec<Vec2> = ps.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let moved: Vec<Vec2> = ps.iter().map(|&p| p + Vec2::new(dx, dy)).collect();
        let a = f1_centroid_spread(&ps).unwrap();
        let b = f1_centroid_spread(&moved).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn f1_rotation_invariant(ps in prop::collection::vec(point(), 1..20), angle in -3.2f64..3.2) {
        let ps: Vec<Vec2> = ps.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let n = ps.len() as f64;
        let c = ps.iter().fold(Vec2::ZERO, |a, &p| a + p) * (1.0 / n);
        let turned: Vec<Vec2> = ps.iter().map(|&p| c + (p - c).rotate(angle)).collect();
        let a = f1_centroid_spread(&ps).unwrap();
        let b = f1_centroid_spread(&turned).unwrap();
        prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn f2_drops_by_one_per_sheep_brought_home(ps in prop::collection::vec(point(), 1..=10), pick in 0usize..10, region in 0usize..4) {
        let goals = herding_goals();
        let mut ps: Vec<Vec2> = ps.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
        let before = f2_sheep_outside(&ps, &goals);
        prop_assert!(before <= ps.len());
        let outside: Vec<usize> = (0..ps.len()).filter(|&i| !goals.iter().any(|g| g.contains(ps[i]))).collect();
        if !outside.is_empty() {
            let i = outside[pick % outside.len()];
            ps[i] = goals[region].center;
            prop_assert_eq!(f2_sheep_outside(&ps, &goals), before - 1);
        }
        let halted = vec![false; ps.len()];
        prop_assert_eq!(herding_objective(&ps, &halted, &goals), f2_sheep_outside(&ps, &goals));
    }
}
