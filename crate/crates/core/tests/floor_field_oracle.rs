//! Floor fields against an independent Dijkstra on a petgraph cell graph.

mod common;

use common::dijkstra::{max_deviation, random_scenario};
use crowddest::sim::{build_floor_field, CrossroadLayout};
use crowddest::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn random_grids_match_petgraph() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..60 {
        let s = random_scenario(&mut rng);
        if s.validate().is_err() {
            continue;
        }
        for dest in 0..3 {
            if let Some(dev) = max_deviation(&s, dest) {
                assert!(dev <= 1e-9, "deviation {dev}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "only {checked} fields compared");
}

#[test]
fn coarse_crossroad_matches_petgraph() {
    // 40 x 50 cells at 1 m
    let layout = CrossroadLayout {
        street_width: 10.0,
        corridor_length: 25.0,
        arm_length: 15.0,
        grid_resolution_ff: 1.0,
        ..CrossroadLayout::default()
    };
    let s = layout.scenario();
    for dest in 0..3 {
        assert!(max_deviation(&s, dest).unwrap() <= 1e-9);
    }
}

#[test]
fn distances_shrink_towards_the_destination() {
    let s = CrossroadLayout::default().scenario();
    let field = build_floor_field(&s, 1).unwrap();
    let mut prev = f64::INFINITY;
    for y in (1..45).map(|k| k as f64) {
        let d = field.interpolate(Point::new(5.0, y));
        assert!(d < prev);
        prev = d;
    }
}
