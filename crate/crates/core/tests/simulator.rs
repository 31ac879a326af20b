use crowddest::sim::{build_floor_field, run_simulation, CrossroadLayout, SimConfig, TrajectoryLog, TORSO_DIAMETER};

fn lone_agent_log(seed: u64) -> TrajectoryLog {
    let cfg = SimConfig {
        duration: 40.0,
        spawn_rate: 1e-3,
        speed_sd: 0.0,
        rng_seed: seed,
        ..SimConfig::default()
    };
    run_simulation(&CrossroadLayout::default().scenario(), &cfg).unwrap()
}

/// First logged time at which agent 0 has reached `y`.
fn time_at(log: &TrajectoryLog, y: f64) -> f64 {
    log.frames
        .iter()
        .find(|f| f.agents.iter().any(|a| a.id == 0 && a.position.y >= y))
        .map(|f| f.t)
        .expect("agent never reached the mark")
}

#[test]
fn lone_agent_walks_10_m_at_free_flow_speed() {
    for seed in 0..5 {
        let log = lone_agent_log(seed);
        assert_eq!(log.spawns.len(), 1);
        let t = time_at(&log, 15.0) - time_at(&log, 5.0);
        let expected = 10.0 / 1.34;
        assert!((t - expected).abs() <= 0.15 * expected, "seed {seed}: {t} s");
    }
}

#[test]
fn lone_agent_reaches_its_destination() {
    let scenario = CrossroadLayout::default().scenario();
    let log = lone_agent_log(3);
    let dest = log.spawns[0].destination;
    let field = build_floor_field(&scenario, dest).unwrap();
    let track: Vec<f64> = log
        .frames
        .iter()
        .filter_map(|f| f.agents.iter().find(|a| a.id == 0))
        .map(|a| field.interpolate(a.position))
        .collect();
    // strictly closer every tick until it leaves the scenario
    assert!(track.windows(2).all(|w| w[1] < w[0]), "{track:?}");
    assert!(log.frames.last().unwrap().agents.is_empty());
}

#[test]
fn crowded_run_has_no_overlaps_or_wall_penetrations() {
    let scenario = CrossroadLayout::default().scenario();
    let cfg = SimConfig {
        duration: 150.0,
        rng_seed: 5,
        ..SimConfig::default()
    };
    let log = run_simulation(&scenario, &cfg).unwrap();
    let mut max_agents = 0;
    for f in &log.frames {
        max_agents = max_agents.max(f.agents.len());
        for (i, a) in f.agents.iter().enumerate() {
            assert!(scenario.is_walkable(a.position), "t={} id={} inside an obstacle", f.t, a.id);
            for b in &f.agents[i + 1..] {
                assert!(a.position.dist(b.position) >= TORSO_DIAMETER - 1e-9, "t={} ids {} {}", f.t, a.id, b.id);
            }
        }
    }
    assert!(max_agents > 50, "expected a crowd, saw at most {max_agents}");
}

#[test]
fn destinations_redistribute_every_100_pedestrians() {
    let cfg = SimConfig {
        duration: 130.0,
        rng_seed: 8,
        ..SimConfig::default()
    };
    let log = run_simulation(&CrossroadLayout::default().scenario(), &cfg).unwrap();
    assert!(log.spawns.len() > 300);
    for (k, w) in log.spawns.windows(2).enumerate() {
        let changes = w[0].distribution != w[1].distribution;
        assert_eq!(changes, (k + 1) % 100 == 0, "spawn {}", k + 1);
    }
    for s in &log.spawns {
        assert!((s.distribution.iter().sum::<f64>() - 100.0).abs() < 1e-9);
    }
}
