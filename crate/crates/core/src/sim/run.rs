use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::seed;

use super::log::{AgentState, Frame, SpawnRecord, TrajectoryLog};
use super::spawn::{sample_destination_distribution, sample_index, sample_speed, SpeedDistribution};
use super::step::{best_candidate, Pedestrian, StepModel};
use super::{build_floor_field, FloorField, Scenario, TORSO_DIAMETER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub duration: f64,
    pub time_step: f64,
    /// Pedestrians per second; zero disables the source.
    pub spawn_rate: f64,
    pub redistribution_period: usize,
    pub speed_mean: f64,
    pub speed_sd: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub torso_diameter: f64,
    /// Seconds between logged frames; a multiple of `time_step`.
    pub log_interval: f64,
    pub spawn_retries: usize,
    pub rng_seed: u64,
    pub step_model: StepModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        let speed = SpeedDistribution::default();
        Self {
            duration: 500.0,
            time_step: 0.4,
            spawn_rate: 2.5,
            redistribution_period: 100,
            speed_mean: speed.mean,
            speed_sd: speed.sd,
            speed_min: speed.min,
            speed_max: speed.max,
            torso_diameter: TORSO_DIAMETER,
            log_interval: 0.4,
            spawn_retries: 20,
            rng_seed: 0,
            step_model: StepModel::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.to_string())) };
        check(self.duration > 0.0 && self.duration.is_finite(), "duration must be > 0")?;
        check(self.time_step > 0.0 && self.time_step.is_finite(), "time_step must be > 0")?;
        check(self.spawn_rate >= 0.0 && self.spawn_rate.is_finite(), "spawn_rate must be >= 0")?;
        check(self.redistribution_period >= 1, "redistribution_period must be >= 1")?;
        check(self.speed_mean > 0.0, "speed_mean must be > 0")?;
        check(self.speed_sd >= 0.0, "speed_sd must be >= 0")?;
        check(
            self.speed_min > 0.0 && self.speed_min <= self.speed_mean && self.speed_mean <= self.speed_max,
            "speed bounds must satisfy 0 < speed_min <= speed_mean <= speed_max",
        )?;
        check(self.torso_diameter > 0.0, "torso_diameter must be > 0")?;
        check(self.step_model.n_candidates >= 1, "step_model.n_candidates must be >= 1")?;
        let ratio = self.log_interval / self.time_step;
        check(
            self.log_interval > 0.0 && ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() < 1e-6,
            "log_interval must be a positive multiple of time_step",
        )
    }

    pub fn speed_distribution(&self) -> SpeedDistribution {
        SpeedDistribution {
            mean: self.speed_mean,
            sd: self.speed_sd,
            min: self.speed_min,
            max: self.speed_max,
        }
    }
}

/// One floor field per destination, in destination order.
#[derive(Debug, Clone)]
pub struct FloorFields(pub [FloorField; 3]);

impl FloorFields {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        Ok(Self([
            build_floor_field(scenario, 0)?,
            build_floor_field(scenario, 1)?,
            build_floor_field(scenario, 2)?,
        ]))
    }
}

pub fn run_simulation(scenario: &Scenario, config: &SimConfig) -> Result<TrajectoryLog> {
    let fields = FloorFields::build(scenario)?;
    run_simulation_with_fields(scenario, &fields, config)
}

/// `runs` independent simulations; run `k` uses seed `derive(base_seed, [k])`.
pub fn run_many(scenario: &Scenario, config: &SimConfig, runs: usize, base_seed: u64) -> Result<Vec<TrajectoryLog>> {
    let fields = FloorFields::build(scenario)?;
    (0..runs)
        .into_par_iter()
        .map(|k| {
            let cfg = SimConfig {
                rng_seed: seed::derive(base_seed, &[k as u64]),
                ..config.clone()
            };
            run_simulation_with_fields(scenario, &fields, &cfg)
        })
        .collect()
}

/// Uniform bucket grid used to find agents within the interaction range.
struct Buckets {
    origin: Point,
    size: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl Buckets {
    fn new(bounds: Rect, size: f64) -> Self {
        let nx = (bounds.width() / size).ceil().max(1.0) as usize;
        let ny = (bounds.height() / size).ceil().max(1.0) as usize;
        Self {
            origin: Point::new(bounds.x0, bounds.y0),
            size,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        }
    }

    fn cell(&self, p: Point) -> (usize, usize) {
        let i = ((p.x - self.origin.x) / self.size).floor().max(0.0) as usize;
        let j = ((p.y - self.origin.y) / self.size).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    fn rebuild(&mut self, positions: &[Point]) {
        self.cells.iter_mut().for_each(Vec::clear);
        for (k, p) in positions.iter().enumerate() {
            let (i, j) = self.cell(*p);
            self.cells[j * self.nx + i].push(k);
        }
    }

    /// Indices bucketed within `radius` of `p` (a superset of the true neighbours).
    fn near(&self, p: Point, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let reach = (radius / self.size).ceil() as usize;
        let (ci, cj) = self.cell(p);
        for j in cj.saturating_sub(reach)..=(cj + reach).min(self.ny - 1) {
            for i in ci.saturating_sub(reach)..=(ci + reach).min(self.nx - 1) {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
    }
}

fn round_time(t: f64) -> f64 {
    (t * 1e9).round() / 1e9
}

/// Simulates one run on prebuilt floor fields.
///
/// Each tick every agent, in ascending id order, moves to its cheapest
/// candidate given the current positions of all others, so the hard-core
/// exclusion holds for every logged frame. Agents that enter their
/// destination are removed; the source then emits the pedestrians due by the
/// tick's end time.
pub fn run_simulation_with_fields(scenario: &Scenario, fields: &FloorFields, config: &SimConfig) -> Result<TrajectoryLog> {
    scenario.validate()?;
    config.validate()?;
    let dt = config.time_step;
    let n_steps = (config.duration / dt).round() as usize;
    let log_every = ((config.log_interval / dt).round() as usize).max(1);
    let speeds = config.speed_distribution();
    let model = config.step_model;
    let max_step = config.speed_max * dt;
    let query_radius = model.ped_range.max(config.torso_diameter) + max_step;

    let mut rng = seed::rng(config.rng_seed, &[0x5111]);
    let mut peds: Vec<Pedestrian> = Vec::new();
    let mut log = TrajectoryLog {
        duration: config.duration,
        log_interval: log_every as f64 * dt,
        ..Default::default()
    };
    let mut distribution = [100.0 / 3.0; 3];
    let mut next_id: u32 = 0;
    let mut buckets = Buckets::new(scenario.walkable_bounds, 2.0);
    let mut positions: Vec<Point> = Vec::new();
    let mut near = Vec::new();
    let mut neighbours = Vec::new();

    let spawn_box = {
        let r = 0.5 * config.torso_diameter;
        let o = scenario.origin;
        Rect::new(o.x0 + r, o.y0 + r, o.x1 - r, o.y1 - r)
    };

    for step in 0..=n_steps {
        let t = round_time(step as f64 * dt);
        if step > 0 {
            positions.clear();
            positions.extend(peds.iter().map(|p| p.position));
            buckets.rebuild(&positions);
            let mut arrived = vec![false; peds.len()];
            for k in 0..peds.len() {
                let me = peds[k].position;
                buckets.near(me, query_radius, &mut near);
                neighbours.clear();
                neighbours.extend(
                    near.iter()
                        .filter(|&&o| o != k && !arrived[o])
                        .map(|&o| peds[o].position)
                        .filter(|q| q.dist_sq(me) <= query_radius * query_radius),
                );
                let ped = &peds[k];
                let next = best_candidate(ped, &fields.0[ped.destination_id], &neighbours, scenario, &model);
                peds[k].position = next;
                if scenario.destinations[peds[k].destination_id].contains(next) {
                    arrived[k] = true;
                }
            }
            let mut keep = arrived.iter().map(|a| !a);
            peds.retain(|_| keep.next().unwrap_or(true));
        }

        // source: pedestrians due by time t, one every 1/spawn_rate seconds starting at 0
        if config.spawn_rate > 0.0 {
            let due = (t * config.spawn_rate + 1e-9).floor() as usize + 1;
            while log.spawns.len() < due {
                let Some(pos) = find_spawn_position(&mut rng, spawn_box, &peds, scenario, config) else {
                    log.deferred_spawns += 1;
                    break;
                };
                if log.spawns.len() % config.redistribution_period == 0 {
                    distribution = sample_destination_distribution(&mut rng);
                }
                let destination = sample_index(&mut rng, &distribution);
                let speed = sample_speed(&mut rng, &speeds);
                let mut ped = Pedestrian::new(next_id, pos, destination, speed, dt);
                ped.torso_diameter = config.torso_diameter;
                log.spawns.push(SpawnRecord {
                    id: next_id,
                    t,
                    destination,
                    distribution,
                });
                peds.push(ped);
                next_id += 1;
            }
        }

        if step % log_every == 0 {
            log.frames.push(Frame {
                t,
                agents: peds
                    .iter()
                    .map(|p| AgentState {
                        id: p.id,
                        position: p.position,
                        destination: p.destination_id,
                    })
                    .collect(),
            });
        }
    }
    if log.deferred_spawns > 0 {
        log::warn!("seed {}: {} spawn attempts deferred", config.rng_seed, log.deferred_spawns);
    }
    Ok(log)
}

fn find_spawn_position<R: Rng + ?Sized>(
    rng: &mut R,
    area: Rect,
    peds: &[Pedestrian],
    scenario: &Scenario,
    config: &SimConfig,
) -> Option<Point> {
    for _ in 0..config.spawn_retries.max(1) {
        let p = Point::new(
            area.x0 + rng.random::<f64>() * area.width().max(0.0),
            area.y0 + rng.random::<f64>() * area.height().max(0.0),
        );
        let clear = scenario.is_walkable(p)
            && scenario.wall_distance(p) >= 0.5 * config.torso_diameter
            && peds.iter().all(|o| o.position.dist(p) >= config.torso_diameter);
        if clear {
            return Some(p);
        }
    }
    None
}
