use serde::{Deserialize, Serialize};

use crate::geometry::Point;

use super::{FloorField, Scenario, TORSO_DIAMETER};

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Point,
    pub destination_id: usize,
    pub free_flow_speed: f64,
    pub step_length: f64,
    pub torso_diameter: f64,
}

impl Pedestrian {
    pub fn new(id: u32, position: Point, destination_id: usize, speed: f64, time_step: f64) -> Self {
        Self {
            id,
            position,
            destination_id,
            free_flow_speed: speed,
            step_length: speed * time_step,
            torso_diameter: TORSO_DIAMETER,
        }
    }
}

/// Cost landscape parameters.
///
/// Pedestrian repulsion `μp·exp(−(d − dp)/σp)` acts for center distances
/// below `ped_range`; wall repulsion `μo·exp(−dw/σo)` for wall distances
/// below `wall_range`. Overlapping torsos or a torso touching a wall cost `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepModel {
    pub ped_strength: f64,
    pub ped_width: f64,
    pub ped_range: f64,
    pub wall_strength: f64,
    pub wall_width: f64,
    pub wall_range: f64,
    pub n_candidates: usize,
}

impl Default for StepModel {
    fn default() -> Self {
        Self {
            ped_strength: 5.0,
            ped_width: 0.3,
            ped_range: 2.0,
            wall_strength: 3.0,
            wall_width: 0.2,
            wall_range: 1.0,
            n_candidates: 16,
        }
    }
}

impl StepModel {
    /// Candidate `k` for an agent at `pos`: index 0 is the current position,
    /// indices `1..=n` walk the step circle counter-clockwise from +x.
    pub fn candidate(&self, pos: Point, step_length: f64, k: usize) -> Point {
        if k == 0 {
            return pos;
        }
        let angle = std::f64::consts::TAU * (k - 1) as f64 / self.n_candidates as f64;
        Point::new(pos.x + step_length * angle.cos(), pos.y + step_length * angle.sin())
    }

    /// Cost of standing at `candidate` given the other agents' positions.
    pub fn cost_at<I>(&self, candidate: Point, torso: f64, field: &FloorField, others: I, scenario: &Scenario) -> f64
    where
        I: IntoIterator<Item = Point>,
    {
        if !scenario.is_walkable(candidate) {
            return f64::INFINITY;
        }
        let wall = scenario.wall_distance(candidate);
        if wall < 0.5 * torso {
            return f64::INFINITY;
        }
        let mut cost = field.interpolate(candidate);
        if !cost.is_finite() {
            return f64::INFINITY;
        }
        if wall < self.wall_range {
            cost += self.wall_strength * (-wall / self.wall_width).exp();
        }
        for other in others {
            let d = candidate.dist(other);
            if d < torso {
                return f64::INFINITY;
            }
            if d < self.ped_range {
                cost += self.ped_strength * (-(d - torso) / self.ped_width).exp();
            }
        }
        cost
    }
}

/// Cost of `candidate` for `ped`; `others` may include `ped` itself, which is skipped by id.
pub fn step_cost(
    candidate: Point,
    ped: &Pedestrian,
    field: &FloorField,
    others: &[Pedestrian],
    scenario: &Scenario,
    model: &StepModel,
) -> f64 {
    let neighbours = others.iter().filter(|o| o.id != ped.id).map(|o| o.position);
    model.cost_at(candidate, ped.torso_diameter, field, neighbours, scenario)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Move(Point),
    /// The agent stands inside its destination and leaves the simulation.
    Arrived(Point),
}

impl StepOutcome {
    pub fn position(self) -> Point {
        match self {
            StepOutcome::Move(p) | StepOutcome::Arrived(p) => p,
        }
    }
}

/// Lowest-cost candidate; ties go to the lowest candidate index, so staying
/// put wins unless some step is strictly cheaper.
pub fn choose_next_position(
    ped: &Pedestrian,
    field: &FloorField,
    others: &[Pedestrian],
    scenario: &Scenario,
    model: &StepModel,
) -> StepOutcome {
    if scenario.destinations[ped.destination_id].contains(ped.position) {
        return StepOutcome::Arrived(ped.position);
    }
    let neighbours: Vec<Point> = others
        .iter()
        .filter(|o| o.id != ped.id)
        .map(|o| o.position)
        .collect();
    StepOutcome::Move(best_candidate(ped, field, &neighbours, scenario, model))
}

pub(crate) fn best_candidate(
    ped: &Pedestrian,
    field: &FloorField,
    neighbours: &[Point],
    scenario: &Scenario,
    model: &StepModel,
) -> Point {
    let mut best = (f64::INFINITY, ped.position);
    for k in 0..=model.n_candidates {
        let c = model.candidate(ped.position, ped.step_length, k);
        let cost = model.cost_at(c, ped.torso_diameter, field, neighbours.iter().copied(), scenario);
        if cost < best.0 {
            best = (cost, c);
        }
    }
    best.1
}
