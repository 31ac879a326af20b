use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

/// Walkable area, walls, one origin and the three destinations (L, S, R).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub walkable_bounds: Rect,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    pub origin: Rect,
    pub destinations: [Rect; 3],
    #[serde(default = "default_ff_resolution")]
    pub grid_resolution_ff: f64,
}

fn default_ff_resolution() -> f64 {
    0.1
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !self.walkable_bounds.is_valid() {
            return bad("walkable_bounds must have positive extent".into());
        }
        if !(self.grid_resolution_ff > 0.0 && self.grid_resolution_ff.is_finite()) {
            return bad(format!("grid_resolution_ff must be > 0, got {}", self.grid_resolution_ff));
        }
        let named = std::iter::once(("origin", &self.origin)).chain(
            crate::DESTINATION_LABELS
                .iter()
                .copied()
                .zip(self.destinations.iter()),
        );
        for (name, r) in named {
            if !r.is_valid() {
                return bad(format!("{name} region must have positive extent"));
            }
            if !self.walkable_bounds.contains_rect(r) {
                return bad(format!("{name} region lies outside walkable_bounds"));
            }
            if self.obstacles.iter().any(|o| o.intersects(r)) {
                return bad(format!("{name} region intersects an obstacle"));
            }
        }
        if self.obstacles.iter().any(|o| !o.is_valid()) {
            return bad("obstacles must have positive extent".into());
        }
        Ok(())
    }

    /// Inside the walkable bounds and outside every obstacle.
    pub fn is_walkable(&self, p: Point) -> bool {
        self.walkable_bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance to the nearest wall: obstacle boundary or edge of the walkable area.
    pub fn wall_distance(&self, p: Point) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.distance_to(p))
            .fold(self.walkable_bounds.inner_edge_distance(p).max(0.0), f64::min)
    }

    /// Index of the destination containing `p`, if any.
    pub fn destination_at(&self, p: Point) -> Option<usize> {
        self.destinations.iter().position(|d| d.contains(p))
    }
}

/// Parametric crossroad: a vertical corridor that ends in a crossing square
/// with arms to the left, straight on and to the right.
///
/// Coordinates: the corridor spans `x ∈ [0, street_width]`, `y ∈ [0, corridor_length]`;
/// the crossing occupies the next `street_width` meters; each arm extends
/// `arm_length` beyond the crossing and ends in a destination strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossroadLayout {
    pub street_width: f64,
    pub corridor_length: f64,
    pub arm_length: f64,
    pub origin_depth: f64,
    pub destination_depth: f64,
    pub grid_resolution_ff: f64,
}

impl Default for CrossroadLayout {
    fn default() -> Self {
        Self {
            street_width: 10.0,
            corridor_length: 32.0,
            arm_length: 15.0,
            origin_depth: 2.0,
            destination_depth: 2.0,
            grid_resolution_ff: 0.1,
        }
    }
}

impl CrossroadLayout {
    /// `y` of the lower edge of the crossing square.
    pub fn crossing_y(&self) -> f64 {
        self.corridor_length
    }

    pub fn scenario(&self) -> Scenario {
        let w = self.street_width;
        let c = self.corridor_length;
        let a = self.arm_length;
        let top = c + w + a;
        let (xl, xr) = (-a, w + a);
        Scenario {
            walkable_bounds: Rect::new(xl, 0.0, xr, top),
            obstacles: vec![
                Rect::new(xl, 0.0, 0.0, c),
                Rect::new(w, 0.0, xr, c),
                Rect::new(xl, c + w, 0.0, top),
                Rect::new(w, c + w, xr, top),
            ],
            origin: Rect::new(0.0, 0.0, w, self.origin_depth),
            destinations: [
                Rect::new(xl, c, xl + self.destination_depth, c + w),
                Rect::new(0.0, top - self.destination_depth, w, top),
                Rect::new(xr - self.destination_depth, c, xr, c + w),
            ],
            grid_resolution_ff: self.grid_resolution_ff,
        }
    }

    /// Full-width cutout of the given height whose upper edge sits `distance`
    /// meters below the crossing.
    pub fn cutout_below_crossing(&self, distance: f64, height: f64) -> Rect {
        let top = self.crossing_y() - distance;
        Rect::new(0.0, top - height, self.street_width, top)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_crossroad_is_valid() {
        let s = CrossroadLayout::default().scenario();
        s.validate().unwrap();
        assert!(s.is_walkable(Point::new(5.0, 10.0)));
        assert!(!s.is_walkable(Point::new(-5.0, 10.0)));
        assert!(s.is_walkable(Point::new(-5.0, 37.0)));
        assert_eq!(s.destination_at(Point::new(-14.0, 37.0)), Some(0));
        assert_eq!(s.destination_at(Point::new(5.0, 56.5)), Some(1));
        assert_eq!(s.destination_at(Point::new(24.0, 37.0)), Some(2));
    }

    #[test]
    fn rejects_destination_in_obstacle() {
        let mut s = CrossroadLayout::default().scenario();
        s.destinations[1] = Rect::new(-10.0, 5.0, -5.0, 6.0);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_bad_resolution() {
        let mut s = CrossroadLayout::default().scenario();
        s.grid_resolution_ff = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn wall_distance_in_corridor() {
        let s = CrossroadLayout::default().scenario();
        assert!((s.wall_distance(Point::new(2.0, 10.0)) - 2.0).abs() < 1e-12);
        assert!((s.wall_distance(Point::new(5.0, 0.5)) - 0.5).abs() < 1e-12);
    }
}
