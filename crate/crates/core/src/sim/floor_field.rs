use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::Point;

use super::Scenario;

/// Travel distance to one destination, sampled at cell centers.
///
/// The grid covers the walkable bounds; cell `(i, j)` has its center at
/// `origin + ((i + ½)·h, (j + ½)·h)`. Blocked cells hold `+∞`.
#[derive(Debug, Clone)]
pub struct FloorField {
    pub destination_id: usize,
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
    pub origin: Point,
    pub grid: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on distance, then cell index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-neighbour offsets with their length in cells. Diagonal moves are only
/// allowed when both orthogonal cells they pass are walkable.
const NEIGHBOURS: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl FloorField {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn cell_of(&self, p: Point) -> (usize, usize) {
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        (
            clamp((p.x - self.origin.x) / self.cell_size, self.nx),
            clamp((p.y - self.origin.y) / self.cell_size, self.ny),
        )
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.grid[self.index(i, j)]
    }

    /// Bilinear interpolation between the four surrounding cell centers.
    /// Blocked corners are dropped and the remaining weights renormalized;
    /// the result is `+∞` only if all four corners are blocked.
    pub fn interpolate(&self, p: Point) -> f64 {
        let u = ((p.x - self.origin.x) / self.cell_size - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let v = ((p.y - self.origin.y) / self.cell_size - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (u.floor() as usize).min(self.nx.saturating_sub(2));
        let j0 = (v.floor() as usize).min(self.ny.saturating_sub(2));
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let corners = [
            (self.at(i0, j0), (1.0 - fu) * (1.0 - fv)),
            (self.at(i1, j0), fu * (1.0 - fv)),
            (self.at(i0, j1), (1.0 - fu) * fv),
            (self.at(i1, j1), fu * fv),
        ];
        let (mut acc, mut wsum) = (0.0, 0.0);
        for (d, w) in corners {
            if d.is_finite() {
                acc += d * w;
                wsum += w;
            }
        }
        if wsum > 0.0 {
            acc / wsum
        } else if let Some(d) = corners.iter().map(|c| c.0).find(|d| d.is_finite()) {
            // p sits exactly on a finite corner's zero-weight edge
            d
        } else {
            f64::INFINITY
        }
    }
}

/// Cell-center walkability mask over the scenario's bounds.
pub(crate) fn walkable_mask(scenario: &Scenario) -> (usize, usize, Point, Vec<bool>) {
    let h = scenario.grid_resolution_ff;
    let b = scenario.walkable_bounds;
    let nx = ((b.width() / h).round() as usize).max(1);
    let ny = ((b.height() / h).round() as usize).max(1);
    let origin = Point::new(b.x0, b.y0);
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let c = Point::new(b.x0 + (i as f64 + 0.5) * h, b.y0 + (j as f64 + 0.5) * h);
            mask[j * nx + i] = scenario.is_walkable(c);
        }
    }
    (nx, ny, origin, mask)
}

/// Dijkstra distance map towards `destination_id` on the 8-neighbour cell
/// graph (axis step `h`, diagonal step `√2·h`).
pub fn build_floor_field(scenario: &Scenario, destination_id: usize) -> Result<FloorField> {
    scenario.validate()?;
    let dest = scenario
        .destinations
        .get(destination_id)
        .ok_or_else(|| Error::Config(format!("destination index {destination_id} out of range")))?;
    let h = scenario.grid_resolution_ff;
    let (nx, ny, origin, mask) = walkable_mask(scenario);

    let mut field = FloorField {
        destination_id,
        cell_size: h,
        nx,
        ny,
        origin,
        grid: vec![f64::INFINITY; nx * ny],
    };
    let mut heap = BinaryHeap::new();
    for j in 0..ny {
        for i in 0..nx {
            let k = field.index(i, j);
            if mask[k] && dest.contains(field.cell_center(i, j)) {
                field.grid[k] = 0.0;
                heap.push(Entry { dist: 0.0, cell: k });
            }
        }
    }
    if heap.is_empty() {
        return Err(Error::UnreachableDestination(destination_id));
    }

    let diag = std::f64::consts::SQRT_2 * h;
    while let Some(Entry { dist, cell }) = heap.pop() {
        if dist > field.grid[cell] {
            continue;
        }
        let (i, j) = ((cell % nx) as isize, (cell / nx) as isize);
        for (di, dj) in NEIGHBOURS {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize {
                continue;
            }
            let nk = nj as usize * nx + ni as usize;
            if !mask[nk] {
                continue;
            }
            let step = if di != 0 && dj != 0 {
                let side_a = nj as usize * nx + i as usize;
                let side_b = j as usize * nx + ni as usize;
                if !mask[side_a] || !mask[side_b] {
                    continue;
                }
                diag
            } else {
                h
            };
            let nd = dist + step;
            if nd < field.grid[nk] {
                field.grid[nk] = nd;
                heap.push(Entry { dist: nd, cell: nk });
            }
        }
    }

    let origin_reached = (0..ny).any(|j| {
        (0..nx).any(|i| {
            let k = field.index(i, j);
            field.grid[k].is_finite() && scenario.origin.contains(field.cell_center(i, j))
        })
    });
    if !origin_reached {
        return Err(Error::DisconnectedScenario(destination_id));
    }
    Ok(field)
}
