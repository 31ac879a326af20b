//! Reference floor field: multi-source Dijkstra from petgraph on the same
//! 8-neighbour cell graph (no corner cutting).

use std::collections::HashMap;

use crowddest::sim::{build_floor_field, Scenario};
use crowddest::{Error, Point, Rect};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Distances from the destination cells by petgraph; `None` marks cells that
/// are blocked or unreachable.
pub fn oracle(s: &Scenario, dest: usize) -> (usize, usize, Vec<Option<f64>>) {
    let h = s.grid_resolution_ff;
    let b = s.walkable_bounds;
    let nx = (b.width() / h).round() as usize;
    let ny = (b.height() / h).round() as usize;
    let center = |i: usize, j: usize| Point::new(b.x0 + (i as f64 + 0.5) * h, b.y0 + (j as f64 + 0.5) * h);
    let free = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && s.is_walkable(center(i as usize, j as usize))
    };

    let mut g: UnGraph<(), f64> = UnGraph::new_undirected();
    let source = g.add_node(());
    let mut node: HashMap<(usize, usize), NodeIndex> = HashMap::new();
    for j in 0..ny {
        for i in 0..nx {
            if free(i as isize, j as isize) {
                let n = g.add_node(());
                node.insert((i, j), n);
                if s.destinations[dest].contains(center(i, j)) {
                    g.add_edge(source, n, 0.0);
                }
            }
        }
    }
    for (&(i, j), &a) in &node {
        let (i, j) = (i as isize, j as isize);
        // each undirected edge once: right, up, up-right, up-left
        for (di, dj) in [(1, 0), (0, 1), (1, 1), (-1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if !free(ni, nj) {
                continue;
            }
            let diagonal = di != 0 && dj != 0;
            if diagonal && !(free(i + di, j) && free(i, j + dj)) {
                continue;
            }
            let w = if diagonal { 2f64.sqrt() * h } else { h };
            g.add_edge(a, node[&(ni as usize, nj as usize)], w);
        }
    }
    let dist = dijkstra(&g, source, None, |e| *e.weight());
    let mut out = vec![None; nx * ny];
    for (&(i, j), n) in &node {
        out[j * nx + i] = dist.get(n).copied();
    }
    (nx, ny, out)
}

pub fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let h = [0.1, 0.2, 0.25][rng.random_range(0..3)];
    let nx = rng.random_range(10..=50usize);
    let ny = rng.random_range(10..=50usize);
    let (w, t) = (nx as f64 * h, ny as f64 * h);
    let band = 2.0 * h;
    let mut obstacles = Vec::new();
    for _ in 0..rng.random_range(0..6) {
        let x0 = rng.random_range(band..w - band);
        let y0 = rng.random_range(band..t - 2.0 * band);
        let x1 = (x0 + rng.random_range(0.1..w / 2.0)).min(w - band);
        let y1 = (y0 + rng.random_range(0.1..t / 2.0)).min(t - band);
        obstacles.push(Rect::new(x0, y0, x1, y1));
    }
    Scenario {
        walkable_bounds: Rect::new(0.0, 0.0, w, t),
        obstacles,
        origin: Rect::new(0.0, 0.0, w, band),
        destinations: [
            Rect::new(0.0, t - band, band, t),
            Rect::new(w / 3.0, t - band, 2.0 * w / 3.0, t),
            Rect::new(w - band, t / 2.0, w, t),
        ],
        grid_resolution_ff: h,
    }
}

/// Largest |field − oracle| over all cells, `+∞` if they disagree on
/// reachability; `None` when the scenario is disconnected.
pub fn max_deviation(s: &Scenario, dest: usize) -> Option<f64> {
    let field = match build_floor_field(s, dest) {
        Ok(f) => f,
        Err(Error::DisconnectedScenario(_)) => return None,
        Err(e) => panic!("unexpected error {e}"),
    };
    let (nx, ny, expected) = oracle(s, dest);
    assert_eq!((field.nx, field.ny), (nx, ny));
    let mut worst = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            let got = field.at(i, j);
            worst = worst.max(match expected[j * nx + i] {
                Some(d) => (got - d).abs(),
                None if got.is_infinite() => 0.0,
                None => f64::INFINITY,
            });
        }
    }
    Some(worst)
}
