//! Independent shortest-path oracles on grid graphs, used to bound the
//! Fast Marching solution from both sides. These deliberately share no code
//! with the field solver.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use wayfield_core::{Cell, Grid, Mask};

/// 4-neighborhood moves and costs in cell units.
pub fn moves4() -> Vec<(i64, i64, f64)> {
    vec![(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)]
}

/// 16-neighborhood: axis, diagonal and knight moves. Knight and diagonal
/// moves are blocked when any cell the segment passes through is blocked.
pub fn moves16() -> Vec<(i64, i64, f64)> {
    let mut m = moves4();
    let d = std::f64::consts::SQRT_2;
    let k = 5.0f64.sqrt();
    m.extend([(1, 1, d), (1, -1, d), (-1, 1, d), (-1, -1, d)]);
    m.extend([
        (1, 2, k),
        (2, 1, k),
        (-1, 2, k),
        (-2, 1, k),
        (1, -2, k),
        (2, -1, k),
        (-1, -2, k),
        (-2, -1, k),
    ]);
    m
}

fn move_clear(blocked: &Mask, x: i64, y: i64, dx: i64, dy: i64) -> bool {
    // All intermediate cells a straight center-to-center segment touches
    // must be free (conservative for diagonal and knight moves).
    let interior: &[(i64, i64)] = match (dx.abs(), dy.abs()) {
        (0, _) | (_, 0) => &[],
        (1, 1) => {
            return blocked.get(x + dx, y).is_some_and(|b| !b)
                && blocked.get(x, y + dy).is_some_and(|b| !b);
        }
        _ => {
            // Knight move (1,2)/(2,1): passes the two cells between.
            return if dx.abs() == 1 {
                blocked.get(x, y + dy / 2).is_some_and(|b| !b)
                    && blocked.get(x + dx, y + dy / 2).is_some_and(|b| !b)
            } else {
                blocked.get(x + dx / 2, y).is_some_and(|b| !b)
                    && blocked.get(x + dx / 2, y + dy).is_some_and(|b| !b)
            };
        }
    };
    interior
        .iter()
        .all(|&(ix, iy)| blocked.get(ix, iy).is_some_and(|b| !b))
}

/// Multi-source Dijkstra over the grid graph defined by `moves` (costs in
/// cell units, scaled by `cell_size`).
pub fn dijkstra(
    blocked: &Mask,
    targets: &[Cell],
    cell_size: f64,
    moves: &[(i64, i64, f64)],
) -> Grid<Option<f64>> {
    let (w, h) = (blocked.width(), blocked.height());
    let mut dist: Grid<Option<f64>> = Grid::filled(w, h, None);
    let mut heap: BinaryHeap<Reverse<(OrderedF64, u32)>> = BinaryHeap::new();
    for &t in targets {
        if !blocked[t] {
            dist[t] = Some(0.0);
            heap.push(Reverse((OrderedF64(0.0), t.y * w + t.x)));
        }
    }
    while let Some(Reverse((OrderedF64(d), idx))) = heap.pop() {
        let c = Cell::new(idx % w, idx / w);
        if dist[c] != Some(d) {
            continue;
        }
        for &(dx, dy, cost) in moves {
            let (nx, ny) = (c.x as i64 + dx, c.y as i64 + dy);
            if !blocked.in_bounds(nx, ny) {
                continue;
            }
            let n = Cell::new(nx as u32, ny as u32);
            if blocked[n] || !move_clear(blocked, c.x as i64, c.y as i64, dx, dy) {
                continue;
            }
            let nd = d + cost * cell_size;
            if dist[n].is_none_or(|v| nd < v) {
                dist[n] = Some(nd);
                heap.push(Reverse((OrderedF64(nd), n.y * w + n.x)));
            }
        }
    }
    dist
}

#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);

impl Eq for OrderedF64 {}

#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).expect("finite distances")
    }
}
