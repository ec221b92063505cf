//! Geodesic distance fields (static potentials) over walkable space and
//! their negative-gradient guidance directions.
//!
//! Fields are computed with a first-order Fast Marching solver for the
//! eikonal equation at unit speed, driven by a binary-heap narrow band.
//! Cells within a small radius of the target whose straight segment to a
//! target cell is unobstructed are seeded with their exact Euclidean
//! distance, which removes the point-source error of the first-order
//! stencil; everything further away is reached by marching.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::grid::{Cell, Grid, Mask};
use crate::scalar::{fl, Scalar};
use crate::scenario::Scenario;

/// Exact-initialization radius around target cells, in cells.
const SEED_RADIUS: i64 = 8;

/// Per-cell geodesic distance in meters to a target cell set. `None` marks
/// an unreachable cell (blocked, or disconnected from the target); it is a
/// distinct state, never a sentinel number.
#[derive(Clone)]
pub struct DistanceField<S> {
    target_id: String,
    cell_size: S,
    values: Grid<Option<S>>,
    blocked: Mask,
}

/// Integer band indices `floor(value / d)` of a distance field, with
/// unreachable cells propagated.
#[derive(Clone)]
pub struct BandMap<S> {
    pub band_width: S,
    pub indices: Grid<Option<u32>>,
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("empty target set")]
    EmptyTargets,
    #[error("all target cells are blocked")]
    TargetsBlocked,
    #[error("band width must be positive")]
    NonPositiveBandWidth,
    #[error("cell {0:?} is unreachable in field toward {1:?}")]
    Unreachable(Cell, String),
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry<S> {
    dist: S,
    idx: u32,
}

impl<S: Scalar> Eq for HeapEntry<S> {}

impl<S: Scalar> PartialOrd for HeapEntry<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for HeapEntry<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist
            .partial_cmp(&other.dist)
            .expect("distances are finite")
            .then(self.idx.cmp(&other.idx))
    }
}

/// Solve the eikonal update from the upwind neighbor values along each axis.
fn eikonal_update<S: Scalar>(ax: Option<S>, ay: Option<S>, h: S) -> S {
    match (ax, ay) {
        (Some(a), None) => a + h,
        (None, Some(b)) => b + h,
        (Some(a), Some(b)) => {
            let diff = (a - b).abs();
            if diff >= h {
                a.min(b) + h
            } else {
                let two = fl::<S>(2.0);
                (a + b + (two * h * h - diff * diff).sqrt()) / two
            }
        }
        (None, None) => unreachable!("update requires at least one known neighbor"),
    }
}

/// True when the straight segment between the centers of `a` and `b`
/// crosses no blocked cell. Exact corner crossings are treated
/// conservatively: both adjacent cells must be free.
fn segment_clear(blocked: &Mask, a: Cell, b: Cell) -> bool {
    if a == b {
        return true;
    }
    let dx = b.x as f64 - a.x as f64;
    let dy = b.y as f64 - a.y as f64;
    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let mut t_max_x = if dx != 0.0 { 0.5 / dx.abs() } else { f64::INFINITY };
    let mut t_max_y = if dy != 0.0 { 0.5 / dy.abs() } else { f64::INFINITY };
    let t_delta_x = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
    let is_blocked = |x: i64, y: i64| blocked.get(x, y).copied().unwrap_or(true);
    let (mut x, mut y) = (a.x as i64, a.y as i64);
    let mut remaining = 2 * (dx.abs() as usize + dy.abs() as usize) + 4;
    loop {
        if x == b.x as i64 && y == b.y as i64 {
            return true;
        }
        if remaining == 0 {
            return true;
        }
        remaining -= 1;
        const EPS: f64 = 1e-12;
        if (t_max_x - t_max_y).abs() <= EPS {
            if is_blocked(x + step_x, y) || is_blocked(x, y + step_y) {
                return false;
            }
            x += step_x;
            y += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            x += step_x;
            t_max_x += t_delta_x;
        } else {
            y += step_y;
            t_max_y += t_delta_y;
        }
        if is_blocked(x, y) {
            return false;
        }
    }
}

/// Compute the distance field to `targets` over walkable cells, excluding
/// `blocked_extra` (virtual obstacles). Deterministic for fixed input.
pub fn compute_field<S: Scalar>(
    scenario: &Scenario<S>,
    target_id: &str,
    targets: &[Cell],
    blocked_extra: &Mask,
) -> Result<DistanceField<S>, FieldError> {
    if targets.is_empty() {
        return Err(FieldError::EmptyTargets);
    }
    let (w, h_cells) = (scenario.width(), scenario.height());
    let mut blocked = scenario.obstacle_mask();
    blocked.or_with(blocked_extra);
    let usable: Vec<Cell> = targets.iter().copied().filter(|&c| !blocked[c]).collect();
    if usable.is_empty() {
        return Err(FieldError::TargetsBlocked);
    }

    let h = scenario.cell_size();
    let mut values: Grid<Option<S>> = Grid::filled(w, h_cells, None);
    let mut known: Grid<bool> = Grid::filled(w, h_cells, false);
    let mut heap: BinaryHeap<Reverse<HeapEntry<S>>> = BinaryHeap::new();
    let cell_index = |c: Cell| c.y * w + c.x;

    for &t in &usable {
        values[t] = Some(S::zero());
        heap.push(Reverse(HeapEntry { dist: S::zero(), idx: cell_index(t) }));
    }

    // Exact Euclidean seeding near the target set.
    for &t in &usable {
        for dy in -SEED_RADIUS..=SEED_RADIUS {
            for dx in -SEED_RADIUS..=SEED_RADIUS {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (x, y) = (t.x as i64 + dx, t.y as i64 + dy);
                if !blocked.in_bounds(x, y) {
                    continue;
                }
                let c = Cell::new(x as u32, y as u32);
                if blocked[c] {
                    continue;
                }
                let r2 = (dx * dx + dy * dy) as f64;
                if r2 > (SEED_RADIUS * SEED_RADIUS) as f64 {
                    continue;
                }
                let cand = fl::<S>(r2.sqrt()) * h;
                if values[c].map_or(true, |v| cand < v) && segment_clear(&blocked, c, t) {
                    values[c] = Some(cand);
                    heap.push(Reverse(HeapEntry { dist: cand, idx: cell_index(c) }));
                }
            }
        }
    }

    while let Some(Reverse(entry)) = heap.pop() {
        let c = Cell::new(entry.idx % w, entry.idx / w);
        if known[c] || values[c] != Some(entry.dist) {
            continue;
        }
        known[c] = true;
        for n in blocked.neighbors4(c) {
            if blocked[n] || known[n] {
                continue;
            }
            let read = |x: i64, y: i64| -> Option<S> {
                if !blocked.in_bounds(x, y) {
                    return None;
                }
                let cc = Cell::new(x as u32, y as u32);
                if known[cc] {
                    values[cc]
                } else {
                    None
                }
            };
            let ax = match (read(n.x as i64 - 1, n.y as i64), read(n.x as i64 + 1, n.y as i64)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            let ay = match (read(n.x as i64, n.y as i64 - 1), read(n.x as i64, n.y as i64 + 1)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            if ax.is_none() && ay.is_none() {
                continue;
            }
            let cand = eikonal_update(ax, ay, h);
            if values[n].map_or(true, |v| cand < v) {
                values[n] = Some(cand);
                heap.push(Reverse(HeapEntry { dist: cand, idx: cell_index(n) }));
            }
        }
    }

    Ok(DistanceField {
        target_id: target_id.to_string(),
        cell_size: h,
        values,
        blocked,
    })
}

impl<S: Scalar> DistanceField<S> {
    /// Identifier of the area or cell set this field was computed for.
    pub fn target_id(&self) -> &str {
        &self.target_id
    }

    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn width(&self) -> u32 {
        self.values.width()
    }

    pub fn height(&self) -> u32 {
        self.values.height()
    }

    /// Distance in meters, or `None` when the cell is unreachable.
    pub fn value(&self, c: Cell) -> Option<S> {
        self.values[c]
    }

    pub fn is_reachable(&self, c: Cell) -> bool {
        self.values[c].is_some()
    }

    /// Blocked set the field was computed with (obstacles plus virtual
    /// obstacles).
    pub fn blocked(&self) -> &Mask {
        &self.blocked
    }

    pub fn is_target(&self, c: Cell) -> bool {
        self.values[c] == Some(S::zero())
    }

    /// Largest finite value, zero on a field with no reachable cells.
    pub fn max_value(&self) -> S {
        self.values
            .cells()
            .filter_map(|c| self.values[c])
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// Cell containing a position in meters, clamped into the grid.
    pub fn cell_at(&self, pos_m: [S; 2]) -> Cell {
        let h = self.cell_size;
        let clamp = |v: S, max: u32| -> u32 {
            let idx = (v / h).floor().to_f64().unwrap_or(0.0) as i64;
            idx.clamp(0, max as i64 - 1) as u32
        };
        Cell::new(clamp(pos_m[0], self.width()), clamp(pos_m[1], self.height()))
    }

    /// Normalized negative-gradient direction at a cell: the direction that
    /// most reduces distance to the target. Central differences where both
    /// axis neighbors are reachable, one-sided where one is not, and the
    /// direction toward the reachable neighbor of minimal value when no axis
    /// difference is usable. Target cells return the zero direction; the
    /// caller treats that as arrival.
    pub fn gradient_at(&self, c: Cell) -> Result<[S; 2], FieldError> {
        let v = self.values[c].ok_or_else(|| FieldError::Unreachable(c, self.target_id.clone()))?;
        if v == S::zero() {
            return Ok([S::zero(), S::zero()]);
        }
        let h = self.cell_size;
        let two_h = fl::<S>(2.0) * h;
        let read = |x: i64, y: i64| -> Option<S> {
            if !self.values.in_bounds(x, y) {
                return None;
            }
            self.values[Cell::new(x as u32, y as u32)]
        };
        let axis = |lo: Option<S>, hi: Option<S>| -> Option<S> {
            match (lo, hi) {
                (Some(l), Some(r)) => Some((r - l) / two_h),
                (Some(l), None) => Some((v - l) / h),
                (None, Some(r)) => Some((r - v) / h),
                (None, None) => None,
            }
        };
        let gx = axis(read(c.x as i64 - 1, c.y as i64), read(c.x as i64 + 1, c.y as i64));
        let gy = axis(read(c.x as i64, c.y as i64 - 1), read(c.x as i64, c.y as i64 + 1));
        if gx.is_some() || gy.is_some() {
            let dx = -gx.unwrap_or(S::zero());
            let dy = -gy.unwrap_or(S::zero());
            let norm = (dx * dx + dy * dy).sqrt();
            if norm > fl::<S>(1e-9) {
                return Ok([dx / norm, dy / norm]);
            }
        }
        // Flat or axis-unusable: steer toward the best 8-neighbor.
        let mut best: Option<(S, Cell)> = None;
        for n in self.values.neighbors8(c) {
            if let Some(nv) = self.values[n] {
                if nv < v && best.map_or(true, |(bv, _)| nv < bv) {
                    best = Some((nv, n));
                }
            }
        }
        match best {
            Some((_, n)) => {
                let dx = fl::<S>(n.x as f64 - c.x as f64);
                let dy = fl::<S>(n.y as f64 - c.y as f64);
                let norm = (dx * dx + dy * dy).sqrt();
                Ok([dx / norm, dy / norm])
            }
            None => Ok([S::zero(), S::zero()]),
        }
    }

    /// Band the field with width `d`: indices are `floor(value / d)`.
    pub fn band(&self, d: S) -> Result<BandMap<S>, FieldError> {
        if !(d > S::zero()) {
            return Err(FieldError::NonPositiveBandWidth);
        }
        let mut indices: Grid<Option<u32>> = Grid::filled(self.width(), self.height(), None);
        for c in self.values.cells() {
            if let Some(v) = self.values[c] {
                indices[c] = Some((v / d).floor().to_u32().unwrap_or(u32::MAX));
            }
        }
        Ok(BandMap { band_width: d, indices })
    }
}

/// Result of integrating a path along negative gradients.
pub struct DescentPath<S> {
    /// Visited positions in meters, including start and end.
    pub points: Vec<[S; 2]>,
    /// True when the walk ended on a target cell.
    pub reached: bool,
}

/// Follow the field from `start_m` by repeated small steps until a target
/// cell is reached, the walk gets stuck, or `max_steps` runs out. Steps
/// that would land on an unreachable cell are projected onto the free axis,
/// so the walk slides along walls instead of cutting into them; a walk
/// never visits a blocked cell.
pub fn descend<S: Scalar>(
    field: &DistanceField<S>,
    start_m: [S; 2],
    step_m: S,
    max_steps: usize,
) -> DescentPath<S> {
    let mut pos = start_m;
    let mut points = vec![pos];
    for _ in 0..max_steps {
        let cell = field.cell_at(pos);
        if field.is_target(cell) {
            return DescentPath { points, reached: true };
        }
        let dir = match field.gradient_at(cell) {
            Ok(d) => d,
            Err(_) => return DescentPath { points, reached: false },
        };
        if dir[0] == S::zero() && dir[1] == S::zero() {
            return DescentPath { points, reached: field.is_target(cell) };
        }
        let candidates = [
            [pos[0] + dir[0] * step_m, pos[1] + dir[1] * step_m],
            [pos[0] + dir[0] * step_m, pos[1]],
            [pos[0], pos[1] + dir[1] * step_m],
        ];
        let next = candidates
            .into_iter()
            .find(|&cand| field.is_reachable(field.cell_at(cand)) && cand != pos);
        match next {
            Some(p) => {
                pos = p;
                points.push(pos);
            }
            None => return DescentPath { points, reached: false },
        }
    }
    DescentPath { points, reached: false }
}
