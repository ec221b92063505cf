//! Shared test support: independent distance oracles and the bundled
//! example geometries.

pub mod maps;
pub mod oracle;

use wayfield_core::{Cell, DistanceField, RouteSet, Scalar};

/// Integrate one route's full multi-leg trajectory from `start_m`,
/// following each leg's guidance until its area is entered. Returns the
/// polyline in meters and whether the destination field was reached.
pub fn trace_route<S: Scalar>(
    rs: &RouteSet<S>,
    route_index: usize,
    start_m: [f64; 2],
) -> (Vec<[f64; 2]>, bool) {
    let route = &rs.routes[route_index];
    let mut pos = [
        S::from_f64(start_m[0]).unwrap(),
        S::from_f64(start_m[1]).unwrap(),
    ];
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut ok = true;
    for field in &route.guidance {
        let step = field.cell_size() * S::from_f64(0.4).unwrap();
        let walk = wayfield_core::field::descend(field, pos, step, 400_000);
        points.extend(
            walk.points
                .iter()
                .map(|p| [p[0].to_f64().unwrap(), p[1].to_f64().unwrap()]),
        );
        if !walk.reached {
            ok = false;
            break;
        }
        pos = *walk.points.last().unwrap();
    }
    (points, ok)
}

/// Maximum pointwise deviation (meters) of path `a` from path `b`,
/// measured as the distance from each point of `a` to the nearest point of
/// `b`.
pub fn max_deviation(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Free-flow travel time of a route for a single agent at 1 m/s, from the
/// origin-area centroid; `None` when the trace fails.
pub fn free_flow_time<S: Scalar>(rs: &RouteSet<S>, route_index: usize, start_m: [f64; 2]) -> Option<f64> {
    let (points, ok) = trace_route(rs, route_index, start_m);
    if !ok {
        return None;
    }
    let mut len = 0.0;
    for w in points.windows(2) {
        len += ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt();
    }
    Some(len)
}

/// Centroid of an area in meters.
pub fn centroid(cells: &[Cell], cell_size: f64) -> [f64; 2] {
    let n = cells.len().max(1) as f64;
    [
        cells.iter().map(|c| c.x as f64 + 0.5).sum::<f64>() / n * cell_size,
        cells.iter().map(|c| c.y as f64 + 0.5).sum::<f64>() / n * cell_size,
    ]
}

/// Worst relative disagreement between a field and an oracle grid over
/// cells whose oracle distance is at least `floor_m`.
pub fn max_relative_error<S: Scalar>(
    field: &DistanceField<S>,
    oracle: &wayfield_core::Grid<Option<f64>>,
    floor_m: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..field.height() {
        for x in 0..field.width() {
            let c = Cell::new(x, y);
            if let (Some(f), Some(o)) = (field.value(c), oracle[c]) {
                if o >= floor_m {
                    worst = worst.max((f.to_f64().unwrap() - o).abs() / o);
                }
            }
        }
    }
    worst
}
