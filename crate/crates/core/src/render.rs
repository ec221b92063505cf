//! Raster and vector renders: PGM fields, PPM region classifications, and
//! SVG route overlays.

use crate::field::{descend, DistanceField};
use crate::grid::Cell;
use crate::regions::{classify, extract_regions, RegionClass};
use crate::routes::RouteSet;
use crate::scalar::Scalar;
use crate::scenario::{AreaRole, CellKind, Scenario};

/// 8-bit binary PGM (P5) with brightness proportional to the distance
/// value; unreachable cells are 0.
pub fn field_to_pgm<S: Scalar>(field: &DistanceField<S>) -> Vec<u8> {
    let max = field.max_value().to_f64().unwrap_or(0.0).max(f64::EPSILON);
    pgm(field.width(), field.height(), |c| match field.value(c) {
        Some(v) => (v.to_f64().unwrap() / max * 255.0).round() as u8,
        None => 0,
    })
}

/// "Modulo" PGM: brightness = (value mod d) / d * 255, reproducing the
/// banded visualization of a potential.
pub fn field_mod_to_pgm<S: Scalar>(field: &DistanceField<S>, d: S) -> Vec<u8> {
    let d = d.to_f64().unwrap();
    pgm(field.width(), field.height(), |c| match field.value(c) {
        Some(v) => {
            let v = v.to_f64().unwrap();
            ((v % d) / d * 255.0).round().min(255.0) as u8
        }
        None => 0,
    })
}

fn pgm(width: u32, height: u32, mut brightness: impl FnMut(Cell) -> u8) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for y in 0..height {
        for x in 0..width {
            out.push(brightness(Cell::new(x, y)));
        }
    }
    out
}

/// Region classification colors, light/dark alternating by band parity.
pub const SIMPLE_COLORS: [[u8; 3]; 2] = [[120, 220, 220], [40, 150, 165]];
pub const SPLIT_COLORS: [[u8; 3]; 2] = [[250, 180, 90], [205, 125, 35]];
pub const CRITICAL_COLOR: [u8; 3] = [230, 60, 200];
pub const OBSTACLE_COLOR: [u8; 3] = [200, 60, 60];
pub const UNREACHABLE_COLOR: [u8; 3] = [245, 245, 245];

/// Indexed-color PPM (P6) of a banded field's region classification.
pub fn regions_to_ppm<S: Scalar>(field: &DistanceField<S>, d: S) -> Vec<u8> {
    let bm = field.band(d).expect("positive band width");
    let graph = extract_regions(&bm);
    let classes = classify(&graph);
    let (w, h) = (field.width(), field.height());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            let c = Cell::new(x, y);
            let rgb = match graph.label(c) {
                Some(id) => {
                    let region = &graph.regions[id];
                    let parity = (region.band_index % 2) as usize;
                    match classes[id] {
                        RegionClass::Critical => CRITICAL_COLOR,
                        RegionClass::SplitSibling => SPLIT_COLORS[parity],
                        RegionClass::Simple => SIMPLE_COLORS[parity],
                    }
                }
                None => {
                    if field.blocked()[c] {
                        OBSTACLE_COLOR
                    } else {
                        UNREACHABLE_COLOR
                    }
                }
            };
            out.extend_from_slice(&rgb);
        }
    }
    out
}

const ROUTE_PALETTE: [&str; 9] = [
    "#4fc3f7", "#ffd54f", "#81c784", "#e57373", "#ba68c8", "#ff8a65", "#a1887f", "#90a4ae",
    "#dce775",
];

/// SVG overlay of the walking geometry, intermediate-area outlines, and one
/// integrated trajectory per route, starting from the centroid of the first
/// origin area.
pub fn routes_to_svg<S: Scalar>(scenario: &Scenario<S>, rs: &RouteSet<S>) -> String {
    let h = scenario.cell_size().to_f64().unwrap();
    let (w_m, h_m) = (
        scenario.width() as f64 * h,
        scenario.height() as f64 * h,
    );
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w_m:.2} {h_m:.2}\" \
         width=\"{:.0}\" height=\"{:.0}\">\n",
        w_m * 8.0,
        h_m * 8.0
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w_m:.2}\" height=\"{h_m:.2}\" fill=\"#181818\"/>\n"
    ));
    // Obstacles.
    svg.push_str("<g fill=\"#b43c3c\">\n");
    for c in (0..scenario.height()).flat_map(|y| (0..scenario.width()).map(move |x| Cell::new(x, y)))
    {
        if scenario.kind(c) == CellKind::Obstacle {
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{h:.2}\" height=\"{h:.2}\"/>\n",
                c.x as f64 * h,
                c.y as f64 * h
            ));
        }
    }
    svg.push_str("</g>\n");
    // Origin and destination areas.
    for area in scenario.areas() {
        let fill = match area.role {
            AreaRole::Origin => "#d04848",
            AreaRole::Destination => "#3cb450",
        };
        svg.push_str(&format!("<g fill=\"{fill}\" opacity=\"0.8\">\n"));
        for &c in &area.cells {
            svg.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{h:.2}\" height=\"{h:.2}\"/>\n",
                c.x as f64 * h,
                c.y as f64 * h
            ));
        }
        svg.push_str("</g>\n");
    }
    // Intermediate-area outlines per route color.
    for (i, route) in rs.routes.iter().enumerate() {
        let color = ROUTE_PALETTE[i % ROUTE_PALETTE.len()];
        for leg in &route.legs {
            if let Some(area) = rs.area(leg) {
                svg.push_str(&format!("<g fill=\"{color}\" opacity=\"0.25\">\n"));
                for &c in &area.cells {
                    svg.push_str(&format!(
                        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{h:.2}\" height=\"{h:.2}\"/>\n",
                        c.x as f64 * h,
                        c.y as f64 * h
                    ));
                }
                svg.push_str("</g>\n");
            }
        }
    }
    // One trajectory per route.
    if let Some(origin) = scenario.origins().next() {
        let centroid = area_centroid(origin.cells.as_slice(), h);
        for (i, route) in rs.routes.iter().enumerate() {
            let color = ROUTE_PALETTE[i % ROUTE_PALETTE.len()];
            let pts = route_trace(rs, route.id, [centroid[0], centroid[1]]);
            if pts.len() < 2 {
                continue;
            }
            let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", p[0], p[1])).collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{:.2}\" \
                 opacity=\"0.9\"/>\n",
                path.join(" "),
                h * 1.5
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\" font-size=\"{:.2}\">{}</text>\n",
                pts[pts.len() / 2][0],
                pts[pts.len() / 2][1],
                h * 10.0,
                route.id
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn area_centroid(cells: &[Cell], cell_size: f64) -> [f64; 2] {
    let n = cells.len().max(1) as f64;
    let sx: f64 = cells.iter().map(|c| c.x as f64 + 0.5).sum();
    let sy: f64 = cells.iter().map(|c| c.y as f64 + 0.5).sum();
    [sx / n * cell_size, sy / n * cell_size]
}

/// Integrate a full multi-leg trajectory for a route in meters, following
/// each leg's guidance until the leg area is entered.
pub fn route_trace<S: Scalar>(rs: &RouteSet<S>, route_id: usize, start_m: [f64; 2]) -> Vec<[f64; 2]> {
    let Some(route) = rs.routes.iter().find(|r| r.id == route_id) else {
        return Vec::new();
    };
    let mut points: Vec<[f64; 2]> = Vec::new();
    let mut pos = [
        S::from_f64(start_m[0]).unwrap(),
        S::from_f64(start_m[1]).unwrap(),
    ];
    for field in &route.guidance {
        let step = field.cell_size() * S::from_f64(0.5).unwrap();
        let walk = descend(field, pos, step, 200_000);
        points.extend(
            walk.points
                .iter()
                .map(|p| [p[0].to_f64().unwrap(), p[1].to_f64().unwrap()]),
        );
        if !walk.reached {
            break;
        }
        pos = *walk.points.last().unwrap();
    }
    points
}
