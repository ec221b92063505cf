//! Recursive generation of intermediate destination areas and enumeration
//! of the route set for a destination.
//!
//! The closer neighbors of every critical region are promoted to
//! intermediate destination areas, each defining one routing alternative.
//! Recursion re-applies the procedure with the intermediate area as the
//! target, after masking everything closer to the previous target than the
//! area's front as a virtual obstacle so the new potential cannot spread
//! through already-passed space and produce shortcut approaches from the
//! back side. Virtual obstacles exist for route construction only; agents
//! in the simulation may stand on them.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::field::{compute_field, DistanceField, FieldError};
use crate::grid::{Cell, Grid, Mask};
use crate::regions::{classify, extract_regions, RegionClass};
use crate::scalar::Scalar;
use crate::scenario::{Area, AreaRole, Scenario};

/// A closer-neighbor region promoted to a waypoint. Only the front
/// (equi-distance) side is behaviorally relevant; the full band depth is
/// kept.
#[derive(Clone, Debug)]
pub struct IntermediateArea<S> {
    pub id: String,
    /// Sorted row-major; all walkable.
    pub cells: Vec<Cell>,
    /// Distance value of the front side in the field it was minted from.
    pub front_distance: S,
    /// Target of the field this area was minted from: the final destination
    /// or another intermediate area.
    pub parent_target: String,
}

/// An ordered sequence of intermediate areas ending implicitly at the final
/// destination, with the guidance field for each leg. `guidance` has one
/// more entry than `legs`; the last entry is the destination's own field.
#[derive(Clone)]
pub struct Route<S> {
    pub id: usize,
    pub legs: Vec<String>,
    pub guidance: Vec<Arc<DistanceField<S>>>,
}

impl<S> Route<S> {
    pub fn is_direct(&self) -> bool {
        self.legs.is_empty()
    }
}

/// All routes for one destination, in deterministic discovery order
/// (depth-first, critical regions by id, neighbors by id). Route 0 is
/// always the direct route.
#[derive(Clone)]
pub struct RouteSet<S> {
    pub dest_id: String,
    pub band_width: S,
    pub routes: Vec<Route<S>>,
    pub areas: Vec<IntermediateArea<S>>,
    /// Number of critical regions in the banded destination field.
    pub root_critical_count: usize,
}

#[derive(Clone, Debug)]
pub struct RouteConfig<S> {
    /// Band width d in meters; obstacles smaller than this scale do not
    /// create route alternatives.
    pub band_width: S,
    /// Recursion depth limit.
    pub max_depth: u32,
}

impl<S: Scalar> Default for RouteConfig<S> {
    fn default() -> Self {
        Self {
            band_width: S::from_f64(4.0).unwrap(),
            max_depth: 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("invalid route config: {0}")]
    InvalidConfig(String),
    #[error("no destination area {0:?}")]
    DestinationNotFound(String),
    #[error("area {0:?} is not a destination")]
    NotADestination(String),
    #[error("scenario invalid: {0:?}")]
    ScenarioInvalid(Vec<String>),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Cells strictly closer to the target of `field` than `front_distance`;
/// the set masked as a virtual obstacle when recursing from an area with
/// that front.
pub fn virtual_mask<S: Scalar>(field: &DistanceField<S>, front_distance: S) -> Mask {
    let mut mask = Grid::filled(field.width(), field.height(), false);
    for y in 0..field.height() {
        for x in 0..field.width() {
            let c = Cell::new(x, y);
            if let Some(v) = field.value(c) {
                if v < front_distance {
                    mask[c] = true;
                }
            }
        }
    }
    mask
}

struct Builder<'a, S: Scalar> {
    scenario: &'a Scenario<S>,
    cfg: &'a RouteConfig<S>,
    routes: Vec<Route<S>>,
    areas: Vec<IntermediateArea<S>>,
    root_critical_count: usize,
}

impl<'a, S: Scalar> Builder<'a, S> {
    fn expand(
        &mut self,
        field: &Arc<DistanceField<S>>,
        parent_target: &str,
        suffix_legs: &[String],
        suffix_guidance: &[Arc<DistanceField<S>>],
        mask: &Mask,
        depth: u32,
    ) -> Result<(), RouteError> {
        if depth >= self.cfg.max_depth {
            return Ok(());
        }
        let bm = field.band(self.cfg.band_width)?;
        let graph = extract_regions(&bm);
        let classes = classify(&graph);
        if depth == 0 {
            self.root_critical_count =
                classes.iter().filter(|c| **c == RegionClass::Critical).count();
        }
        for region in &graph.regions {
            if classes[region.id] != RegionClass::Critical {
                continue;
            }
            for &neighbor_id in &graph.closer[region.id] {
                let neighbor = &graph.regions[neighbor_id];
                let area = IntermediateArea {
                    id: format!("i{}", self.areas.len()),
                    cells: neighbor.cells.clone(),
                    front_distance: neighbor.front_distance,
                    parent_target: parent_target.to_string(),
                };
                let mut new_mask = mask.clone();
                new_mask.or_with(&virtual_mask(field, area.front_distance));
                let leg_field = Arc::new(compute_field(
                    self.scenario,
                    &area.id,
                    &area.cells,
                    &new_mask,
                )?);
                let mut legs = Vec::with_capacity(suffix_legs.len() + 1);
                legs.push(area.id.clone());
                legs.extend_from_slice(suffix_legs);
                let mut guidance = Vec::with_capacity(suffix_guidance.len() + 1);
                guidance.push(Arc::clone(&leg_field));
                guidance.extend_from_slice(suffix_guidance);
                self.routes.push(Route {
                    id: self.routes.len(),
                    legs: legs.clone(),
                    guidance: guidance.clone(),
                });
                let area_id = area.id.clone();
                self.areas.push(area);
                self.expand(&leg_field, &area_id, &legs, &guidance, &new_mask, depth + 1)?;
            }
        }
        Ok(())
    }
}

/// Enumerate the route set for `dest_id`. The direct route (no legs) is
/// always present; duplicate or geometrically overlapping routes are
/// retained.
pub fn build_routes<S: Scalar>(
    scenario: &Scenario<S>,
    dest_id: &str,
    cfg: &RouteConfig<S>,
) -> Result<RouteSet<S>, RouteError> {
    if !(cfg.band_width > S::zero()) {
        return Err(RouteError::InvalidConfig("band width must be positive".into()));
    }
    if cfg.max_depth < 1 {
        return Err(RouteError::InvalidConfig("max depth must be at least 1".into()));
    }
    let dest = scenario
        .area(dest_id)
        .ok_or_else(|| RouteError::DestinationNotFound(dest_id.to_string()))?;
    if dest.role != AreaRole::Destination {
        return Err(RouteError::NotADestination(dest_id.to_string()));
    }
    let violations = scenario.validate();
    if !violations.is_empty() {
        return Err(RouteError::ScenarioInvalid(violations));
    }

    let empty_mask: Mask = Grid::filled(scenario.width(), scenario.height(), false);
    let dest_field = Arc::new(compute_field(scenario, dest_id, &dest.cells, &empty_mask)?);
    let mut builder = Builder {
        scenario,
        cfg,
        routes: vec![Route {
            id: 0,
            legs: Vec::new(),
            guidance: vec![Arc::clone(&dest_field)],
        }],
        areas: Vec::new(),
        root_critical_count: 0,
    };
    builder.expand(&dest_field, dest_id, &[], &[Arc::clone(&dest_field)], &empty_mask, 0)?;
    Ok(RouteSet {
        dest_id: dest_id.to_string(),
        band_width: cfg.band_width,
        routes: builder.routes,
        areas: builder.areas,
        root_critical_count: builder.root_critical_count,
    })
}

impl<S: Scalar> RouteSet<S> {
    pub fn area(&self, id: &str) -> Option<&IntermediateArea<S>> {
        self.areas.iter().find(|a| a.id == id)
    }

    /// The unmasked destination field (guidance of the direct route).
    pub fn dest_field(&self) -> &Arc<DistanceField<S>> {
        self.routes[0]
            .guidance
            .last()
            .expect("direct route carries the destination field")
    }

    /// Serialize routes and areas to JSON for external consumers.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct RouteDoc<'a> {
            id: usize,
            legs: &'a [String],
        }
        #[derive(Serialize)]
        struct AreaDoc<'a> {
            id: &'a str,
            parent_target: &'a str,
            front_distance_m: f64,
            cells: Vec<[u32; 2]>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            destination: &'a str,
            band_width_m: f64,
            routes: Vec<RouteDoc<'a>>,
            areas: Vec<AreaDoc<'a>>,
        }
        let doc = Doc {
            destination: &self.dest_id,
            band_width_m: self.band_width.to_f64().unwrap(),
            routes: self
                .routes
                .iter()
                .map(|r| RouteDoc { id: r.id, legs: &r.legs })
                .collect(),
            areas: self
                .areas
                .iter()
                .map(|a| AreaDoc {
                    id: &a.id,
                    parent_target: &a.parent_target,
                    front_distance_m: a.front_distance.to_f64().unwrap(),
                    cells: a.cells.iter().map(|c| [c.x, c.y]).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("route set serializes")
    }
}

/// Drop routes a pedestrian starting on `origin` cannot realistically use:
/// a route with first leg `I`, minted from parent field `F`, is kept only
/// if every origin cell has `F(cell) >= front_distance(I)` (otherwise some
/// origin positions would approach the area from the back side). Routes
/// whose first-leg guidance or parent field is unreachable from an origin
/// cell are dropped with a warning. The direct route is always kept. Route
/// ids are preserved.
pub fn filter_routes_for_origin<S: Scalar>(
    rs: &RouteSet<S>,
    origin: &Area,
) -> (RouteSet<S>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for route in &rs.routes {
        if route.is_direct() {
            kept.push(route.clone());
            continue;
        }
        let first_leg = rs
            .area(&route.legs[0])
            .expect("route legs reference minted areas");
        let parent_field = &route.guidance[1];
        let leg_field = &route.guidance[0];
        let mut keep = true;
        for &o in &origin.cells {
            let Some(parent_value) = parent_field.value(o) else {
                warnings.push(format!(
                    "route {}: origin {:?} unreachable in field toward {:?}; route dropped",
                    route.id,
                    origin.id,
                    parent_field.target_id()
                ));
                keep = false;
                break;
            };
            if leg_field.value(o).is_none() {
                warnings.push(format!(
                    "route {}: origin {:?} unreachable in field toward {:?}; route dropped",
                    route.id,
                    origin.id,
                    leg_field.target_id()
                ));
                keep = false;
                break;
            }
            if parent_value < first_leg.front_distance {
                keep = false;
                break;
            }
        }
        if keep {
            kept.push(route.clone());
        }
    }
    (
        RouteSet {
            dest_id: rs.dest_id.clone(),
            band_width: rs.band_width,
            routes: kept,
            areas: rs.areas.clone(),
            root_critical_count: rs.root_critical_count,
        },
        warnings,
    )
}
