//! Extracts the finitely many relevant walking routes from a rasterized 2D
//! pedestrian geometry and computes a user-equilibrium route split over them
//! by iterated microsimulation.
//!
//! The pipeline:
//!
//! 1. [`scenario`] parses and validates the gridded walking geometry.
//! 2. [`field`] computes geodesic distance fields (static potentials) to a
//!    target cell set with a Fast Marching solver, and banded "modulo" views
//!    of them.
//! 3. [`regions`] decomposes a banded field into connected regions and
//!    classifies them; *critical* regions are the spots where a route choice
//!    is made.
//! 4. [`routes`] recursively promotes the closer neighbors of critical
//!    regions to intermediate destination areas, masking already-passed
//!    space as virtual obstacles, and enumerates the route set.
//! 5. [`sim`] runs a time-stepped microsimulation of agents following the
//!    per-leg guidance fields with density-dependent speed.
//! 6. [`assign`] iterates simulation and probability shifts until the route
//!    split satisfies the user-equilibrium stopping rules.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`]
//! (`f32` or `f64`); concrete aliases live at the crate root.

pub mod assign;
pub mod field;
pub mod grid;
pub mod regions;
pub mod render;
pub mod routes;
pub mod scalar;
pub mod scenario;
pub mod sim;

pub use grid::{Cell, Grid, Mask};
pub use scalar::Scalar;

pub use assign::{run_assignment, AssignParams, AssignmentHistory, IterationRecord, StopReason};
pub use field::{compute_field, BandMap, DistanceField};
pub use regions::{classify, extract_regions, Region, RegionClass, RegionGraph};
pub use routes::{
    build_routes, filter_routes_for_origin, virtual_mask, IntermediateArea, Route, RouteConfig,
    RouteSet,
};
pub use scenario::{Area, AreaRole, CellKind, Scenario, ScenarioBuilder};
pub use sim::{run_simulation, spawn_schedule, SimParams, SimResult};

/// Single-precision aliases.
pub type Scenario32 = Scenario<f32>;
pub type DistanceField32 = DistanceField<f32>;
pub type BandMap32 = BandMap<f32>;
pub type RouteSet32 = RouteSet<f32>;
pub type SimParams32 = SimParams<f32>;
pub type SimResult32 = SimResult<f32>;
pub type AssignParams32 = AssignParams<f32>;

/// Double-precision aliases (what the CLI uses).
pub type Scenario64 = Scenario<f64>;
pub type DistanceField64 = DistanceField<f64>;
pub type BandMap64 = BandMap<f64>;
pub type RouteSet64 = RouteSet<f64>;
pub type SimParams64 = SimParams<f64>;
pub type SimResult64 = SimResult<f64>;
pub type AssignParams64 = AssignParams<f64>;
