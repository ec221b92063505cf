//! Walking-geometry scenarios: rasterized grids of walkable and obstacle
//! cells with named origin and destination areas.
//!
//! The on-disk format is a JSON document:
//!
//! ```json
//! {
//!   "cell_size_m": 0.15,
//!   "rows": ["....", ".#..", "...."],
//!   "legend": { "a": { "role": "origin" }, "d": { "role": "destination" } }
//! }
//! ```
//!
//! `#` marks an obstacle cell, `.` a plain walkable cell, and any legend
//! character a walkable cell belonging to that area. Row 0 is the top of the
//! map; cell (x, y) is column x of row y.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, Grid, Mask};
use crate::scalar::{fl, Scalar};

/// What occupies one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Walkable,
    Obstacle,
}

/// Whether an area sources or sinks pedestrians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaRole {
    Origin,
    Destination,
}

/// A named set of walkable cells acting as an origin or destination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Area {
    pub id: String,
    pub role: AreaRole,
    /// Sorted row-major.
    pub cells: Vec<Cell>,
}

/// A parsed walking geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<S> {
    width: u32,
    height: u32,
    cell_size: S,
    kinds: Grid<CellKind>,
    areas: Vec<Area>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario document: {0}")]
    Document(String),
    #[error("ragged rows: row {row} has width {got}, expected {want}")]
    RaggedRows { row: usize, got: usize, want: usize },
    #[error("unknown legend character {ch:?} at cell ({x}, {y})")]
    UnknownChar { ch: char, x: u32, y: u32 },
    #[error("legend entry {0:?} marks no cells")]
    EmptyArea(char),
    #[error("reserved character {0:?} used as a legend key")]
    ReservedChar(char),
    #[error("scenario has no rows")]
    Empty,
}

#[derive(Serialize, Deserialize)]
struct Document {
    cell_size_m: f64,
    rows: Vec<String>,
    legend: BTreeMap<char, LegendEntry>,
}

#[derive(Serialize, Deserialize)]
struct LegendEntry {
    role: AreaRole,
}

impl<S: Scalar> Scenario<S> {
    /// Parse a scenario from its JSON document text.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| ScenarioError::Document(e.to_string()))?;
        Self::from_document(doc)
    }

    fn from_document(doc: Document) -> Result<Self, ScenarioError> {
        if doc.rows.is_empty() {
            return Err(ScenarioError::Empty);
        }
        for key in doc.legend.keys() {
            if *key == '.' || *key == '#' {
                return Err(ScenarioError::ReservedChar(*key));
            }
        }
        let width = doc.rows[0].chars().count() as u32;
        let height = doc.rows.len() as u32;
        let mut kinds = Grid::filled(width, height, CellKind::Walkable);
        let mut area_cells: BTreeMap<char, Vec<Cell>> = BTreeMap::new();
        for (y, row) in doc.rows.iter().enumerate() {
            let row_chars: Vec<char> = row.chars().collect();
            if row_chars.len() as u32 != width {
                return Err(ScenarioError::RaggedRows {
                    row: y,
                    got: row_chars.len(),
                    want: width as usize,
                });
            }
            for (x, ch) in row_chars.into_iter().enumerate() {
                let c = Cell::new(x as u32, y as u32);
                match ch {
                    '.' => {}
                    '#' => kinds[c] = CellKind::Obstacle,
                    other => {
                        if !doc.legend.contains_key(&other) {
                            return Err(ScenarioError::UnknownChar { ch: other, x: c.x, y: c.y });
                        }
                        area_cells.entry(other).or_default().push(c);
                    }
                }
            }
        }
        for key in doc.legend.keys() {
            if !area_cells.contains_key(key) {
                return Err(ScenarioError::EmptyArea(*key));
            }
        }
        let areas = area_cells
            .into_iter()
            .map(|(ch, cells)| Area {
                id: ch.to_string(),
                role: doc.legend[&ch].role,
                cells,
            })
            .collect();
        Ok(Self {
            width,
            height,
            cell_size: fl(doc.cell_size_m),
            kinds,
            areas,
        })
    }

    /// Serialize back to the JSON document format. Parsing the result yields
    /// an identical scenario.
    pub fn to_json(&self) -> String {
        let mut rows: Vec<Vec<char>> = (0..self.height)
            .map(|y| {
                (0..self.width)
                    .map(|x| match self.kinds[Cell::new(x, y)] {
                        CellKind::Walkable => '.',
                        CellKind::Obstacle => '#',
                    })
                    .collect()
            })
            .collect();
        let mut legend = BTreeMap::new();
        for area in &self.areas {
            let ch = area.id.chars().next().expect("area id non-empty");
            legend.insert(ch, LegendEntry { role: area.role });
            for &c in &area.cells {
                rows[c.y as usize][c.x as usize] = ch;
            }
        }
        let doc = Document {
            cell_size_m: self.cell_size.to_f64().expect("cell size finite"),
            rows: rows.into_iter().map(|r| r.into_iter().collect()).collect(),
            legend,
        };
        serde_json::to_string_pretty(&doc).expect("document serializes")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Meters per cell edge.
    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn kind(&self, c: Cell) -> CellKind {
        self.kinds[c]
    }

    pub fn is_walkable(&self, c: Cell) -> bool {
        self.kinds[c] == CellKind::Walkable
    }

    /// Obstacle mask (true on obstacle cells).
    pub fn obstacle_mask(&self) -> Mask {
        let mut m = Grid::filled(self.width, self.height, false);
        for c in self.kinds.cells() {
            m[c] = self.kinds[c] == CellKind::Obstacle;
        }
        m
    }

    pub fn areas(&self) -> &[Area] {
        &self.areas
    }

    pub fn area(&self, id: &str) -> Option<&Area> {
        self.areas.iter().find(|a| a.id == id)
    }

    pub fn origins(&self) -> impl Iterator<Item = &Area> {
        self.areas.iter().filter(|a| a.role == AreaRole::Origin)
    }

    pub fn destinations(&self) -> impl Iterator<Item = &Area> {
        self.areas.iter().filter(|a| a.role == AreaRole::Destination)
    }

    /// Union of all origin-area cells, sorted row-major.
    pub fn origin_cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self.origins().flat_map(|a| a.cells.iter().copied()).collect();
        cells.sort();
        cells.dedup();
        cells
    }

    /// Check every scenario invariant; returns human-readable violations,
    /// empty when the scenario is sound. Reachability is checked by flood
    /// fill over walkable cells with 4-connectivity.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.width < 3 || self.height < 3 {
            violations.push(format!(
                "grid must be at least 3x3, got {}x{}",
                self.width, self.height
            ));
        }
        if !(self.cell_size > S::zero()) {
            violations.push(format!("cell size must be positive, got {}", self.cell_size));
        }
        if self.origins().next().is_none() {
            violations.push("no origin area".to_string());
        }
        if self.destinations().next().is_none() {
            violations.push("no destination area".to_string());
        }
        for area in &self.areas {
            if area.cells.is_empty() {
                violations.push(format!("area {:?} has no cells", area.id));
            }
            for &c in &area.cells {
                if !self.is_walkable(c) {
                    violations.push(format!("area {:?} on obstacle cell {:?}", area.id, c));
                }
            }
        }
        for origin in self.origins() {
            let reached = self.flood_fill(&origin.cells);
            for dest in self.destinations() {
                if dest.cells.iter().any(|&c| !reached[c]) {
                    violations.push(format!(
                        "unreachable destination: origin {:?} cannot reach all of {:?}",
                        origin.id, dest.id
                    ));
                }
            }
        }
        violations
    }

    fn flood_fill(&self, seeds: &[Cell]) -> Grid<bool> {
        let mut reached = Grid::filled(self.width, self.height, false);
        let mut queue: VecDeque<Cell> = VecDeque::new();
        for &c in seeds {
            if self.is_walkable(c) && !reached[c] {
                reached[c] = true;
                queue.push_back(c);
            }
        }
        while let Some(c) = queue.pop_front() {
            for n in self.kinds.neighbors4(c) {
                if self.is_walkable(n) && !reached[n] {
                    reached[n] = true;
                    queue.push_back(n);
                }
            }
        }
        reached
    }
}

/// Programmatic scenario construction; emits the same document format the
/// parser reads so built and parsed scenarios behave identically.
pub struct ScenarioBuilder {
    cell_size_m: f64,
    rows: Vec<Vec<char>>,
    legend: BTreeMap<char, AreaRole>,
}

impl ScenarioBuilder {
    /// An all-walkable grid.
    pub fn new(width: u32, height: u32, cell_size_m: f64) -> Self {
        Self {
            cell_size_m,
            rows: vec![vec!['.'; width as usize]; height as usize],
            legend: BTreeMap::new(),
        }
    }

    fn put(&mut self, x: u32, y: u32, ch: char) {
        self.rows[y as usize][x as usize] = ch;
    }

    /// Fill the half-open cell rectangle [x0, x1) x [y0, y1) with obstacle.
    pub fn obstacle_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32) -> &mut Self {
        for y in y0..y1 {
            for x in x0..x1 {
                self.put(x, y, '#');
            }
        }
        self
    }

    /// Carve the half-open cell rectangle back to plain walkable.
    pub fn clear_rect(&mut self, x0: u32, y0: u32, x1: u32, y1: u32) -> &mut Self {
        for y in y0..y1 {
            for x in x0..x1 {
                self.put(x, y, '.');
            }
        }
        self
    }

    /// Mark the half-open cell rectangle as an area with the given legend
    /// character and role.
    pub fn area_rect(&mut self, ch: char, role: AreaRole, x0: u32, y0: u32, x1: u32, y1: u32) -> &mut Self {
        self.legend.insert(ch, role);
        for y in y0..y1 {
            for x in x0..x1 {
                self.put(x, y, ch);
            }
        }
        self
    }

    /// The JSON document for this geometry.
    pub fn to_json(&self) -> String {
        let doc = Document {
            cell_size_m: self.cell_size_m,
            rows: self.rows.iter().map(|r| r.iter().collect()).collect(),
            legend: self
                .legend
                .iter()
                .map(|(&ch, &role)| (ch, LegendEntry { role }))
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("document serializes")
    }

    pub fn build<S: Scalar>(&self) -> Result<Scenario<S>, ScenarioError> {
        Scenario::parse(&self.to_json())
    }
}
