//! The bundled example geometries, built programmatically so tests and the
//! shipped scenario files cannot drift apart.
//!
//! All coordinates below are meters; the builders convert to cells.

use wayfield_core::{AreaRole, Scenario, ScenarioBuilder};

/// Meter-coordinate facade over [`ScenarioBuilder`].
pub struct MeterMap {
    cell: f64,
    pub builder: ScenarioBuilder,
}

impl MeterMap {
    pub fn new(width_m: f64, height_m: f64, cell: f64) -> Self {
        let w = (width_m / cell).round() as u32;
        let h = (height_m / cell).round() as u32;
        Self { cell, builder: ScenarioBuilder::new(w, h, cell) }
    }

    fn c(&self, v: f64) -> u32 {
        (v / self.cell).round() as u32
    }

    pub fn obstacle(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) -> &mut Self {
        let (x0, y0, x1, y1) = (self.c(x0), self.c(y0), self.c(x1), self.c(y1));
        self.builder.obstacle_rect(x0, y0, x1, y1);
        self
    }

    pub fn clear(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) -> &mut Self {
        let (x0, y0, x1, y1) = (self.c(x0), self.c(y0), self.c(x1), self.c(y1));
        self.builder.clear_rect(x0, y0, x1, y1);
        self
    }

    pub fn area(&mut self, ch: char, role: AreaRole, x0: f64, y0: f64, x1: f64, y1: f64) -> &mut Self {
        let (x0, y0, x1, y1) = (self.c(x0), self.c(y0), self.c(x1), self.c(y1));
        self.builder.area_rect(ch, role, x0, y0, x1, y1);
        self
    }

    pub fn scenario(&self) -> Scenario<f64> {
        self.builder.build().expect("map builds")
    }

    pub fn json(&self) -> String {
        self.builder.to_json()
    }
}

/// Open room with a single obstacle between origin (top) and destination
/// (bottom); the minimal geometry where intermediate destinations matter.
pub fn fig2() -> MeterMap {
    let mut m = MeterMap::new(20.0, 30.0, 0.15);
    m.obstacle(7.0, 13.0, 13.0, 17.0)
        .area('a', AreaRole::Origin, 6.0, 0.3, 14.0, 1.2)
        .area('d', AreaRole::Destination, 6.0, 28.8, 14.0, 29.7);
    m
}

/// Two origins on the left, destination on the right, and a slanted
/// obstacle whose shadow makes rectangular intermediate areas fail.
pub fn fig3() -> MeterMap {
    let mut m = MeterMap::new(30.0, 20.0, 0.15);
    // Staircase of blocks approximating a slanted wall.
    for i in 0..5 {
        let x0 = 12.0 + i as f64 * 1.2;
        let y0 = 3.0 + i as f64 * 2.4;
        m.obstacle(x0, y0, x0 + 3.0, y0 + 3.6);
    }
    m.area('a', AreaRole::Origin, 0.3, 1.5, 1.2, 5.5)
        .area('b', AreaRole::Origin, 0.3, 14.5, 1.2, 18.5)
        .area('d', AreaRole::Destination, 28.8, 4.0, 29.7, 16.0);
    m
}

/// One rectangular obstacle in a room, origin left, destination right: the
/// reference geometry for band classification. A suitable band width finds
/// exactly one critical region (the merge zone behind the obstacle); an
/// oversized one finds none.
pub fn fig7() -> MeterMap {
    let mut m = MeterMap::new(40.0, 24.0, 0.15);
    m.obstacle(18.0, 8.0, 24.0, 16.0)
        .area('a', AreaRole::Origin, 0.3, 0.3, 1.2, 23.7)
        .area('d', AreaRole::Destination, 38.8, 0.3, 39.7, 23.7);
    m
}

pub const FIG7_BAND_WIDTH: f64 = 4.0;
pub const FIG7_OVERSIZED_BAND_WIDTH: f64 = 18.0;

/// Two obstacles in series between origin (top) and destination (bottom).
/// Recursion from the downstream intermediate areas rediscovers the
/// upstream obstacle, giving nine routes.
pub fn fig8() -> MeterMap {
    let mut m = MeterMap::new(30.0, 60.0, 0.15);
    m.obstacle(11.0, 38.0, 19.0, 44.0)
        .obstacle(11.0, 16.0, 19.0, 22.0)
        .area('a', AreaRole::Origin, 10.0, 0.3, 20.0, 1.2)
        .area('d', AreaRole::Destination, 10.0, 58.8, 20.0, 59.7);
    m
}

pub const FIG8_BAND_WIDTH: f64 = 4.0;

/// Corridor-network parameters shared by the nested-choice geometry and
/// the assignment example. One straight corridor west-to-east; a north
/// riser climbs through the first arc level to an optional second one;
/// a south arc hangs below; all arcs rejoin the corridor further east.
pub struct ThetaParams {
    pub with_second_north_arc: bool,
    pub with_bottlenecks: bool,
    /// x where the first north arc drops back into the corridor.
    pub north1_rejoin_x: f64,
}

pub const CORRIDOR_Y: (f64, f64) = (15.0, 19.0);
pub const ARC1_Y: (f64, f64) = (9.5, 13.5);
pub const ARC2_Y: (f64, f64) = (4.0, 8.0);
pub const SOUTH_Y: (f64, f64) = (20.5, 24.5);

pub fn theta(p: &ThetaParams) -> MeterMap {
    let mut m = MeterMap::new(106.0, 26.0, 0.25);
    // Carve by filling everything and clearing corridors.
    m.obstacle(0.0, 0.0, 106.0, 26.0);
    // Mid corridor.
    m.clear(1.5, CORRIDOR_Y.0, 104.5, CORRIDOR_Y.1);
    // North riser at x 23..27: corridor up to the top arc level.
    let arc2_top = if p.with_second_north_arc { ARC2_Y.0 } else { ARC1_Y.0 };
    m.clear(23.0, arc2_top, 27.0, CORRIDOR_Y.0);
    // First north arc: east from the riser, dropping back at north1_rejoin_x.
    m.clear(23.0, ARC1_Y.0, p.north1_rejoin_x + 4.0, ARC1_Y.1);
    m.clear(p.north1_rejoin_x, ARC1_Y.0, p.north1_rejoin_x + 4.0, CORRIDOR_Y.0);
    if p.with_second_north_arc {
        // Second north arc above the first, rejoining far east.
        m.clear(23.0, ARC2_Y.0, 92.0, ARC2_Y.1);
        m.clear(88.0, ARC2_Y.0, 92.0, CORRIDOR_Y.0);
    }
    // South arc: down at x 40.5..44.5, east, and back up at 82.5..86.5.
    m.clear(40.5, CORRIDOR_Y.1, 44.5, SOUTH_Y.1);
    m.clear(40.5, SOUTH_Y.0, 86.5, SOUTH_Y.1);
    m.clear(82.5, CORRIDOR_Y.1, 86.5, SOUTH_Y.1);
    if p.with_bottlenecks {
        // Two 2 m necks on the straight connection.
        m.obstacle(32.0, CORRIDOR_Y.0, 34.0, CORRIDOR_Y.0 + 1.0);
        m.obstacle(32.0, CORRIDOR_Y.1 - 1.0, 34.0, CORRIDOR_Y.1);
        m.obstacle(58.0, CORRIDOR_Y.0, 60.0, CORRIDOR_Y.0 + 1.0);
        m.obstacle(58.0, CORRIDOR_Y.1 - 1.0, 60.0, CORRIDOR_Y.1);
    }
    m.area('a', AreaRole::Origin, 1.5, CORRIDOR_Y.0, 3.0, CORRIDOR_Y.1)
        .area('d', AreaRole::Destination, 103.0, CORRIDOR_Y.0, 104.5, CORRIDOR_Y.1);
    m
}

/// Nested-choice geometry: one north arc rejoining west of the south
/// junction, no bottlenecks.
pub fn fig10() -> MeterMap {
    theta(&ThetaParams {
        with_second_north_arc: false,
        with_bottlenecks: true && false,
        north1_rejoin_x: 46.0,
    })
}

/// Assignment example geometry: both north arcs, bottlenecks, first north
/// arc rejoining east of the south junction.
pub fn fig11() -> MeterMap {
    theta(&ThetaParams {
        with_second_north_arc: true,
        with_bottlenecks: true,
        north1_rejoin_x: 72.5,
    })
}

pub const THETA_BAND_WIDTH: f64 = 16.0;

/// Two mirror-identical corridors around a long slab: the symmetry fixed
/// point for the assignment loop.
pub fn twin_corridors() -> MeterMap {
    let mut m = MeterMap::new(44.0, 12.0, 0.15);
    m.obstacle(10.0, 4.5, 34.0, 7.5)
        .area('a', AreaRole::Origin, 0.45, 0.45, 1.35, 11.55)
        .area('d', AreaRole::Destination, 42.6, 0.45, 43.5, 11.55);
    m
}

pub const TWIN_BAND_WIDTH: f64 = 4.0;

/// All bundled maps by file stem.
pub fn all() -> Vec<(&'static str, MeterMap)> {
    vec![
        ("fig2", fig2()),
        ("fig3", fig3()),
        ("fig7", fig7()),
        ("fig8", fig8()),
        ("fig10", fig10()),
        ("fig11", fig11()),
        ("twin_corridors", twin_corridors()),
    ]
}
