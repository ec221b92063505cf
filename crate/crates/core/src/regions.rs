//! Connected regions of a banded distance field, their adjacency across
//! consecutive bands, and the classification that locates route choices.

use std::collections::VecDeque;

use crate::field::BandMap;
use crate::grid::{Cell, Grid};
use crate::scalar::Scalar;

/// A 4-connected set of cells sharing one band index.
#[derive(Clone, Debug)]
pub struct Region<S> {
    pub id: usize,
    pub band_index: u32,
    /// Sorted row-major.
    pub cells: Vec<Cell>,
    /// Distance value of the region's equi-distance front side,
    /// `band_index * d`.
    pub front_distance: S,
}

/// How a region participates in route choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionClass {
    /// Exactly one closer neighbor and alone in its band.
    Simple,
    /// Shares its band with at least one other region but is not critical.
    SplitSibling,
    /// Two or more distinct closer neighbors: the locus of a route choice.
    Critical,
}

/// All regions of a band map plus the closer-neighbor adjacency, which only
/// links bands k and k-1.
#[derive(Clone)]
pub struct RegionGraph<S> {
    pub regions: Vec<Region<S>>,
    /// For each region id, the sorted ids of adjacent regions one band
    /// closer to the target.
    pub closer: Vec<Vec<usize>>,
    labels: Grid<Option<u32>>,
}

impl<S> RegionGraph<S> {
    /// Region id covering a cell, if the cell is reachable.
    pub fn label(&self, c: Cell) -> Option<usize> {
        self.labels[c].map(|l| l as usize)
    }

    /// Number of regions sharing the given band index.
    pub fn band_population(&self, band_index: u32) -> usize {
        self.regions.iter().filter(|r| r.band_index == band_index).count()
    }
}

/// Decompose a band map into 4-connected equal-band regions with
/// deterministic ids: ordered by band index, then by smallest cell in
/// row-major order.
pub fn extract_regions<S: Scalar>(bm: &BandMap<S>) -> RegionGraph<S> {
    let (w, h) = (bm.indices.width(), bm.indices.height());
    let mut labels: Grid<Option<u32>> = Grid::filled(w, h, None);
    // (band, first row-major cell, cells) per discovered component.
    let mut comps: Vec<(u32, Cell, Vec<Cell>)> = Vec::new();
    for c in bm.indices.cells() {
        let Some(band) = bm.indices[c] else { continue };
        if labels[c].is_some() {
            continue;
        }
        let id = comps.len() as u32;
        let mut cells = vec![c];
        labels[c] = Some(id);
        let mut queue = VecDeque::from([c]);
        while let Some(cur) = queue.pop_front() {
            for n in bm.indices.neighbors4(cur) {
                if labels[n].is_none() && bm.indices[n] == Some(band) {
                    labels[n] = Some(id);
                    cells.push(n);
                    queue.push_back(n);
                }
            }
        }
        comps.push((band, c, cells));
    }

    // Reorder by (band, first cell); remap labels accordingly.
    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by_key(|&i| (comps[i].0, comps[i].1));
    let mut remap = vec![0u32; comps.len()];
    for (new_id, &old_id) in order.iter().enumerate() {
        remap[old_id] = new_id as u32;
    }
    for c in bm.indices.cells() {
        if let Some(l) = labels[c] {
            labels[c] = Some(remap[l as usize]);
        }
    }
    let mut regions: Vec<Region<S>> = order
        .iter()
        .enumerate()
        .map(|(new_id, &old_id)| {
            let (band, _, ref cells) = comps[old_id];
            let mut cells = cells.clone();
            cells.sort();
            Region {
                id: new_id,
                band_index: band,
                cells,
                front_distance: S::from_u32(band).unwrap() * bm.band_width,
            }
        })
        .collect();
    regions.sort_by_key(|r| r.id);

    // Closer adjacency from shared cell edges between bands k and k-1.
    let mut closer: Vec<Vec<usize>> = vec![Vec::new(); regions.len()];
    let push_edge = |hi: usize, lo: usize, closer: &mut Vec<Vec<usize>>| {
        if !closer[hi].contains(&lo) {
            closer[hi].push(lo);
        }
    };
    for c in bm.indices.cells() {
        let Some(band) = bm.indices[c] else { continue };
        let la = labels[c].unwrap() as usize;
        for n in [(c.x as i64 + 1, c.y as i64), (c.x as i64, c.y as i64 + 1)] {
            if !bm.indices.in_bounds(n.0, n.1) {
                continue;
            }
            let nc = Cell::new(n.0 as u32, n.1 as u32);
            let Some(nband) = bm.indices[nc] else { continue };
            let lb = labels[nc].unwrap() as usize;
            if nband + 1 == band {
                push_edge(la, lb, &mut closer);
            } else if band + 1 == nband {
                push_edge(lb, la, &mut closer);
            }
        }
    }
    for list in &mut closer {
        list.sort_unstable();
    }
    RegionGraph { regions, closer, labels }
}

/// Classify every region. Critical detection uses only the closer-neighbor
/// count.
pub fn classify<S: Scalar>(g: &RegionGraph<S>) -> Vec<RegionClass> {
    g.regions
        .iter()
        .map(|r| {
            if g.closer[r.id].len() >= 2 {
                RegionClass::Critical
            } else if g.band_population(r.band_index) >= 2 {
                RegionClass::SplitSibling
            } else {
                RegionClass::Simple
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::compute_field;
    use crate::grid::{Grid, Mask};
    use crate::scenario::{Scenario, ScenarioBuilder};
    use crate::AreaRole;

    fn corridor() -> Scenario<f64> {
        let mut b = ScenarioBuilder::new(30, 5, 1.0);
        b.area_rect('a', AreaRole::Origin, 0, 0, 1, 5)
            .area_rect('d', AreaRole::Destination, 29, 0, 30, 5);
        b.build().unwrap()
    }

    #[test]
    fn straight_corridor_is_a_simple_chain() {
        let s = corridor();
        let mask: Mask = Grid::filled(s.width(), s.height(), false);
        let f = compute_field(&s, "d", &s.area("d").unwrap().cells.clone(), &mask).unwrap();
        let bm = f.band(10.0).unwrap();
        let g = extract_regions(&bm);
        assert_eq!(g.regions.len(), 3);
        let classes = classify(&g);
        assert!(classes.iter().all(|c| *c == RegionClass::Simple), "{classes:?}");
        // Chain adjacency: band k leans on band k-1 only.
        assert_eq!(g.closer[0], Vec::<usize>::new());
        assert_eq!(g.closer[1], vec![0]);
        assert_eq!(g.closer[2], vec![1]);
    }

    #[test]
    fn ids_are_deterministic() {
        let s = corridor();
        let mask: Mask = Grid::filled(s.width(), s.height(), false);
        let f = compute_field(&s, "d", &s.area("d").unwrap().cells.clone(), &mask).unwrap();
        let bm = f.band(7.0).unwrap();
        let a = extract_regions(&bm);
        let b = extract_regions(&bm);
        assert_eq!(a.regions.len(), b.regions.len());
        for (ra, rb) in a.regions.iter().zip(&b.regions) {
            assert_eq!(ra.id, rb.id);
            assert_eq!(ra.cells, rb.cells);
        }
    }

    #[test]
    fn partition_covers_reachable_set() {
        let s = corridor();
        let mask: Mask = Grid::filled(s.width(), s.height(), false);
        let f = compute_field(&s, "d", &s.area("d").unwrap().cells.clone(), &mask).unwrap();
        let bm = f.band(4.0).unwrap();
        let g = extract_regions(&bm);
        let total: usize = g.regions.iter().map(|r| r.cells.len()).sum();
        let reachable = bm.indices.cells().filter(|&c| bm.indices[c].is_some()).count();
        assert_eq!(total, reachable);
        // Disjointness via the label grid: every reachable cell has one label.
        for c in bm.indices.cells() {
            assert_eq!(bm.indices[c].is_some(), g.label(c).is_some());
        }
    }

    #[test]
    fn band_zero_region_is_simple() {
        let s = corridor();
        let mask: Mask = Grid::filled(s.width(), s.height(), false);
        let f = compute_field(&s, "d", &s.area("d").unwrap().cells.clone(), &mask).unwrap();
        let bm = f.band(10.0).unwrap();
        let g = extract_regions(&bm);
        let classes = classify(&g);
        assert_eq!(g.regions[0].band_index, 0);
        assert!(g.closer[0].is_empty());
        assert_eq!(classes[0], RegionClass::Simple);
    }
}
