//! Rectangular cell grid primitives shared by all modules.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

/// Grid coordinates of a cell. `x` is the column, `y` the row; row 0 is the
/// top of the map.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub y: u32,
    pub x: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Center of the cell in meters for a given cell size.
    pub fn center_m(self, cell_size: f64) -> [f64; 2] {
        [
            (self.x as f64 + 0.5) * cell_size,
            (self.y as f64 + 0.5) * cell_size,
        ]
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Dense rectangular storage indexed by [`Cell`], row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Grid<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid({}x{})", self.width, self.height)
    }
}

/// Boolean grid used for obstacle and virtual-obstacle masks.
pub type Mask = Grid<bool>;

impl<T: Clone> Grid<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; (width as usize) * (height as usize)],
        }
    }
}

impl<T> Grid<T> {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height
    }

    #[inline]
    fn idx(&self, c: Cell) -> usize {
        debug_assert!(c.x < self.width && c.y < self.height, "cell {c:?} out of bounds");
        (c.y as usize) * (self.width as usize) + (c.x as usize)
    }

    pub fn get(&self, x: i64, y: i64) -> Option<&T> {
        if self.in_bounds(x, y) {
            Some(&self.data[(y as usize) * (self.width as usize) + (x as usize)])
        } else {
            None
        }
    }

    /// Row-major iterator over all cells.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        (0..self.height).flat_map(move |y| (0..w).map(move |x| Cell::new(x, y)))
    }

    /// 4-neighbors inside the grid, in (−x, +x, −y, +y) order.
    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        OFFS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (c.x as i64 + dx, c.y as i64 + dy);
            self.in_bounds(nx, ny)
                .then(|| Cell::new(nx as u32, ny as u32))
        })
    }

    /// 8-neighbors inside the grid, row-major order.
    pub fn neighbors8(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        const OFFS: [(i64, i64); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        OFFS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (c.x as i64 + dx, c.y as i64 + dy);
            self.in_bounds(nx, ny)
                .then(|| Cell::new(nx as u32, ny as u32))
        })
    }
}

impl<T> Index<Cell> for Grid<T> {
    type Output = T;

    fn index(&self, c: Cell) -> &T {
        &self.data[self.idx(c)]
    }
}

impl<T> IndexMut<Cell> for Grid<T> {
    fn index_mut(&mut self, c: Cell) -> &mut T {
        let i = self.idx(c);
        &mut self.data[i]
    }
}

impl Mask {
    /// Union in place.
    pub fn or_with(&mut self, other: &Mask) {
        debug_assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a |= *b;
        }
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}
