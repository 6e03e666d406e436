//! Uniform-grid spatial hash for radius-bounded nearest point queries.

use rustc_hash::FxHashMap;

use crate::geometry::{dist2, Point};
use crate::scalar::Real;

pub type Cell = [i64; 3];

#[derive(Debug, Clone)]
pub struct SpatialHash<T> {
    dim: usize,
    cell: T,
    origin: Point<T>,
    buckets: FxHashMap<Cell, Vec<Point<T>>>,
}

impl<T: Real> SpatialHash<T> {
    pub fn new(dim: usize, cell: T, origin: Point<T>) -> Self {
        assert!(cell > T::zero(), "cell size must be positive");
        Self {
            dim,
            cell,
            origin,
            buckets: FxHashMap::default(),
        }
    }

    pub fn from_points(dim: usize, cell: T, origin: Point<T>, points: &[Point<T>]) -> Self {
        let mut h = Self::new(dim, cell, origin);
        for p in points {
            h.insert(*p);
        }
        h
    }

    #[inline]
    pub fn cell_of(&self, p: &Point<T>) -> Cell {
        let mut c = [0i64; 3];
        for (i, ci) in c.iter_mut().enumerate().take(self.dim) {
            *ci = ((p[i] - self.origin[i]) / self.cell)
                .floor()
                .to_i64()
                .unwrap_or(i64::MAX);
        }
        c
    }

    pub fn insert(&mut self, p: Point<T>) {
        let c = self.cell_of(&p);
        self.buckets.entry(c).or_default().push(p);
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn cell_size(&self) -> T {
        self.cell
    }

    pub fn origin(&self) -> Point<T> {
        self.origin
    }

    pub fn bucket(&self, cell: &Cell) -> Option<&[Point<T>]> {
        self.buckets.get(cell).map(Vec::as_slice)
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = &Cell> {
        self.buckets.keys()
    }

    /// Offsets to the cell and its immediate neighbours.
    pub fn neighbour_offsets(&self) -> Vec<Cell> {
        let zr = if self.dim == 3 { -1..=1 } else { 0..=0 };
        let mut out = Vec::with_capacity(27);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in zr.clone() {
                    out.push([dx, dy, dz]);
                }
            }
        }
        out
    }

    /// Squared distance from `q` to the nearest stored point, if one lies
    /// within `radius`.
    pub fn nearest_within(&self, q: &Point<T>, radius: T) -> Option<T> {
        let reach = (radius / self.cell).ceil().to_i64().unwrap_or(0).max(1);
        let c = self.cell_of(q);
        let r2 = radius * radius;
        let mut best: Option<T> = None;
        let zr = if self.dim == 3 { -reach..=reach } else { 0..=0 };
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in zr.clone() {
                    let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if let Some(bucket) = self.buckets.get(&key) {
                        for p in bucket {
                            let d = dist2(p, q);
                            if d <= r2 && best.is_none_or(|b| d < b) {
                                best = Some(d);
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// True when some stored point lies within `radius` of `q`, checking only
    /// the adjacent cells. Valid for `radius <= cell size`.
    #[inline]
    pub fn any_within_adjacent(&self, q: &Point<T>, radius: T, offsets: &[Cell]) -> bool {
        let c = self.cell_of(q);
        let r2 = radius * radius;
        offsets.iter().any(|o| {
            self.buckets
                .get(&[c[0] + o[0], c[1] + o[1], c[2] + o[2]])
                .is_some_and(|b| b.iter().any(|p| dist2(p, q) <= r2))
        })
    }
}
