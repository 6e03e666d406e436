use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Physical point. Planar points keep the third coordinate at zero.
pub type Point<T> = [T; 3];

pub fn point2<T: Real>(x: T, y: T) -> Point<T> {
    [x, y, T::zero()]
}

#[inline]
pub fn dist2<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[inline]
pub fn dist<T: Real>(a: &Point<T>, b: &Point<T>) -> T {
    dist2(a, b).sqrt()
}

#[inline]
pub fn norm<T: Real>(a: &Point<T>) -> T {
    dist(a, &[T::zero(); 3])
}

pub fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidDimension(dim))
    }
}

/// Closed axis-aligned box `[lo, hi]` in the first `dim` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb<T> {
    pub dim: usize,
    pub lo: Point<T>,
    pub hi: Point<T>,
}

impl<T: Real> Aabb<T> {
    pub fn new(dim: usize, lo: Point<T>, hi: Point<T>) -> Result<Self> {
        check_dim(dim)?;
        for i in 0..dim {
            if !(lo[i] < hi[i]) {
                return Err(invalid("box", format!("degenerate along axis {i}")));
            }
        }
        Ok(Self { dim, lo, hi })
    }

    /// Box covering all of space.
    pub fn everything(dim: usize) -> Self {
        let inf = T::infinity();
        Self {
            dim,
            lo: [-inf; 3],
            hi: [inf; 3],
        }
    }

    /// Dyadic cube `prod [k_i / 2^n, (k_i + 1) / 2^n]`.
    pub fn dyadic(dim: usize, n: i32, k: [i64; 3]) -> Result<Self> {
        check_dim(dim)?;
        let side = T::of(2f64.powi(-n));
        let mut lo = [T::zero(); 3];
        let mut hi = [T::zero(); 3];
        for i in 0..dim {
            lo[i] = T::of(k[i] as f64) * side;
            hi[i] = lo[i] + side;
        }
        Ok(Self { dim, lo, hi })
    }

    #[inline]
    pub fn contains(&self, p: &Point<T>) -> bool {
        (0..self.dim).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn side(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> T {
        (0..self.dim).fold(T::one(), |v, i| v * self.side(i))
    }

    pub fn surface_area(&self) -> T {
        if self.dim == 2 {
            (self.side(0) + self.side(1)) * T::of(2.0)
        } else {
            let (a, b, c) = (self.side(0), self.side(1), self.side(2));
            (a * b + b * c + a * c) * T::of(2.0)
        }
    }

    /// The `2^dim` children obtained by halving every side.
    pub fn children(&self) -> Vec<Self> {
        let mid: Vec<T> = (0..3).map(|i| (self.lo[i] + self.hi[i]) / T::of(2.0)).collect();
        (0..1usize << self.dim)
            .map(|mask| {
                let mut lo = self.lo;
                let mut hi = self.hi;
                for i in 0..self.dim {
                    if mask >> i & 1 == 0 {
                        hi[i] = mid[i];
                    } else {
                        lo[i] = mid[i];
                    }
                }
                Self { dim: self.dim, lo, hi }
            })
            .collect()
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut out = *self;
        for i in 0..3 {
            out.lo[i] = out.lo[i] * factor;
            out.hi[i] = out.hi[i] * factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_children_tile_parent() {
        let b = Aabb::<f64>::dyadic(2, 1, [1, 0, 0]).unwrap();
        assert_eq!(b.lo[0], 0.5);
        assert_eq!(b.hi[1], 0.5);
        let kids = b.children();
        assert_eq!(kids.len(), 4);
        let total: f64 = kids.iter().map(|k| k.volume()).sum();
        assert!((total - b.volume()).abs() < 1e-15);
        assert!(b.contains(&[0.5, 0.5, 0.0]));
        assert!(!b.contains(&[0.49, 0.5, 0.0]));
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(Aabb::new(2, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).is_err());
        assert!(Aabb::<f64>::new(4, [0.0; 3], [1.0; 3]).is_err());
    }
}
