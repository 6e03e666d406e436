//! Discrete Minkowski content of finite point sets.
//!
//! `Cont_delta(A; r) = e^{r (d - delta)} * Vol{z in V : dist(z, A) <= e^{-r}}`,
//! with the volume measured by counting grid-cell centres of the region `V`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist2, Aabb, Point};
use crate::scalar::Real;
use crate::spatial::{Cell, SpatialHash};
use crate::stats::fit_line;

/// Identifier of the dyadic cube `prod [k_i 2^-n, (k_i + 1) 2^-n]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicLabel {
    pub n: i32,
    pub k: [i64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    pub aabb: Aabb<T>,
    pub label: Option<DyadicLabel>,
}

impl<T: Real> Region<T> {
    pub fn new(aabb: Aabb<T>) -> Self {
        Self { aabb, label: None }
    }

    pub fn dyadic(dim: usize, n: i32, k: [i64; 3]) -> Result<Self> {
        Ok(Self {
            aabb: Aabb::dyadic(dim, n, k)?,
            label: Some(DyadicLabel { n, k }),
        })
    }

    pub fn dim(&self) -> usize {
        self.aabb.dim
    }

    /// Fails when the closed region contains one of `endpoints`.
    pub fn check_excludes(&self, endpoints: &[Point<T>]) -> Result<()> {
        if endpoints.iter().any(|e| self.aabb.contains(e)) {
            return Err(invalid("region", "contains a path endpoint"));
        }
        Ok(())
    }

    pub fn children(&self) -> Vec<Self> {
        let kids = self.aabb.children();
        kids.into_iter()
            .enumerate()
            .map(|(mask, aabb)| Self {
                aabb,
                label: self.label.map(|l| {
                    let mut k = l.k;
                    for (i, ki) in k.iter_mut().enumerate().take(aabb.dim) {
                        *ki = 2 * *ki + (mask >> i & 1) as i64;
                    }
                    DyadicLabel { n: l.n + 1, k }
                }),
            })
            .collect()
    }
}

/// Resolution of the volume grid: `grid_h = e^{-r} / divisor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRule {
    pub divisor: f64,
}

impl Default for GridRule {
    fn default() -> Self {
        Self { divisor: 32.0 }
    }
}

impl GridRule {
    pub fn grid_h<T: Real>(&self, r: T) -> T {
        (-r).exp() / T::of(self.divisor)
    }
}

/// Number of grid-cell centres `lo + (i + 1/2) h` lying in `[lo, hi]`.
fn centres_along<T: Real>(lo: T, hi: T, h: T) -> i64 {
    let span = (hi - lo) / h - T::of(0.5);
    if span < T::zero() {
        0
    } else {
        span.floor().to_i64().unwrap_or(0) + 1
    }
}

/// Volume of `{z in region : dist(z, points) <= e^{-r}}` by grid-centre
/// counting at spacing `grid_h`.
pub fn neighborhood_volume<T: Real>(points: &[Point<T>], r: T, region: &Region<T>, grid_h: T) -> Result<T> {
    let dim = region.dim();
    let radius = (-r).exp();
    if !(grid_h > T::zero()) {
        return Err(invalid("grid_h", "must be positive"));
    }
    if grid_h > radius / T::of(4.0) {
        return Err(Error::ResolutionGuard {
            grid_h: grid_h.as_f64(),
            radius: radius.as_f64(),
        });
    }
    let b = &region.aabb;
    if (0..dim).any(|i| !(b.lo[i].is_finite() && b.hi[i].is_finite())) {
        return Err(invalid("region", "must be bounded"));
    }
    let counts: Vec<i64> = (0..3)
        .map(|i| {
            if i < dim {
                centres_along(b.lo[i], b.hi[i], grid_h)
            } else {
                1
            }
        })
        .collect();

    let near: Vec<Point<T>> = points
        .iter()
        .filter(|p| (0..dim).all(|i| p[i] >= b.lo[i] - radius && p[i] <= b.hi[i] + radius))
        .copied()
        .collect();
    if near.is_empty() {
        return Ok(T::zero());
    }
    let hash = SpatialHash::from_points(dim, radius, b.lo, &near);
    let offsets = hash.neighbour_offsets();
    let mut cells: Vec<Cell> = hash
        .occupied_cells()
        .flat_map(|c| offsets.iter().map(move |o| [c[0] + o[0], c[1] + o[1], c[2] + o[2]]))
        .collect();
    cells.sort_unstable();
    cells.dedup();

    let r2 = radius * radius;
    let half = T::of(0.5);
    let count: u64 = cells
        .par_iter()
        .map(|c| {
            let mut local: Vec<Point<T>> = Vec::new();
            for o in &offsets {
                if let Some(found) = hash.bucket(&[c[0] + o[0], c[1] + o[1], c[2] + o[2]]) {
                    local.extend_from_slice(found);
                }
            }
            let mut lo_idx = [0i64; 3];
            let mut hi_idx = [0i64; 3];
            for i in 0..dim {
                let cell_lo = b.lo[i] + T::of(c[i] as f64) * radius;
                let cell_hi = cell_lo + radius;
                let first = ((cell_lo - b.lo[i]) / grid_h - half).floor().to_i64().unwrap_or(0) - 1;
                let last = ((cell_hi - b.lo[i]) / grid_h - half).ceil().to_i64().unwrap_or(0) + 1;
                lo_idx[i] = first.max(0);
                hi_idx[i] = last.min(counts[i] - 1);
            }
            let mut n = 0u64;
            let mut idx = lo_idx;
            if (0..dim).any(|i| lo_idx[i] > hi_idx[i]) {
                return 0;
            }
            loop {
                let mut z = [T::zero(); 3];
                for i in 0..dim {
                    z[i] = b.lo[i] + (T::of(idx[i] as f64) + half) * grid_h;
                }
                if hash.cell_of(&z) == *c && local.iter().any(|p| dist2(p, &z) <= r2) {
                    n += 1;
                }
                // odometer over the index box
                let mut axis = 0;
                loop {
                    if axis == dim {
                        return n;
                    }
                    idx[axis] += 1;
                    if idx[axis] <= hi_idx[axis] {
                        break;
                    }
                    idx[axis] = lo_idx[axis];
                    axis += 1;
                }
            }
        })
        .sum();
    Ok(T::of(count as f64) * grid_h.powi(dim as i32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentProfile<T> {
    pub delta: T,
    pub r_values: Vec<T>,
    pub contents: Vec<T>,
    pub volumes: Vec<T>,
    pub grid_h: Vec<T>,
    pub region: Region<T>,
}

impl<T: Real> ContentProfile<T> {
    /// Rows `r,content,volume,grid_h`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,content,volume,grid_h")?;
        for i in 0..self.r_values.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.r_values[i].as_f64(),
                self.contents[i].as_f64(),
                self.volumes[i].as_f64(),
                self.grid_h[i].as_f64()
            )?;
        }
        Ok(())
    }

    /// Same profile re-weighted to a different dimension parameter.
    pub fn with_delta(&self, delta: T) -> Self {
        let d = T::of_usize(self.region.dim());
        let contents = self
            .r_values
            .iter()
            .zip(&self.volumes)
            .map(|(r, v)| (*r * (d - delta)).exp() * *v)
            .collect();
        Self {
            delta,
            contents,
            ..self.clone()
        }
    }

    /// Pointwise mean of several profiles over identical scales.
    pub fn mean(profiles: &[Self]) -> Result<Self> {
        let first = profiles.first().ok_or(Error::TooFew {
            what: "profiles",
            needed: 1,
            got: 0,
        })?;
        if profiles.iter().any(|p| p.r_values != first.r_values) {
            return Err(invalid("profiles", "scales differ"));
        }
        let k = T::of_usize(profiles.len());
        let avg = |f: fn(&Self) -> &Vec<T>| -> Vec<T> {
            (0..first.r_values.len())
                .map(|i| profiles.iter().fold(T::zero(), |a, p| a + f(p)[i]) / k)
                .collect()
        };
        Ok(Self {
            contents: avg(|p| &p.contents),
            volumes: avg(|p| &p.volumes),
            ..first.clone()
        })
    }
}

pub fn content_profile<T: Real>(
    points: &[Point<T>],
    region: &Region<T>,
    delta: T,
    r_values: &[T],
    rule: &GridRule,
) -> Result<ContentProfile<T>> {
    if r_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("r_values", "must be strictly increasing"));
    }
    let d = T::of_usize(region.dim());
    let mut volumes = Vec::with_capacity(r_values.len());
    let mut grid_h = Vec::with_capacity(r_values.len());
    let mut contents = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let h = rule.grid_h(r);
        let v = neighborhood_volume(points, r, region, h)?;
        contents.push((r * (d - delta)).exp() * v);
        volumes.push(v);
        grid_h.push(h);
    }
    Ok(ContentProfile {
        delta,
        r_values: r_values.to_vec(),
        contents,
        volumes,
        grid_h,
        region: *region,
    })
}

/// Finite-scale proxy for the content limit: the window of consecutive
/// scales on which `ln(content)` is flattest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauEstimate<T> {
    pub value: T,
    pub r_window: (T, T),
    pub slope: T,
    pub slope_stderr: T,
    pub window_len: usize,
}

pub const MIN_PLATEAU_SCALES: usize = 5;

/// `window` is the number of consecutive scales per fit; the default is half
/// of the available scales (at least three).
pub fn plateau_estimate<T: Real>(profile: &ContentProfile<T>, window: Option<usize>) -> Result<PlateauEstimate<T>> {
    let n = profile.r_values.len();
    if n < MIN_PLATEAU_SCALES {
        return Err(Error::TooFew {
            what: "scales",
            needed: MIN_PLATEAU_SCALES,
            got: n,
        });
    }
    let w = window.unwrap_or(n.div_ceil(2)).max(3);
    if w > n {
        return Err(invalid("window", format!("{w} exceeds the {n} available scales")));
    }
    let mut best: Option<PlateauEstimate<T>> = None;
    for start in 0..=n - w {
        let rs = &profile.r_values[start..start + w];
        let cs = &profile.contents[start..start + w];
        if cs.iter().any(|c| !(*c > T::zero())) {
            continue;
        }
        let logs: Vec<T> = cs.iter().map(|c| c.ln()).collect();
        let fit = fit_line(rs, &logs, None)?;
        if best.is_none_or(|b| fit.slope.abs() < b.slope.abs()) {
            let mean_log = logs.iter().fold(T::zero(), |a, l| a + *l) / T::of_usize(w);
            best = Some(PlateauEstimate {
                value: mean_log.exp(),
                r_window: (rs[0], rs[w - 1]),
                slope: fit.slope,
                slope_stderr: fit.slope_stderr,
                window_len: w,
            });
        }
    }
    best.ok_or(Error::TooFew {
        what: "windows with positive content",
        needed: 1,
        got: 0,
    })
}
