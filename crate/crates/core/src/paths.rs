//! Discrete path models standing in for Brownian paths.

use std::io::{BufRead, Read, Write};

use num_traits::{FromPrimitive, Num};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, dist2, Point};
use crate::lattice::{l1, step, Site, ORIGIN};
use crate::rng::{seeded, StepSampler};
use crate::scalar::Real;

/// Time-indexed sequence of lattice sites with a physical edge length.
///
/// `nearest_neighbor` is true for walk-generated paths, whose consecutive
/// sites differ by one unit along one axis. Grid-rounded bridges clear it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    dim: usize,
    sites: Vec<Site>,
    step_scale: f64,
    nearest_neighbor: bool,
}

impl LatticePath {
    pub fn new(dim: usize, sites: Vec<Site>, step_scale: f64, nearest_neighbor: bool) -> Result<Self> {
        check_dim(dim)?;
        if sites.is_empty() {
            return Err(invalid("sites", "path must contain at least one site"));
        }
        if !(step_scale > 0.0 && step_scale.is_finite()) {
            return Err(invalid("step_scale", "must be positive and finite"));
        }
        if dim == 2 && sites.iter().any(|s| s[2] != 0) {
            return Err(invalid("sites", "planar path with nonzero third coordinate"));
        }
        let path = Self {
            dim,
            sites,
            step_scale,
            nearest_neighbor,
        };
        if nearest_neighbor && !path.steps_are_unit() {
            return Err(invalid("sites", "flagged nearest-neighbour but has a longer step"));
        }
        Ok(path)
    }

    /// Walk with unit edge length built from known-good sites.
    pub fn from_walk(dim: usize, sites: Vec<Site>) -> Result<Self> {
        Self::new(dim, sites, 1.0, true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn into_sites(self) -> Vec<Site> {
        self.sites
    }

    pub fn step_scale(&self) -> f64 {
        self.step_scale
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.nearest_neighbor
    }

    /// Number of steps, i.e. the last time index.
    pub fn n_steps(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn steps_are_unit(&self) -> bool {
        self.sites.windows(2).all(|w| l1(w[0], w[1]) == 1)
    }

    #[inline]
    pub fn position<T: Real>(&self, index: usize) -> Point<T> {
        let s = self.sites[index];
        let h = T::of(self.step_scale);
        [T::of(s[0] as f64) * h, T::of(s[1] as f64) * h, T::of(s[2] as f64) * h]
    }

    pub fn positions<T: Real>(&self) -> Vec<Point<T>> {
        (0..self.sites.len()).map(|i| self.position(i)).collect()
    }

    pub fn with_step_scale(mut self, step_scale: f64) -> Result<Self> {
        if !(step_scale > 0.0 && step_scale.is_finite()) {
            return Err(invalid("step_scale", "must be positive and finite"));
        }
        self.step_scale = step_scale;
        Ok(self)
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.sites.reverse();
        out
    }

    pub fn translated(&self, by: Site) -> Self {
        let mut out = self.clone();
        for s in &mut out.sites {
            for i in 0..3 {
                s[i] += by[i];
            }
        }
        out
    }

    /// Sub-path over the inclusive index range `[lo, hi]`.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi > self.n_steps() {
            return Err(Error::IndexOutOfRange {
                lo,
                hi,
                n_steps: self.n_steps(),
            });
        }
        Ok(Self {
            dim: self.dim,
            sites: self.sites[lo..=hi].to_vec(),
            step_scale: self.step_scale,
            nearest_neighbor: self.nearest_neighbor,
        })
    }

    /// Concatenation sharing the boundary site: `self` must end where `next`
    /// starts.
    pub fn concat(&self, next: &Self) -> Result<Self> {
        if self.sites.last() != next.sites.first() {
            return Err(invalid("next", "paths do not share an endpoint"));
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&next.sites[1..]);
        Ok(Self {
            dim: self.dim,
            sites,
            step_scale: self.step_scale,
            nearest_neighbor: self.nearest_neighbor && next.nearest_neighbor,
        })
    }

    /// Nearest-neighbour path through the same sites: each jump is replaced
    /// by unit moves along x, then y, then z, and repeated sites collapse.
    /// Site-set disjointness of pieces then reflects disjointness of the
    /// underlying polygonal curves.
    pub fn staircase(&self) -> Self {
        if self.nearest_neighbor {
            return self.clone();
        }
        let mut sites = Vec::with_capacity(self.sites.len() * 2);
        let mut cur = self.sites[0];
        sites.push(cur);
        for next in &self.sites[1..] {
            for axis in 0..self.dim {
                let dir = if next[axis] > cur[axis] { 2 * axis } else { 2 * axis + 1 };
                while cur[axis] != next[axis] {
                    cur = step(cur, dir);
                    sites.push(cur);
                }
            }
        }
        Self {
            dim: self.dim,
            sites,
            step_scale: self.step_scale,
            nearest_neighbor: true,
        }
    }

    const MAGIC: &'static [u8; 8] = b"CUTLPATH";
    const VERSION: u32 = 1;

    /// Binary layout, little endian: magic `CUTLPATH`, u32 version, u8 dim,
    /// u8 flags (bit 0: nearest-neighbour), u16 zero, f64 step scale,
    /// u64 site count, then `dim` i32 coordinates per site.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&[self.dim as u8, self.nearest_neighbor as u8, 0, 0])?;
        w.write_all(&self.step_scale.to_le_bytes())?;
        w.write_all(&(self.sites.len() as u64).to_le_bytes())?;
        for s in &self.sites {
            for c in &s[..self.dim] {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != Self::VERSION {
            return Err(Error::Format("unsupported version".into()));
        }
        r.read_exact(&mut b4)?;
        let dim = b4[0] as usize;
        let nn = b4[1] & 1 == 1;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let step_scale = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        check_dim(dim)?;
        let mut sites = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let mut s = ORIGIN;
            for c in s.iter_mut().take(dim) {
                r.read_exact(&mut b4)?;
                *c = i32::from_le_bytes(b4);
            }
            sites.push(s);
        }
        Self::new(dim, sites, step_scale, nn)
    }

    /// CSV layout: a `dim,n_sites,step_scale,nearest_neighbor` header and its
    /// value row, then `t,x,y[,z]` with one row per time index.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dim,n_sites,step_scale,nearest_neighbor")?;
        writeln!(
            w,
            "{},{},{},{}",
            self.dim,
            self.sites.len(),
            self.step_scale,
            self.nearest_neighbor as u8
        )?;
        writeln!(w, "{}", if self.dim == 2 { "t,x,y" } else { "t,x,y,z" })?;
        for (t, s) in self.sites.iter().enumerate() {
            if self.dim == 2 {
                writeln!(w, "{t},{},{}", s[0], s[1])?;
            } else {
                writeln!(w, "{t},{},{},{}", s[0], s[1], s[2])?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Format("truncated csv".into()))?
                .map_err(Error::from)
        };
        let bad = |what: &str| Error::Format(what.to_string());
        next()?;
        let meta = next()?;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(bad("metadata row"));
        }
        let dim: usize = fields[0].parse().map_err(|_| bad("dim"))?;
        let n: usize = fields[1].parse().map_err(|_| bad("n_sites"))?;
        let step_scale: f64 = fields[2].parse().map_err(|_| bad("step_scale"))?;
        let nn = fields[3] == "1";
        check_dim(dim)?;
        next()?;
        let mut sites = Vec::with_capacity(n);
        for t in 0..n {
            let row = next()?;
            let mut it = row.trim().split(',');
            let idx: usize = it
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("time index"))?;
            if idx != t {
                return Err(bad("time indices out of order"));
            }
            let mut s = ORIGIN;
            for c in s.iter_mut().take(dim) {
                *c = it
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("coordinate"))?;
            }
            sites.push(s);
        }
        Self::new(dim, sites, step_scale, nn)
    }
}

/// Simple random walk of `n_steps` steps from the origin with unit edges.
pub fn sample_srw(dim: usize, n_steps: usize, seed: u64) -> Result<LatticePath> {
    check_dim(dim)?;
    let mut rng = seeded(seed);
    let mut dirs = StepSampler::new();
    let mut sites = Vec::with_capacity(n_steps + 1);
    let mut cur = ORIGIN;
    sites.push(cur);
    for _ in 0..n_steps {
        cur = step(cur, dirs.direction(&mut rng, dim));
        sites.push(cur);
    }
    Ok(LatticePath {
        dim,
        sites,
        step_scale: 1.0,
        nearest_neighbor: true,
    })
}

fn round_to_grid(x: f64, grid_h: f64) -> Result<i32> {
    let v = (x / grid_h).round();
    if v.abs() > i32::MAX as f64 / 2.0 {
        return Err(invalid("grid_h", "grid too fine for the path extent"));
    }
    Ok(v as i32)
}

/// Gaussian bridge over unit time from the origin to `endpoint`, with
/// `n_steps` increments of variance `1 / n_steps` per coordinate, each
/// vertex rounded to the grid of spacing `grid_h`.
pub fn sample_bridge(dim: usize, n_steps: usize, endpoint: Point<f64>, grid_h: f64, seed: u64) -> Result<LatticePath> {
    check_dim(dim)?;
    if n_steps == 0 {
        return Err(invalid("n_steps", "a bridge needs at least one step"));
    }
    if !(grid_h > 0.0 && grid_h.is_finite()) {
        return Err(invalid("grid_h", "must be positive"));
    }
    let mut rng = seeded(seed);
    let sd = (1.0 / n_steps as f64).sqrt();
    let mut walk = vec![[0.0f64; 3]; n_steps + 1];
    for k in 1..=n_steps {
        for i in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            walk[k][i] = walk[k - 1][i] + sd * z;
        }
    }
    let end = walk[n_steps];
    let mut sites = Vec::with_capacity(n_steps + 1);
    for (k, w) in walk.iter().enumerate() {
        let frac = k as f64 / n_steps as f64;
        let mut s = ORIGIN;
        for i in 0..dim {
            let x = if k == n_steps {
                endpoint[i]
            } else {
                w[i] - frac * (end[i] - endpoint[i])
            };
            s[i] = round_to_grid(x, grid_h)?;
        }
        sites.push(s);
    }
    Ok(LatticePath {
        dim,
        sites,
        step_scale: grid_h,
        nearest_neighbor: false,
    })
}

/// Transition probabilities `[up, down, left, right]` of the walk
/// h-transformed by the height function, at lattice height `y >= 1`.
pub fn h_transform_weights<T>(height: u32) -> Result<[T; 4]>
where
    T: Num + FromPrimitive + Clone,
{
    if height == 0 {
        return Err(invalid("height", "the h-process lives on heights >= 1"));
    }
    let y = height as i64;
    let frac = |num: i64, den: i64| -> T {
        T::from_i64(num).expect("representable") / T::from_i64(den).expect("representable")
    };
    Ok([frac(y + 1, 4 * y), frac(y - 1, 4 * y), frac(1, 4), frac(1, 4)])
}

/// One step of the h-process from `site`; horizontal and vertical moves each
/// have probability 1/2, and a vertical move goes up with probability
/// `(y + 1) / (2y)`.
#[inline]
pub fn h_step<R: rand::Rng + ?Sized>(rng: &mut R, site: Site) -> Site {
    let y = site[1] as u64;
    let mut s = site;
    let u = rng.next_u64();
    if u & 1 == 0 {
        s[0] += if u & 2 == 0 { 1 } else { -1 };
    } else if rng.random_range(0..2 * y) < y + 1 {
        s[1] += 1;
    } else {
        s[1] -= 1;
    }
    s
}

/// Planar walk from lattice site `(0, 1)` h-transformed by the height, run
/// until it first leaves the disk of radius `radius_cap / grid_h`.
pub fn sample_halfplane_excursion(radius_cap: f64, grid_h: f64, seed: u64) -> Result<LatticePath> {
    if !(grid_h > 0.0) || !(radius_cap > grid_h) {
        return Err(invalid("radius_cap", "need radius_cap > grid_h > 0"));
    }
    let r = radius_cap / grid_h;
    let r2 = r * r;
    let mut rng = seeded(seed);
    let mut cur: Site = [0, 1, 0];
    let mut sites = vec![cur];
    while ((cur[0] as f64).powi(2) + (cur[1] as f64).powi(2)) < r2 {
        cur = h_step(&mut rng, cur);
        sites.push(cur);
    }
    Ok(LatticePath {
        dim: 2,
        sites,
        step_scale: grid_h,
        nearest_neighbor: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> SphereSpec<T> {
    pub fn new(center: Point<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) {
            return Err(invalid("radius", "must be positive"));
        }
        Ok(Self { center, radius })
    }

    /// Closed ball membership.
    #[inline]
    pub fn contains(&self, p: &Point<T>) -> bool {
        dist2(p, &self.center) <= self.radius * self.radius
    }
}

/// Split of a path at its first entry into and last exit from a closed ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub pre: LatticePath,
    pub mid: LatticePath,
    pub post: LatticePath,
    pub split_indices: (usize, usize),
}

impl Decomposition {
    pub fn reassemble(&self) -> LatticePath {
        let mut sites = self.pre.sites.clone();
        sites.extend_from_slice(&self.mid.sites[1..]);
        sites.extend_from_slice(&self.post.sites[1..]);
        LatticePath {
            sites,
            ..self.pre.clone()
        }
    }
}

pub fn decompose_at_sphere(path: &LatticePath, sphere: &SphereSpec<f64>) -> Result<Decomposition> {
    let inside = |i: usize| sphere.contains(&path.position::<f64>(i));
    let first = (0..path.sites.len()).find(|&i| inside(i)).ok_or(Error::NoVisit)?;
    let last = (first..path.sites.len())
        .rev()
        .find(|&i| inside(i))
        .expect("first index is inside");
    Ok(Decomposition {
        pre: path.slice(0, first)?,
        mid: path.slice(first, last)?,
        post: path.slice(last, path.n_steps())?,
        split_indices: (first, last),
    })
}

/// Inversion `z -> (z - c) / |z - c|^2 + c` of a single point.
#[inline]
pub fn invert_point<T: Real>(p: &Point<T>, center: &Point<T>) -> Option<Point<T>> {
    let d2 = dist2(p, center);
    if d2 == T::zero() {
        return None;
    }
    Some([
        (p[0] - center[0]) / d2 + center[0],
        (p[1] - center[1]) / d2 + center[1],
        (p[2] - center[2]) / d2 + center[2],
    ])
}

/// Pointwise image of the path's physical positions under inversion in the
/// unit sphere about `center`; order is preserved and no time change is
/// applied.
pub fn invert_path<T: Real>(path: &LatticePath, center: Point<T>) -> Result<Vec<Point<T>>> {
    (0..path.sites.len())
        .map(|i| invert_point(&path.position::<T>(i), &center).ok_or(Error::Singularity { index: i }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn srw_zero_steps_is_origin() {
        let p = sample_srw(2, 0, 5).unwrap();
        assert_eq!(p.sites(), &[ORIGIN]);
    }

    #[test]
    fn srw_is_deterministic_and_nearest_neighbour() {
        let a = sample_srw(2, 10_000, 42).unwrap();
        let b = sample_srw(2, 10_000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_srw(2, 10_000, 43).unwrap());
        let c = sample_srw(3, 10_000, 42).unwrap();
        assert!(c.steps_are_unit());
        assert_eq!(c.sites().len(), 10_001);
    }

    #[test]
    fn srw_rejects_bad_dimension() {
        assert!(matches!(sample_srw(4, 3, 0), Err(Error::InvalidDimension(4))));
        assert!(matches!(sample_srw(1, 3, 0), Err(Error::InvalidDimension(1))));
    }

    #[test]
    fn bridge_is_pinned_and_deterministic() {
        let e = [1.0, 0.0, 0.0];
        for seed in 0..50 {
            let p = sample_bridge(2, 64, e, 1.0 / 16.0, seed).unwrap();
            assert_eq!(p.sites()[0], ORIGIN);
            assert_eq!(*p.sites().last().unwrap(), [16, 0, 0]);
            assert!(!p.is_nearest_neighbor());
        }
        let a = sample_bridge(3, 100, [0.3, 0.2, 0.1], 0.01, 9).unwrap();
        let b = sample_bridge(3, 100, [0.3, 0.2, 0.1], 0.01, 9).unwrap();
        assert_eq!(a, b);
        assert!(sample_bridge(2, 10, e, 0.0, 1).is_err());
        assert!(sample_bridge(2, 10, e, -1.0, 1).is_err());
        assert!(sample_bridge(2, 0, e, 0.1, 1).is_err());
    }

    #[test]
    fn h_weights_at_height_one() {
        let w = h_transform_weights::<Rational64>(1).unwrap();
        assert_eq!(w[0], Rational64::new(1, 2));
        assert_eq!(w[1], Rational64::new(0, 1));
        assert_eq!(w[2], Rational64::new(1, 4));
        assert_eq!(w[3], Rational64::new(1, 4));
        assert!(h_transform_weights::<f64>(0).is_err());
    }

    #[test]
    fn h_weights_rows_sum_to_one_exactly() {
        let one = Rational64::new(1, 1);
        let zero = Rational64::new(0, 1);
        for y in 1..=1_000_000u32 {
            let w = h_transform_weights::<Rational64>(y).unwrap();
            assert_eq!(w[0] + w[1] + w[2] + w[3], one, "height {y}");
            assert!(w.iter().all(|p| *p >= zero));
            if y == 1 {
                assert_eq!(w[1], zero);
            }
        }
    }

    #[test]
    fn excursion_stays_above_axis() {
        for seed in 0..20 {
            let p = sample_halfplane_excursion(8.0, 0.25, seed).unwrap();
            assert_eq!(p.sites()[0], [0, 1, 0]);
            assert!(p.sites().iter().all(|s| s[1] >= 1));
            assert!(p.steps_are_unit());
            let last = p.sites().last().unwrap();
            assert!((last[0] as f64).hypot(last[1] as f64) >= 32.0);
        }
        assert!(sample_halfplane_excursion(0.1, 0.25, 0).is_err());
    }

    #[test]
    fn decomposition_of_path_inside_ball() {
        let p = sample_srw(2, 20, 3).unwrap();
        let s = SphereSpec::new([0.0; 3], 100.0).unwrap();
        let d = decompose_at_sphere(&p, &s).unwrap();
        assert_eq!(d.split_indices, (0, 20));
        assert_eq!(d.pre.sites(), &p.sites()[..1]);
        assert_eq!(d.post.sites(), &p.sites()[20..]);
        assert_eq!(d.reassemble(), p);
    }

    #[test]
    fn decomposition_of_straight_crossing() {
        let sites: Vec<Site> = (0..11).map(|x| [x, 0, 0]).collect();
        let p = LatticePath::from_walk(2, sites).unwrap();
        let s = SphereSpec::new([5.0, 0.0, 0.0], 2.0).unwrap();
        let d = decompose_at_sphere(&p, &s).unwrap();
        assert_eq!(d.split_indices, (3, 7));
        assert_eq!(d.reassemble(), p);
        let far = SphereSpec::new([5.0, 50.0, 0.0], 2.0).unwrap();
        assert!(matches!(decompose_at_sphere(&p, &far), Err(Error::NoVisit)));
    }

    #[test]
    fn inversion_fixes_unit_sphere_and_is_involution() {
        let c = [0.3, -0.2, 0.0];
        for k in 0..16 {
            let a = k as f64 * std::f64::consts::PI / 8.0;
            let p = [c[0] + a.cos(), c[1] + a.sin(), 0.0];
            let q = invert_point(&p, &c).unwrap();
            assert!(dist2(&p, &q) < 1e-24);
        }
        let path = sample_srw(2, 500, 1).unwrap().with_step_scale(0.01).unwrap();
        let img = invert_path(&path, c).unwrap();
        for (i, q) in img.iter().enumerate() {
            let back = invert_point(q, &c).unwrap();
            assert!(dist2(&back, &path.position(i)).sqrt() < 1e-12);
        }
        let origin_hit = invert_path::<f64>(&path, [0.0; 3]);
        assert!(matches!(origin_hit, Err(Error::Singularity { index: 0 })));
    }

    #[test]
    fn path_slice_bounds() {
        let p = sample_srw(2, 10, 1).unwrap();
        assert!(p.slice(3, 11).is_err());
        assert!(p.slice(4, 3).is_err());
        assert_eq!(p.slice(2, 2).unwrap().sites().len(), 1);
    }

    #[test]
    fn csv_and_binary_layouts() {
        let p = sample_srw(3, 5, 2).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dim,n_sites,step_scale,nearest_neighbor\n3,6,1,1\nt,x,y,z\n0,0,0,0\n"));
        assert_eq!(LatticePath::read_csv(&buf[..]).unwrap(), p);
        let mut bin = Vec::new();
        p.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 8 + 4 + 4 + 8 + 8 + 6 * 3 * 4);
        assert_eq!(LatticePath::read_binary(&bin[..]).unwrap(), p);
        bin[0] = b'X';
        assert!(LatticePath::read_binary(&bin[..]).is_err());
    }

    #[test]
    fn staircase_keeps_sites_in_order() {
        let p = sample_bridge(2, 300, [1.0, 0.0, 0.0], 1.0 / 16.0, 8).unwrap();
        let s = p.staircase();
        assert!(s.is_nearest_neighbor() && s.steps_are_unit());
        let mut it = s.sites().iter();
        let mut distinct = p.sites().to_vec();
        distinct.dedup();
        for site in &distinct {
            assert!(it.any(|x| x == site));
        }
        assert_eq!(s.sites().last(), p.sites().last());
        let walk = sample_srw(3, 100, 1).unwrap();
        assert_eq!(walk.staircase(), walk);
    }
}
