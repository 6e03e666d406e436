//! Cut times and cut points of discrete paths.
//!
//! A time `t` is a cut time when no site is visited both strictly before and
//! strictly after `t`; the site visited at `t` itself never blocks `t`.

use std::collections::HashSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point};
use crate::lattice::{Site, SiteMap};
use crate::paths::LatticePath;

#[derive(Debug, Clone, PartialEq)]
pub struct CutSet {
    pub times: Vec<usize>,
    pub points: Vec<Point<f64>>,
    pub interior_only: bool,
}

impl CutSet {
    fn from_times(path: &LatticePath, times: Vec<usize>, interior_only: bool) -> Self {
        let points = times.iter().map(|&t| path.position(t)).collect();
        Self {
            times,
            points,
            interior_only,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Rows `time_index,x,y[,z]` under a header line.
    pub fn write_csv<W: Write>(&self, dim: usize, mut w: W) -> Result<()> {
        writeln!(w, "{}", if dim == 2 { "time_index,x,y" } else { "time_index,x,y,z" })?;
        for (t, p) in self.times.iter().zip(&self.points) {
            if dim == 2 {
                writeln!(w, "{t},{},{}", p[0], p[1])?;
            } else {
                writeln!(w, "{t},{},{},{}", p[0], p[1], p[2])?;
            }
        }
        Ok(())
    }
}

/// Linear-time cut detector holding reusable last-visit tables.
///
/// Paths whose bounding box is small relative to their length use a dense
/// array; others fall back to the chunked site map.
#[derive(Debug, Clone)]
pub struct CutDetector {
    last_visit: SiteMap<u32>,
    dense: Vec<u32>,
    dim: usize,
}

const DENSE_MAX_CELLS: usize = 1 << 24;

struct DenseBox {
    lo: Site,
    stride: [usize; 3],
    cells: usize,
}

impl DenseBox {
    fn of(sites: &[Site]) -> Option<Self> {
        let mut lo = sites[0];
        let mut hi = sites[0];
        for s in sites {
            for i in 0..3 {
                lo[i] = lo[i].min(s[i]);
                hi[i] = hi[i].max(s[i]);
            }
        }
        let ext: Vec<usize> = (0..3).map(|i| (hi[i] as i64 - lo[i] as i64 + 1) as usize).collect();
        let cells = ext.iter().try_fold(1usize, |a, e| a.checked_mul(*e))?;
        if cells > DENSE_MAX_CELLS || cells > 8 * sites.len() + 4096 {
            return None;
        }
        Some(Self {
            lo,
            stride: [1, ext[0], ext[0] * ext[1]],
            cells,
        })
    }

    #[inline]
    fn index(&self, s: &Site) -> usize {
        (s[0] - self.lo[0]) as usize
            + (s[1] - self.lo[1]) as usize * self.stride[1]
            + (s[2] - self.lo[2]) as usize * self.stride[2]
    }
}

fn scan_with(sites: &[Site], lo: usize, hi: usize, out: &mut Vec<usize>, mut last_visit: impl FnMut(&Site) -> u32) {
    // reach = 1 + max over s < t of last_visit(sites[s])
    let mut reach = 0usize;
    for (t, s) in sites.iter().enumerate().take(hi + 1) {
        if t >= lo && reach <= t + 1 {
            out.push(t);
        }
        reach = reach.max(last_visit(s) as usize);
    }
}

impl CutDetector {
    pub fn new(dim: usize) -> Self {
        Self {
            last_visit: SiteMap::new(dim),
            dense: Vec::new(),
            dim,
        }
    }

    /// Cut times inside `[lo, hi]` of the full path, `hi` inclusive.
    fn scan(&mut self, sites: &[Site], lo: usize, hi: usize, out: &mut Vec<usize>) {
        assert!(sites.len() < u32::MAX as usize, "path too long for u32 indices");
        if let Some(b) = DenseBox::of(sites) {
            self.dense.clear();
            self.dense.resize(b.cells, 0);
            for (i, s) in sites.iter().enumerate() {
                self.dense[b.index(s)] = i as u32 + 1;
            }
            let table = &self.dense;
            scan_with(sites, lo, hi, out, |s| table[b.index(s)]);
        } else {
            self.last_visit.clear();
            for (i, s) in sites.iter().enumerate() {
                self.last_visit.set(*s, i as u32 + 1);
            }
            let map = &mut self.last_visit;
            scan_with(sites, lo, hi, out, |s| map.get(*s));
        }
    }

    pub fn cut_times(&mut self, path: &LatticePath, interior_only: bool) -> CutSet {
        if self.dim != path.dim() {
            *self = Self::new(path.dim());
        }
        let n = path.n_steps();
        let mut times = Vec::new();
        self.scan(path.sites(), 0, n, &mut times);
        if interior_only {
            times.retain(|&t| t != 0 && t != n);
        }
        CutSet::from_times(path, times, interior_only)
    }

    /// Number of interior cut times, without materialising points.
    pub fn count_interior(&mut self, path: &LatticePath) -> usize {
        if self.dim != path.dim() {
            *self = Self::new(path.dim());
        }
        let n = path.n_steps();
        let mut times = Vec::new();
        self.scan(path.sites(), 0, n, &mut times);
        times.iter().filter(|&&t| t != 0 && t != n).count()
    }

    pub fn cut_times_in_range(&mut self, path: &LatticePath, lo: usize, hi: usize) -> Result<Vec<usize>> {
        let n = path.n_steps();
        if lo > hi || hi > n {
            return Err(Error::IndexOutOfRange { lo, hi, n_steps: n });
        }
        if self.dim != path.dim() {
            *self = Self::new(path.dim());
        }
        let mut times = Vec::new();
        self.scan(path.sites(), lo, hi, &mut times);
        Ok(times)
    }
}

/// Cut times of `path` in expected linear time.
pub fn cut_times(path: &LatticePath, interior_only: bool) -> CutSet {
    CutDetector::new(path.dim()).cut_times(path, interior_only)
}

pub const BRUTEFORCE_MAX_SITES: usize = 10_000;

/// Quadratic reference implementation: materialises the prefix and suffix
/// site sets for every `t`.
pub fn cut_times_bruteforce(path: &LatticePath, interior_only: bool) -> Result<CutSet> {
    let sites = path.sites();
    if sites.len() > BRUTEFORCE_MAX_SITES {
        return Err(Error::PathTooLong {
            len: sites.len(),
            max: BRUTEFORCE_MAX_SITES,
        });
    }
    let n = path.n_steps();
    let mut times = Vec::new();
    for t in 0..=n {
        if interior_only && (t == 0 || t == n) {
            continue;
        }
        let prefix: HashSet<Site> = sites[..t].iter().copied().collect();
        let suffix: HashSet<Site> = sites[t + 1..].iter().copied().collect();
        if prefix.is_disjoint(&suffix) {
            times.push(t);
        }
    }
    Ok(CutSet::from_times(path, times, interior_only))
}

/// Indices in `[lo, hi]` that are cut times of the whole path.
pub fn cut_times_of_segment_in_whole(path: &LatticePath, lo: usize, hi: usize) -> Result<Vec<usize>> {
    CutDetector::new(path.dim()).cut_times_in_range(path, lo, hi)
}

/// Cut points lying in the closed box.
pub fn cut_points_in_region(cutset: &CutSet, region: &Aabb<f64>) -> Vec<Point<f64>> {
    cutset.points.iter().filter(|p| region.contains(p)).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_srw;

    fn walk(sites: &[[i32; 2]]) -> LatticePath {
        LatticePath::from_walk(2, sites.iter().map(|s| [s[0], s[1], 0]).collect()).unwrap()
    }

    #[test]
    fn sparse_boxes_match_bruteforce() {
        for seed in 0..20 {
            let a = sample_srw(2, 400, seed).unwrap();
            let b = sample_srw(2, 400, seed + 100)
                .unwrap()
                .translated([100_000, -70_000, 0]);
            let mut sites = a.sites().to_vec();
            sites.extend_from_slice(b.sites());
            sites.extend_from_slice(a.sites());
            let p = LatticePath::new(2, sites, 1.0, false).unwrap();
            assert!(DenseBox::of(p.sites()).is_none());
            assert_eq!(cut_times(&p, false), cut_times_bruteforce(&p, false).unwrap());
        }
    }

    #[test]
    fn straight_path_cuts_everywhere() {
        let p = walk(&[[0, 0], [1, 0], [2, 0], [3, 0]]);
        assert_eq!(cut_times(&p, false).times, vec![0, 1, 2, 3]);
        assert_eq!(cut_times(&p, true).times, vec![1, 2]);
        assert_eq!(cut_times_bruteforce(&p, false).unwrap().times, vec![0, 1, 2, 3]);
    }

    #[test]
    fn square_loop_has_only_endpoints() {
        let p = walk(&[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        assert_eq!(cut_times(&p, false).times, vec![0, 4]);
        assert!(cut_times(&p, true).times.is_empty());
        assert_eq!(cut_times_bruteforce(&p, false).unwrap().times, vec![0, 4]);
        assert!(cut_times_bruteforce(&p, true).unwrap().times.is_empty());
    }

    #[test]
    fn single_site_path() {
        let p = walk(&[[3, 4]]);
        assert_eq!(cut_times_bruteforce(&p, false).unwrap().times, vec![0]);
        assert_eq!(cut_times(&p, false).times, vec![0]);
    }

    #[test]
    fn points_are_scaled_sites() {
        let p = walk(&[[0, 0], [1, 0], [2, 0]]).with_step_scale(0.5).unwrap();
        let c = cut_times(&p, false);
        assert_eq!(c.points[2], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn bruteforce_guard() {
        let p = sample_srw(2, BRUTEFORCE_MAX_SITES, 1).unwrap();
        assert!(matches!(
            cut_times_bruteforce(&p, false),
            Err(Error::PathTooLong { .. })
        ));
    }

    #[test]
    fn segment_range_checks() {
        let p = sample_srw(2, 50, 4).unwrap();
        assert!(cut_times_of_segment_in_whole(&p, 10, 51).is_err());
        assert!(cut_times_of_segment_in_whole(&p, 11, 10).is_err());
        assert_eq!(
            cut_times_of_segment_in_whole(&p, 0, 50).unwrap(),
            cut_times(&p, false).times
        );
    }

    #[test]
    fn segment_cut_need_not_be_global() {
        // t = 1 cuts the first three sites but the loop returns to the start.
        let p = walk(&[[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]);
        let seg = p.slice(0, 2).unwrap();
        assert!(cut_times(&seg, false).times.contains(&1));
        assert!(!cut_times_of_segment_in_whole(&p, 0, 2).unwrap().contains(&1));
    }

    #[test]
    fn region_filter() {
        let p = walk(&[[0, 0], [1, 0], [2, 0], [3, 0]]);
        let c = cut_times(&p, false);
        let everything = Aabb::everything(2);
        assert_eq!(cut_points_in_region(&c, &everything).len(), 4);
        let far = Aabb::new(2, [10.0, 10.0, 0.0], [11.0, 11.0, 0.0]).unwrap();
        assert!(cut_points_in_region(&c, &far).is_empty());
        let unit = Aabb::new(2, [1.5, -0.5, 0.0], [2.5, 0.5, 0.0]).unwrap();
        assert_eq!(cut_points_in_region(&c, &unit), vec![[2.0, 0.0, 0.0]]);
    }

    #[test]
    fn csv_rows() {
        let p = walk(&[[0, 0], [1, 0]]);
        let mut buf = Vec::new();
        cut_times(&p, false).write_csv(2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time_index,x,y\n0,0,0\n1,1,0\n");
    }
}
