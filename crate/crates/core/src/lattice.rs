//! Integer lattice sites and a chunked site table.

use rustc_hash::FxHashMap;

/// Lattice site. Two-dimensional sites keep the third coordinate at zero.
pub type Site = [i32; 3];

pub const ORIGIN: Site = [0, 0, 0];

#[inline]
pub fn step(site: Site, dir: usize) -> Site {
    let mut s = site;
    let axis = dir >> 1;
    s[axis] += if dir & 1 == 0 { 1 } else { -1 };
    s
}

#[inline]
pub fn norm2(s: Site) -> i64 {
    s.iter().map(|&c| c as i64 * c as i64).sum()
}

#[inline]
pub fn dist2(a: Site, b: Site) -> i64 {
    (0..3)
        .map(|i| {
            let d = a[i] as i64 - b[i] as i64;
            d * d
        })
        .sum()
}

#[inline]
pub fn l1(a: Site, b: Site) -> i64 {
    (0..3).map(|i| (a[i] as i64 - b[i] as i64).abs()).sum()
}

const CHUNK_LEN: usize = 4096;
const KEY_BITS: u32 = 21;
const KEY_MASK: u64 = (1 << KEY_BITS) - 1;

/// Dense per-site storage in 4096-entry chunks located through a hash map.
///
/// Walks are local, so consecutive lookups almost always land in the cached
/// chunk. Chunks are 64x64 in two dimensions and 16x16x16 in three.
/// `clear` resets the touched chunks and keeps their allocations for reuse.
#[derive(Debug, Clone)]
pub struct SiteMap<T: Copy + Default> {
    shift: [u32; 3],
    index: FxHashMap<u64, u32>,
    chunks: Vec<Box<[T]>>,
    in_use: usize,
    cached_key: u64,
    cached_chunk: u32,
}

impl<T: Copy + Default> SiteMap<T> {
    pub fn new(dim: usize) -> Self {
        let shift = if dim == 2 { [6, 6, 0] } else { [4, 4, 4] };
        Self {
            shift,
            index: FxHashMap::default(),
            chunks: Vec::new(),
            in_use: 0,
            cached_key: u64::MAX,
            cached_chunk: 0,
        }
    }

    #[inline]
    fn split(&self, s: Site) -> (u64, usize) {
        let [sx, sy, sz] = self.shift;
        let key = ((s[0] >> sx) as u64 & KEY_MASK)
            | (((s[1] >> sy) as u64 & KEY_MASK) << KEY_BITS)
            | (((s[2] >> sz) as u64 & KEY_MASK) << (2 * KEY_BITS));
        let off = (s[0] & ((1 << sx) - 1)) as usize
            | (((s[1] & ((1 << sy) - 1)) as usize) << sx)
            | (((s[2] & ((1 << sz) - 1)) as usize) << (sx + sy));
        (key, off)
    }

    #[inline]
    pub fn get(&mut self, s: Site) -> T {
        let (key, off) = self.split(s);
        if key == self.cached_key {
            return self.chunks[self.cached_chunk as usize][off];
        }
        match self.index.get(&key) {
            Some(&c) => {
                self.cached_key = key;
                self.cached_chunk = c;
                self.chunks[c as usize][off]
            }
            None => T::default(),
        }
    }

    #[inline]
    pub fn get_mut(&mut self, s: Site) -> &mut T {
        let (key, off) = self.split(s);
        if key != self.cached_key {
            let c = match self.index.get(&key) {
                Some(&c) => c,
                None => self.allocate(key),
            };
            self.cached_key = key;
            self.cached_chunk = c;
        }
        &mut self.chunks[self.cached_chunk as usize][off]
    }

    #[inline]
    pub fn set(&mut self, s: Site, value: T) {
        *self.get_mut(s) = value;
    }

    fn allocate(&mut self, key: u64) -> u32 {
        if self.in_use == self.chunks.len() {
            self.chunks.push(vec![T::default(); CHUNK_LEN].into_boxed_slice());
        }
        let c = self.in_use as u32;
        self.in_use += 1;
        self.index.insert(key, c);
        c
    }

    pub fn clear(&mut self) {
        for chunk in &mut self.chunks[..self.in_use] {
            chunk.fill(T::default());
        }
        self.in_use = 0;
        self.index.clear();
        self.cached_key = u64::MAX;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn site_map_matches_hash_map() {
        for dim in [2, 3] {
            let mut map = SiteMap::<u32>::new(dim);
            let mut reference = HashMap::new();
            let mut x: u64 = 12345;
            for i in 0..20_000u32 {
                x = crate::rng::mix64(x);
                let c = |k: u32| ((x >> k) % 301) as i32 - 150;
                let s = if dim == 2 {
                    [c(0), c(16), 0]
                } else {
                    [c(0), c(16), c(32)]
                };
                map.set(s, i + 1);
                reference.insert(s, i + 1);
            }
            for (s, v) in &reference {
                assert_eq!(map.get(*s), *v);
            }
            assert_eq!(map.get([1000, -1000, 0]), 0);
            map.clear();
            for s in reference.keys() {
                assert_eq!(map.get(*s), 0);
            }
        }
    }

    #[test]
    fn negative_coordinates_do_not_alias() {
        let mut map = SiteMap::<u8>::new(2);
        map.set([-1, 0, 0], 1);
        map.set([63, 0, 0], 2);
        map.set([-64, 0, 0], 3);
        assert_eq!(map.get([-1, 0, 0]), 1);
        assert_eq!(map.get([63, 0, 0]), 2);
        assert_eq!(map.get([-64, 0, 0]), 3);
        assert_eq!(map.get([0, 0, 0]), 0);
    }
}
