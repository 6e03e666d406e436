//! One- and two-point cut-point Green's functions.
//!
//! For a target `z` and scale `s`, a path hits when one of its interior cut
//! points lies within `e^{-s}` of `z`. The one-point estimate is
//! `e^{eta s}` times the hit frequency; the two-point estimate uses
//! simultaneous hits and `e^{2 eta s}`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cut::CutDetector;
use crate::error::{invalid, Error, Result};
use crate::geometry::{check_dim, dist, Point};
use crate::parallel::fold_trials;
use crate::paths::{sample_bridge, sample_halfplane_excursion, LatticePath};
use crate::rng::derive_seed;
use crate::spatial::SpatialHash;
use crate::stats::{fit_line, LineFit};

/// Path ensemble probed by the estimators. Bridges and excursions are
/// sampled per path index; `Fixed` replays the given paths in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Ensemble {
    /// Grid-rounded Gaussian bridge from the origin to `endpoint` in unit
    /// time, joined into a nearest-neighbour path.
    Bridge {
        dim: usize,
        n_steps: usize,
        endpoint: Point<f64>,
        grid_h: f64,
    },
    /// Half-plane excursion from the origin stopped at `radius_cap`.
    Excursion {
        radius_cap: f64,
        grid_h: f64,
    },
    Fixed(Vec<LatticePath>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleDescriptor {
    Bridge {
        dim: usize,
        n_steps: usize,
        endpoint: Point<f64>,
        grid_h: f64,
    },
    Excursion {
        radius_cap: f64,
        grid_h: f64,
    },
    Fixed {
        n_paths: usize,
    },
}

impl Ensemble {
    pub fn validate(&self) -> Result<()> {
        match self {
            Ensemble::Bridge {
                dim,
                n_steps,
                grid_h,
                endpoint,
            } => {
                check_dim(*dim)?;
                if *n_steps == 0 {
                    return Err(invalid("n_steps", "must be positive"));
                }
                if !(*grid_h > 0.0) {
                    return Err(invalid("grid_h", "must be positive"));
                }
                if dist(endpoint, &[0.0; 3]) == 0.0 {
                    return Err(Error::DegenerateTarget("bridge endpoint at the origin".into()));
                }
            }
            Ensemble::Excursion { radius_cap, grid_h } => {
                if !(*grid_h > 0.0) || !(*radius_cap > *grid_h) {
                    return Err(invalid("radius_cap", "need radius_cap > grid_h > 0"));
                }
            }
            Ensemble::Fixed(paths) => {
                if paths.is_empty() {
                    return Err(invalid("paths", "need at least one path"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Ensemble::Bridge { dim, .. } => *dim,
            Ensemble::Excursion { .. } => 2,
            Ensemble::Fixed(paths) => paths[0].dim(),
        }
    }

    /// Physical lattice spacing; the usable scale window ends at
    /// `ln(1 / (4 h))`.
    pub fn step_scale(&self) -> f64 {
        match self {
            Ensemble::Bridge { grid_h, .. } | Ensemble::Excursion { grid_h, .. } => *grid_h,
            Ensemble::Fixed(paths) => paths.iter().map(|p| p.step_scale()).fold(0.0, f64::max),
        }
    }

    /// Points the targets must stay away from.
    pub fn endpoints(&self) -> Vec<Point<f64>> {
        match self {
            Ensemble::Bridge { endpoint, .. } => vec![[0.0; 3], *endpoint],
            Ensemble::Excursion { .. } => vec![[0.0; 3]],
            Ensemble::Fixed(_) => Vec::new(),
        }
    }

    pub fn descriptor(&self) -> EnsembleDescriptor {
        match self {
            Ensemble::Bridge {
                dim,
                n_steps,
                endpoint,
                grid_h,
            } => EnsembleDescriptor::Bridge {
                dim: *dim,
                n_steps: *n_steps,
                endpoint: *endpoint,
                grid_h: *grid_h,
            },
            Ensemble::Excursion { radius_cap, grid_h } => EnsembleDescriptor::Excursion {
                radius_cap: *radius_cap,
                grid_h: *grid_h,
            },
            Ensemble::Fixed(paths) => EnsembleDescriptor::Fixed { n_paths: paths.len() },
        }
    }

    /// Path number `index`, nearest-neighbour.
    pub fn sample(&self, master_seed: u64, index: u64) -> Result<LatticePath> {
        let seed = derive_seed(master_seed, index);
        match self {
            Ensemble::Bridge {
                dim,
                n_steps,
                endpoint,
                grid_h,
            } => Ok(sample_bridge(*dim, *n_steps, *endpoint, *grid_h, seed)?.staircase()),
            Ensemble::Excursion { radius_cap, grid_h } => sample_halfplane_excursion(*radius_cap, *grid_h, seed),
            Ensemble::Fixed(paths) => paths
                .get(index as usize)
                .cloned()
                .ok_or(invalid("n_paths", "more paths requested than supplied")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreensRun {
    pub n_paths: u64,
    pub first_path: u64,
    pub master_seed: u64,
    pub workers: usize,
}

impl GreensRun {
    pub fn new(n_paths: u64, master_seed: u64) -> Self {
        Self {
            n_paths,
            first_path: 0,
            master_seed,
            workers: 1,
        }
    }
}

/// Hit counts of a path sample over a set of targets and target pairs.
/// Counts are integers, so tables of disjoint path ranges simply add.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitTable {
    pub n_paths: u64,
    /// `[target][scale]`
    pub single: Vec<Vec<u64>>,
    /// `[pair][scale]`
    pub joint: Vec<Vec<u64>>,
}

impl HitTable {
    fn zeros(n_targets: usize, n_pairs: usize, n_s: usize) -> Self {
        Self {
            n_paths: 0,
            single: vec![vec![0; n_s]; n_targets],
            joint: vec![vec![0; n_s]; n_pairs],
        }
    }

    pub fn add(mut self, other: &Self) -> Self {
        self.n_paths += other.n_paths;
        for (a, b) in self.single.iter_mut().zip(&other.single) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.joint.iter_mut().zip(&other.joint) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self
    }
}

fn check_scales(s_values: &[f64]) -> Result<()> {
    if s_values.is_empty() || s_values.iter().any(|s| !s.is_finite()) {
        return Err(invalid("s_values", "need at least one finite scale"));
    }
    if s_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("s_values", "must be strictly increasing"));
    }
    Ok(())
}

/// `-ln` of the distance from `z` to the nearest endpoint, checking that the
/// largest probe radius stays inside that distance.
fn endpoint_b(ens: &Ensemble, z: &Point<f64>, s_min: f64) -> Result<f64> {
    let d = ens.endpoints().iter().map(|e| dist(z, e)).fold(f64::INFINITY, f64::min);
    if d == 0.0 {
        return Err(Error::DegenerateTarget(format!("{z:?} is a path endpoint")));
    }
    if (-s_min).exp() >= d {
        return Err(invalid(
            "s_values",
            format!("radius e^-{s_min} reaches an endpoint from {z:?}"),
        ));
    }
    Ok(-d.ln())
}

/// Counts, per scale, paths with an interior cut point within `e^{-s}` of
/// each target and of both members of each pair.
pub fn hit_table(
    ens: &Ensemble,
    run: &GreensRun,
    targets: &[Point<f64>],
    pairs: &[(usize, usize)],
    s_values: &[f64],
) -> Result<HitTable> {
    ens.validate()?;
    check_scales(s_values)?;
    if pairs.iter().any(|&(i, j)| i >= targets.len() || j >= targets.len()) {
        return Err(invalid("pairs", "target index out of range"));
    }
    if let Ensemble::Fixed(paths) = ens {
        if run.first_path + run.n_paths > paths.len() as u64 {
            return Err(invalid("n_paths", "more paths requested than supplied"));
        }
    }
    let dim = ens.dim();
    let radii: Vec<f64> = s_values.iter().map(|s| (-s).exp()).collect();
    let r_max = radii[0];
    let n_s = s_values.len();
    let zero = HitTable::zeros(targets.len(), pairs.len(), n_s);
    let range = run.first_path..run.first_path + run.n_paths;
    let table = fold_trials(
        run.workers,
        range,
        64,
        zero.clone(),
        |r| {
            let mut det = CutDetector::new(dim);
            let mut acc = zero.clone();
            // deepest scale index hit per target, as a count of scales
            let mut depth = vec![0usize; targets.len()];
            for i in r {
                let path = ens
                    .sample(run.master_seed, i)
                    .expect("ensemble parameters were validated");
                let cuts = det.cut_times(&path, true);
                acc.n_paths += 1;
                if cuts.is_empty() {
                    continue;
                }
                let hash = SpatialHash::from_points(dim, r_max, [0.0; 3], &cuts.points);
                for (t, z) in targets.iter().enumerate() {
                    depth[t] = match hash.nearest_within(z, r_max) {
                        Some(d2) => {
                            let d = d2.sqrt();
                            radii.iter().take_while(|&&r| d <= r).count()
                        }
                        None => 0,
                    };
                    for k in 0..depth[t] {
                        acc.single[t][k] += 1;
                    }
                }
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    for k in 0..depth[a].min(depth[b]) {
                        acc.joint[p][k] += 1;
                    }
                }
            }
            acc
        },
        |a, b| a.add(&b),
    );
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensSample {
    pub z: Point<f64>,
    pub w: Option<Point<f64>>,
    pub s_values: Vec<f64>,
    pub eta: f64,
    pub hits: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_paths: u64,
    pub ensemble: EnsembleDescriptor,
    /// Scales between `b + 1` and `ln(1 / (4 h))`; empty when `lo > hi`.
    pub usable_window: (f64, f64),
}

impl GreensSample {
    fn build(
        ens: &Ensemble,
        z: Point<f64>,
        w: Option<Point<f64>>,
        s_values: &[f64],
        eta: f64,
        hits: Vec<u64>,
        n_paths: u64,
        b: f64,
    ) -> Self {
        let power = if w.is_some() { 2.0 } else { 1.0 };
        let n = n_paths.max(1) as f64;
        let frequencies: Vec<f64> = hits.iter().map(|&k| k as f64 / n).collect();
        let scale: Vec<f64> = s_values.iter().map(|s| (power * eta * s).exp()).collect();
        Self {
            z,
            w,
            s_values: s_values.to_vec(),
            eta,
            estimates: frequencies.iter().zip(&scale).map(|(p, c)| p * c).collect(),
            stderrs: frequencies
                .iter()
                .zip(&scale)
                .map(|(p, c)| c * (p * (1.0 - p) / n).sqrt())
                .collect(),
            frequencies,
            hits,
            n_paths,
            ensemble: ens.descriptor(),
            usable_window: (b + 1.0, (1.0 / (4.0 * ens.step_scale())).ln()),
        }
    }

    /// Columns `s,frequency,estimate,stderr`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "s,frequency,estimate,stderr")?;
        for k in 0..self.s_values.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.s_values[k], self.frequencies[k], self.estimates[k], self.stderrs[k]
            )?;
        }
        Ok(())
    }
}

/// One-point samples from a hit table whose targets are `zs`.
pub fn one_point_samples(
    ens: &Ensemble,
    zs: &[Point<f64>],
    s_values: &[f64],
    eta: f64,
    table: &HitTable,
) -> Result<Vec<GreensSample>> {
    check_scales(s_values)?;
    if table.single.len() != zs.len() {
        return Err(invalid("table", "target count mismatch"));
    }
    let bs = zs
        .iter()
        .map(|z| endpoint_b(ens, z, s_values[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(zs
        .iter()
        .zip(bs)
        .zip(&table.single)
        .map(|((z, b), hits)| GreensSample::build(ens, *z, None, s_values, eta, hits.clone(), table.n_paths, b))
        .collect())
}

/// One-point estimates for several targets from a shared path sample.
pub fn estimate_one_point_many(
    ens: &Ensemble,
    run: &GreensRun,
    zs: &[Point<f64>],
    s_values: &[f64],
    eta: f64,
) -> Result<Vec<GreensSample>> {
    check_scales(s_values)?;
    for z in zs {
        endpoint_b(ens, z, s_values[0])?;
    }
    let table = hit_table(ens, run, zs, &[], s_values)?;
    one_point_samples(ens, zs, s_values, eta, &table)
}

pub fn estimate_one_point(
    ens: &Ensemble,
    run: &GreensRun,
    z: Point<f64>,
    s_values: &[f64],
    eta: f64,
) -> Result<GreensSample> {
    Ok(estimate_one_point_many(ens, run, &[z], s_values, eta)?.remove(0))
}

/// Hit-table targets `[z0, w0, z1, w1, ...]` and the matching pair indices.
pub fn two_point_layout(pairs: &[(Point<f64>, Point<f64>)]) -> (Vec<Point<f64>>, Vec<(usize, usize)>) {
    let targets = pairs.iter().flat_map(|(z, w)| [*z, *w]).collect();
    let index = (0..pairs.len()).map(|p| (2 * p, 2 * p + 1)).collect();
    (targets, index)
}

fn pair_b(ens: &Ensemble, z: &Point<f64>, w: &Point<f64>, s_min: f64) -> Result<f64> {
    let sep = dist(z, w);
    if sep == 0.0 {
        return Err(Error::DegenerateTarget("z and w coincide".into()));
    }
    Ok(endpoint_b(ens, z, s_min)?
        .max(endpoint_b(ens, w, s_min)?)
        .max(-sep.ln()))
}

/// Two-point samples from a hit table laid out by [`two_point_layout`].
pub fn two_point_samples(
    ens: &Ensemble,
    pairs: &[(Point<f64>, Point<f64>)],
    s_values: &[f64],
    eta: f64,
    table: &HitTable,
) -> Result<Vec<GreensSample>> {
    check_scales(s_values)?;
    if table.joint.len() != pairs.len() {
        return Err(invalid("table", "pair count mismatch"));
    }
    let bs = pairs
        .iter()
        .map(|(z, w)| pair_b(ens, z, w, s_values[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .iter()
        .zip(bs)
        .zip(&table.joint)
        .map(|(((z, w), b), hits)| {
            GreensSample::build(ens, *z, Some(*w), s_values, eta, hits.clone(), table.n_paths, b)
        })
        .collect())
}

/// Two-point estimates for several pairs from a shared path sample.
pub fn estimate_two_point_many(
    ens: &Ensemble,
    run: &GreensRun,
    pairs: &[(Point<f64>, Point<f64>)],
    s_values: &[f64],
    eta: f64,
) -> Result<Vec<GreensSample>> {
    check_scales(s_values)?;
    for (z, w) in pairs {
        pair_b(ens, z, w, s_values[0])?;
    }
    let (targets, index) = two_point_layout(pairs);
    let table = hit_table(ens, run, &targets, &index, s_values)?;
    two_point_samples(ens, pairs, s_values, eta, &table)
}

pub fn estimate_two_point(
    ens: &Ensemble,
    run: &GreensRun,
    z: Point<f64>,
    w: Point<f64>,
    s_values: &[f64],
    eta: f64,
) -> Result<GreensSample> {
    Ok(estimate_two_point_many(ens, run, &[(z, w)], s_values, eta)?.remove(0))
}

/// `|z| |e - z|`, the shape kernel of the one-point function raised to
/// `-eta`.
pub fn shape_kernel(z: &Point<f64>, endpoint: &Point<f64>, eta: f64) -> f64 {
    (dist(z, &[0.0; 3]) * dist(z, endpoint)).powf(-eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub i: usize,
    pub j: usize,
    pub z_i: Point<f64>,
    pub z_j: Point<f64>,
    pub empirical: f64,
    pub theoretical: f64,
    pub relative_deviation: f64,
}

/// Ratio table for all pairs `i < j` from per-target estimates.
pub fn shape_ratios(zs: &[Point<f64>], estimates: &[f64], endpoint: &Point<f64>, eta: f64) -> Result<Vec<RatioRow>> {
    if zs.len() < 2 || estimates.len() != zs.len() {
        return Err(Error::TooFew {
            what: "targets",
            needed: 2,
            got: zs.len().min(estimates.len()),
        });
    }
    let mut rows = Vec::new();
    for i in 0..zs.len() {
        for j in i + 1..zs.len() {
            let empirical = estimates[i] / estimates[j];
            let theoretical = shape_kernel(&zs[i], endpoint, eta) / shape_kernel(&zs[j], endpoint, eta);
            rows.push(RatioRow {
                i,
                j,
                z_i: zs[i],
                z_j: zs[j],
                empirical,
                theoretical,
                relative_deviation: empirical / theoretical - 1.0,
            });
        }
    }
    Ok(rows)
}

/// Estimates the one-point function at each target at scale `s` and compares
/// pairwise ratios with the shape `(|z| |e - z|)^{-eta}`.
pub fn shape_ratio_test(
    ens: &Ensemble,
    run: &GreensRun,
    zs: &[Point<f64>],
    s: f64,
    eta: f64,
) -> Result<(Vec<GreensSample>, Vec<RatioRow>)> {
    let Ensemble::Bridge { endpoint, .. } = ens else {
        return Err(invalid("ensemble", "shape ratios need a bridge ensemble"));
    };
    if zs.len() < 2 {
        return Err(Error::TooFew {
            what: "targets",
            needed: 2,
            got: zs.len(),
        });
    }
    let samples = estimate_one_point_many(ens, run, zs, &[s], eta)?;
    let est: Vec<f64> = samples.iter().map(|g| g.estimates[0]).collect();
    let rows = shape_ratios(zs, &est, endpoint, eta)?;
    Ok((samples, rows))
}

/// Log-log line through `(x, value)` pairs with positive values.
pub fn fit_profile_exponent(xs: &[f64], values: &[f64]) -> Result<LineFit<f64>> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(x, v)| (x.ln(), v.ln()))
        .unzip();
    fit_line(&lx, &ly, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub coordinate: f64,
    pub hits: u64,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneProfile {
    pub s: f64,
    pub eta: f64,
    pub n_paths: u64,
    /// Targets `x + i`, symmetrised over `+-x`; fitted against `ln(x + 1)`.
    pub horizontal: Vec<ProfilePoint>,
    /// Targets `rho e^{i angle}`; fitted against `ln rho`.
    pub radial: Vec<ProfilePoint>,
    pub angle: f64,
    pub horizontal_fit: Option<LineFit<f64>>,
    pub radial_fit: Option<LineFit<f64>>,
}

/// Targets of a half-plane profile: `x + i` and `-x + i` for each `x`, then
/// `rho e^{i angle}` for each `rho`.
pub fn profile_targets(xs: &[f64], angle: f64, rhos: &[f64]) -> Result<Vec<Point<f64>>> {
    if !(angle > 0.0 && angle < std::f64::consts::PI) {
        return Err(Error::DegenerateTarget(
            "ray not strictly inside the upper half-plane".into(),
        ));
    }
    if xs.iter().any(|x| !(*x >= 0.0)) || rhos.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("xs", "coordinates must be non-negative and radii positive"));
    }
    let mut targets: Vec<Point<f64>> = Vec::with_capacity(2 * xs.len() + rhos.len());
    for &x in xs {
        targets.push([x, 1.0, 0.0]);
        targets.push([-x, 1.0, 0.0]);
    }
    for &r in rhos {
        targets.push([r * angle.cos(), r * angle.sin(), 0.0]);
    }
    Ok(targets)
}

/// Profile from a single-scale hit table laid out by [`profile_targets`].
pub fn profile_from_table(
    xs: &[f64],
    angle: f64,
    rhos: &[f64],
    s: f64,
    eta: f64,
    table: &HitTable,
) -> Result<HalfPlaneProfile> {
    if table.single.len() != 2 * xs.len() + rhos.len() || table.single.iter().any(|h| h.len() != 1) {
        return Err(invalid("table", "layout does not match the profile"));
    }
    let n = table.n_paths.max(1) as f64;
    let c = (eta * s).exp();
    let point = |coordinate: f64, hits: u64, trials: f64| {
        let p = hits as f64 / trials;
        ProfilePoint {
            coordinate,
            hits,
            estimate: c * p,
            stderr: c * (p * (1.0 - p) / trials).sqrt(),
        }
    };
    let horizontal: Vec<ProfilePoint> = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| point(x, table.single[2 * k][0] + table.single[2 * k + 1][0], 2.0 * n))
        .collect();
    let radial: Vec<ProfilePoint> = rhos
        .iter()
        .enumerate()
        .map(|(k, &r)| point(r, table.single[2 * xs.len() + k][0], n))
        .collect();
    let fit = |pts: &[ProfilePoint], shift: f64| {
        let x: Vec<f64> = pts.iter().map(|p| p.coordinate + shift).collect();
        let v: Vec<f64> = pts.iter().map(|p| p.estimate).collect();
        fit_profile_exponent(&x, &v).ok()
    };
    Ok(HalfPlaneProfile {
        s,
        eta,
        n_paths: table.n_paths,
        horizontal_fit: fit(&horizontal, 1.0),
        radial_fit: fit(&radial, 0.0),
        horizontal,
        radial,
        angle,
    })
}

/// Green's function profile of half-plane excursions along the line
/// `y = 1` and along a ray at fixed angle, at scale `s`.
pub fn halfplane_greens_profile(
    ens: &Ensemble,
    run: &GreensRun,
    xs: &[f64],
    angle: f64,
    rhos: &[f64],
    s: f64,
    eta: f64,
) -> Result<HalfPlaneProfile> {
    if !matches!(ens, Ensemble::Excursion { .. }) {
        return Err(invalid("ensemble", "half-plane profiles need an excursion ensemble"));
    }
    let targets = profile_targets(xs, angle, rhos)?;
    for z in &targets {
        endpoint_b(ens, z, s)?;
    }
    let table = hit_table(ens, run, &targets, &[], &[s])?;
    profile_from_table(xs, angle, rhos, s, eta, &table)
}
