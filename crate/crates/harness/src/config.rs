//! Experiment configuration files (TOML).
//!
//! ```toml
//! master_seed = 2024
//! workers = 4
//!
//! [experiment]
//! kind = "pair_exponent"
//! dim = 2
//! n_trials = 100000
//! ```
//!
//! Every parameter other than the seed, the kind and the sample sizes has a
//! documented default, and the echo stored in each run report lists the
//! values actually used.

use std::path::{Path, PathBuf};

use cutlab_core::geometry::{dist, Aabb, Point};
use cutlab_core::greens::{profile_targets, Ensemble};
use cutlab_core::nonintersect::{HalfPlaneConfig, PairConfig, Statistic};
use cutlab_core::Site;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default = "one", alias = "n_workers")]
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    master_seed: u64,
    #[serde(default = "one", alias = "n_workers")]
    workers: usize,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

fn parse_part<T: DeserializeOwned>(value: toml::Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            prefix.trim_end_matches('.').to_string()
        } else {
            format!("{prefix}{path}")
        };
        let field = if field.is_empty() {
            "<document>".to_string()
        } else {
            field
        };
        HarnessError::invalid(field, e.into_inner().message().trim())
    })
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    PairExponent(PairParams),
    HalfplaneExponent(HalfPlaneParams),
    Content(ContentParams),
    GreensOne(GreensOneParams),
    GreensTwo(GreensTwoParams),
    Separation(PairParams),
    QuasiInvariance(PairParams),
    CutBench(CutBenchParams),
}

pub const KINDS: [&str; 8] = [
    "pair_exponent",
    "halfplane_exponent",
    "content",
    "greens_one",
    "greens_two",
    "separation",
    "quasi_invariance",
    "cut_bench",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    pub dim: usize,
    #[serde(default = "origin")]
    pub start1: Vec<i32>,
    #[serde(default = "east")]
    pub start2: Vec<i32>,
    #[serde(default = "dyadic_levels")]
    pub levels: Vec<f64>,
    pub n_trials: u64,
    #[serde(default)]
    pub first_trial: u64,
    #[serde(default = "step_cap")]
    pub step_cap_factor: f64,
    #[serde(default = "discard_rate")]
    pub max_discard_rate: f64,
    /// Separation threshold on `delta`.
    #[serde(default = "threshold")]
    pub threshold: f64,
    /// Level index pairs for quasi-invariance tests; consecutive levels when
    /// empty.
    #[serde(default)]
    pub level_pairs: Vec<[usize; 2]>,
    #[serde(default)]
    pub statistic: Statistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_samples: Option<usize>,
}

fn origin() -> Vec<i32> {
    vec![0, 0]
}
fn east() -> Vec<i32> {
    vec![1, 0]
}
fn dyadic_levels() -> Vec<f64> {
    (4..=9).map(|k| f64::from(1u32 << k)).collect()
}
fn step_cap() -> f64 {
    100.0
}
fn discard_rate() -> f64 {
    0.01
}
fn threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfPlaneParams {
    #[serde(default = "halfplane_levels")]
    pub levels: Vec<f64>,
    pub n_trials: u64,
    #[serde(default)]
    pub first_trial: u64,
}

fn halfplane_levels() -> Vec<f64> {
    vec![16.0, 32.0, 64.0, 128.0]
}

/// Minkowski content profile of the interior cut points of simple random
/// walks rescaled by `step_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentParams {
    #[serde(default = "two")]
    pub dim: usize,
    pub n_steps: usize,
    pub n_walks: u64,
    #[serde(default)]
    pub first_walk: u64,
    /// Defaults to `1 / sqrt(n_steps)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_scale: Option<f64>,
    /// Dimension parameter; defaults to 0.75 in the plane and 1.42 in space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Additional dimension parameters reported for comparison.
    #[serde(default)]
    pub compare_deltas: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    #[serde(default = "twelve")]
    pub n_r: usize,
    #[serde(default = "divisor")]
    pub grid_divisor: f64,
    #[serde(default = "region_lo")]
    pub region_lo: Vec<f64>,
    #[serde(default = "region_hi")]
    pub region_hi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plateau_window: Option<usize>,
}

fn two() -> usize {
    2
}
fn twelve() -> usize {
    12
}
fn divisor() -> f64 {
    32.0
}
fn region_lo() -> Vec<f64> {
    vec![-8.0, -8.0, -8.0]
}
fn region_hi() -> Vec<f64> {
    vec![8.0, 8.0, 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleConfig {
    Bridge {
        #[serde(default = "two")]
        dim: usize,
        n_steps: usize,
        #[serde(default = "unit_endpoint")]
        endpoint: Vec<f64>,
        grid_h: f64,
    },
    Excursion {
        radius_cap: f64,
        grid_h: f64,
    },
}

fn unit_endpoint() -> Vec<f64> {
    vec![1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub xs: Vec<f64>,
    #[serde(default = "right_angle")]
    pub angle: f64,
    pub rhos: Vec<f64>,
}

fn right_angle() -> f64 {
    std::f64::consts::FRAC_PI_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensOneParams {
    pub ensemble: EnsembleConfig,
    pub n_paths: u64,
    #[serde(default)]
    pub first_path: u64,
    /// Target points; leave empty when `profile` is given.
    #[serde(default)]
    pub targets: Vec<Vec<f64>>,
    pub s_values: Vec<f64>,
    pub eta: f64,
    /// Scale of the ratio table; defaults to the last scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_s: Option<f64>,
    /// Half-plane profile along `y = 1` and a ray; needs an excursion
    /// ensemble and a single scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointPair {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensTwoParams {
    pub ensemble: EnsembleConfig,
    pub n_paths: u64,
    #[serde(default)]
    pub first_path: u64,
    pub pairs: Vec<PointPair>,
    pub s_values: Vec<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutBenchParams {
    pub dim: usize,
    pub n_steps: usize,
    #[serde(default = "one_u64")]
    pub n_walks: u64,
    #[serde(default)]
    pub first_walk: u64,
}

fn one_u64() -> u64 {
    1
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::invalid(format!("experiment.{field}"), reason))
    }
}

fn check_dim(dim: usize, field: &str) -> Result<()> {
    check(dim == 2 || dim == 3, field, "must be 2 or 3")
}

fn increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Pads a 2- or 3-entry coordinate list to a point.
pub fn to_point(v: &[f64], dim: usize, field: &str) -> Result<Point<f64>> {
    check(
        v.len() == dim || (v.len() == 3 && dim == 2 && v[2] == 0.0),
        field,
        "wrong number of coordinates",
    )?;
    check(v.iter().all(|c| c.is_finite()), field, "coordinates must be finite")?;
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    Ok(p)
}

fn to_site(v: &[i32], dim: usize, field: &str) -> Result<Site> {
    check(
        v.len() == dim || (v.len() == 3 && dim == 2 && v[2] == 0),
        field,
        "wrong number of coordinates",
    )?;
    let mut s = [0; 3];
    s[..v.len()].copy_from_slice(v);
    Ok(s)
}

impl PairParams {
    pub fn to_core(&self, master_seed: u64, workers: usize) -> Result<PairConfig> {
        check_dim(self.dim, "dim")?;
        let start1 = to_site(&self.start1, self.dim, "start1")?;
        let start2 = to_site(&self.start2, self.dim, "start2")?;
        check(start1 != start2, "start2", "must differ from start1")?;
        check(
            !self.levels.is_empty() && self.levels.iter().all(|l| *l > 0.0),
            "levels",
            "need positive radii",
        )?;
        check(increasing(&self.levels), "levels", "must be strictly increasing")?;
        check(self.n_trials > 0, "n_trials", "must be positive")?;
        check(self.step_cap_factor > 0.0, "step_cap_factor", "must be positive")?;
        check(
            (0.0..=1.0).contains(&self.max_discard_rate),
            "max_discard_rate",
            "must lie in [0, 1]",
        )?;
        check(self.threshold >= 0.0, "threshold", "must be non-negative")?;
        let n = self.levels.len();
        check(
            self.level_pairs.iter().all(|[a, b]| *a < n && *b < n && a != b),
            "level_pairs",
            "level indices out of range",
        )?;
        Ok(PairConfig {
            dim: self.dim,
            start1,
            start2,
            levels: self.levels.clone(),
            n_trials: self.n_trials,
            first_trial: self.first_trial,
            master_seed,
            step_cap_factor: self.step_cap_factor,
            max_discard_rate: self.max_discard_rate,
            workers,
        })
    }

    pub fn level_pairs(&self) -> Vec<(usize, usize)> {
        if self.level_pairs.is_empty() {
            (1..self.levels.len()).map(|k| (k - 1, k)).collect()
        } else {
            self.level_pairs.iter().map(|[a, b]| (*a, *b)).collect()
        }
    }
}

impl HalfPlaneParams {
    pub fn to_core(&self, master_seed: u64, workers: usize) -> Result<HalfPlaneConfig> {
        check(
            self.levels.len() >= 3 && self.levels.iter().all(|l| *l > 1.5),
            "levels",
            "need at least three radii beyond the starts",
        )?;
        check(increasing(&self.levels), "levels", "must be strictly increasing")?;
        check(self.n_trials > 0, "n_trials", "must be positive")?;
        Ok(HalfPlaneConfig {
            levels: self.levels.clone(),
            n_trials: self.n_trials,
            first_trial: self.first_trial,
            master_seed,
            workers,
        })
    }
}

impl ContentParams {
    pub fn step_scale(&self) -> f64 {
        self.step_scale.unwrap_or(1.0 / (self.n_steps.max(1) as f64).sqrt())
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(if self.dim == 3 { 1.42 } else { 0.75 })
    }

    pub fn r_values(&self) -> Vec<f64> {
        if self.n_r == 1 {
            return vec![self.r_min];
        }
        (0..self.n_r)
            .map(|i| self.r_min + (self.r_max - self.r_min) * i as f64 / (self.n_r - 1) as f64)
            .collect()
    }

    pub fn region(&self) -> Result<Aabb<f64>> {
        let lo = to_point(
            &self.region_lo[..self.dim.min(self.region_lo.len())],
            self.dim,
            "region_lo",
        )?;
        let hi = to_point(
            &self.region_hi[..self.dim.min(self.region_hi.len())],
            self.dim,
            "region_hi",
        )?;
        Aabb::new(self.dim, lo, hi).map_err(|e| HarnessError::invalid("experiment.region_hi", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim, "dim")?;
        check(self.n_steps > 0, "n_steps", "must be positive")?;
        check(self.n_walks > 0, "n_walks", "must be positive")?;
        check(self.step_scale() > 0.0, "step_scale", "must be positive")?;
        check(
            (0.0..=self.dim as f64).contains(&self.delta())
                && self.compare_deltas.iter().all(|d| (0.0..=self.dim as f64).contains(d)),
            "delta",
            "must lie in [0, dim]",
        )?;
        check(
            self.r_min.is_finite() && self.r_max.is_finite() && self.r_min < self.r_max,
            "r_max",
            "need r_min < r_max",
        )?;
        check(self.n_r >= 2, "n_r", "need at least two scales")?;
        check(self.grid_divisor >= 4.0, "grid_divisor", "must be at least 4")?;
        self.region()?;
        Ok(())
    }
}

impl EnsembleConfig {
    pub fn to_core(&self, field: &str) -> Result<Ensemble> {
        let ens = match self {
            EnsembleConfig::Bridge {
                dim,
                n_steps,
                endpoint,
                grid_h,
            } => {
                check_dim(*dim, &format!("{field}.dim"))?;
                Ensemble::Bridge {
                    dim: *dim,
                    n_steps: *n_steps,
                    endpoint: to_point(endpoint, *dim, &format!("{field}.endpoint"))?,
                    grid_h: *grid_h,
                }
            }
            EnsembleConfig::Excursion { radius_cap, grid_h } => Ensemble::Excursion {
                radius_cap: *radius_cap,
                grid_h: *grid_h,
            },
        };
        ens.validate()
            .map_err(|e| HarnessError::invalid(format!("experiment.{field}"), e.to_string()))?;
        Ok(ens)
    }
}

/// The largest probe ball around a target must avoid the path endpoints.
fn check_reach(ens: &Ensemble, z: &Point<f64>, s_min: f64, field: &str) -> Result<()> {
    let d = ens.endpoints().iter().map(|e| dist(z, e)).fold(f64::INFINITY, f64::min);
    check(d > 0.0, field, "coincides with a path endpoint")?;
    check(
        (-s_min).exp() < d,
        field,
        &format!("probe radius e^-{s_min} reaches a path endpoint"),
    )
}

fn check_scales(s_values: &[f64]) -> Result<()> {
    check(
        !s_values.is_empty() && s_values.iter().all(|s| s.is_finite()),
        "s_values",
        "need at least one finite scale",
    )?;
    check(increasing(s_values), "s_values", "must be strictly increasing")
}

impl GreensOneParams {
    pub fn targets(&self, dim: usize) -> Result<Vec<Point<f64>>> {
        self.targets
            .iter()
            .enumerate()
            .map(|(i, t)| to_point(t, dim, &format!("targets[{i}]")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let ens = self.ensemble.to_core("ensemble")?;
        check(self.n_paths > 0, "n_paths", "must be positive")?;
        check_scales(&self.s_values)?;
        check(self.eta > 0.0, "eta", "must be positive")?;
        match &self.profile {
            Some(p) => {
                check(
                    self.targets.is_empty(),
                    "targets",
                    "leave empty when a profile is given",
                )?;
                check(
                    matches!(ens, Ensemble::Excursion { .. }),
                    "profile",
                    "needs an excursion ensemble",
                )?;
                check(self.s_values.len() == 1, "s_values", "a profile uses a single scale")?;
                check(
                    p.angle > 0.0 && p.angle < std::f64::consts::PI,
                    "profile.angle",
                    "ray must point into the upper half-plane",
                )?;
                check(p.xs.iter().all(|x| *x >= 0.0), "profile.xs", "must be non-negative")?;
                check(p.rhos.iter().all(|r| *r > 0.0), "profile.rhos", "must be positive")?;
                for z in profile_targets(&p.xs, p.angle, &p.rhos)? {
                    check_reach(&ens, &z, self.s_values[0], "profile")?;
                }
            }
            None => {
                check(!self.targets.is_empty(), "targets", "need at least one target")?;
                for (i, z) in self.targets(ens.dim())?.iter().enumerate() {
                    check_reach(&ens, z, self.s_values[0], &format!("targets[{i}]"))?;
                }
            }
        }
        Ok(())
    }
}

impl GreensTwoParams {
    pub fn pairs(&self, dim: usize) -> Result<Vec<(Point<f64>, Point<f64>)>> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                Ok((
                    to_point(&p.z, dim, &format!("pairs[{i}].z"))?,
                    to_point(&p.w, dim, &format!("pairs[{i}].w"))?,
                ))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let ens = self.ensemble.to_core("ensemble")?;
        check(self.n_paths > 0, "n_paths", "must be positive")?;
        check(!self.pairs.is_empty(), "pairs", "need at least one pair")?;
        check_scales(&self.s_values)?;
        check(self.eta > 0.0, "eta", "must be positive")?;
        for (i, (z, w)) in self.pairs(ens.dim())?.iter().enumerate() {
            check(z != w, &format!("pairs[{i}].w"), "must differ from z")?;
            check_reach(&ens, z, self.s_values[0], &format!("pairs[{i}].z"))?;
            check_reach(&ens, w, self.s_values[0], &format!("pairs[{i}].w"))?;
        }
        Ok(())
    }
}

impl CutBenchParams {
    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim, "dim")?;
        check(self.n_walks > 0, "n_walks", "must be positive")
    }
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::PairExponent(_) => "pair_exponent",
            Experiment::HalfplaneExponent(_) => "halfplane_exponent",
            Experiment::Content(_) => "content",
            Experiment::GreensOne(_) => "greens_one",
            Experiment::GreensTwo(_) => "greens_two",
            Experiment::Separation(_) => "separation",
            Experiment::QuasiInvariance(_) => "quasi_invariance",
            Experiment::CutBench(_) => "cut_bench",
        }
    }

    /// `(first, count)` of the trial, walk or path indices.
    pub fn trial_range(&self) -> (u64, u64) {
        match self {
            Experiment::PairExponent(p) | Experiment::Separation(p) | Experiment::QuasiInvariance(p) => {
                (p.first_trial, p.n_trials)
            }
            Experiment::HalfplaneExponent(p) => (p.first_trial, p.n_trials),
            Experiment::Content(p) => (p.first_walk, p.n_walks),
            Experiment::GreensOne(p) => (p.first_path, p.n_paths),
            Experiment::GreensTwo(p) => (p.first_path, p.n_paths),
            Experiment::CutBench(p) => (p.first_walk, p.n_walks),
        }
    }

    pub fn with_trial_range(&self, first: u64, count: u64) -> Self {
        let mut e = self.clone();
        match &mut e {
            Experiment::PairExponent(p) | Experiment::Separation(p) | Experiment::QuasiInvariance(p) => {
                p.first_trial = first;
                p.n_trials = count;
            }
            Experiment::HalfplaneExponent(p) => {
                p.first_trial = first;
                p.n_trials = count;
            }
            Experiment::Content(p) => {
                p.first_walk = first;
                p.n_walks = count;
            }
            Experiment::GreensOne(p) => {
                p.first_path = first;
                p.n_paths = count;
            }
            Experiment::GreensTwo(p) => {
                p.first_path = first;
                p.n_paths = count;
            }
            Experiment::CutBench(p) => {
                p.first_walk = first;
                p.n_walks = count;
            }
        }
        e
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document. Errors carry the dotted path of
    /// the offending field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::invalid("<document>", e.message().trim()))?;
        let mut exp = match doc.remove("experiment") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(HarnessError::invalid("experiment", "must be a table")),
            None => return Err(HarnessError::invalid("experiment", "missing table")),
        };
        let header: Header = parse_part(toml::Value::Table(doc), "")?;
        let kind = match exp.remove("kind") {
            Some(toml::Value::String(k)) => k,
            Some(_) => return Err(HarnessError::invalid("experiment.kind", "must be a string")),
            None => return Err(HarnessError::invalid("experiment.kind", "missing")),
        };
        let body = toml::Value::Table(exp);
        let pre = "experiment.";
        let experiment = match kind.as_str() {
            "pair_exponent" => Experiment::PairExponent(parse_part(body, pre)?),
            "halfplane_exponent" => Experiment::HalfplaneExponent(parse_part(body, pre)?),
            "content" => Experiment::Content(parse_part(body, pre)?),
            "greens_one" => Experiment::GreensOne(parse_part(body, pre)?),
            "greens_two" => Experiment::GreensTwo(parse_part(body, pre)?),
            "separation" => Experiment::Separation(parse_part(body, pre)?),
            "quasi_invariance" => Experiment::QuasiInvariance(parse_part(body, pre)?),
            "cut_bench" => Experiment::CutBench(parse_part(body, pre)?),
            other => {
                return Err(HarnessError::invalid(
                    "experiment.kind",
                    format!("unknown kind `{other}`, expected one of {}", KINDS.join(", ")),
                ))
            }
        };
        let cfg = Self {
            master_seed: header.master_seed,
            workers: header.workers,
            output_dir: header.output_dir,
            experiment,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serialises to TOML")
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<()> {
        check(self.workers >= 1, "workers", "must be at least 1")
            .map_err(|_| HarnessError::invalid("workers", "must be at least 1"))?;
        match &self.experiment {
            Experiment::PairExponent(p) | Experiment::Separation(p) | Experiment::QuasiInvariance(p) => {
                p.to_core(self.master_seed, self.workers).map(|_| ())
            }
            Experiment::HalfplaneExponent(p) => p.to_core(self.master_seed, self.workers).map(|_| ()),
            Experiment::Content(p) => p.validate(),
            Experiment::GreensOne(p) => p.validate(),
            Experiment::GreensTwo(p) => p.validate(),
            Experiment::CutBench(p) => p.validate(),
        }
    }

    /// Configuration with the fields that never influence output bytes
    /// cleared, used to decide whether two runs may be merged.
    pub fn merge_key(&self) -> Self {
        Self {
            workers: 1,
            output_dir: None,
            experiment: self.experiment.with_trial_range(0, 0),
            ..self.clone()
        }
    }
}

/// A ready-to-edit example configuration for `kind`.
pub fn example(kind: &str) -> Option<ExperimentConfig> {
    let experiment = match kind {
        "pair_exponent" | "separation" | "quasi_invariance" => {
            let p = PairParams {
                dim: 2,
                start1: origin(),
                start2: east(),
                levels: dyadic_levels(),
                n_trials: 100_000,
                first_trial: 0,
                step_cap_factor: step_cap(),
                max_discard_rate: discard_rate(),
                threshold: threshold(),
                level_pairs: Vec::new(),
                statistic: Statistic::Delta,
                max_samples: None,
            };
            match kind {
                "pair_exponent" => Experiment::PairExponent(p),
                "separation" => Experiment::Separation(p),
                _ => Experiment::QuasiInvariance(p),
            }
        }
        "halfplane_exponent" => Experiment::HalfplaneExponent(HalfPlaneParams {
            levels: halfplane_levels(),
            n_trials: 10_000_000,
            first_trial: 0,
        }),
        "content" => Experiment::Content(ContentParams {
            dim: 2,
            n_steps: 1 << 20,
            n_walks: 16,
            first_walk: 0,
            step_scale: None,
            delta: None,
            compare_deltas: vec![0.6, 0.9],
            r_min: 10f64.ln(),
            r_max: 100f64.ln(),
            n_r: 12,
            grid_divisor: divisor(),
            region_lo: region_lo(),
            region_hi: region_hi(),
            plateau_window: None,
        }),
        "greens_one" => Experiment::GreensOne(GreensOneParams {
            ensemble: EnsembleConfig::Bridge {
                dim: 2,
                n_steps: 1024,
                endpoint: unit_endpoint(),
                grid_h: 1.0 / 32.0,
            },
            n_paths: 100_000,
            first_path: 0,
            targets: vec![vec![0.26, 0.26], vec![0.49, 0.49], vec![0.49, 0.26]],
            s_values: vec![2.0],
            eta: 1.25,
            ratio_s: None,
            profile: None,
        }),
        "greens_two" => Experiment::GreensTwo(GreensTwoParams {
            ensemble: EnsembleConfig::Bridge {
                dim: 2,
                n_steps: 4096,
                endpoint: unit_endpoint(),
                grid_h: 1.0 / 64.0,
            },
            n_paths: 10_000,
            first_path: 0,
            pairs: vec![
                PointPair {
                    z: vec![0.3, 0.375],
                    w: vec![0.45, 0.375],
                },
                PointPair {
                    z: vec![0.26, 0.375],
                    w: vec![0.49, 0.375],
                },
            ],
            s_values: vec![2.0],
            eta: 1.25,
        }),
        "cut_bench" => Experiment::CutBench(CutBenchParams {
            dim: 2,
            n_steps: 1_000_000,
            n_walks: 1,
            first_walk: 0,
        }),
        _ => return None,
    };
    Some(ExperimentConfig {
        master_seed: 2024,
        workers: 1,
        output_dir: None,
        experiment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_round_trip_through_toml() {
        for kind in KINDS {
            let cfg = example(kind).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml_string();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg, "{kind}");
        }
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let cfg = ExperimentConfig::from_toml_str(
            "master_seed = 7\n[experiment]\nkind = \"separation\"\ndim = 3\nn_trials = 10\nstart1 = [0, 0, 0]\nstart2 = [1, 0, 0]\n",
        )
        .unwrap();
        assert_eq!(cfg.workers, 1);
        let Experiment::Separation(p) = &cfg.experiment else {
            panic!()
        };
        assert_eq!(p.levels, vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0]);
        assert_eq!(p.threshold, 0.1);
        assert_eq!(p.level_pairs(), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn n_workers_is_accepted() {
        let cfg = ExperimentConfig::from_toml_str(
            "master_seed = 1\nn_workers = 3\n[experiment]\nkind = \"cut_bench\"\ndim = 2\nn_steps = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.workers, 3);
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::from_toml_str(text) {
            Err(HarnessError::Invalid { field, .. }) => field,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(
            field_of("[experiment]\nkind = \"cut_bench\"\ndim = 2\nn_steps = 1\n"),
            "<document>"
        );
        assert_eq!(
            field_of("master_seed = 1\n[experiment]\nkind = \"cut_bench\"\ndim = 5\nn_steps = 1\n"),
            "experiment.dim"
        );
        assert_eq!(
            field_of(
                "master_seed = 1\n[experiment]\nkind = \"pair_exponent\"\ndim = 2\nn_trials = 5\nlevels = [4.0, 2.0]\n"
            ),
            "experiment.levels"
        );
        assert_eq!(
            field_of("master_seed = 1\n[experiment]\nkind = \"cut_bench\"\ndim = 2\nn_steps = \"many\"\n"),
            "experiment.n_steps"
        );
        assert_eq!(
            field_of("master_seed = 1\n[experiment]\nkind = \"teleport\"\n"),
            "experiment.kind"
        );
        let greens = "master_seed = 1\n[experiment]\nkind = \"greens_one\"\ns_values = [0.5]\neta = 1.25\nn_paths = 4\n\
                      targets = [[0.3, 0.3]]\n[experiment.ensemble]\nkind = \"bridge\"\nn_steps = 64\ngrid_h = 0.03125\n";
        assert_eq!(field_of(greens), "experiment.targets[0]");
    }

    #[test]
    fn merge_key_ignores_ranges_and_workers() {
        let a = example("content").unwrap();
        let mut b = a.clone();
        b.workers = 8;
        b.experiment = b.experiment.with_trial_range(16, 3);
        assert_eq!(a.merge_key(), b.merge_key());
        b.master_seed += 1;
        assert_ne!(a.merge_key(), b.merge_key());
    }
}
