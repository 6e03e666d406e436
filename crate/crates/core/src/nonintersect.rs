//! Two-walk non-intersection experiments and intersection exponents.
//!
//! Two independent simple random walks start at distinct sites and are
//! extended level by level until each first reaches distance `level` from the
//! origin. A trial survives level `k` when the two stopped walks, start sites
//! included, have disjoint site sets. Survival probabilities decay like
//! `level^{-xi}`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::check_dim;
use crate::lattice::{dist2, norm2, step, Site, SiteMap};
use crate::parallel::{fold_trials, map_trials};
use crate::rng::{derive_seed, seeded, StepSampler, TrialRng};
use crate::scalar::Real;
use crate::stats::{fit_decay, ks_two_sample, log_proportion_weight, proportion, DecayFit, KsResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub dim: usize,
    pub start1: Site,
    pub start2: Site,
    /// Radii in lattice units, strictly increasing.
    pub levels: Vec<f64>,
    pub n_trials: u64,
    /// Index of the first trial; trial `i` draws from `derive_seed(master_seed, i)`.
    pub first_trial: u64,
    pub master_seed: u64,
    /// A walk that needs more than `step_cap_factor * level^2` steps to reach
    /// a level discards its trial.
    pub step_cap_factor: f64,
    /// Discard rate above which the run is flagged.
    pub max_discard_rate: f64,
    pub workers: usize,
}

impl PairConfig {
    /// Adjacent starts and dyadic levels `2^4 .. 2^9`.
    pub fn dyadic(dim: usize, n_trials: u64, master_seed: u64) -> Self {
        Self {
            dim,
            start1: [0, 0, 0],
            start2: [1, 0, 0],
            levels: (4..=9).map(|k| (1u32 << k) as f64).collect(),
            n_trials,
            first_trial: 0,
            master_seed,
            step_cap_factor: 100.0,
            max_discard_rate: 0.01,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l > 0.0)) {
            return Err(invalid("levels", "need at least one positive radius"));
        }
        if self.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("levels", "must be strictly increasing"));
        }
        if self.levels.len() > u8::MAX as usize {
            return Err(invalid("levels", "too many levels"));
        }
        if self.start1 == self.start2 {
            return Err(invalid("start2", "start sites must be distinct"));
        }
        if self.dim == 2 && (self.start1[2] != 0 || self.start2[2] != 0) {
            return Err(invalid("start1", "planar start with nonzero third coordinate"));
        }
        if !(self.step_cap_factor > 0.0) {
            return Err(invalid("step_cap_factor", "must be positive"));
        }
        Ok(())
    }
}

/// Per-trial record: survival flags per level and the separation statistic
/// where the pair survived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTrial {
    pub start1: Site,
    pub start2: Site,
    pub levels: Vec<f64>,
    pub survived: Vec<bool>,
    pub delta_stats: Vec<Option<f64>>,
    pub tip_angles: Vec<Option<f64>>,
    /// Level at which a walk exceeded its step cap.
    pub discarded_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Outcome {
    survived: u8,
    discarded_at: Option<u8>,
    delta: Vec<f64>,
    angle: Vec<f64>,
}

struct Arm {
    pos: Site,
    sites: Vec<Site>,
    rng: TrialRng,
    dirs: StepSampler,
}

thread_local! {
    static OCCUPANCY: RefCell<Option<(usize, SiteMap<u8>)>> = const { RefCell::new(None) };
}

fn with_occupancy<R>(dim: usize, f: impl FnOnce(&mut SiteMap<u8>) -> R) -> R {
    OCCUPANCY.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().is_none_or(|(d, _)| *d != dim) {
            *slot = Some((dim, SiteMap::new(dim)));
        }
        let map = &mut slot.as_mut().expect("initialised").1;
        map.clear();
        f(map)
    })
}

fn min_dist2(tip: Site, others: &[Site]) -> i64 {
    others.iter().map(|s| dist2(tip, *s)).min().unwrap_or(i64::MAX)
}

fn tip_angle(a: Site, b: Site) -> f64 {
    let dot: f64 = (0..3).map(|i| a[i] as f64 * b[i] as f64).sum();
    let na = (norm2(a) as f64).sqrt();
    let nb = (norm2(b) as f64).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// The two walks of a trial are driven by independent streams derived from
/// the trial seed, so exchanging starts together with streams reproduces
/// the trial exactly.
fn run_trial(cfg: &PairConfig, starts: [Site; 2], rngs: [TrialRng; 2]) -> Outcome {
    let dim = cfg.dim;
    let [r0, r1] = rngs;
    let mut arms = [
        Arm {
            pos: starts[0],
            sites: vec![starts[0]],
            rng: r0,
            dirs: StepSampler::new(),
        },
        Arm {
            pos: starts[1],
            sites: vec![starts[1]],
            rng: r1,
            dirs: StepSampler::new(),
        },
    ];
    let mut out = Outcome {
        survived: 0,
        discarded_at: None,
        delta: Vec::new(),
        angle: Vec::new(),
    };
    with_occupancy(dim, |occ| {
        occ.set(starts[0], 1);
        occ.set(starts[1], 2);
        for (k, &level) in cfg.levels.iter().enumerate() {
            let r2 = level * level;
            let cap = (cfg.step_cap_factor * level * level).ceil() as u64;
            for j in 0..2 {
                let (mine, other) = (1u8 << j, 2u8 >> j);
                let arm = &mut arms[j];
                let mut steps = 0u64;
                while (norm2(arm.pos) as f64) < r2 {
                    if steps >= cap {
                        out.discarded_at = Some(k as u8);
                        return;
                    }
                    arm.pos = step(arm.pos, arm.dirs.direction(&mut arm.rng, dim));
                    steps += 1;
                    arm.sites.push(arm.pos);
                    let cell = occ.get_mut(arm.pos);
                    if *cell & other != 0 {
                        return;
                    }
                    *cell |= mine;
                }
            }
            out.survived = k as u8 + 1;
            let d = min_dist2(arms[0].pos, &arms[1].sites).min(min_dist2(arms[1].pos, &arms[0].sites));
            out.delta.push((d as f64).sqrt() / level);
            out.angle.push(tip_angle(arms[0].pos, arms[1].pos));
        }
    });
    out
}

/// Starts in lexicographic order. Stream `j` always drives the walk from the
/// `j`-th ordered start, so exchanging `start1` and `start2` in a
/// configuration reproduces every trial exactly.
fn ordered_starts(cfg: &PairConfig) -> [Site; 2] {
    if cfg.start1 <= cfg.start2 {
        [cfg.start1, cfg.start2]
    } else {
        [cfg.start2, cfg.start1]
    }
}

fn trial_streams(master: u64, index: u64) -> [TrialRng; 2] {
    let seed = derive_seed(master, index);
    [seeded(derive_seed(seed, 0)), seeded(derive_seed(seed, 1))]
}

/// Runs trial `index` of the configuration and returns its full record.
pub fn run_single_pair_trial(cfg: &PairConfig, index: u64) -> Result<PairTrial> {
    cfg.validate()?;
    let o = run_trial(cfg, ordered_starts(cfg), trial_streams(cfg.master_seed, index));
    let n = cfg.levels.len();
    let s = o.survived as usize;
    Ok(PairTrial {
        start1: cfg.start1,
        start2: cfg.start2,
        levels: cfg.levels.clone(),
        survived: (0..n).map(|k| k < s).collect(),
        delta_stats: (0..n).map(|k| o.delta.get(k).copied()).collect(),
        tip_angles: (0..n).map(|k| o.angle.get(k).copied()).collect(),
        discarded_at: o.discarded_at.map(usize::from),
    })
}

/// Aggregate of a range of pair trials.
///
/// Per-level separation statistics are kept in trial order so that
/// aggregates of disjoint trial ranges combine into exactly the aggregate of
/// their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAggregate {
    pub dim: usize,
    pub levels: Vec<f64>,
    pub first_trial: u64,
    pub n_trials: u64,
    /// Trials resolved (not discarded) at each level.
    pub attempted: Vec<u64>,
    pub survived: Vec<u64>,
    pub discarded: u64,
    pub delta: Vec<Vec<f64>>,
    pub tip_angle: Vec<Vec<f64>>,
    pub max_discard_rate: f64,
}

impl PairAggregate {
    fn empty(cfg: &PairConfig) -> Self {
        let n = cfg.levels.len();
        Self {
            dim: cfg.dim,
            levels: cfg.levels.clone(),
            first_trial: cfg.first_trial,
            n_trials: 0,
            attempted: vec![0; n],
            survived: vec![0; n],
            discarded: 0,
            delta: vec![Vec::new(); n],
            tip_angle: vec![Vec::new(); n],
            max_discard_rate: cfg.max_discard_rate,
        }
    }

    fn absorb(&mut self, o: Outcome) {
        self.n_trials += 1;
        let s = o.survived as usize;
        let resolved = o.discarded_at.map_or(self.levels.len(), usize::from);
        if o.discarded_at.is_some() {
            self.discarded += 1;
        }
        for k in 0..resolved {
            self.attempted[k] += 1;
        }
        for k in 0..s {
            self.survived[k] += 1;
            self.delta[k].push(o.delta[k]);
            self.tip_angle[k].push(o.angle[k]);
        }
    }

    pub fn discard_rate(&self) -> f64 {
        if self.n_trials == 0 {
            0.0
        } else {
            self.discarded as f64 / self.n_trials as f64
        }
    }

    /// Discard rate exceeded the configured threshold.
    pub fn flagged(&self) -> bool {
        self.discard_rate() > self.max_discard_rate
    }

    pub fn survival(&self) -> Vec<(f64, f64)> {
        self.survived
            .iter()
            .zip(&self.attempted)
            .map(|(&k, &n)| proportion(k, n))
            .collect()
    }

    /// Intersection exponent from the survival curve with binomial
    /// inverse-variance weights on `ln p`.
    pub fn fit_xi(&self) -> Result<ExponentFit<f64>> {
        let mut levels = Vec::new();
        let mut probs = Vec::new();
        let mut weights = Vec::new();
        for k in 0..self.levels.len() {
            if self.survived[k] > 0 {
                levels.push(self.levels[k]);
                probs.push(self.survived[k] as f64 / self.attempted[k] as f64);
                weights.push(log_proportion_weight(self.survived[k], self.attempted[k]));
            }
        }
        if levels.is_empty() {
            return Err(Error::NoSurvival);
        }
        let mut fit = estimate_xi(self.dim, &levels, &probs, Some(&weights))?;
        fit.n_trials = self.n_trials;
        Ok(fit)
    }

    /// Combines aggregates of disjoint trial ranges of the same experiment,
    /// in any order.
    pub fn combine(mut parts: Vec<Self>) -> Result<Self> {
        parts.sort_by_key(|p| p.first_trial);
        let mut it = parts.into_iter();
        let mut acc = it.next().ok_or(Error::TooFew {
            what: "aggregates",
            needed: 1,
            got: 0,
        })?;
        for p in it {
            if p.dim != acc.dim || p.levels != acc.levels {
                return Err(invalid("levels", "aggregates come from different experiments"));
            }
            if p.first_trial < acc.first_trial + acc.n_trials {
                return Err(invalid("first_trial", "trial ranges overlap"));
            }
            acc.n_trials += p.n_trials;
            acc.discarded += p.discarded;
            for k in 0..acc.levels.len() {
                acc.attempted[k] += p.attempted[k];
                acc.survived[k] += p.survived[k];
                acc.delta[k].extend_from_slice(&p.delta[k]);
                acc.tip_angle[k].extend_from_slice(&p.tip_angle[k]);
            }
        }
        Ok(acc)
    }
}

pub fn run_pair_trials(cfg: &PairConfig) -> Result<PairAggregate> {
    cfg.validate()?;
    let range = cfg.first_trial..cfg.first_trial + cfg.n_trials;
    let starts = ordered_starts(cfg);
    let outcomes = map_trials(cfg.workers, range, |i| {
        run_trial(cfg, starts, trial_streams(cfg.master_seed, i))
    });
    let mut agg = PairAggregate::empty(cfg);
    for o in outcomes {
        agg.absorb(o);
    }
    Ok(agg)
}

/// Power-law fit of a survival curve together with the derived codimension
/// `eta = xi + dim - 2` and dimension `delta = dim - eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit<T> {
    pub xi: T,
    pub stderr: T,
    pub intercept: T,
    pub r_squared: T,
    pub n_trials: u64,
    pub dim: usize,
    pub eta: T,
    pub delta: T,
}

/// Weighted least squares of `ln p` against `ln level`; the slope is `-xi`.
/// Levels with zero probability are skipped.
pub fn estimate_xi<T: Real>(
    dim: usize,
    levels: &[T],
    survival_probs: &[T],
    weights: Option<&[T]>,
) -> Result<ExponentFit<T>> {
    check_dim(dim)?;
    if levels.len() != survival_probs.len() || weights.is_some_and(|w| w.len() != levels.len()) {
        return Err(invalid("survival_probs", "length mismatch"));
    }
    let keep: Vec<usize> = (0..levels.len()).filter(|&i| survival_probs[i] > T::zero()).collect();
    if keep.is_empty() {
        return Err(Error::NoSurvival);
    }
    if keep.len() < 3 {
        return Err(Error::TooFew {
            what: "levels with nonzero survival",
            needed: 3,
            got: keep.len(),
        });
    }
    let l: Vec<T> = keep.iter().map(|&i| levels[i]).collect();
    let p: Vec<T> = keep.iter().map(|&i| survival_probs[i]).collect();
    let w: Option<Vec<T>> = weights.map(|w| keep.iter().map(|&i| w[i]).collect());
    let fit = fit_decay(&l, &p, w.as_deref())?;
    let (eta, delta) = exponent_relations(fit.exponent, dim)?;
    Ok(ExponentFit {
        xi: fit.exponent,
        stderr: fit.stderr,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        n_trials: 0,
        dim,
        eta,
        delta,
    })
}

/// `(eta, delta)` with `eta = xi + dim - 2` and `delta = dim - eta`.
pub fn exponent_relations<T: Real>(xi: T, dim: usize) -> Result<(T, T)> {
    check_dim(dim)?;
    let d = T::of_usize(dim);
    let eta = xi + d - T::of(2.0);
    Ok((eta, d - eta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationLevel {
    pub level: f64,
    pub n_survived: u64,
    /// `None` marks a level without survivors.
    pub frequency: Option<f64>,
    pub stderr: Option<f64>,
}

/// Conditional frequency of `delta >= threshold` given survival, per level.
pub fn separation_stats(agg: &PairAggregate, threshold: f64) -> Result<Vec<SeparationLevel>> {
    if !(threshold >= 0.0) {
        return Err(invalid("threshold", "must be non-negative"));
    }
    Ok(agg
        .levels
        .iter()
        .zip(&agg.delta)
        .map(|(&level, deltas)| {
            let n = deltas.len() as u64;
            if n == 0 {
                return SeparationLevel {
                    level,
                    n_survived: 0,
                    frequency: None,
                    stderr: None,
                };
            }
            let k = deltas.iter().filter(|&&d| d >= threshold).count() as u64;
            let (p, se) = proportion(k, n);
            SeparationLevel {
                level,
                n_survived: n,
                frequency: Some(p),
                stderr: Some(se),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    #[default]
    Delta,
    TipAngle,
}

pub const MIN_QUASI_INVARIANCE_SAMPLES: usize = 100;

/// Two-sample KS comparison of a scale-free statistic of surviving pairs at
/// two levels. `max_samples` truncates both samples (in trial order) to a
/// common size.
pub fn quasi_invariance_test(
    agg: &PairAggregate,
    level_pair: (usize, usize),
    statistic: Statistic,
    max_samples: Option<usize>,
) -> Result<KsResult> {
    let n = agg.levels.len();
    if level_pair.0 >= n || level_pair.1 >= n {
        return Err(invalid("level_pair", "level index out of range"));
    }
    let pick = |k: usize| -> &[f64] {
        let v = match statistic {
            Statistic::Delta => &agg.delta[k],
            Statistic::TipAngle => &agg.tip_angle[k],
        };
        &v[..max_samples.map_or(v.len(), |m| m.min(v.len()))]
    };
    let (a, b) = (pick(level_pair.0), pick(level_pair.1));
    let got = a.len().min(b.len());
    if got < MIN_QUASI_INVARIANCE_SAMPLES {
        return Err(Error::TooFew {
            what: "survivors per level",
            needed: MIN_QUASI_INVARIANCE_SAMPLES,
            got,
        });
    }
    ks_two_sample(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneConfig {
    /// Radii in lattice units, strictly increasing.
    pub levels: Vec<f64>,
    pub n_trials: u64,
    pub first_trial: u64,
    pub master_seed: u64,
    pub workers: usize,
}

impl HalfPlaneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 3 || self.levels.iter().any(|l| !(*l > 1.5)) {
            return Err(invalid("levels", "need at least three radii beyond the starts"));
        }
        if self.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("levels", "must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneFits {
    /// Both walks stay in the upper half-plane.
    pub stay: Option<DecayFit<f64>>,
    /// Both stay and their site sets are disjoint.
    pub joint: Option<DecayFit<f64>>,
    /// Disjoint given that both stay.
    pub conditional: Option<DecayFit<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneSurvival {
    pub levels: Vec<f64>,
    pub first_trial: u64,
    pub n_trials: u64,
    pub stay: Vec<u64>,
    pub joint: Vec<u64>,
    pub fits: HalfPlaneFits,
}

impl HalfPlaneSurvival {
    fn refit(&mut self) {
        let n = self.n_trials;
        let upto = |counts: &[u64]| counts.iter().take_while(|&&c| c > 0).count();
        let fit = |len: usize, num: &[u64], den: &dyn Fn(usize) -> u64| -> Option<DecayFit<f64>> {
            if len < 3 {
                return None;
            }
            let l = &self.levels[..len];
            let p: Vec<f64> = (0..len).map(|k| num[k] as f64 / den(k) as f64).collect();
            let w: Vec<f64> = (0..len).map(|k| log_proportion_weight(num[k], den(k))).collect();
            fit_decay(l, &p, Some(&w)).ok()
        };
        let stay_len = upto(&self.stay);
        let joint_len = upto(&self.joint);
        self.fits = HalfPlaneFits {
            stay: fit(stay_len, &self.stay, &|_| n),
            joint: fit(joint_len, &self.joint, &|_| n),
            conditional: fit(joint_len, &self.joint, &|k| self.stay[k]),
        };
    }

    pub fn combine(mut parts: Vec<Self>) -> Result<Self> {
        parts.sort_by_key(|p| p.first_trial);
        let mut it = parts.into_iter();
        let mut acc = it.next().ok_or(Error::TooFew {
            what: "aggregates",
            needed: 1,
            got: 0,
        })?;
        for p in it {
            if p.levels != acc.levels {
                return Err(invalid("levels", "aggregates come from different experiments"));
            }
            if p.first_trial < acc.first_trial + acc.n_trials {
                return Err(invalid("first_trial", "trial ranges overlap"));
            }
            acc.n_trials += p.n_trials;
            for k in 0..acc.levels.len() {
                acc.stay[k] += p.stay[k];
                acc.joint[k] += p.joint[k];
            }
        }
        acc.refit();
        Ok(acc)
    }
}

/// Levels survived by a half-plane trial: `(stay, stay_and_disjoint)`.
fn halfplane_trial(levels: &[f64], rngs: [TrialRng; 2]) -> (u8, u8) {
    let [r0, r1] = rngs;
    let starts: [Site; 2] = [[1, 1, 0], [-1, 1, 0]];
    let mut arms = [
        Arm {
            pos: starts[0],
            sites: Vec::new(),
            rng: r0,
            dirs: StepSampler::new(),
        },
        Arm {
            pos: starts[1],
            sites: Vec::new(),
            rng: r1,
            dirs: StepSampler::new(),
        },
    ];
    let mut disjoint = true;
    let mut joint_levels = 0u8;
    with_occupancy(2, |occ| {
        occ.set(starts[0], 1);
        occ.set(starts[1], 2);
        for (k, &level) in levels.iter().enumerate() {
            let r2 = level * level;
            for j in 0..2 {
                let (mine, other) = (1u8 << j, 2u8 >> j);
                let arm = &mut arms[j];
                while (norm2(arm.pos) as f64) < r2 {
                    arm.pos = step(arm.pos, arm.dirs.direction(&mut arm.rng, 2));
                    if arm.pos[1] <= 0 {
                        return (k as u8, joint_levels);
                    }
                    if disjoint {
                        let cell = occ.get_mut(arm.pos);
                        if *cell & other != 0 {
                            disjoint = false;
                        } else {
                            *cell |= mine;
                        }
                    }
                }
            }
            if disjoint {
                joint_levels = k as u8 + 1;
            }
        }
        (levels.len() as u8, joint_levels)
    })
}

/// Two walks from `(1, 1)` and `(-1, 1)`: per level, how often both stay in
/// the upper half-plane, and how often they also avoid each other.
pub fn halfplane_survival(cfg: &HalfPlaneConfig) -> Result<HalfPlaneSurvival> {
    cfg.validate()?;
    let n_levels = cfg.levels.len();
    let range = cfg.first_trial..cfg.first_trial + cfg.n_trials;
    let zero = (vec![0u64; n_levels], vec![0u64; n_levels]);
    let (stay, joint) = fold_trials(
        cfg.workers,
        range,
        4096,
        zero.clone(),
        |r| {
            let mut acc = zero.clone();
            for i in r {
                let (s, j) = halfplane_trial(&cfg.levels, trial_streams(cfg.master_seed, i));
                for k in 0..s as usize {
                    acc.0[k] += 1;
                }
                for k in 0..j as usize {
                    acc.1[k] += 1;
                }
            }
            acc
        },
        |mut a, b| {
            for k in 0..n_levels {
                a.0[k] += b.0[k];
                a.1[k] += b.1[k];
            }
            a
        },
    );
    let mut out = HalfPlaneSurvival {
        levels: cfg.levels.clone(),
        first_trial: cfg.first_trial,
        n_trials: cfg.n_trials,
        stay,
        joint,
        fits: HalfPlaneFits {
            stay: None,
            joint: None,
            conditional: None,
        },
    };
    out.refit();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antipodal_starts_survive_small_level() {
        let mut cfg = PairConfig::dyadic(2, 50, 1);
        cfg.start1 = [-3, 0, 0];
        cfg.start2 = [3, 0, 0];
        cfg.levels = vec![1.0, 2.0];
        let agg = run_pair_trials(&cfg).unwrap();
        assert_eq!(agg.survived, vec![50, 50]);
        assert_eq!(agg.delta[0][0], 6.0);
    }

    #[test]
    fn survival_is_monotone_per_trial() {
        let cfg = PairConfig::dyadic(2, 300, 5);
        for i in 0..300 {
            let t = run_single_pair_trial(&cfg, i).unwrap();
            assert!(t.survived.windows(2).all(|w| w[0] >= w[1]));
            for (s, d) in t.survived.iter().zip(&t.delta_stats) {
                assert_eq!(*s, d.is_some());
            }
        }
    }

    #[test]
    fn exchange_symmetry_under_paired_streams() {
        let cfg = PairConfig::dyadic(3, 0, 17);
        for i in 0..200 {
            let [a, b] = trial_streams(17, i);
            let o1 = run_trial(&cfg, [cfg.start1, cfg.start2], [a.clone(), b.clone()]);
            let o2 = run_trial(&cfg, [cfg.start2, cfg.start1], [b, a]);
            assert_eq!(o1, o2);
        }
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let mut cfg = PairConfig::dyadic(2, 2000, 99);
        cfg.levels = vec![4.0, 8.0, 16.0, 32.0];
        let a = run_pair_trials(&cfg).unwrap();
        cfg.workers = 8;
        let b = run_pair_trials(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn combine_matches_single_run() {
        let mut cfg = PairConfig::dyadic(2, 1000, 3);
        cfg.levels = vec![4.0, 8.0, 16.0];
        let whole = run_pair_trials(&cfg).unwrap();
        cfg.n_trials = 400;
        let first = run_pair_trials(&cfg).unwrap();
        cfg.first_trial = 400;
        cfg.n_trials = 600;
        let second = run_pair_trials(&cfg).unwrap();
        let merged = PairAggregate::combine(vec![second.clone(), first.clone()]).unwrap();
        assert_eq!(merged, whole);
        assert!(PairAggregate::combine(vec![first.clone(), first]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = PairConfig::dyadic(2, 10, 1);
        cfg.start2 = cfg.start1;
        assert!(run_pair_trials(&cfg).is_err());
        let mut cfg = PairConfig::dyadic(2, 10, 1);
        cfg.levels = vec![8.0, 4.0];
        assert!(run_pair_trials(&cfg).is_err());
        assert!(run_pair_trials(&PairConfig::dyadic(5, 10, 1)).is_err());
    }

    #[test]
    fn step_cap_discards_are_counted() {
        let mut cfg = PairConfig::dyadic(3, 200, 2);
        cfg.levels = vec![4.0, 30.0];
        cfg.step_cap_factor = 0.2;
        let agg = run_pair_trials(&cfg).unwrap();
        assert!(agg.discarded > 0);
        assert!(agg.flagged());
        assert!(agg.attempted[1] + agg.discarded >= agg.attempted[0]);
        assert_eq!(agg.attempted[0] + agg.discarded, 200);
    }

    #[test]
    fn xi_of_exact_power_law() {
        let levels: Vec<f64> = (4..=9).map(|k| 2f64.powi(k)).collect();
        let p: Vec<f64> = levels.iter().map(|l| l.powf(-1.25)).collect();
        let f = estimate_xi(2, &levels, &p, None).unwrap();
        assert!((f.xi - 1.25).abs() < 1e-10);
        assert!((f.eta - 1.25).abs() < 1e-10);
        assert!((f.delta - 0.75).abs() < 1e-10);
        let zeros = vec![0.0; levels.len()];
        assert!(matches!(estimate_xi(2, &levels, &zeros, None), Err(Error::NoSurvival)));
        assert!(estimate_xi(2, &levels[..2], &p[..2], None).is_err());
    }

    #[test]
    fn relations() {
        let (eta, delta) = exponent_relations(1.25f64, 2).unwrap();
        assert_eq!((eta, delta), (1.25, 0.75));
        let (eta, delta) = exponent_relations(0.58f64, 3).unwrap();
        assert!((eta - 1.58).abs() < 1e-12 && (delta - 1.42).abs() < 1e-12);
        for x in [0.1f64, 0.7, 1.9, 3.3] {
            for dim in [2usize, 3] {
                let (eta, delta) = exponent_relations(x, dim).unwrap();
                assert!((eta - x - (dim as f64 - 2.0)).abs() < 1e-12);
                assert!((eta + delta - dim as f64).abs() < 1e-12);
            }
        }
        assert!(exponent_relations(1.0f64, 4).is_err());
    }

    fn synthetic(deltas: Vec<Vec<f64>>) -> PairAggregate {
        let n = deltas.len();
        PairAggregate {
            dim: 2,
            levels: (0..n).map(|k| (16 << k) as f64).collect(),
            first_trial: 0,
            n_trials: 1000,
            attempted: vec![1000; n],
            survived: deltas.iter().map(|d| d.len() as u64).collect(),
            discarded: 0,
            tip_angle: deltas.clone(),
            delta: deltas,
            max_discard_rate: 0.01,
        }
    }

    #[test]
    fn separation_edge_cases() {
        let agg = synthetic(vec![vec![1.0; 40], vec![0.5, 0.01, 0.2], vec![]]);
        let s = separation_stats(&agg, 0.0).unwrap();
        assert_eq!(s[0].frequency, Some(1.0));
        assert_eq!(s[1].frequency, Some(1.0));
        assert_eq!(s[2].frequency, None);
        let s = separation_stats(&agg, 0.1).unwrap();
        assert_eq!(s[0].frequency, Some(1.0));
        assert!((s[1].frequency.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(separation_stats(&agg, -1.0).is_err());
    }

    #[test]
    fn quasi_invariance_identical_samples() {
        let v: Vec<f64> = (0..150).map(|i| (i as f64 * 0.37).fract()).collect();
        let agg = synthetic(vec![v.clone(), v]);
        let r = quasi_invariance_test(&agg, (0, 1), Statistic::Delta, None).unwrap();
        assert_eq!(r.distance, 0.0);
        let small = synthetic(vec![vec![0.5; 50], vec![0.5; 500]]);
        assert!(quasi_invariance_test(&small, (0, 1), Statistic::TipAngle, None).is_err());
    }

    #[test]
    fn halfplane_counts_are_nested() {
        let cfg = HalfPlaneConfig {
            levels: vec![2.0, 4.0, 8.0],
            n_trials: 20_000,
            first_trial: 0,
            master_seed: 4,
            workers: 1,
        };
        let h = halfplane_survival(&cfg).unwrap();
        for k in 0..3 {
            assert!(h.joint[k] <= h.stay[k]);
            if k > 0 {
                assert!(h.stay[k] <= h.stay[k - 1]);
                assert!(h.joint[k] <= h.joint[k - 1]);
            }
        }
        let again = halfplane_survival(&HalfPlaneConfig { workers: 8, ..cfg }).unwrap();
        assert_eq!(h, again);
    }
}
