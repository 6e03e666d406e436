//! Runs an experiment to its raw aggregate. Aggregates hold integer counts
//! or per-trial values in trial order, so aggregates of adjacent trial ranges
//! combine into exactly the aggregate of the union.

use std::time::Instant;

use cutlab_core::content::{content_profile, GridRule, Region};
use cutlab_core::cut::{cut_times, CutDetector};
use cutlab_core::greens::{hit_table, profile_targets, two_point_layout, GreensRun, HitTable};
use cutlab_core::nonintersect::{halfplane_survival, run_pair_trials, HalfPlaneSurvival, PairAggregate};
use cutlab_core::parallel::map_trials;
use cutlab_core::paths::sample_srw;
use cutlab_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::config::{ContentParams, CutBenchParams, Experiment, ExperimentConfig, GreensOneParams, GreensTwoParams};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentAggregate {
    pub first_walk: u64,
    pub r_values: Vec<f64>,
    pub grid_h: Vec<f64>,
    /// Interior cut points per walk.
    pub cut_points: Vec<u64>,
    /// `[walk][scale]` neighbourhood volumes.
    pub volumes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub walk: u64,
    pub n_steps: u64,
    pub cut_points: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutBenchAggregate {
    pub first_walk: u64,
    pub rows: Vec<BenchRow>,
    /// Time spent in cut detection only; excluded from data files.
    pub detect_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Aggregate {
    Pair(PairAggregate),
    HalfPlane(HalfPlaneSurvival),
    Content(ContentAggregate),
    Greens(HitTable),
    CutBench(CutBenchAggregate),
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Aggregate> {
    cfg.validate()?;
    let (seed, workers) = (cfg.master_seed, cfg.workers);
    Ok(match &cfg.experiment {
        Experiment::PairExponent(p) | Experiment::Separation(p) | Experiment::QuasiInvariance(p) => {
            Aggregate::Pair(run_pair_trials(&p.to_core(seed, workers)?)?)
        }
        Experiment::HalfplaneExponent(p) => Aggregate::HalfPlane(halfplane_survival(&p.to_core(seed, workers)?)?),
        Experiment::Content(p) => Aggregate::Content(content(p, seed, workers)?),
        Experiment::GreensOne(p) => Aggregate::Greens(greens_one(p, seed, workers)?),
        Experiment::GreensTwo(p) => Aggregate::Greens(greens_two(p, seed, workers)?),
        Experiment::CutBench(p) => Aggregate::CutBench(cut_bench(p, seed, workers)?),
    })
}

fn content(p: &ContentParams, seed: u64, workers: usize) -> Result<ContentAggregate> {
    let region = Region::new(p.region()?);
    let rs = p.r_values();
    let rule = GridRule {
        divisor: p.grid_divisor,
    };
    let h = p.step_scale();
    let per_walk = map_trials(workers, p.first_walk..p.first_walk + p.n_walks, |w| {
        let path = sample_srw(p.dim, p.n_steps, derive_seed(seed, w))?.with_step_scale(h)?;
        let cuts = cut_times(&path, true);
        let prof = content_profile(&cuts.points, &region, p.delta(), &rs, &rule)?;
        Ok::<_, cutlab_core::Error>((cuts.len() as u64, prof.volumes, prof.grid_h))
    });
    let mut agg = ContentAggregate {
        first_walk: p.first_walk,
        r_values: rs,
        grid_h: Vec::new(),
        cut_points: Vec::with_capacity(per_walk.len()),
        volumes: Vec::with_capacity(per_walk.len()),
    };
    for r in per_walk {
        let (n, v, g) = r?;
        agg.cut_points.push(n);
        agg.volumes.push(v);
        agg.grid_h = g;
    }
    Ok(agg)
}

fn run_of(first: u64, n: u64, seed: u64, workers: usize) -> GreensRun {
    GreensRun {
        n_paths: n,
        first_path: first,
        master_seed: seed,
        workers,
    }
}

fn greens_one(p: &GreensOneParams, seed: u64, workers: usize) -> Result<HitTable> {
    let ens = p.ensemble.to_core("ensemble")?;
    let targets = match &p.profile {
        Some(pr) => profile_targets(&pr.xs, pr.angle, &pr.rhos)?,
        None => p.targets(ens.dim())?,
    };
    let run = run_of(p.first_path, p.n_paths, seed, workers);
    Ok(hit_table(&ens, &run, &targets, &[], &p.s_values)?)
}

fn greens_two(p: &GreensTwoParams, seed: u64, workers: usize) -> Result<HitTable> {
    let ens = p.ensemble.to_core("ensemble")?;
    let (targets, index) = two_point_layout(&p.pairs(ens.dim())?);
    let run = run_of(p.first_path, p.n_paths, seed, workers);
    Ok(hit_table(&ens, &run, &targets, &index, &p.s_values)?)
}

fn cut_bench(p: &CutBenchParams, seed: u64, workers: usize) -> Result<CutBenchAggregate> {
    let per_walk = map_trials(workers, p.first_walk..p.first_walk + p.n_walks, |w| {
        let path = sample_srw(p.dim, p.n_steps, derive_seed(seed, w))?;
        let t = Instant::now();
        let n = CutDetector::new(p.dim).count_interior(&path) as u64;
        Ok::<_, cutlab_core::Error>((
            BenchRow {
                walk: w,
                n_steps: p.n_steps as u64,
                cut_points: n,
            },
            t.elapsed().as_secs_f64(),
        ))
    });
    let mut agg = CutBenchAggregate {
        first_walk: p.first_walk,
        rows: Vec::new(),
        detect_seconds: 0.0,
    };
    for r in per_walk {
        let (row, secs) = r?;
        agg.rows.push(row);
        agg.detect_seconds += secs;
    }
    Ok(agg)
}

impl Aggregate {
    /// Combines aggregates sorted by their first trial; the ranges must be
    /// adjacent.
    pub fn combine(parts: Vec<Self>) -> Result<Self> {
        let mismatch = || HarnessError::Merge("reports hold different aggregate kinds".into());
        let first = parts
            .first()
            .ok_or_else(|| HarnessError::Merge("nothing to merge".into()))?;
        Ok(match first {
            Aggregate::Pair(_) => Aggregate::Pair(PairAggregate::combine(
                parts
                    .into_iter()
                    .map(|a| match a {
                        Aggregate::Pair(x) => Ok(x),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?,
            )?),
            Aggregate::HalfPlane(_) => Aggregate::HalfPlane(HalfPlaneSurvival::combine(
                parts
                    .into_iter()
                    .map(|a| match a {
                        Aggregate::HalfPlane(x) => Ok(x),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<_>>()?,
            )?),
            Aggregate::Greens(_) => {
                let mut tables = parts.into_iter().map(|a| match a {
                    Aggregate::Greens(x) => Ok(x),
                    _ => Err(mismatch()),
                });
                let mut acc = tables.next().expect("non-empty")?;
                for t in tables {
                    let t = t?;
                    if t.single.len() != acc.single.len() || t.joint.len() != acc.joint.len() {
                        return Err(HarnessError::Merge("hit tables have different layouts".into()));
                    }
                    acc = acc.add(&t);
                }
                Aggregate::Greens(acc)
            }
            Aggregate::Content(_) => {
                let mut parts = parts
                    .into_iter()
                    .map(|a| match a {
                        Aggregate::Content(x) => Ok(x),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                parts.sort_by_key(|c| c.first_walk);
                let mut it = parts.into_iter();
                let mut acc = it.next().expect("non-empty");
                for c in it {
                    if c.r_values != acc.r_values {
                        return Err(HarnessError::Merge("content scales differ".into()));
                    }
                    acc.cut_points.extend(c.cut_points);
                    acc.volumes.extend(c.volumes);
                }
                Aggregate::Content(acc)
            }
            Aggregate::CutBench(_) => {
                let mut parts = parts
                    .into_iter()
                    .map(|a| match a {
                        Aggregate::CutBench(x) => Ok(x),
                        _ => Err(mismatch()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                parts.sort_by_key(|c| c.first_walk);
                let mut it = parts.into_iter();
                let mut acc = it.next().expect("non-empty");
                for c in it {
                    acc.rows.extend(c.rows);
                    acc.detect_seconds += c.detect_seconds;
                }
                Aggregate::CutBench(acc)
            }
        })
    }
}
