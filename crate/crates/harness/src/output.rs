//! Data files derived from an aggregate. Rendering is a pure function of the
//! configuration and the aggregate, so equal aggregates give equal bytes.

use std::fmt::Write as _;

use cutlab_core::content::{plateau_estimate, ContentProfile, Region};
use cutlab_core::geometry::dist;
use cutlab_core::greens::{
    fit_profile_exponent, one_point_samples, profile_from_table, shape_ratios, two_point_samples, Ensemble, HitTable,
};
use cutlab_core::nonintersect::{
    exponent_relations, quasi_invariance_test, separation_stats, HalfPlaneSurvival, PairAggregate,
};
use cutlab_core::stats::{fit_line, proportion, quantile};
use serde_json::{json, Value};

use crate::config::{ContentParams, Experiment, ExperimentConfig, GreensOneParams, GreensTwoParams, PairParams};
use crate::error::{HarnessError, Result};
use crate::experiment::{Aggregate, ContentAggregate, CutBenchAggregate};

pub const SCHEMA_VERSION: u32 = 1;

/// `(file name, contents)` in a fixed order, `summary.json` last.
pub type Files = Vec<(String, Vec<u8>)>;

fn mismatch() -> HarnessError {
    HarnessError::Merge("aggregate does not match the experiment kind".into())
}

/// Empty for NaN, so missing values read as blank CSV cells.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn render(cfg: &ExperimentConfig, agg: &Aggregate) -> Result<Files> {
    let mut files = Files::new();
    let mut summary = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.experiment.kind(),
        "master_seed": cfg.master_seed,
    });
    let extra = match (&cfg.experiment, agg) {
        (Experiment::PairExponent(p), Aggregate::Pair(a)) => pair(p, a, &mut files, false, false)?,
        (Experiment::Separation(p), Aggregate::Pair(a)) => pair(p, a, &mut files, true, false)?,
        (Experiment::QuasiInvariance(p), Aggregate::Pair(a)) => pair(p, a, &mut files, false, true)?,
        (Experiment::HalfplaneExponent(_), Aggregate::HalfPlane(a)) => halfplane(a, &mut files),
        (Experiment::Content(p), Aggregate::Content(a)) => content(p, a, &mut files)?,
        (Experiment::GreensOne(p), Aggregate::Greens(t)) => greens_one(p, t, &mut files)?,
        (Experiment::GreensTwo(p), Aggregate::Greens(t)) => greens_two(p, t, &mut files)?,
        (Experiment::CutBench(_), Aggregate::CutBench(a)) => cut_bench(a, &mut files),
        _ => return Err(mismatch()),
    };
    if let (Value::Object(s), Value::Object(e)) = (&mut summary, extra) {
        s.extend(e);
    }
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    files.push(("summary.json".into(), text.into_bytes()));
    Ok(files)
}

fn pair(p: &PairParams, a: &PairAggregate, files: &mut Files, separation: bool, qi: bool) -> Result<Value> {
    let mut csv = String::from("level,n_attempted,n_survived,p_hat,stderr,delta_q10,delta_q50,delta_q90\n");
    for k in 0..a.levels.len() {
        let (ph, se) = proportion(a.survived[k], a.attempted[k]);
        let mut d = a.delta[k].clone();
        d.sort_by(f64::total_cmp);
        let q = |x| num(quantile(&d, x));
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            a.levels[k],
            a.attempted[k],
            a.survived[k],
            num(ph),
            num(se),
            q(0.1),
            q(0.5),
            q(0.9)
        )
        .unwrap();
    }
    files.push(("pair_levels.csv".into(), csv.into_bytes()));
    let fit = a.fit_xi().ok();
    let mut out = json!({
        "dim": a.dim,
        "n_trials": a.n_trials,
        "discarded": a.discarded,
        "discard_rate": a.discard_rate(),
        "flagged": a.flagged(),
        "fit": fit,
        "eta": fit.map(|f| exponent_relations(f.xi, a.dim).ok().map(|r| r.0)),
        "delta": fit.map(|f| exponent_relations(f.xi, a.dim).ok().map(|r| r.1)),
    });
    if separation {
        let rows = separation_stats(a, p.threshold)?;
        let mut csv = String::from("level,n_survived,frequency,stderr\n");
        for r in &rows {
            writeln!(
                csv,
                "{},{},{},{}",
                r.level,
                r.n_survived,
                r.frequency.map_or(String::new(), num),
                r.stderr.map_or(String::new(), num)
            )
            .unwrap();
        }
        files.push(("separation.csv".into(), csv.into_bytes()));
        let freqs: Vec<f64> = rows.iter().filter_map(|r| r.frequency).collect();
        let (lo, hi) = freqs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), f| (l.min(*f), h.max(*f)));
        out["separation"] = json!({
            "threshold": p.threshold,
            "levels": rows,
            "min_frequency": (!freqs.is_empty()).then_some(lo),
            "max_over_min": (!freqs.is_empty() && lo > 0.0).then(|| hi / lo),
        });
    }
    if qi {
        let mut csv = String::from("level_a,level_b,n_a,n_b,ks_distance,p_value\n");
        let mut tests = Vec::new();
        for (i, j) in p.level_pairs() {
            let r = quasi_invariance_test(a, (i, j), p.statistic, p.max_samples);
            match r {
                Ok(ks) => {
                    writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        a.levels[i], a.levels[j], ks.n_a, ks.n_b, ks.distance, ks.p_value
                    )
                    .unwrap();
                    tests.push(json!({"level_a": a.levels[i], "level_b": a.levels[j], "ks": ks}));
                }
                Err(e) => {
                    writeln!(csv, "{},{},,,,", a.levels[i], a.levels[j]).unwrap();
                    tests.push(json!({"level_a": a.levels[i], "level_b": a.levels[j], "error": e.to_string()}));
                }
            }
        }
        files.push(("quasi_invariance.csv".into(), csv.into_bytes()));
        out["quasi_invariance"] = json!({"statistic": p.statistic, "tests": tests});
    }
    Ok(out)
}

fn halfplane(a: &HalfPlaneSurvival, files: &mut Files) -> Value {
    let mut csv = String::from("level,n_trials,n_stay,n_joint,p_stay,p_joint,p_conditional\n");
    for k in 0..a.levels.len() {
        let (ps, _) = proportion(a.stay[k], a.n_trials);
        let (pj, _) = proportion(a.joint[k], a.n_trials);
        let (pc, _) = proportion(a.joint[k], a.stay[k]);
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            a.levels[k],
            a.n_trials,
            a.stay[k],
            a.joint[k],
            num(ps),
            num(pj),
            num(pc)
        )
        .unwrap();
    }
    files.push(("halfplane_levels.csv".into(), csv.into_bytes()));
    json!({ "n_trials": a.n_trials, "fits": a.fits })
}

/// Mean profile at dimension parameter `delta`, summing walks in order.
pub fn mean_profile(p: &ContentParams, a: &ContentAggregate, delta: f64) -> Result<ContentProfile<f64>> {
    let n = a.volumes.len().max(1) as f64;
    let d = p.dim as f64;
    let volumes: Vec<f64> = (0..a.r_values.len())
        .map(|k| a.volumes.iter().map(|v| v[k]).sum::<f64>() / n)
        .collect();
    let contents = a
        .r_values
        .iter()
        .zip(&volumes)
        .map(|(r, v)| (r * (d - delta)).exp() * v)
        .collect();
    Ok(ContentProfile {
        delta,
        r_values: a.r_values.clone(),
        contents,
        volumes,
        grid_h: a.grid_h.clone(),
        region: Region::new(p.region()?),
    })
}

fn content(p: &ContentParams, a: &ContentAggregate, files: &mut Files) -> Result<Value> {
    let mut deltas = vec![p.delta()];
    deltas.extend(&p.compare_deltas);
    let mut profiles = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        let prof = mean_profile(p, a, delta)?;
        let mut buf = Vec::new();
        prof.write_csv(&mut buf)?;
        let name = if i == 0 {
            "content_profile.csv".to_string()
        } else {
            format!("content_profile_{i:03}.csv")
        };
        files.push((name.clone(), buf));
        let logs: Vec<f64> = prof.contents.iter().map(|c| c.ln()).collect();
        let full = if logs.iter().all(|l| l.is_finite()) {
            fit_line(&prof.r_values, &logs, None).ok()
        } else {
            None
        };
        profiles.push(json!({
            "file": name,
            "delta": delta,
            "plateau": plateau_estimate(&prof, p.plateau_window).ok(),
            "full_range_fit": full,
        }));
    }
    let walks_without_cuts = a.cut_points.iter().filter(|&&n| n == 0).count();
    Ok(json!({
        "n_walks": a.volumes.len(),
        "step_scale": p.step_scale(),
        "mean_cut_points": a.cut_points.iter().sum::<u64>() as f64 / a.cut_points.len().max(1) as f64,
        "walks_without_cut_points": walks_without_cuts,
        "profiles": profiles,
    }))
}

fn greens_one(p: &GreensOneParams, t: &HitTable, files: &mut Files) -> Result<Value> {
    let ens = p.ensemble.to_core("ensemble")?;
    if let Some(pr) = &p.profile {
        let s = p.s_values[0];
        let prof = profile_from_table(&pr.xs, pr.angle, &pr.rhos, s, p.eta, t)?;
        let mut csv = String::from("axis,coordinate,hits,estimate,stderr\n");
        for (axis, pts) in [("horizontal", &prof.horizontal), ("radial", &prof.radial)] {
            for q in pts {
                writeln!(csv, "{axis},{},{},{},{}", q.coordinate, q.hits, q.estimate, q.stderr).unwrap();
            }
        }
        files.push(("halfplane_profile.csv".into(), csv.into_bytes()));
        return Ok(json!({ "n_paths": t.n_paths, "profile": prof }));
    }
    let zs = p.targets(ens.dim())?;
    let samples = one_point_samples(&ens, &zs, &p.s_values, p.eta, t)?;
    for (i, g) in samples.iter().enumerate() {
        let mut buf = Vec::new();
        g.write_csv(&mut buf)?;
        files.push((format!("greens_one_{i:03}.csv"), buf));
    }
    let ratio_s = p.ratio_s.unwrap_or(*p.s_values.last().expect("validated"));
    let k = p
        .s_values
        .iter()
        .position(|s| *s == ratio_s)
        .ok_or_else(|| HarnessError::invalid("experiment.ratio_s", "not one of s_values"))?;
    let ratios = match &ens {
        Ensemble::Bridge { endpoint, .. } if zs.len() >= 2 => {
            let est: Vec<f64> = samples.iter().map(|g| g.estimates[k]).collect();
            Some(shape_ratios(&zs, &est, endpoint, p.eta)?)
        }
        _ => None,
    };
    Ok(json!({
        "n_paths": t.n_paths,
        "samples": samples,
        "ratio_s": ratio_s,
        "ratios": ratios,
    }))
}

fn greens_two(p: &GreensTwoParams, t: &HitTable, files: &mut Files) -> Result<Value> {
    let ens = p.ensemble.to_core("ensemble")?;
    let pairs = p.pairs(ens.dim())?;
    let samples = two_point_samples(&ens, &pairs, &p.s_values, p.eta, t)?;
    for (i, g) in samples.iter().enumerate() {
        let mut buf = Vec::new();
        g.write_csv(&mut buf)?;
        files.push((format!("greens_two_{i:03}.csv"), buf));
    }
    let seps: Vec<f64> = pairs.iter().map(|(z, w)| dist(z, w)).collect();
    let fits: Vec<Value> = p
        .s_values
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let est: Vec<f64> = samples.iter().map(|g| g.estimates[k]).collect();
            json!({ "s": s, "separation_fit": fit_profile_exponent(&seps, &est).ok() })
        })
        .collect();
    Ok(json!({
        "n_paths": t.n_paths,
        "separations": seps,
        "samples": samples,
        "fits": fits,
    }))
}

fn cut_bench(a: &CutBenchAggregate, files: &mut Files) -> Value {
    let mut csv = String::from("walk,n_steps,cut_points\n");
    for r in &a.rows {
        writeln!(csv, "{},{},{}", r.walk, r.n_steps, r.cut_points).unwrap();
    }
    files.push(("cut_bench.csv".into(), csv.into_bytes()));
    json!({
        "n_walks": a.rows.len(),
        "total_steps": a.rows.iter().map(|r| r.n_steps).sum::<u64>(),
        "total_cut_points": a.rows.iter().map(|r| r.cut_points).sum::<u64>(),
    })
}
