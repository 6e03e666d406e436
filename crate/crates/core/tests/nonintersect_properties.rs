use std::collections::HashSet;

use cutlab_core::lattice::{step, Site};
use cutlab_core::nonintersect::{
    halfplane_survival, quasi_invariance_test, run_pair_trials, HalfPlaneConfig, PairConfig, Statistic,
};
use cutlab_core::paths::sample_srw;
use cutlab_core::rng::{derive_seed, trial_rng};
use cutlab_core::stats::{ks_two_sample, proportion};
use num_rational::Rational64;
use rand::RngExt;

fn sites_of(start: Site, dirs: u32) -> HashSet<Site> {
    let mut cur = start;
    let mut out = HashSet::from([cur]);
    for k in 0..4 {
        cur = step(cur, ((dirs >> (2 * k)) & 3) as usize);
        out.insert(cur);
    }
    out
}

#[test]
fn four_step_pairs_enumeration_matches_monte_carlo() {
    let (a, b) = ([0, 0, 0], [1, 0, 0]);
    let firsts: Vec<HashSet<Site>> = (0..256).map(|d| sites_of(a, d)).collect();
    let seconds: Vec<HashSet<Site>> = (0..256).map(|d| sites_of(b, d)).collect();
    let disjoint = firsts
        .iter()
        .map(|x| seconds.iter().filter(|y| x.is_disjoint(y)).count() as i64)
        .sum::<i64>();
    let exact = Rational64::new(disjoint, 65_536);
    let p = *exact.numer() as f64 / *exact.denom() as f64;
    assert!(p > 0.0 && p < 1.0);

    let n = 100_000u64;
    let mut k = 0u64;
    for i in 0..n {
        let w1 = sample_srw(2, 4, derive_seed(derive_seed(61, i), 0)).unwrap();
        let w2 = sample_srw(2, 4, derive_seed(derive_seed(61, i), 1)).unwrap();
        let s1: HashSet<Site> = w1.sites().iter().copied().collect();
        let hit = w2.sites().iter().any(|s| s1.contains(&[s[0] + 1, s[1], s[2]]));
        k += u64::from(!hit);
    }
    let (est, _) = proportion(k, n);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((est - p).abs() < 3.0 * se, "exact {exact} = {p}, simulated {est}");
}

#[test]
fn ks_p_values_are_calibrated_under_the_null() {
    let reps = 200;
    let mut pv = Vec::with_capacity(reps);
    for r in 0..reps as u64 {
        let mut rng = trial_rng(67, r);
        let a: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        pv.push(ks_two_sample(&a, &b).unwrap().p_value);
    }
    let mean = pv.iter().sum::<f64>() / reps as f64;
    let small = pv.iter().filter(|&&p| p < 0.1).count() as f64 / reps as f64;
    assert!((0.42..0.58).contains(&mean), "mean p {mean}");
    assert!((0.04..0.17).contains(&small), "P(p < 0.1) = {small}");
    let grid: Vec<f64> = (0..reps).map(|i| (i as f64 + 0.5) / reps as f64).collect();
    assert!(ks_two_sample(&pv, &grid).unwrap().p_value > 0.01);
}

#[test]
fn halfplane_exponents_are_consistent() {
    let cfg = HalfPlaneConfig {
        levels: vec![16.0, 32.0, 64.0, 128.0],
        n_trials: 2_000_000,
        first_trial: 0,
        master_seed: 71,
        workers: 1,
    };
    let s = halfplane_survival(&cfg).unwrap();
    let (a, b, c) = (s.fits.stay.unwrap(), s.fits.joint.unwrap(), s.fits.conditional.unwrap());
    let tol = 3.0 * (a.stderr.powi(2) + b.stderr.powi(2) + c.stderr.powi(2)).sqrt();
    assert!(
        (a.exponent + c.exponent - b.exponent).abs() <= tol,
        "{} + {} vs {} (tol {tol})",
        a.exponent,
        c.exponent,
        b.exponent
    );
    assert!((1.8..=2.2).contains(&a.exponent), "stay {}", a.exponent);
}

#[test]
fn three_dimensional_pairs_report_discards() {
    let mut cfg = PairConfig::dyadic(3, 2000, 73);
    cfg.step_cap_factor = 0.5;
    let agg = run_pair_trials(&cfg).unwrap();
    assert!(agg.discarded > 0);
    assert!(agg.flagged());
    assert!(agg.attempted.last().unwrap() + agg.discarded <= 2000);
    assert_eq!(agg.discard_rate(), agg.discarded as f64 / 2000.0);
}

/// Twenty replicates: the two-sample distance between survivors at levels
/// 32 and 64 should exceed that between 256 and 512 in most of them, with
/// both comparisons using equally many survivors.
#[test]
#[ignore = "unresolved at desk scale; about four minutes on one core"]
fn quasi_invariance_trend_over_replicates() {
    let mut wins = 0;
    for rep in 0..20u64 {
        let mut cfg = PairConfig::dyadic(2, 400_000, 1000 + rep);
        cfg.workers = 8;
        let agg = run_pair_trials(&cfg).unwrap();
        let m = agg.delta[5].len().min(agg.delta[4].len());
        let early = quasi_invariance_test(&agg, (1, 2), Statistic::Delta, Some(m)).unwrap();
        let late = quasi_invariance_test(&agg, (4, 5), Statistic::Delta, Some(m)).unwrap();
        eprintln!(
            "replicate {rep}: n {m}, early {:.4}, late {:.4}",
            early.distance, late.distance
        );
        wins += usize::from(early.distance > late.distance);
    }
    assert!(wins > 10, "{wins} of 20");
}
