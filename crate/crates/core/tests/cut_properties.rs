use cutlab_core::cut::{cut_times, cut_times_bruteforce, cut_times_of_segment_in_whole, CutDetector};
use cutlab_core::paths::{sample_srw, LatticePath};
use cutlab_core::rng::derive_seed;
use proptest::prelude::*;

fn walk(dim: usize, len: usize, seed: u64) -> LatticePath {
    sample_srw(dim, len, seed).unwrap()
}

#[test]
fn thousand_walks_per_dimension_match_bruteforce() {
    let mut det = CutDetector::new(2);
    for dim in [2, 3] {
        for i in 0..1000u64 {
            let p = walk(dim, 1 + (i as usize * 37) % 200, derive_seed(17, i));
            for interior in [false, true] {
                assert_eq!(
                    det.cut_times(&p, interior),
                    cut_times_bruteforce(&p, interior).unwrap(),
                    "dim {dim} walk {i}"
                );
            }
        }
    }
}

#[test]
fn reversal_and_translation_on_thousand_walks() {
    for i in 0..1000u64 {
        let dim = 2 + (i % 2) as usize;
        let p = walk(dim, 200, derive_seed(23, i));
        let n = p.n_steps();
        let times = cut_times(&p, false).times;
        let mut rev: Vec<usize> = cut_times(&p.reversed(), false).times.iter().map(|t| n - t).collect();
        rev.sort_unstable();
        assert_eq!(rev, times);
        let shifted = p.translated([1000, -77, if dim == 3 { 5 } else { 0 }]);
        assert_eq!(cut_times(&shifted, false).times, times);
    }
}

#[test]
fn segment_query_filters_whole_path_cut_times() {
    for i in 0..300u64 {
        let p = walk(2, 150, derive_seed(29, i));
        let all = cut_times(&p, false).times;
        assert_eq!(cut_times_of_segment_in_whole(&p, 0, p.n_steps()).unwrap(), all);
        let lo = (i as usize * 7) % 100;
        let hi = lo + 40;
        let expect: Vec<usize> = all.iter().copied().filter(|t| (lo..=hi).contains(t)).collect();
        assert_eq!(cut_times_of_segment_in_whole(&p, lo, hi).unwrap(), expect);
        let seg = p.slice(lo, hi).unwrap();
        let local = cut_times(&seg, false).times;
        assert!(expect.iter().all(|t| local.contains(&(t - lo))));
    }
}

fn arb_walk() -> impl Strategy<Value = LatticePath> {
    (2usize..=3, 0usize..=200, any::<u64>()).prop_map(|(d, n, s)| walk(d, n, s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn detector_equals_bruteforce(p in arb_walk(), interior in any::<bool>()) {
        prop_assert_eq!(cut_times(&p, interior), cut_times_bruteforce(&p, interior).unwrap());
    }

    #[test]
    fn endpoints_always_cut(p in arb_walk()) {
        let t = cut_times(&p, false).times;
        prop_assert_eq!(t.first(), Some(&0));
        prop_assert_eq!(t.last(), Some(&p.n_steps()));
        let inner = cut_times(&p, true).times;
        prop_assert!(inner.iter().all(|&s| s != 0 && s != p.n_steps()));
    }

    #[test]
    fn points_are_scaled_sites(p in arb_walk(), k in 0i32..6) {
        let h = 2f64.powi(-k);
        let q = p.clone().with_step_scale(h).unwrap();
        let c = cut_times(&q, true);
        for (t, x) in c.times.iter().zip(&c.points) {
            let s = q.sites()[*t];
            prop_assert_eq!(*x, [s[0] as f64 * h, s[1] as f64 * h, s[2] as f64 * h]);
        }
    }
}
