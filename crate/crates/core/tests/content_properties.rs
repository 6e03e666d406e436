use cutlab_core::content::{content_profile, neighborhood_volume, GridRule, Region};
use cutlab_core::cut::cut_times;
use cutlab_core::geometry::{Aabb, Point};
use cutlab_core::paths::sample_srw;
use proptest::prelude::*;

fn arb_points(dim: usize) -> impl Strategy<Value = Vec<Point<f64>>> {
    prop::collection::vec(
        (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(move |(x, y, z)| [x, y, if dim == 3 { z } else { 0.0 }]),
        0..40,
    )
}

fn unit_region(dim: usize) -> Region<f64> {
    Region::dyadic(dim, 0, [0; 3]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn volume_shrinks_with_r_at_fixed_grid(pts in arb_points(2), r in 1.5f64..3.0) {
        let region = unit_region(2);
        let h = (-(r + 1.0f64)).exp() / 8.0;
        let mut last = f64::INFINITY;
        for k in 0..5 {
            let v = neighborhood_volume(&pts, r + 0.25 * k as f64, &region, h).unwrap();
            prop_assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn dyadic_children_add_up(pts in arb_points(2), r in 2.0f64..3.5) {
        let parent = unit_region(2);
        let h = GridRule::default().grid_h(r);
        let whole = neighborhood_volume(&pts, r, &parent, h).unwrap();
        let kids = parent.children();
        let sum: f64 = kids.iter().map(|c| neighborhood_volume(&pts, r, c, h).unwrap()).sum();
        let bound: f64 = kids.iter().map(|c| c.aabb.surface_area()).sum::<f64>() * h;
        prop_assert!((whole - sum).abs() <= bound, "{whole} vs {sum} (bound {bound})");
    }

    #[test]
    fn dilation_scales_content_by_lambda_to_delta(pts in arb_points(2), r in 1.5f64..3.0, k in 1i32..3) {
        let lambda = 2f64.powi(k);
        let delta = 0.75;
        let region = unit_region(2);
        let big = Region::new(region.aabb.scaled(lambda));
        let scaled: Vec<Point<f64>> = pts.iter().map(|p| [p[0] * lambda, p[1] * lambda, 0.0]).collect();
        let rule = GridRule::default();
        let a = content_profile(&pts, &region, delta, &[r], &rule).unwrap();
        let b = content_profile(&scaled, &big, delta, &[r - lambda.ln()], &rule).unwrap();
        let expect = a.contents[0] * lambda.powf(delta);
        prop_assert!((b.contents[0] - expect).abs() <= 1e-9 * expect.max(1e-300));
    }
}

#[test]
fn three_dimensional_children_add_up() {
    let pts: Vec<Point<f64>> = (0..30)
        .map(|i| {
            let t = i as f64 / 30.0;
            [t, (3.0 * t).fract(), (7.0 * t).fract()]
        })
        .collect();
    let parent = unit_region(3);
    let r = 2.5;
    let h = GridRule { divisor: 8.0 }.grid_h(r);
    let whole = neighborhood_volume(&pts, r, &parent, h).unwrap();
    let sum: f64 = parent
        .children()
        .iter()
        .map(|c| neighborhood_volume(&pts, r, c, h).unwrap())
        .sum();
    let bound: f64 = parent.children().iter().map(|c| c.aabb.surface_area()).sum::<f64>() * h;
    assert!((whole - sum).abs() <= bound);
}

#[test]
fn f32_and_f64_profiles_agree_on_walk_cut_points() {
    let p = sample_srw(2, 1 << 14, 9).unwrap().with_step_scale(1.0 / 128.0).unwrap();
    let pts = cut_times(&p, true).points;
    let pts32: Vec<Point<f32>> = pts.iter().map(|q| [q[0] as f32, q[1] as f32, 0.0]).collect();
    let region = Region::new(Aabb::new(2, [-2.0, -2.0, 0.0], [2.0, 2.0, 0.0]).unwrap());
    let region32 = Region::new(Aabb::new(2, [-2.0f32, -2.0, 0.0], [2.0, 2.0, 0.0]).unwrap());
    let rs = [1.0, 1.5, 2.0, 2.5];
    let rs32 = [1.0f32, 1.5, 2.0, 2.5];
    let a = content_profile(&pts, &region, 0.75, &rs, &GridRule::default()).unwrap();
    let b = content_profile(&pts32, &region32, 0.75f32, &rs32, &GridRule::default()).unwrap();
    for (x, y) in a.contents.iter().zip(&b.contents) {
        assert!((x - *y as f64).abs() <= 1e-3 * x, "{x} vs {y}");
    }
}
