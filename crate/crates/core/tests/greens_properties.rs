use std::f64::consts::FRAC_PI_2;

use cutlab_core::greens::{
    estimate_one_point_many, estimate_two_point_many, fit_profile_exponent, halfplane_greens_profile, Ensemble,
    GreensRun,
};

fn bridge(n_steps: usize, grid_h: f64) -> Ensemble {
    Ensemble::Bridge {
        dim: 2,
        n_steps,
        endpoint: [1.0, 0.0, 0.0],
        grid_h,
    }
}

#[test]
fn two_point_hits_are_symmetric_and_bounded_by_one_point_hits() {
    let ens = bridge(512, 1.0 / 64.0);
    let run = GreensRun::new(400, 79);
    let (z, w) = ([0.3, 0.2, 0.0], [0.6, 0.25, 0.0]);
    let s = [1.5, 2.0, 2.5];
    let zw = estimate_two_point_many(&ens, &run, &[(z, w), (w, z)], &s, 1.25).unwrap();
    assert_eq!(zw[0].hits, zw[1].hits);
    assert_eq!(zw[0].estimates, zw[1].estimates);
    let one = estimate_one_point_many(&ens, &run, &[z, w], &s, 1.25).unwrap();
    for k in 0..s.len() {
        assert!(zw[0].hits[k] <= one[0].hits[k].min(one[1].hits[k]));
        assert!(zw[0].frequencies[k] <= one[0].frequencies[k].min(one[1].frequencies[k]));
    }
    assert!(one[0].hits.windows(2).all(|h| h[0] >= h[1]));
}

#[test]
fn profile_fit_is_exact_on_synthetic_power_law() {
    let xs: Vec<f64> = (0..=8).map(|x| x as f64 + 1.0).collect();
    let v: Vec<f64> = xs.iter().map(|x| x.powf(-10.0 / 3.0)).collect();
    let f = fit_profile_exponent(&xs, &v).unwrap();
    assert!((f.slope + 10.0 / 3.0).abs() < 1e-9);
}

/// Excursions capped at radius 32 on a 1/8 grid, probed at radius 1/2:
/// the profile along `y = 1` decays like `(x + 1)^{-10/3}` and along the
/// imaginary axis like `y^{-5/4}`.
#[test]
fn halfplane_profile_exponents() {
    let ens = Ensemble::Excursion {
        radius_cap: 32.0,
        grid_h: 1.0 / 8.0,
    };
    let xs: Vec<f64> = (0..=8).map(f64::from).collect();
    let rhos = [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0];
    let p = halfplane_greens_profile(&ens, &GreensRun::new(20_000, 5), &xs, FRAC_PI_2, &rhos, 2f64.ln(), 1.25).unwrap();
    let h = p.horizontal_fit.unwrap().slope;
    let r = p.radial_fit.unwrap().slope;
    assert!((-4.0..=-2.7).contains(&h), "horizontal {h}");
    assert!((-1.55..=-0.95).contains(&r), "radial {r}");
}

/// For targets inside the usable window the estimates at `s` and `s + 1/2`
/// agree within 25%.
#[test]
fn one_point_estimates_settle_in_s() {
    let ens = bridge(4096, 1.0 / 128.0);
    let zs = [[0.5, 0.25, 0.0], [0.35, 0.3, 0.0]];
    let s = [1.8, 2.3, 2.8, 3.3];
    let g = estimate_one_point_many(&ens, &GreensRun::new(100_000, 83), &zs, &s, 1.25).unwrap();
    for gz in &g {
        assert!(
            gz.usable_window.0 <= s[0] && s[3] <= gz.usable_window.1,
            "{:?}",
            gz.usable_window
        );
        for k in 0..s.len() - 1 {
            let ratio = gz.estimates[k + 1] / gz.estimates[k];
            assert!(
                (ratio - 1.0).abs() <= 0.25,
                "z {:?} s {}: {:?}",
                gz.z,
                s[k],
                gz.estimates
            );
        }
    }
}
