//! Regression and two-sample tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weighted least squares line `y = intercept + slope * x`.
///
/// Standard errors use the residual variance scaled by `n - 2`, so weights
/// only need to be known up to a constant factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_stderr: T,
    pub intercept_stderr: T,
    pub r_squared: T,
    pub n: usize,
}

pub fn fit_line<T: Real>(x: &[T], y: &[T], weights: Option<&[T]>) -> Result<LineFit<T>> {
    let n = x.len();
    if y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(crate::error::invalid("y", "length mismatch"));
    }
    if n < 2 {
        return Err(Error::TooFew {
            what: "points",
            needed: 2,
            got: n,
        });
    }
    let w = |i: usize| weights.map_or(T::one(), |w| w[i]);
    let sw = (0..n).fold(T::zero(), |a, i| a + w(i));
    let mx = (0..n).fold(T::zero(), |a, i| a + w(i) * x[i]) / sw;
    let my = (0..n).fold(T::zero(), |a, i| a + w(i) * y[i]) / sw;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx = sxx + w(i) * dx * dx;
        sxy = sxy + w(i) * dx * dy;
        syy = syy + w(i) * dy * dy;
    }
    if sxx == T::zero() {
        return Err(crate::error::invalid("x", "all abscissae are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = (0..n).fold(T::zero(), |a, i| {
        let r = y[i] - intercept - slope * x[i];
        a + w(i) * r * r
    });
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = rss / T::of_usize(n - 2);
        ((s2 / sxx).sqrt(), (s2 * (T::one() / sw + mx * mx / sxx)).sqrt())
    } else {
        (T::nan(), T::nan())
    };
    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        T::one() - rss / syy
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        r_squared,
        n,
    })
}

/// Power-law decay `p ~ C * level^(-exponent)` fitted in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit<T> {
    pub exponent: T,
    pub stderr: T,
    pub intercept: T,
    pub r_squared: T,
    pub n_points: usize,
}

pub fn fit_decay<T: Real>(levels: &[T], values: &[T], weights: Option<&[T]>) -> Result<DecayFit<T>> {
    let x: Vec<T> = levels.iter().map(|l| l.ln()).collect();
    let y: Vec<T> = values.iter().map(|v| v.ln()).collect();
    let f = fit_line(&x, &y, weights)?;
    Ok(DecayFit {
        exponent: -f.slope,
        stderr: f.slope_stderr,
        intercept: f.intercept,
        r_squared: f.r_squared,
        n_points: f.n,
    })
}

/// Binomial proportion with its standard error.
pub fn proportion(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = k as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Inverse-variance weight of `ln p_hat` for a binomial estimate,
/// `n p / (1 - p)`, with `1 - p` floored at `1 / n`.
pub fn log_proportion_weight(k: u64, n: u64) -> f64 {
    let (p, _) = proportion(k, n);
    let q = (1.0 - p).max(1.0 / n as f64);
    n as f64 * p / q
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub distance: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Kolmogorov survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFew {
            what: "samples",
            needed: 1,
            got: 0,
        });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
    Ok(KsResult {
        distance: d,
        p_value,
        n_a: a.len(),
        n_b: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = fit_line(&x, &y, None).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_stderr.abs() < 1e-7);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f32_line() {
        let x = [1.0f32, 2.0, 4.0];
        let y = [3.0f32, 5.0, 9.0];
        let f = fit_line(&x, &y, Some(&[1.0, 2.0, 1.0])).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-5);
    }

    #[test]
    fn stderr_matches_textbook_formula() {
        let x = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let y = [1.1f64, 1.9, 3.2, 3.8, 5.1];
        let f = fit_line(&x, &y, None).unwrap();
        assert!((f.slope - 0.99).abs() < 1e-12);
        let rss: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - f.intercept - f.slope * a).powi(2))
            .sum();
        assert!((f.slope_stderr - (rss / 3.0 / 10.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(fit_line(&[1.0], &[1.0], None).is_err());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0], None).is_err());
    }

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.distance, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_samples() {
        let a: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let b: Vec<f64> = (100..150).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &b).unwrap();
        assert_eq!(r.distance, 1.0);
        assert!(r.p_value < 1e-10);
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q(1.36) ~ 0.049, Q(1.63) ~ 0.0098
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }
}
