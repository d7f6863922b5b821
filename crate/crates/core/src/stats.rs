//! Small sample-statistics helpers used by the Monte-Carlo checks.

#[allow(unused_imports)]
use num_traits::Float;
use num_complex::Complex64;

use crate::error::{ensure, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn complex_mean(zs: &[Complex64]) -> Complex64 {
    zs.iter().sum::<Complex64>() / zs.len() as f64
}

/// Unbiased `E|z − E z|²` of a complex sample (sum of the two quadrature variances).
pub fn complex_variance(zs: &[Complex64]) -> f64 {
    let m = complex_mean(zs);
    zs.iter().map(|z| (z - m).norm_sqr()).sum::<f64>() / (zs.len() as f64 - 1.0)
}

/// Ordinary least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual scatter.
    pub slope_stderr: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    ensure!(xs.len() == ys.len(), Domain, "x/y length mismatch {} vs {}", xs.len(), ys.len());
    ensure!(xs.len() >= 2, Domain, "need at least two points, got {}", xs.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    ensure!(sxx > 0.0, Estimation, "all abscissae coincide");
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if xs.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, slope_stderr })
}

/// Weighted least squares with known per-point standard deviations.
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], sigmas: &[f64]) -> Result<LinearFit> {
    ensure!(
        xs.len() == ys.len() && ys.len() == sigmas.len(),
        Domain,
        "length mismatch"
    );
    ensure!(xs.len() >= 2, Domain, "need at least two points, got {}", xs.len());
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for ((&x, &y), &s) in xs.iter().zip(ys).zip(sigmas) {
        ensure!(s > 0.0, Domain, "non-positive sigma {s}");
        let w = 1.0 / (s * s);
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let det = sw * swxx - swx * swx;
    ensure!(det > 0.0, Estimation, "degenerate abscissae");
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    Ok(LinearFit { slope, intercept, slope_stderr: (sw / det).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14);
        assert!((f.intercept - 2.0).abs() < 1e-14);
        assert!(f.slope_stderr < 1e-12);
        let w = weighted_linear_fit(&xs, &ys, &[1.0, 2.0, 1.0, 3.0]).unwrap();
        assert!((w.slope + 0.5).abs() < 1e-14);
    }

    #[test]
    fn variance_of_known_sample() {
        assert!((variance(&[1.0, 2.0, 3.0, 4.0]) - 5.0 / 3.0).abs() < 1e-15);
        let zs = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!((complex_variance(&zs) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_fit_rejected() {
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(linear_fit(&[1.0], &[0.0]).is_err());
    }
}
