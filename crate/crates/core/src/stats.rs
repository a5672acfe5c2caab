//! Small statistics toolkit: moments, confidence intervals, rank tests,
//! and least-squares slopes. All reductions run in a fixed order so results
//! are reproducible bit-for-bit.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// 95% normal confidence interval for the mean.
pub fn ci95(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let half = 1.96 * std_error(xs);
    (m - half, m + half)
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() - 1) as f64
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    covariance(xs, ys) / (variance(xs) * variance(ys)).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q));
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    v[lo] * (1.0 - t) + v[hi] * t
}

/// Least-squares slope of y on x, with the slope's standard error.
pub fn linreg_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let se = if n > 2.0 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

/// Kolmogorov-Smirnov distance between a sample and the uniform law on
/// [0, hi).
pub fn ks_uniform(samples: &[f64], hi: f64) -> f64 {
    let mut v: Vec<f64> = samples.iter().map(|x| x / hi).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (k, x) in v.iter().enumerate() {
        let lo = k as f64 / n;
        let hi_cdf = (k + 1) as f64 / n;
        d = d.max((x - lo).abs()).max((hi_cdf - x).abs());
    }
    d
}

/// Kolmogorov-Smirnov distance against an arbitrary CDF.
pub fn ks_cdf(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (k, x) in v.iter().enumerate() {
        let c = cdf(*x);
        d = d.max((c - k as f64 / n).abs()).max(((k + 1) as f64 / n - c).abs());
    }
    d
}

/// Anderson-Darling statistic against a fully specified normal null.
pub fn anderson_darling_normal(samples: &[f64], mu: f64, sd: f64) -> f64 {
    let normal = Normal::new(mu, sd).expect("valid normal");
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let nf = n as f64;
    let mut s = 0.0;
    for (k, x) in v.iter().enumerate() {
        let z = normal.cdf(*x).clamp(1e-300, 1.0 - 1e-16);
        let z2 = normal.cdf(v[n - 1 - k]).clamp(1e-300, 1.0 - 1e-16);
        s += (2.0 * (k as f64) + 1.0) * (z.ln() + (1.0 - z2).ln());
    }
    -nf - s / nf
}

/// Pearson chi-square statistic for observed counts against expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum()
}

/// Upper critical value of the chi-square distribution with `df` degrees of
/// freedom at significance level `alpha`.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    use statrs::distribution::ChiSquared;
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    dist.inverse_cdf(1.0 - alpha)
}
