//! Small statistical helpers shared by the Monte Carlo estimators.

/// Two-sided standard normal quantile for 95% coverage.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided standard normal quantile for 99% coverage.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Result of a straight-line least-squares fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub points: usize,
}

/// Weighted least squares. Pass equal weights for an ordinary fit; the slope
/// standard error is then estimated from the residual scatter.
pub fn fit_line(xs: &[f64], ys: &[f64], weights: Option<&[f64]>) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let sw: f64 = (0..n).map(w).sum();
    let mx = (0..n).map(|i| w(i) * xs[i]).sum::<f64>() / sw;
    let my = (0..n).map(|i| w(i) * ys[i]).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w(i) * (xs[i] - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = (0..n).map(|i| w(i) * (xs[i] - mx) * (ys[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n)
        .map(|i| w(i) * (ys[i] - intercept - slope * xs[i]).powi(2))
        .sum();
    let slope_se = if weights.is_some() {
        // inverse-variance weights: the slope variance is 1/sxx
        (1.0 / sxx).sqrt()
    } else if n > 2 {
        (rss / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        intercept,
        slope,
        slope_se,
        rss,
        points: n,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Total-variation distance between two probability vectors (missing
/// entries count as zero).
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}
