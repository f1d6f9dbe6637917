//! Small statistics helpers shared by the estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Ordinary least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        n,
    })
}

/// Least squares through the origin, `y ≈ c * x`. Returns `(c, r_squared)` where the
/// coefficient of determination is taken about the mean of `y`.
pub fn proportional_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if xs.is_empty() || xs.len() != ys.len() || sxx == 0.0 {
        return None;
    }
    let c = xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let my = mean(ys);
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - c * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((c, r2))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the mean estimated from `batches` contiguous batch means.
pub fn batch_std_error(xs: &[f64], batches: usize) -> f64 {
    let batches = batches.min(xs.len()).max(1);
    if batches < 2 {
        return f64::NAN;
    }
    let size = xs.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    std_error(&means)
}

/// Kolmogorov–Smirnov distance between the sample and a normal law with the sample's
/// own mean and standard deviation.
pub fn ks_statistic_normal(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sd = variance(xs).sqrt();
    let Ok(normal) = Normal::new(m, sd) else {
        return f64::NAN;
    };
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / nf).abs().max((i as f64 + 1.0) / nf - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample Kolmogorov–Smirnov statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Running means of `xs` (prefix averages).
pub fn running_mean(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            acc / (i + 1) as f64
        })
        .collect()
}

/// Largest relative deviation of a running estimate from its final value over the
/// second half of the sequence.
pub fn second_half_drift(running: &[f64]) -> f64 {
    let Some(&last) = running.last() else {
        return f64::NAN;
    };
    running[running.len() / 2..]
        .iter()
        .map(|v| ((v - last) / last).abs())
        .fold(0.0, f64::max)
}
