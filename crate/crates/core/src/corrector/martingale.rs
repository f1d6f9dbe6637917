use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::HarmonicEmbedding;
use crate::error::CorrectorError;
use crate::geometry::Graph;
use crate::rng::{self, streams};
use crate::stats::{self, LinearFit};
use crate::walker::dtrw_step;

/// Conditional mean increment of `φ` observed at one vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub vertex: usize,
    pub visits: usize,
    pub mean_increment: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// Harmonic defect at every interior vertex.
    pub defects: Vec<(usize, f64)>,
    pub max_defect: f64,
    /// `φ(x0)`.
    pub m0: Vec<f64>,
    pub walks: usize,
    /// Walks that left the interior before the last step; they are excluded below.
    pub censored: usize,
    /// `E‖φ(X_n) − φ(x0)‖²` for `n = 0..=n_steps`.
    pub mean_square: Vec<f64>,
    /// Batch standard error of each entry of `mean_square`.
    pub mean_square_se: Vec<f64>,
    /// Least squares of `mean_square` against `n` over `1..=n_steps`.
    pub fit: Option<LinearFit>,
    /// Least squares of `mean_square / n` against `n` over the last 90% of the steps.
    pub ratio_fit: Option<LinearFit>,
    /// Fitted change of `mean_square / n` across that range relative to its mean.
    pub ratio_relative_change: f64,
    /// Vertices visited at least `min_visits` times.
    pub drift: Vec<DriftEntry>,
}

impl MartingaleReport {
    /// Whether every recorded conditional increment is within `k` standard errors of 0.
    pub fn drift_within(&self, k: f64) -> bool {
        self.drift.iter().all(|e| {
            e.mean_increment
                .iter()
                .zip(&e.std_error)
                .all(|(m, se)| m.abs() <= k * se + 1e-12)
        })
    }
}

/// Runs `walks` simple random walks of `n_steps` from the interior vertex `x0` and
/// tracks `M_n = φ(X_n)`. A walk is censored once it stands on a non-interior vertex
/// before its last step.
pub fn martingale_diagnostic(
    g: &Graph,
    emb: &HarmonicEmbedding,
    x0: usize,
    n_steps: usize,
    walks: usize,
    min_visits: usize,
    seed: u64,
) -> Result<MartingaleReport, CorrectorError> {
    if !emb.is_interior(x0) {
        return Err(CorrectorError::Parameter(format!("start vertex {x0} is not interior")));
    }
    if walks < 2 {
        return Err(CorrectorError::Parameter("need at least two walks".into()));
    }
    let defects = emb.harmonic_defects(g)?;
    let max_defect = defects.iter().map(|d| d.1).fold(0.0, f64::max);
    let d = emb.dim();
    let m0 = emb.phi(x0).unwrap().to_vec();

    let mut per_walk: Vec<Vec<f64>> = Vec::with_capacity(walks);
    let mut censored = 0;
    // vertex -> (visits, sum, sum of squares) of the increments leaving it.
    let mut acc: HashMap<usize, (usize, Vec<f64>, Vec<f64>)> = HashMap::new();
    let mut inc = vec![0.0; d];
    for w in 0..walks {
        let mut rng = rng::stream(rng::derive_seed(seed, w as u64), streams::MAIN);
        let mut sq = Vec::with_capacity(n_steps + 1);
        sq.push(0.0);
        let mut v = x0;
        let mut ok = true;
        for _ in 0..n_steps {
            if !emb.is_interior(v) {
                ok = false;
                break;
            }
            let next = dtrw_step(g, v, &mut rng);
            let (pv, pn) = (emb.phi(v).unwrap(), emb.phi(next).unwrap());
            for c in 0..d {
                inc[c] = pn[c] - pv[c];
            }
            let e = acc.entry(v).or_insert_with(|| (0, vec![0.0; d], vec![0.0; d]));
            e.0 += 1;
            for c in 0..d {
                e.1[c] += inc[c];
                e.2[c] += inc[c] * inc[c];
            }
            v = next;
            sq.push(pn.iter().zip(&m0).map(|(a, b)| (a - b).powi(2)).sum());
        }
        if ok {
            per_walk.push(sq);
        } else {
            censored += 1;
        }
    }
    let kept = per_walk.len();
    let batches = 20.min(kept);
    let mut mean_square = vec![0.0; n_steps + 1];
    let mut mean_square_se = vec![f64::NAN; n_steps + 1];
    let mut column = Vec::with_capacity(kept);
    for n in 0..=n_steps {
        column.clear();
        column.extend(per_walk.iter().map(|s| s[n]));
        if kept > 0 {
            mean_square[n] = stats::mean(&column);
            mean_square_se[n] = stats::batch_std_error(&column, batches);
        }
    }
    let ns: Vec<f64> = (1..=n_steps).map(|n| n as f64).collect();
    let fit = stats::linear_fit(&ns, &mean_square[1..]);
    let from = (n_steps / 10).max(1);
    let xs: Vec<f64> = (from..=n_steps).map(|n| n as f64).collect();
    let ratios: Vec<f64> = (from..=n_steps).map(|n| mean_square[n] / n as f64).collect();
    let ratio_fit = stats::linear_fit(&xs, &ratios);
    let ratio_relative_change = match ratio_fit {
        Some(f) => f.slope * (n_steps - from) as f64 / stats::mean(&ratios),
        None => f64::NAN,
    };

    let mut drift: Vec<DriftEntry> = acc
        .into_iter()
        .filter(|(_, e)| e.0 >= min_visits.max(2))
        .map(|(vertex, (visits, sum, sumsq))| {
            let k = visits as f64;
            let mean_increment: Vec<f64> = sum.iter().map(|s| s / k).collect();
            let std_error = sumsq
                .iter()
                .zip(&mean_increment)
                .map(|(q, m)| ((q / k - m * m).max(0.0) * k / (k - 1.0) / k).sqrt())
                .collect();
            DriftEntry {
                vertex,
                visits,
                mean_increment,
                std_error,
            }
        })
        .collect();
    drift.sort_by_key(|e| e.vertex);
    Ok(MartingaleReport {
        defects,
        max_defect,
        m0,
        walks,
        censored,
        mean_square,
        mean_square_se,
        fit,
        ratio_fit,
        ratio_relative_change,
        drift,
    })
}
