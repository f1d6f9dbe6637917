use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::geometry::Graph;
use crate::rng::{self, streams};
use crate::stats;
use crate::walker::{holding_time, InducedKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistancePoint {
    pub t: f64,
    /// `E‖Ŷ_t − x‖`.
    pub mean_distance: f64,
    /// `E‖Ŷ_t − x‖ / √t` (0 at `t = 0`).
    pub scaled: f64,
    /// Batch standard error of `scaled`.
    pub scaled_se: f64,
    /// `E‖Ŷ_t − x‖²`.
    pub mean_square: f64,
    pub mean_square_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCurve {
    pub start: usize,
    pub walkers: usize,
    pub points: Vec<DistancePoint>,
}

impl DistanceCurve {
    /// Largest over smallest scaled value among points with `t` in `[lo, hi]`.
    pub fn band_ratio(&self, lo: f64, hi: f64) -> f64 {
        let v: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.t >= lo && p.t <= hi && p.t > 0.0)
            .map(|p| p.scaled)
            .collect();
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

const BATCHES: usize = 20;

/// Monte Carlo curve of `E‖Ŷ_t − x‖/√t` for the rate-one induced walk driven by
/// `kernel`. Walker `i` uses the seed `derive_seed(seed, i)`.
pub fn expected_distance_curve(
    g: &Graph,
    kernel: &InducedKernel,
    x: usize,
    t_grid: &[f64],
    walkers: usize,
    seed: u64,
) -> Result<DistanceCurve, AnalysisError> {
    if walkers < 1000 {
        return Err(AnalysisError::Parameter(format!("need at least 1000 walkers (got {walkers})")));
    }
    if g.len() != kernel.len() {
        return Err(AnalysisError::Parameter("graph does not match the kernel".into()));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::Parameter("time grid must be nonnegative and increasing".into()));
    }
    if x >= kernel.len() || !kernel.has_row(x) {
        return Err(AnalysisError::MissingRow(x));
    }
    let mut dist = vec![Vec::with_capacity(walkers); t_grid.len()];
    for w in 0..walkers {
        let s = rng::derive_seed(seed, w as u64);
        let mut rng = rng::stream(s, streams::MAIN);
        let mut clock = rng::stream(s, streams::CLOCK);
        let mut v = x;
        let mut next_jump = holding_time(1.0, &mut clock);
        for (k, &t) in t_grid.iter().enumerate() {
            while next_jump <= t {
                if !kernel.has_row(v) {
                    return Err(AnalysisError::MissingRow(v));
                }
                v = kernel.sample_step(v, &mut rng);
                next_jump += holding_time(1.0, &mut clock);
            }
            dist[k].push(g.distance(x, v));
        }
    }
    let points = t_grid
        .iter()
        .zip(&dist)
        .map(|(&t, d)| {
            let scale = if t > 0.0 { t.sqrt() } else { 1.0 };
            let scaled: Vec<f64> = d.iter().map(|r| if t > 0.0 { r / scale } else { 0.0 }).collect();
            let squares: Vec<f64> = d.iter().map(|r| r * r).collect();
            DistancePoint {
                t,
                mean_distance: stats::mean(d),
                scaled: stats::mean(&scaled),
                scaled_se: stats::batch_std_error(&scaled, BATCHES),
                mean_square: stats::mean(&squares),
                mean_square_se: stats::batch_std_error(&squares, BATCHES),
            }
        })
        .collect();
    Ok(DistanceCurve {
        start: x,
        walkers,
        points,
    })
}
