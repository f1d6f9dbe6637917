//! Empirical void, upper-tail and exponential-moment curves for a process.

use serde::{Deserialize, Serialize};

use super::{palm_sample, sample, ProcessSpec, Window};
use crate::error::PointProcError;
use crate::rng::derive_seed;
use crate::stats::{linear_fit, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConfig {
    /// Cube sides `L` for the void and tail curves, strictly increasing.
    pub l_grid: Vec<f64>,
    /// Exponents `ρ` for the Palm exponential moments, strictly increasing.
    pub rho_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    /// `c₂` in `P[count ≥ c₂ L^d]`; defaults to twice the intensity.
    pub tail_factor: Option<f64>,
    /// Half-side `a` of the cube `[-a, a]^d` used by the exponential moments.
    pub moment_half_side: f64,
    /// Entries backed by fewer events than this are flagged.
    pub min_events: usize,
}

impl AssumptionConfig {
    pub fn new(l_grid: Vec<f64>, rho_grid: Vec<f64>, samples: usize, seed: u64) -> Self {
        Self {
            l_grid,
            rho_grid,
            samples,
            seed,
            tail_factor: None,
            moment_half_side: 1.0,
            min_events: 5,
        }
    }
}

/// One entry of an empirical curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub value: f64,
    /// Number of samples in which the event occurred (void/tail curves).
    pub events: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub void_curve: Vec<CurvePoint>,
    pub tail_curve: Vec<CurvePoint>,
    pub palm_void_curve: Vec<CurvePoint>,
    pub exp_moment_curve: Vec<CurvePoint>,
    pub sample_count: usize,
    pub tail_factor: f64,
    /// Least-squares fit of `ln P[void]` against `L^d` over unflagged entries.
    pub void_slope: Option<LinearFit>,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    !xs.is_empty() && xs.windows(2).all(|w| w[0] < w[1]) && xs.iter().all(|x| x.is_finite())
}

/// Counts for the void/tail curves use the cube `[0, L]^d` of a stationary sample; the
/// Palm void curve uses the cube `(0, L]^d` adjacent to the Palm point; the exponential
/// moments count all points of the Palm sample in `[-a, a]^d`, the origin included.
pub fn assumption_report(
    spec: &ProcessSpec,
    dim: usize,
    cfg: &AssumptionConfig,
) -> Result<AssumptionReport, PointProcError> {
    spec.validate()?;
    if !strictly_increasing(&cfg.l_grid) || cfg.l_grid[0] <= 0.0 {
        return Err(PointProcError::Parameter(
            "L grid must be nonempty, positive and strictly increasing".into(),
        ));
    }
    if !strictly_increasing(&cfg.rho_grid) {
        return Err(PointProcError::Parameter(
            "rho grid must be nonempty and strictly increasing".into(),
        ));
    }
    if cfg.samples < 100 {
        return Err(PointProcError::Parameter(format!(
            "need at least 100 samples (got {})",
            cfg.samples
        )));
    }
    let tail_factor = cfg.tail_factor.unwrap_or(2.0 * spec.base_intensity());
    let l_max = *cfg.l_grid.last().unwrap();
    let stationary_window = Window::cube(dim, 0.0, l_max)?;
    let palm_window = Window::centered(dim, l_max.max(cfg.moment_half_side))?;
    let nl = cfg.l_grid.len();
    let mut void = vec![0usize; nl];
    let mut tail = vec![0usize; nl];
    let mut palm_void = vec![0usize; nl];
    let mut moments = vec![0.0f64; cfg.rho_grid.len()];

    for s in 0..cfg.samples {
        let ps = sample(spec, &stationary_window, derive_seed(cfg.seed, 2 * s as u64))?;
        for (k, &l) in cfg.l_grid.iter().enumerate() {
            let count = ps.count_in_box(&vec![0.0; dim], &vec![l; dim]);
            if count == 0 {
                void[k] += 1;
            }
            if count as f64 >= tail_factor * l.powi(dim as i32) {
                tail[k] += 1;
            }
        }
        let palm = palm_sample(spec, &palm_window, derive_seed(cfg.seed, 2 * s as u64 + 1))?;
        for (k, &l) in cfg.l_grid.iter().enumerate() {
            let occupied = palm
                .iter()
                .skip(1)
                .any(|p| p.iter().all(|&x| x > 0.0 && x <= l));
            if !occupied {
                palm_void[k] += 1;
            }
        }
        let a = cfg.moment_half_side;
        let count = palm
            .iter()
            .filter(|p| p.iter().all(|&x| -a <= x && x <= a))
            .count() as f64;
        for (k, &rho) in cfg.rho_grid.iter().enumerate() {
            moments[k] += (rho * count).exp();
        }
    }

    let n = cfg.samples as f64;
    let curve = |grid: &[f64], hits: &[usize]| -> Vec<CurvePoint> {
        grid.iter()
            .zip(hits)
            .map(|(&x, &e)| CurvePoint {
                x,
                value: e as f64 / n,
                events: e,
                flagged: e < cfg.min_events,
            })
            .collect()
    };
    let void_curve = curve(&cfg.l_grid, &void);
    let (xs, ys): (Vec<f64>, Vec<f64>) = void_curve
        .iter()
        .filter(|c| !c.flagged)
        .map(|c| (c.x.powi(dim as i32), c.value.ln()))
        .unzip();
    Ok(AssumptionReport {
        tail_curve: curve(&cfg.l_grid, &tail),
        palm_void_curve: curve(&cfg.l_grid, &palm_void),
        exp_moment_curve: cfg
            .rho_grid
            .iter()
            .zip(&moments)
            .map(|(&rho, &m)| CurvePoint {
                x: rho,
                value: m / n,
                events: cfg.samples,
                flagged: false,
            })
            .collect(),
        void_slope: linear_fit(&xs, &ys),
        void_curve,
        sample_count: cfg.samples,
        tail_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson() -> ProcessSpec {
        ProcessSpec::Poisson { intensity: 1.0 }
    }

    #[test]
    fn one_entry_per_grid_point() {
        let cfg = AssumptionConfig::new(vec![0.5, 1.0, 1.5], vec![0.1, 0.2], 100, 1);
        let r = assumption_report(&poisson(), 2, &cfg).unwrap();
        assert_eq!(r.void_curve.len(), 3);
        assert_eq!(r.tail_curve.len(), 3);
        assert_eq!(r.palm_void_curve.len(), 3);
        assert_eq!(r.exp_moment_curve.len(), 2);
        for c in r.void_curve.iter().chain(&r.tail_curve).chain(&r.palm_void_curve) {
            assert!((0.0..=1.0).contains(&c.value));
        }
        assert!(r.void_curve.windows(2).all(|w| w[0].x < w[1].x));
    }

    #[test]
    fn rejects_bad_grids_and_sample_counts() {
        let bad = AssumptionConfig::new(vec![1.0, 0.5], vec![0.1], 100, 1);
        assert!(assumption_report(&poisson(), 2, &bad).is_err());
        let few = AssumptionConfig::new(vec![1.0], vec![0.1], 99, 1);
        assert!(assumption_report(&poisson(), 2, &few).is_err());
    }

    #[test]
    fn rare_events_are_flagged_not_dropped() {
        let cfg = AssumptionConfig::new(vec![0.5, 4.0], vec![0.1], 100, 5);
        let r = assumption_report(&poisson(), 2, &cfg).unwrap();
        assert_eq!(r.void_curve.len(), 2);
        assert!(r.void_curve[1].flagged);
    }
}
