use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::palm::palm_record;
use crate::error::AnalysisError;
use crate::geometry::Graph;
use crate::pointproc::PointSet;
use crate::rng::{self, streams};
use crate::stats::{self, LinearFit};
use crate::walker::{run_dtrw, run_vsrw};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    /// Step counts at which the discrete walk is observed.
    pub steps: Vec<usize>,
    /// Times at which the variable-speed walk is observed.
    pub times: Vec<f64>,
    pub walkers: usize,
    /// Walkers start at uniformly chosen untainted vertices in `[−h, h]^d`.
    pub start_half_side: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub walkers_used: usize,
    /// Walkers that touched a tainted vertex; excluded.
    pub walkers_escaped: usize,
    pub palm_used: usize,
    pub palm_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub sigma2_dtrw: f64,
    pub sigma2_vsrw: f64,
    pub mean_palm_degree: f64,
    pub mean_palm_degree_se: f64,
    /// `sigma2_vsrw / sigma2_dtrw`.
    pub ratio: f64,
    /// `|ratio − mean_palm_degree| / mean_palm_degree`.
    pub relation_error: f64,
    pub msd_dtrw: Vec<(f64, f64)>,
    pub msd_vsrw: Vec<(f64, f64)>,
    pub fit_dtrw: LinearFit,
    pub fit_vsrw: LinearFit,
    /// Covariance of `(X_n − X_0)/√n` at the largest step count.
    pub covariance: Vec<Vec<f64>>,
    /// Largest off-diagonal entry over the mean diagonal entry.
    pub isotropy: f64,
    /// Kolmogorov–Smirnov distance of the first rescaled coordinate to its fitted normal.
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub sample_counts: SampleCounts,
}

fn increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Diffusion coefficients of the discrete and variable-speed walks on `g`, the mean
/// Palm degree from `palm`, and isotropy and Gaussianity of the discrete walk at its
/// largest step count.
pub fn diffusion_report(g: &Graph, palm: &[PointSet], cfg: &DiffusionConfig) -> Result<DiffusionReport, AnalysisError> {
    if cfg.steps.len() < 2 || cfg.times.len() < 2 {
        return Err(AnalysisError::Parameter("need at least two horizons for a slope".into()));
    }
    if !increasing(&cfg.steps) || !increasing(&cfg.times) || cfg.times[0] <= 0.0 || cfg.steps[0] == 0 {
        return Err(AnalysisError::Parameter("horizons must be positive and increasing".into()));
    }
    if cfg.walkers < 1000 {
        return Err(AnalysisError::Parameter(format!("need at least 1000 walkers (got {})", cfg.walkers)));
    }
    if palm.len() < 100 {
        return Err(AnalysisError::Parameter(format!("need at least 100 Palm samples (got {})", palm.len())));
    }
    let mut degrees = Vec::with_capacity(palm.len());
    for ps in palm {
        let rec = palm_record(ps)?;
        if !rec.tainted {
            degrees.push(rec.degree as f64);
        }
    }
    let palm_used = degrees.len();
    if palm_used < 2 {
        return Err(AnalysisError::Parameter("too few untainted Palm samples".into()));
    }

    let d = g.dim();
    let starts: Vec<usize> = (0..g.len())
        .filter(|&v| !g.is_tainted(v) && g.degree(v) > 0 && g.position(v).iter().all(|c| c.abs() <= cfg.start_half_side))
        .collect();
    if starts.is_empty() {
        return Err(AnalysisError::Parameter("no admissible start vertex".into()));
    }
    let n_max = *cfg.steps.last().unwrap();
    let t_max = *cfg.times.last().unwrap();
    let mut sq_d = vec![Vec::with_capacity(cfg.walkers); cfg.steps.len()];
    let mut sq_v = vec![Vec::with_capacity(cfg.walkers); cfg.times.len()];
    let mut last = Vec::with_capacity(cfg.walkers);
    let mut escaped = 0;
    let disp = |a: usize, b: usize| -> Vec<f64> { (0..d).map(|c| g.position(b)[c] - g.position(a)[c]).collect() };
    for w in 0..cfg.walkers {
        let s = rng::derive_seed(cfg.seed, w as u64);
        let x0 = starts[rng::stream(s, streams::AUX).random_range(0..starts.len())];
        let pd = run_dtrw(g, x0, n_max, s).map_err(|e| AnalysisError::Parameter(e.to_string()))?;
        let pv = run_vsrw(g, x0, t_max, s).map_err(|e| AnalysisError::Parameter(e.to_string()))?;
        let touched = pd.vertices().iter().chain(pv.vertices()).any(|&v| g.is_tainted(v as usize));
        if touched {
            escaped += 1;
            continue;
        }
        for (k, &n) in cfg.steps.iter().enumerate() {
            let u = disp(x0, pd.vertices()[n] as usize);
            sq_d[k].push(u.iter().map(|x| x * x).sum::<f64>());
        }
        for (k, &t) in cfg.times.iter().enumerate() {
            let u = disp(x0, pv.vertex_at(t));
            sq_v[k].push(u.iter().map(|x| x * x).sum::<f64>());
        }
        let u = disp(x0, pd.last());
        last.push(u.iter().map(|x| x / (n_max as f64).sqrt()).collect::<Vec<f64>>());
    }
    let used = last.len();
    if used < 2 {
        return Err(AnalysisError::Parameter("every walker escaped".into()));
    }
    let msd_dtrw: Vec<(f64, f64)> = cfg.steps.iter().zip(&sq_d).map(|(&n, v)| (n as f64, stats::mean(v))).collect();
    let msd_vsrw: Vec<(f64, f64)> = cfg.times.iter().zip(&sq_v).map(|(&t, v)| (t, stats::mean(v))).collect();
    let fit = |pts: &[(f64, f64)]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().cloned().unzip();
        stats::linear_fit(&xs, &ys).ok_or_else(|| AnalysisError::Parameter("slope undefined".into()))
    };
    let fit_dtrw = fit(&msd_dtrw)?;
    let fit_vsrw = fit(&msd_vsrw)?;
    let sigma2_dtrw = fit_dtrw.slope / d as f64;
    let sigma2_vsrw = fit_vsrw.slope / d as f64;

    let mean: Vec<f64> = (0..d).map(|c| last.iter().map(|u| u[c]).sum::<f64>() / used as f64).collect();
    let covariance: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| last.iter().map(|u| (u[a] - mean[a]) * (u[b] - mean[b])).sum::<f64>() / (used - 1) as f64)
                .collect()
        })
        .collect();
    let diag_mean = (0..d).map(|a| covariance[a][a]).sum::<f64>() / d as f64;
    let mut off = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            if a != b {
                off = off.max(covariance[a][b].abs());
            }
        }
    }
    let first: Vec<f64> = last.iter().map(|u| u[0]).collect();
    let mean_palm_degree = stats::mean(&degrees);
    let ratio = sigma2_vsrw / sigma2_dtrw;
    Ok(DiffusionReport {
        sigma2_dtrw,
        sigma2_vsrw,
        mean_palm_degree,
        mean_palm_degree_se: stats::std_error(&degrees),
        ratio,
        relation_error: (ratio - mean_palm_degree).abs() / mean_palm_degree,
        msd_dtrw,
        msd_vsrw,
        fit_dtrw,
        fit_vsrw,
        covariance,
        isotropy: off / diag_mean,
        ks_statistic: stats::ks_statistic_normal(&first),
        ks_critical: stats::ks_critical_1pct(used),
        sample_counts: SampleCounts {
            walkers_used: used,
            walkers_escaped: escaped,
            palm_used,
            palm_skipped: palm.len() - palm_used,
        },
    })
}
