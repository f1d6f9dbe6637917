use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::geometry::build_delaunay;
use crate::pointproc::PointSet;
use crate::stats::{self, LinearFit};

/// Neighbourhood of the origin in the Delaunay graph of one Palm sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmRecord {
    pub degree: usize,
    pub max_neighbor_distance: f64,
    /// Neighbour positions (the origin sits at 0).
    pub neighbors: Vec<Vec<f64>>,
    /// Origin's neighbourhood may be affected by the window.
    pub tainted: bool,
}

/// Builds the Delaunay graph of a Palm sample and records the origin's neighbours.
pub fn palm_record(ps: &PointSet) -> Result<PalmRecord, AnalysisError> {
    let o = ps
        .palm_origin()
        .ok_or_else(|| AnalysisError::Parameter("point set is not Palm-conditioned".into()))?;
    let dt = build_delaunay(ps).map_err(|e| AnalysisError::Parameter(e.to_string()))?;
    let g = dt.graph();
    let neighbors: Vec<Vec<f64>> = g.neighbors(o).iter().map(|&y| g.position(y as usize).to_vec()).collect();
    let max_neighbor_distance = g.neighbors(o).iter().map(|&y| g.distance(o, y as usize)).fold(0.0, f64::max);
    Ok(PalmRecord {
        degree: neighbors.len(),
        max_neighbor_distance,
        neighbors,
        tainted: dt.is_tainted(o),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    pub x: f64,
    pub survival: f64,
    pub events: usize,
}

/// Outcome of the lens audit: whenever all `2^d` lenses at scale `β^n` hold a point,
/// every Delaunay neighbour of the origin must lie in the union of the `2d` balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensAudit {
    pub beta: f64,
    pub n_max: u32,
    /// `(sample, n)` pairs examined.
    pub checked: usize,
    /// Pairs in which every lens held a point.
    pub all_lenses_hit: usize,
    /// Pairs where the implication failed.
    pub violations: Vec<(usize, u32)>,
    /// Pairs skipped because the balls leave the sampling window.
    pub skipped_scale: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailMomentReport {
    pub samples: usize,
    pub skipped_tainted: usize,
    pub mean_degree: f64,
    pub degree_survival: Vec<SurvivalPoint>,
    /// Fit of `ln P[deg ≥ k]` on `k` over tail points with at least five events.
    pub degree_fit: Option<LinearFit>,
    /// `P[R > ρ]` on the given grid, `R` the largest neighbour distance.
    pub distance_survival: Vec<SurvivalPoint>,
    /// Fit of `ln P[R > ρ]` on `ρ` over grid points with at least one event.
    pub distance_fit: Option<LinearFit>,
    pub running_degree_second: Vec<f64>,
    pub running_distance_fourth: Vec<f64>,
    pub degree_second_drift: f64,
    pub distance_fourth_drift: f64,
    pub lens: LensAudit,
}

fn in_ball(p: &[f64], axis: usize, sign: f64, r: f64) -> bool {
    let d2: f64 = p
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let centre = if i == axis { sign * r } else { 0.0 };
            (c - centre).powi(2)
        })
        .sum();
    d2 < r * r
}

/// Whether `p` lies in the lens `∩_i B(σ_i r e_i, r)` with signs from the bits of `mask`.
fn in_lens(p: &[f64], mask: usize, r: f64) -> bool {
    (0..p.len()).all(|i| in_ball(p, i, if mask >> i & 1 == 1 { -1.0 } else { 1.0 }, r))
}

fn in_gamma(p: &[f64], r: f64) -> bool {
    (0..p.len()).any(|i| in_ball(p, i, 1.0, r) || in_ball(p, i, -1.0, r))
}

/// Lens audit of one Palm sample at scales `β^0..β^{n_max}`; returns
/// `(checked, all_hit, violations, skipped)`.
fn audit(ps: &PointSet, rec: &PalmRecord, beta: f64, n_max: u32) -> (usize, usize, Vec<u32>, usize) {
    let w = ps.window();
    let d = ps.dim();
    let half = (0..d).map(|a| (-w.lo()[a]).min(w.hi()[a])).fold(f64::INFINITY, f64::min);
    let (mut checked, mut hit, mut bad, mut skipped) = (0, 0, Vec::new(), 0);
    let origin = ps.palm_origin().unwrap();
    for n in 0..=n_max {
        let r = beta.powi(n as i32);
        if 2.0 * r > half {
            skipped += 1;
            continue;
        }
        checked += 1;
        let all = (0..1usize << d).all(|mask| {
            ps.iter()
                .enumerate()
                .any(|(i, p)| i != origin && in_lens(p, mask, r))
        });
        if all {
            hit += 1;
            if !rec.neighbors.iter().all(|y| in_gamma(y, r)) {
                bad.push(n);
            }
        }
    }
    (checked, hit, bad, skipped)
}

/// Tail, moment and lens diagnostics over an ensemble of Palm samples. Samples whose
/// origin is tainted are skipped and counted.
pub fn tail_moment_report(
    ensemble: &[PointSet],
    rho_grid: &[f64],
    beta: f64,
    n_max: u32,
) -> Result<TailMomentReport, AnalysisError> {
    if !(beta > 1.0) {
        return Err(AnalysisError::Parameter(format!("beta must exceed 1 (got {beta})")));
    }
    if ensemble.is_empty() {
        return Err(AnalysisError::Parameter("empty ensemble".into()));
    }
    let mut records = Vec::with_capacity(ensemble.len());
    let mut lens = LensAudit {
        beta,
        n_max,
        checked: 0,
        all_lenses_hit: 0,
        violations: Vec::new(),
        skipped_scale: 0,
    };
    let mut skipped_tainted = 0;
    for (s, ps) in ensemble.iter().enumerate() {
        let rec = palm_record(ps)?;
        if rec.tainted {
            skipped_tainted += 1;
            continue;
        }
        let (checked, hit, bad, skipped) = audit(ps, &rec, beta, n_max);
        lens.checked += checked;
        lens.all_lenses_hit += hit;
        lens.violations.extend(bad.into_iter().map(|n| (s, n)));
        lens.skipped_scale += skipped;
        records.push(rec);
    }
    let used = records.len();
    if used == 0 {
        return Err(AnalysisError::Parameter("every sample has a tainted origin".into()));
    }
    let nf = used as f64;
    let degrees: Vec<f64> = records.iter().map(|r| r.degree as f64).collect();
    let max_deg = records.iter().map(|r| r.degree).max().unwrap();
    let degree_survival: Vec<SurvivalPoint> = (0..=max_deg)
        .map(|k| {
            let events = records.iter().filter(|r| r.degree >= k).count();
            SurvivalPoint {
                x: k as f64,
                survival: events as f64 / nf,
                events,
            }
        })
        .collect();
    let mut sorted = degrees.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[used / 2];
    let (xs, ys): (Vec<f64>, Vec<f64>) = degree_survival
        .iter()
        .filter(|p| p.x >= median && p.events >= 5)
        .map(|p| (p.x, p.survival.ln()))
        .unzip();
    let degree_fit = stats::linear_fit(&xs, &ys);
    let distance_survival: Vec<SurvivalPoint> = rho_grid
        .iter()
        .map(|&rho| {
            let events = records.iter().filter(|r| r.max_neighbor_distance > rho).count();
            SurvivalPoint {
                x: rho,
                survival: events as f64 / nf,
                events,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = distance_survival
        .iter()
        .filter(|p| p.events >= 1)
        .map(|p| (p.x, p.survival.ln()))
        .unzip();
    let distance_fit = stats::linear_fit(&xs, &ys);
    let deg2: Vec<f64> = degrees.iter().map(|d| d * d).collect();
    let r4: Vec<f64> = records.iter().map(|r| r.max_neighbor_distance.powi(4)).collect();
    let running_degree_second = stats::running_mean(&deg2);
    let running_distance_fourth = stats::running_mean(&r4);
    Ok(TailMomentReport {
        samples: ensemble.len(),
        skipped_tainted,
        mean_degree: stats::mean(&degrees),
        degree_survival,
        degree_fit,
        distance_survival,
        distance_fit,
        degree_second_drift: stats::second_half_drift(&running_degree_second),
        distance_fourth_drift: stats::second_half_drift(&running_distance_fourth),
        running_degree_second,
        running_distance_fourth,
        lens,
    })
}
