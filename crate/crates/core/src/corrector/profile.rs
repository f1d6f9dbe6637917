use serde::{Deserialize, Serialize};

use super::HarmonicEmbedding;
use crate::error::CorrectorError;
use crate::geometry::Graph;

/// `ℜ_n ≤ ε n + δ ℜ_{3n}` evaluated at one radius; `None` when `3n` lies beyond the
/// largest radius of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionEntry {
    pub n: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyGrowthEntry {
    pub n: f64,
    pub beta: f64,
    /// `ℛ_n / n^β`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearityProfile {
    pub radii: Vec<f64>,
    /// Vertex nearest the origin, used as the base point.
    pub base: usize,
    /// `max ‖χ(x) − χ(base)‖` over usable vertices with `x ∈ [−n, n]^d`.
    pub max_chi: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Same maximum restricted to good vertices; `None` without a good mask or when no
    /// good vertex lies in the box.
    pub max_chi_good: Vec<Option<f64>>,
    /// `ℛ_n`: largest `‖χ(x) − χ(y)‖` over usable pairs in the box.
    pub spread: Vec<f64>,
    pub recursion_table: Vec<RecursionEntry>,
    pub poly_growth: Vec<PolyGrowthEntry>,
}

impl SublinearityProfile {
    /// Whether `max_chi / n` strictly decreases along the grid.
    pub fn ratios_strictly_decreasing(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1] < w[0])
    }

    pub fn poly_growth_decreasing(&self, beta: f64) -> bool {
        let v: Vec<f64> = self
            .poly_growth
            .iter()
            .filter(|e| e.beta == beta)
            .map(|e| e.value)
            .collect();
        v.windows(2).all(|w| w[1] < w[0])
    }
}

/// Radial profile of one embedding (solved on the largest box) over nested radii.
///
/// Usable vertices are the interior and boundary vertices of the embedding that are
/// not tainted in `g`; box membership is decided by vertex position.
pub fn sublinearity_profile(
    g: &Graph,
    emb: &HarmonicEmbedding,
    radii: &[f64],
    good: Option<&[bool]>,
    eps_delta: &[(f64, f64)],
    betas: &[f64],
) -> Result<SublinearityProfile, CorrectorError> {
    if radii.len() < 3 {
        return Err(CorrectorError::Parameter("need at least three radii".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CorrectorError::Parameter("radii must be positive and strictly increasing".into()));
    }
    if g.len() != emb.vertex_count() {
        return Err(CorrectorError::Parameter("graph does not match the embedding".into()));
    }
    if good.is_some_and(|m| m.len() != g.len()) {
        return Err(CorrectorError::Parameter("good mask does not match the graph".into()));
    }
    let usable: Vec<usize> = emb.vertices().filter(|&v| !g.is_tainted(v)).collect();
    let norm = |v: usize| g.position(v).iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let base = usable
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let na: f64 = g.position(a).iter().map(|c| c * c).sum();
            let nb: f64 = g.position(b).iter().map(|c| c * c).sum();
            na.total_cmp(&nb).then(a.cmp(&b))
        })
        .ok_or_else(|| CorrectorError::Parameter("no usable vertices".into()))?;
    let chi_base = emb.chi(base).unwrap().to_vec();
    let rel = |v: usize| -> Vec<f64> { emb.chi(v).unwrap().iter().zip(&chi_base).map(|(a, b)| a - b).collect() };
    let len = |u: &[f64]| u.iter().map(|c| c * c).sum::<f64>().sqrt();

    let max_at = |n: f64, only_good: bool| -> Option<f64> {
        usable
            .iter()
            .filter(|&&v| norm(v) <= n && (!only_good || good.is_some_and(|m| m[v])))
            .map(|&v| len(&rel(v)))
            .reduce(f64::max)
    };
    let max_chi: Vec<f64> = radii.iter().map(|&n| max_at(n, false).unwrap_or(0.0)).collect();
    let ratios = max_chi.iter().zip(radii).map(|(m, n)| m / n).collect();
    let max_chi_good = radii.iter().map(|&n| good.and_then(|_| max_at(n, true))).collect();
    let spread: Vec<f64> = radii
        .iter()
        .map(|&n| {
            let cloud: Vec<Vec<f64>> = usable.iter().filter(|&&v| norm(v) <= n).map(|&v| rel(v)).collect();
            diameter(&cloud)
        })
        .collect();

    let largest = *radii.last().unwrap();
    let mut recursion_table = Vec::new();
    for (i, &n) in radii.iter().enumerate() {
        let rhs_r = if 3.0 * n <= largest { max_at(3.0 * n, false) } else { None };
        for &(epsilon, delta) in eps_delta {
            let rhs = rhs_r.map(|r| epsilon * n + delta * r);
            recursion_table.push(RecursionEntry {
                n,
                epsilon,
                delta,
                lhs: max_chi[i],
                rhs,
                holds: rhs.map(|r| max_chi[i] <= r),
            });
        }
    }
    let poly_growth = radii
        .iter()
        .zip(&spread)
        .flat_map(|(&n, &r)| betas.iter().map(move |&beta| PolyGrowthEntry { n, beta, value: r / n.powf(beta) }))
        .collect();
    Ok(SublinearityProfile {
        radii: radii.to_vec(),
        base,
        max_chi,
        ratios,
        max_chi_good,
        spread,
        recursion_table,
        poly_growth,
    })
}

/// Euclidean diameter of a point cloud. Planar clouds go through their convex hull.
fn diameter(cloud: &[Vec<f64>]) -> f64 {
    let pts: Vec<&Vec<f64>> = if cloud.first().is_some_and(|p| p.len() == 2) {
        convex_hull(cloud)
    } else {
        cloud.iter().collect()
    };
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d2: f64 = pts[i].iter().zip(pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
            best = best.max(d2);
        }
    }
    best.sqrt()
}

fn convex_hull(cloud: &[Vec<f64>]) -> Vec<&Vec<f64>> {
    let mut pts: Vec<&Vec<f64>> = cloud.iter().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<&Vec<f64>> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
