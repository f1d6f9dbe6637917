use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::conductance::good_degree;
use crate::error::AnalysisError;
use crate::geometry::Graph;
use crate::rng::{self, streams};
use crate::stats;
use crate::walker::InducedKernel;

/// Good vertex sets up to this size are enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: usize = 16;
const DENSE_EIGEN_LIMIT: usize = 1500;
const POWER_ITERATIONS: usize = 3000;

/// Candidate-family estimate of the two isoperimetric profiles. Each value is the
/// smallest conductance found among candidates meeting the volume constraint, hence
/// an upper bound on the true infimum (`f64::INFINITY` when no candidate qualified).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoProfile {
    pub u_grid: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub phi_tilde: Vec<f64>,
    /// Candidates meeting the `deĝ` volume constraint, per `u`.
    pub candidate_count: Vec<usize>,
    pub candidate_count_tilde: Vec<usize>,
    pub exhaustive: bool,
    /// `c` in `phi_tilde(u) ≈ c · min{u^{-1/d}/L, log(L)^{-d/(d-1)}}`.
    pub fitted_c: Option<f64>,
    pub fit_r_squared: Option<f64>,
}

struct Evaluator<'a> {
    kernel: &'a InducedKernel,
    /// Graph vertex -> local index among good vertices.
    local: Vec<u32>,
    vertices: Vec<usize>,
    adjacency: Vec<Vec<u32>>,
    deg_hat: Vec<f64>,
    deg_tilde: Vec<f64>,
    total_hat: f64,
    total_tilde: f64,
    u_grid: &'a [f64],
    best_hat: Vec<f64>,
    best_tilde: Vec<f64>,
    count_hat: Vec<usize>,
    count_tilde: Vec<usize>,
    in_a: Vec<bool>,
}

impl Evaluator<'_> {
    fn record(&mut self, cut_hat: f64, vol_hat: f64, cut_tilde: f64, vol_tilde: f64) {
        for (k, &u) in self.u_grid.iter().enumerate() {
            if vol_hat <= u * self.total_hat {
                self.count_hat[k] += 1;
                self.best_hat[k] = self.best_hat[k].min(cut_hat.max(0.0) / vol_hat);
            }
            if vol_tilde > 0.0 && vol_tilde <= u * self.total_tilde {
                self.count_tilde[k] += 1;
                self.best_tilde[k] = self.best_tilde[k].min(cut_tilde / vol_tilde);
            }
        }
    }

    /// Evaluates every prefix of `order` (local indices) until both volumes pass the
    /// largest constraint.
    fn sweep(&mut self, order: impl IntoIterator<Item = usize>) {
        let u_max = *self.u_grid.last().unwrap();
        let (mut cut_hat, mut vol_hat, mut cut_tilde, mut vol_tilde) = (0.0, 0.0, 0.0f64, 0.0);
        let mut added = Vec::new();
        for z in order {
            if self.in_a[z] {
                continue;
            }
            let x = self.vertices[z];
            let (mut inside, mut outside) = (0.0, 0.0);
            for &(y, p) in self.kernel.row(x).unwrap() {
                let j = self.local[y as usize] as usize;
                if j == z {
                    continue;
                }
                if self.in_a[j] {
                    inside += p;
                } else {
                    outside += p;
                }
            }
            cut_hat += self.deg_hat[z] * (outside - inside);
            let mut nb_in = 0.0;
            let mut nb_out = 0.0;
            for &j in &self.adjacency[z] {
                if self.in_a[j as usize] {
                    nb_in += 1.0;
                } else {
                    nb_out += 1.0;
                }
            }
            cut_tilde += nb_out - nb_in;
            vol_hat += self.deg_hat[z];
            vol_tilde += self.deg_tilde[z];
            self.in_a[z] = true;
            added.push(z);
            if vol_hat > u_max * self.total_hat && vol_tilde > u_max * self.total_tilde {
                break;
            }
            self.record(cut_hat, vol_hat, cut_tilde, vol_tilde);
        }
        for z in added {
            self.in_a[z] = false;
        }
    }

    fn exhaustive(&mut self) {
        let m = self.vertices.len();
        for mask in 1u32..(1u32 << m) {
            let (mut cut_hat, mut vol_hat, mut cut_tilde, mut vol_tilde) = (0.0, 0.0, 0.0, 0.0);
            for z in (0..m).filter(|z| mask >> z & 1 == 1) {
                vol_hat += self.deg_hat[z];
                vol_tilde += self.deg_tilde[z];
                for &(y, p) in self.kernel.row(self.vertices[z]).unwrap() {
                    if mask >> self.local[y as usize] & 1 == 0 {
                        cut_hat += self.deg_hat[z] * p;
                    }
                }
                cut_tilde += self.adjacency[z].iter().filter(|&&j| mask >> j & 1 == 0).count() as f64;
            }
            self.record(cut_hat, vol_hat, cut_tilde, vol_tilde);
        }
    }
}

/// Second eigenvector of `D^{-1/2} W D^{-1/2}` mapped back by `D^{-1/2}`, where `W` is
/// given as symmetric weighted adjacency lists in local numbering.
fn fiedler(weights: &[Vec<(u32, f64)>], deg: &[f64], seed: u64) -> Vec<f64> {
    let m = deg.len();
    let dinv: Vec<f64> = deg.iter().map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }).collect();
    if m <= DENSE_EIGEN_LIMIT {
        let mut s = DMatrix::<f64>::zeros(m, m);
        for (i, row) in weights.iter().enumerate() {
            for &(j, w) in row {
                let j = j as usize;
                s[(i, j)] += 0.5 * w * dinv[i] * dinv[j];
                s[(j, i)] += 0.5 * w * dinv[i] * dinv[j];
            }
        }
        let eig = SymmetricEigen::new(s);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let k = idx[1.min(m - 1)];
        return (0..m).map(|i| eig.eigenvectors[(i, k)] * dinv[i]).collect();
    }
    // Power iteration on the lazy operator with the top eigenvector sqrt(D) deflated.
    let top: Vec<f64> = deg.iter().map(|d| d.sqrt()).collect();
    let top_norm: f64 = top.iter().map(|x| x * x).sum();
    let mut rng = rng::stream(seed, streams::AUX);
    let mut v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut next = vec![0.0; m];
    for _ in 0..POWER_ITERATIONS {
        let proj: f64 = v.iter().zip(&top).map(|(a, b)| a * b).sum::<f64>() / top_norm;
        v.iter_mut().zip(&top).for_each(|(a, b)| *a -= proj * b);
        for i in 0..m {
            let s: f64 = weights[i].iter().map(|&(j, w)| w * dinv[j as usize] * v[j as usize]).sum();
            next[i] = 0.5 * (v[i] + dinv[i] * s);
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for i in 0..m {
            v[i] = next[i] / norm;
        }
    }
    v.iter().zip(&dinv).map(|(a, b)| a * b).collect()
}

fn sorted_order(f: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    order
}

/// Estimates both profiles on the volume fractions `u_grid` from Fiedler sweep sets,
/// `budget` randomly grown connected sets and `budget` nested boxes around random good
/// vertices. Graphs with at most [`EXHAUSTIVE_LIMIT`] good vertices are enumerated
/// exhaustively instead. `l` is the grid radius used in the fitted shape.
pub fn iso_profile_estimate(
    g: &Graph,
    kernel: &InducedKernel,
    u_grid: &[f64],
    budget: usize,
    l: f64,
    seed: u64,
) -> Result<IsoProfile, AnalysisError> {
    if u_grid.is_empty() || u_grid.iter().any(|&u| !(u > 0.0 && u <= 0.5)) || u_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::Parameter("u grid must increase within (0, 1/2]".into()));
    }
    if budget < 100 {
        return Err(AnalysisError::Parameter(format!("budget must be at least 100 (got {budget})")));
    }
    if g.len() != kernel.len() {
        return Err(AnalysisError::Parameter("graph does not match the kernel".into()));
    }
    let good = kernel.good();
    let vertices: Vec<usize> = (0..g.len()).filter(|&v| good[v]).collect();
    if vertices.is_empty() {
        return Err(AnalysisError::Parameter("no good vertices".into()));
    }
    let mut local = vec![u32::MAX; g.len()];
    for (i, &v) in vertices.iter().enumerate() {
        if !kernel.has_row(v) {
            return Err(AnalysisError::MissingRow(v));
        }
        local[v] = i as u32;
    }
    let adjacency: Vec<Vec<u32>> = vertices
        .iter()
        .map(|&v| g.neighbors(v).iter().filter(|&&y| good[y as usize]).map(|&y| local[y as usize]).collect())
        .collect();
    let deg_hat: Vec<f64> = vertices.iter().map(|&v| kernel.degree(v) as f64).collect();
    let deg_tilde: Vec<f64> = vertices.iter().map(|&v| good_degree(g, good, v) as f64).collect();
    let k = u_grid.len();
    let mut ev = Evaluator {
        kernel,
        total_hat: deg_hat.iter().sum(),
        total_tilde: deg_tilde.iter().sum(),
        local,
        adjacency,
        deg_hat,
        deg_tilde,
        u_grid,
        best_hat: vec![f64::INFINITY; k],
        best_tilde: vec![f64::INFINITY; k],
        count_hat: vec![0; k],
        count_tilde: vec![0; k],
        in_a: vec![false; vertices.len()],
        vertices,
    };
    let m = ev.vertices.len();
    let exhaustive = m <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        ev.exhaustive();
    } else {
        let hat_weights: Vec<Vec<(u32, f64)>> = ev
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                kernel
                    .row(v)
                    .unwrap()
                    .iter()
                    .map(|&(y, p)| (ev.local[y as usize], ev.deg_hat[i] * p))
                    .collect()
            })
            .collect();
        let tilde_weights: Vec<Vec<(u32, f64)>> =
            ev.adjacency.iter().map(|row| row.iter().map(|&j| (j, 1.0)).collect()).collect();
        let deg_tilde_safe: Vec<f64> = ev.deg_tilde.iter().map(|&d| d.max(1.0)).collect();
        for (weights, deg) in [(&hat_weights, &ev.deg_hat.clone()), (&tilde_weights, &deg_tilde_safe)] {
            let order = sorted_order(&fiedler(weights, deg, seed));
            ev.sweep(order.iter().copied());
            ev.sweep(order.iter().rev().copied());
        }
        let mut rng = rng::stream(seed, streams::MAIN);
        let kernel_adj: Vec<Vec<u32>> = hat_weights.iter().map(|r| r.iter().map(|e| e.0).collect()).collect();
        // Randomly grown connected sets.
        let mut seen = vec![false; m];
        for _ in 0..budget {
            let start = rng.random_range(0..m);
            let mut order = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < order.len() {
                let mut nb = kernel_adj[order[head]].clone();
                nb.shuffle(&mut rng);
                for j in nb {
                    if !seen[j as usize] {
                        seen[j as usize] = true;
                        order.push(j as usize);
                    }
                }
                head += 1;
            }
            for &z in &order {
                seen[z] = false;
            }
            ev.sweep(order);
        }
        // Nested boxes around random good vertices.
        let d = g.dim();
        for _ in 0..budget {
            let c = g.position(ev.vertices[rng.random_range(0..m)]).to_vec();
            let dist: Vec<f64> = ev
                .vertices
                .iter()
                .map(|&v| (0..d).map(|a| (g.position(v)[a] - c[a]).abs()).fold(0.0, f64::max))
                .collect();
            ev.sweep(sorted_order(&dist));
        }
    }
    let d = g.dim() as f64;
    let (mut fitted_c, mut fit_r_squared) = (None, None);
    if g.dim() >= 2 && l > 1.0 {
        let cap = l.ln().powf(-d / (d - 1.0));
        let (xs, ys): (Vec<f64>, Vec<f64>) = u_grid
            .iter()
            .zip(&ev.best_tilde)
            .filter(|(_, y)| y.is_finite())
            .map(|(&u, &y)| ((u.powf(-1.0 / d) / l).min(cap), y))
            .unzip();
        if let Some((c, r2)) = stats::proportional_fit(&xs, &ys) {
            fitted_c = Some(c);
            fit_r_squared = Some(r2);
        }
    }
    Ok(IsoProfile {
        u_grid: u_grid.to_vec(),
        phi_hat: ev.best_hat,
        phi_tilde: ev.best_tilde,
        candidate_count: ev.count_hat,
        candidate_count_tilde: ev.count_tilde,
        exhaustive,
        fitted_c,
        fit_r_squared,
    })
}
