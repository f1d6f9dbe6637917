//! Exact transition kernel of the walk induced on a vertex subset.
//!
//! From a good vertex `x` the simple walk either steps to a good neighbour or enters a
//! hole (a connected component of non-good vertices) and leaves it at a good vertex
//! with the hole's hitting distribution. That distribution solves the Dirichlet system
//! `(D_H - A_HH) h = A_{H,∂H}` with one right-hand side per good boundary vertex; each
//! hole is solved once and shared by all rows that touch it.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::geometry::Graph;
use crate::linalg::pcg;
use crate::rng::Rng;

/// Holes up to this size are solved by dense Cholesky, larger ones by CG.
const DENSE_LIMIT: usize = 1500;

/// Rows of the induced kernel `ĉ(x, ·)` for good vertices `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedKernel {
    good: Vec<bool>,
    degrees: Vec<u32>,
    /// Sparse rows sorted by target; empty when not computed.
    rows: Vec<Vec<(u32, f64)>>,
    computed: Vec<bool>,
    solver_residual: f64,
}

impl InducedKernel {
    pub fn len(&self) -> usize {
        self.good.len()
    }

    pub fn is_empty(&self) -> bool {
        self.good.is_empty()
    }

    pub fn good(&self) -> &[bool] {
        &self.good
    }

    pub fn is_good(&self, v: usize) -> bool {
        self.good[v]
    }

    /// Degree in the graph the kernel was built from.
    pub fn degree(&self, v: usize) -> usize {
        self.degrees[v] as usize
    }

    pub fn has_row(&self, x: usize) -> bool {
        self.computed[x]
    }

    pub fn row(&self, x: usize) -> Option<&[(u32, f64)]> {
        self.computed[x].then(|| self.rows[x].as_slice())
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        let row = &self.rows[x];
        match row.binary_search_by_key(&(y as u32), |e| e.0) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    /// Largest residual of the hole systems solved while building the kernel.
    pub fn solver_residual(&self) -> f64 {
        self.solver_residual
    }

    /// Largest `|Σ_y ĉ(x, y) - 1|` over computed rows.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.len())
            .filter(|&x| self.computed[x])
            .map(|x| (self.rows[x].iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|deg(x) ĉ(x, y) - deg(y) ĉ(y, x)|` over pairs with both rows computed.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for x in 0..self.len() {
            if !self.computed[x] {
                continue;
            }
            for &(y, p) in &self.rows[x] {
                let y = y as usize;
                if self.computed[y] {
                    let lhs = self.degrees[x] as f64 * p;
                    let rhs = self.degrees[y] as f64 * self.prob(y, x);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        worst
    }

    /// `(x, y, ĉ(x, y))` over computed rows.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len())
            .filter(|&x| self.computed[x])
            .flat_map(move |x| self.rows[x].iter().map(move |&(y, p)| (x, y as usize, p)))
    }

    /// `out = p K`, i.e. one step of the law `p`. Mass on vertices without a row is an error.
    pub fn push_forward(&self, p: &[f64], out: &mut [f64]) -> Result<(), WalkError> {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, &mass) in p.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if !self.computed[x] {
                return Err(WalkError::NotGood(x));
            }
            for &(y, q) in &self.rows[x] {
                out[y as usize] += mass * q;
            }
        }
        Ok(())
    }

    /// Samples the next vertex from row `x` (which must be computed).
    pub fn sample_step(&self, x: usize, rng: &mut Rng) -> usize {
        let row = &self.rows[x];
        let u: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        for &(y, p) in row {
            acc += p;
            if u < acc {
                return y as usize;
            }
        }
        row.last().map(|e| e.0 as usize).unwrap_or(x)
    }
}

/// Hitting distribution of one hole onto its good boundary.
struct HoleSolution {
    /// Hole vertex -> local row.
    local: HashMap<u32, usize>,
    boundary: Vec<u32>,
    /// Row-major `|H| x |∂H|`.
    hit: Vec<f64>,
}

struct HoleSolver<'a> {
    g: &'a Graph,
    good: &'a [bool],
    label: Vec<u32>,
    members: HashMap<u32, Vec<u32>>,
    solved: HashMap<u32, HoleSolution>,
    residual: f64,
}

impl<'a> HoleSolver<'a> {
    fn new(g: &'a Graph, good: &'a [bool]) -> Self {
        let mut label = vec![u32::MAX; g.len()];
        let mut stack = Vec::new();
        for s in 0..g.len() {
            if good[s] || label[s] != u32::MAX {
                continue;
            }
            // Holes are named after their smallest vertex.
            label[s] = s as u32;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in g.neighbors(v) {
                    let w = w as usize;
                    if !good[w] && label[w] == u32::MAX {
                        label[w] = s as u32;
                        stack.push(w);
                    }
                }
            }
        }
        let mut members: HashMap<u32, Vec<u32>> = HashMap::new();
        for (v, &l) in label.iter().enumerate() {
            if l != u32::MAX {
                members.entry(l).or_default().push(v as u32);
            }
        }
        Self {
            g,
            good,
            label,
            members,
            solved: HashMap::new(),
            residual: 0.0,
        }
    }

    fn solve(&mut self, hole: u32) -> Result<(), WalkError> {
        if self.solved.contains_key(&hole) {
            return Ok(());
        }
        let g = self.g;
        let members = &self.members[&hole];
        if members.iter().any(|&v| g.is_tainted(v as usize)) {
            return Err(WalkError::Truncation {
                hole: hole as usize,
                size: members.len(),
            });
        }
        let local: HashMap<u32, usize> = members.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut boundary: Vec<u32> = members
            .iter()
            .flat_map(|&v| g.neighbors(v as usize).iter().copied())
            .filter(|&w| self.good[w as usize])
            .collect();
        boundary.sort_unstable();
        boundary.dedup();
        let bcol: HashMap<u32, usize> = boundary.iter().enumerate().map(|(j, &y)| (y, j)).collect();
        let (nh, nb) = (members.len(), boundary.len());
        let mut rhs = vec![0.0; nh * nb];
        for (i, &v) in members.iter().enumerate() {
            for &w in g.neighbors(v as usize) {
                if let Some(&j) = bcol.get(&w) {
                    rhs[i * nb + j] += 1.0;
                }
            }
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            for (i, &v) in members.iter().enumerate() {
                let mut acc = g.degree(v as usize) as f64 * x[i];
                for &w in g.neighbors(v as usize) {
                    if let Some(&k) = local.get(&w) {
                        acc -= x[k];
                    }
                }
                out[i] = acc;
            }
        };
        let hit = if nh <= DENSE_LIMIT {
            let mut m = DMatrix::<f64>::zeros(nh, nh);
            for (i, &v) in members.iter().enumerate() {
                m[(i, i)] = g.degree(v as usize) as f64;
                for &w in g.neighbors(v as usize) {
                    if let Some(&k) = local.get(&w) {
                        m[(i, k)] -= 1.0;
                    }
                }
            }
            let chol = m
                .clone()
                .cholesky()
                .ok_or_else(|| WalkError::Solver(format!("hole {hole} system is not positive definite")))?;
            let b = DMatrix::from_row_slice(nh, nb, &rhs);
            let x = chol.solve(&b);
            let res = (&m * &x - &b).amax();
            self.residual = self.residual.max(res);
            let mut hit = vec![0.0; nh * nb];
            for i in 0..nh {
                for j in 0..nb {
                    hit[i * nb + j] = x[(i, j)];
                }
            }
            hit
        } else {
            let diag: Vec<f64> = members.iter().map(|&v| g.degree(v as usize) as f64).collect();
            let mut hit = vec![0.0; nh * nb];
            for j in 0..nb {
                let b: Vec<f64> = (0..nh).map(|i| rhs[i * nb + j]).collect();
                let out = pcg(apply, &diag, &b, 1e-13, 100_000);
                if !out.converged {
                    return Err(WalkError::Solver(format!(
                        "hole {hole}: CG stalled at residual {:e}",
                        out.residual
                    )));
                }
                self.residual = self.residual.max(out.residual);
                for i in 0..nh {
                    hit[i * nb + j] = out.x[i];
                }
            }
            hit
        };
        self.solved.insert(hole, HoleSolution { local, boundary, hit });
        Ok(())
    }

    fn row(&mut self, x: usize) -> Result<Vec<(u32, f64)>, WalkError> {
        let g = self.g;
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for &w in g.neighbors(x) {
            if self.good[w as usize] {
                *acc.entry(w).or_default() += 1.0;
            } else {
                let hole = self.label[w as usize];
                self.solve(hole)?;
                let sol = &self.solved[&hole];
                let i = sol.local[&w];
                let nb = sol.boundary.len();
                for (j, &y) in sol.boundary.iter().enumerate() {
                    let p = sol.hit[i * nb + j];
                    if p != 0.0 {
                        *acc.entry(y).or_default() += p;
                    }
                }
            }
        }
        let deg = g.degree(x) as f64;
        Ok(acc.into_iter().map(|(y, p)| (y, p / deg)).collect())
    }
}

fn check_inputs(g: &Graph, good: &[bool]) -> Result<(), WalkError> {
    if good.len() != g.len() {
        return Err(WalkError::Parameter("good mask does not match the graph".into()));
    }
    Ok(())
}

/// Builds the induced kernel on `good` for the listed rows (all good vertices if `None`).
///
/// Fails with a truncation error if a required hole contains a boundary-tainted vertex.
pub fn induced_kernel(g: &Graph, good: &[bool], rows: Option<&[usize]>) -> Result<InducedKernel, WalkError> {
    check_inputs(g, good)?;
    let wanted: Vec<usize> = match rows {
        Some(r) => r.to_vec(),
        None => (0..g.len()).filter(|&v| good[v]).collect(),
    };
    let mut solver = HoleSolver::new(g, good);
    let mut kernel_rows = vec![Vec::new(); g.len()];
    let mut computed = vec![false; g.len()];
    for x in wanted {
        if x >= g.len() {
            return Err(WalkError::InvalidVertex(x));
        }
        if !good[x] {
            return Err(WalkError::NotGood(x));
        }
        if g.degree(x) == 0 {
            return Err(WalkError::Isolated(x));
        }
        if !computed[x] {
            kernel_rows[x] = solver.row(x)?;
            computed[x] = true;
        }
    }
    Ok(InducedKernel {
        good: good.to_vec(),
        degrees: (0..g.len()).map(|v| g.degree(v) as u32).collect(),
        rows: kernel_rows,
        computed,
        solver_residual: solver.residual,
    })
}

/// The single row `ĉ(x, ·)` as `(y, probability)` pairs sorted by `y`.
pub fn induced_kernel_exact(g: &Graph, good: &[bool], x: usize) -> Result<Vec<(usize, f64)>, WalkError> {
    let k = induced_kernel(g, good, Some(&[x]))?;
    Ok(k.rows[x].iter().map(|&(y, p)| (y as usize, p)).collect())
}
