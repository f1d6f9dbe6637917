use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CorrectorError;
use crate::geometry::Graph;
use crate::linalg::pcg;

const NONE: u32 = u32::MAX;

/// Iteration cap of the conjugate-gradient solver.
pub const MAX_ITERATIONS: usize = 100_000;

/// Harmonic coordinates on a finite region: `φ` solves the Dirichlet problem with
/// identity boundary data and `χ = x − φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEmbedding {
    pub(crate) dim: usize,
    pub(crate) slot: Vec<u32>,
    pub(crate) vertices: Vec<u32>,
    pub(crate) interior: Vec<bool>,
    pub(crate) positions: Vec<f64>,
    pub(crate) phi: Vec<f64>,
    pub(crate) chi: Vec<f64>,
    pub(crate) residual: f64,
    pub(crate) solver_iterations: usize,
    pub(crate) tolerance: f64,
}

impl HarmonicEmbedding {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size of the graph the embedding was solved on.
    pub fn vertex_count(&self) -> usize {
        self.slot.len()
    }

    /// Number of interior plus boundary vertices.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn slot_of(&self, v: usize) -> Option<usize> {
        match self.slot.get(v) {
            Some(&s) if s != NONE => Some(s as usize),
            _ => None,
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.slot_of(v).is_some()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        self.slot_of(v).is_some_and(|s| self.interior[s])
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.slot_of(v).is_some_and(|s| !self.interior[s])
    }

    /// Interior and boundary vertices in increasing order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().map(|&v| v as usize)
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices().filter(|&v| self.is_interior(v))
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.vertices().filter(|&v| self.is_boundary(v))
    }

    fn field<'a>(&self, data: &'a [f64], v: usize) -> Option<&'a [f64]> {
        let d = self.dim;
        self.slot_of(v).map(|s| &data[s * d..(s + 1) * d])
    }

    pub fn position(&self, v: usize) -> Option<&[f64]> {
        self.field(&self.positions, v)
    }

    pub fn phi(&self, v: usize) -> Option<&[f64]> {
        self.field(&self.phi, v)
    }

    pub fn chi(&self, v: usize) -> Option<&[f64]> {
        self.field(&self.chi, v)
    }

    /// `χ(x) − χ(y)`, the pair value of the corrector.
    pub fn chi_difference(&self, x: usize, y: usize) -> Option<Vec<f64>> {
        let (a, b) = (self.chi(x)?, self.chi(y)?);
        Some(a.iter().zip(b).map(|(a, b)| a - b).collect())
    }

    /// Largest interior harmonic defect `‖Σ_{y~x} (φ(y) − φ(x))‖` found after the solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn solver_iterations(&self) -> usize {
        self.solver_iterations
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Harmonic defect at every interior vertex, recomputed from `g`.
    pub fn harmonic_defects(&self, g: &Graph) -> Result<Vec<(usize, f64)>, CorrectorError> {
        if g.len() != self.vertex_count() || g.dim() != self.dim {
            return Err(CorrectorError::Parameter("graph does not match the embedding".into()));
        }
        Ok(self
            .interior_vertices()
            .map(|x| (x, defect(g, x, |v| self.phi(v))))
            .collect())
    }

    /// Whether every interior coordinate of `φ` lies within the range of that coordinate
    /// over the boundary.
    pub fn max_principle_holds(&self) -> bool {
        let d = self.dim;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for v in self.boundary_vertices() {
            for (c, &p) in self.phi(v).unwrap().iter().enumerate() {
                lo[c] = lo[c].min(p);
                hi[c] = hi[c].max(p);
            }
        }
        self.interior_vertices().all(|v| {
            self.phi(v)
                .unwrap()
                .iter()
                .enumerate()
                .all(|(c, &p)| lo[c] <= p && p <= hi[c])
        })
    }
}

fn defect<'a>(g: &Graph, x: usize, phi: impl Fn(usize) -> Option<&'a [f64]>) -> f64 {
    let px = phi(x).unwrap();
    let mut sum = vec![0.0; px.len()];
    for &y in g.neighbors(x) {
        let py = phi(y as usize).unwrap();
        for c in 0..px.len() {
            sum[c] += py[c] - px[c];
        }
    }
    sum.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Solves the Dirichlet problem on `region` (the interior) with `φ = id` on the graph
/// neighbours of the region lying outside it. All edges have unit conductance.
///
/// The solve is carried out for `χ`, which vanishes on the boundary and satisfies
/// `L χ = L x` in the interior; this keeps the unknowns small. Each coordinate is an
/// independent Jacobi-preconditioned CG solve, stopped once the harmonic defect is
/// below `tolerance` in Euclidean norm.
pub fn solve_harmonic_embedding(
    g: &Graph,
    region: &[bool],
    tolerance: f64,
) -> Result<HarmonicEmbedding, CorrectorError> {
    if region.len() != g.len() {
        return Err(CorrectorError::Parameter("region mask does not match the graph".into()));
    }
    if !(tolerance > 0.0) {
        return Err(CorrectorError::Parameter(format!("tolerance must be positive (got {tolerance})")));
    }
    let d = g.dim();
    let n = g.len();
    let mut boundary = vec![false; n];
    for x in (0..n).filter(|&x| region[x]) {
        for &y in g.neighbors(x) {
            if !region[y as usize] {
                boundary[y as usize] = true;
            }
        }
    }
    let mut slot = vec![NONE; n];
    let mut vertices = Vec::new();
    let mut interior = Vec::new();
    for v in 0..n {
        if region[v] || boundary[v] {
            slot[v] = vertices.len() as u32;
            vertices.push(v as u32);
            interior.push(region[v]);
        }
    }
    // Local numbering of the unknowns.
    let mut unknowns: Vec<u32> = vertices.iter().copied().filter(|&v| region[v as usize]).collect();
    // Strip-wise spatial order keeps neighbouring unknowns close in memory.
    let strip = |v: u32| if d > 1 { (g.position(v as usize)[1] / 4.0).floor() as i64 } else { 0 };
    unknowns.sort_by(|&a, &b| {
        strip(a)
            .cmp(&strip(b))
            .then(g.position(a as usize)[0].total_cmp(&g.position(b as usize)[0]))
    });
    if unknowns.is_empty() {
        return Err(CorrectorError::Parameter("region is empty".into()));
    }
    let mut local = vec![NONE; n];
    for (i, &v) in unknowns.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    check_boundary_contact(g, &unknowns, &local, &boundary)?;

    let diag: Vec<f64> = unknowns.iter().map(|&v| g.degree(v as usize) as f64).collect();
    // Interior-to-interior adjacency in local numbering.
    let mut offsets = Vec::with_capacity(unknowns.len() + 1);
    let mut targets = Vec::new();
    offsets.push(0usize);
    for &x in &unknowns {
        targets.extend(
            g.neighbors(x as usize)
                .iter()
                .map(|&y| local[y as usize])
                .filter(|&j| j != NONE),
        );
        offsets.push(targets.len());
    }
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..out.len() {
            let s: f64 = targets[offsets[i]..offsets[i + 1]].iter().map(|&j| v[j as usize]).sum();
            out[i] = diag[i] * v[i] - s;
        }
    };
    let per_coord = tolerance / (d as f64).sqrt();
    let solves: Vec<_> = (0..d)
        .into_par_iter()
        .map(|c| {
            let b: Vec<f64> = unknowns
                .iter()
                .map(|&x| {
                    let x = x as usize;
                    let px = g.position(x)[c];
                    g.neighbors(x)
                        .iter()
                        .map(|&y| px - g.position(y as usize)[c])
                        .sum()
                })
                .collect();
            pcg(apply, &diag, &b, per_coord, MAX_ITERATIONS)
        })
        .collect();
    if let Some(bad) = solves.iter().find(|s| !s.converged) {
        return Err(CorrectorError::NotConverged {
            iterations: bad.iterations,
            residual: bad.residual,
        });
    }

    let k = vertices.len();
    let mut positions = vec![0.0; k * d];
    let mut chi = vec![0.0; k * d];
    for (s, &v) in vertices.iter().enumerate() {
        positions[s * d..(s + 1) * d].copy_from_slice(g.position(v as usize));
        let i = local[v as usize];
        if i != NONE {
            for c in 0..d {
                chi[s * d + c] = solves[c].x[i as usize];
            }
        }
    }
    let phi: Vec<f64> = positions.iter().zip(&chi).map(|(p, c)| p - c).collect();
    let mut emb = HarmonicEmbedding {
        dim: d,
        slot,
        vertices,
        interior,
        positions,
        phi,
        chi,
        residual: 0.0,
        solver_iterations: solves.iter().map(|s| s.iterations).max().unwrap_or(0),
        tolerance,
    };
    emb.residual = unknowns
        .iter()
        .map(|&x| defect(g, x as usize, |v| emb.phi(v)))
        .fold(0.0, f64::max);
    Ok(emb)
}

fn check_boundary_contact(g: &Graph, unknowns: &[u32], local: &[u32], boundary: &[bool]) -> Result<(), CorrectorError> {
    let mut seen = vec![false; unknowns.len()];
    let mut stack = Vec::new();
    for start in 0..unknowns.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut touches = false;
        while let Some(i) = stack.pop() {
            for &y in g.neighbors(unknowns[i] as usize) {
                let j = local[y as usize];
                if j == NONE {
                    touches |= boundary[y as usize];
                } else if !seen[j as usize] {
                    seen[j as usize] = true;
                    stack.push(j as usize);
                }
            }
        }
        if !touches {
            return Err(CorrectorError::Singular(unknowns[start] as usize));
        }
    }
    Ok(())
}

/// Vertices of `g` inside the closed box `[−n, n]^d`.
pub fn box_region(g: &Graph, n: f64) -> Vec<bool> {
    (0..g.len())
        .map(|v| g.position(v).iter().all(|c| c.abs() <= n))
        .collect()
}

/// Per-vertex `χ` of every interior and boundary vertex; zero on the boundary.
pub fn corrector_values(emb: &HarmonicEmbedding) -> Vec<(usize, Vec<f64>)> {
    emb.vertices().map(|v| (v, emb.chi(v).unwrap().to_vec())).collect()
}
