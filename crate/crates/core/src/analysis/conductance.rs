use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::geometry::Graph;
use crate::walker::InducedKernel;

/// Conductance of one vertex set under the induced walk (`i_hat`) and under the walk
/// restricted to good vertices (`i_tilde`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceRecord {
    pub set_id: usize,
    pub size: usize,
    pub i_hat: f64,
    pub i_tilde: f64,
    /// `(deĝ(A), deĝ(good))` with the kernel's degrees.
    pub volume_hat: (f64, f64),
    /// `(deg~(A), deg~(good))` with degrees in the graph restricted to good vertices.
    pub volume_tilde: (f64, f64),
    pub bound: f64,
    /// `i_hat ≥ i_tilde / bound`.
    pub comparison_holds: bool,
}

pub(crate) fn good_degree(g: &Graph, good: &[bool], x: usize) -> usize {
    g.neighbors(x).iter().filter(|&&y| good[y as usize]).count()
}

/// Both conductances of `a`, a set of good vertices. `g` supplies adjacency among good
/// vertices; the kernel supplies `ĉ` and the degrees `deĝ`. `bound` is the degree cap
/// `D` in the comparison `Î ≥ Ĩ / D`.
pub fn conductance_pair(
    g: &Graph,
    kernel: &InducedKernel,
    a: &[usize],
    set_id: usize,
    bound: f64,
) -> Result<ConductanceRecord, AnalysisError> {
    let good = kernel.good();
    if g.len() != kernel.len() {
        return Err(AnalysisError::Parameter("graph does not match the kernel".into()));
    }
    if a.is_empty() {
        return Err(AnalysisError::Parameter("empty set".into()));
    }
    let mut in_a = vec![false; g.len()];
    for &x in a {
        if x >= g.len() || !good[x] {
            return Err(AnalysisError::Parameter(format!("vertex {x} is not a good vertex")));
        }
        if !kernel.has_row(x) {
            return Err(AnalysisError::MissingRow(x));
        }
        in_a[x] = true;
    }
    let mut flow = 0.0;
    let mut cut_edges = 0usize;
    let (mut vol_hat, mut vol_tilde) = (0.0, 0.0);
    for x in (0..g.len()).filter(|&x| in_a[x]) {
        let deg = kernel.degree(x) as f64;
        vol_hat += deg;
        vol_tilde += good_degree(g, good, x) as f64;
        let leaving: f64 = kernel
            .row(x)
            .unwrap()
            .iter()
            .filter(|e| !in_a[e.0 as usize])
            .map(|e| e.1)
            .sum();
        flow += deg * leaving;
        cut_edges += g
            .neighbors(x)
            .iter()
            .filter(|&&y| good[y as usize] && !in_a[y as usize])
            .count();
    }
    let (mut total_hat, mut total_tilde) = (0.0, 0.0);
    for x in (0..g.len()).filter(|&x| good[x]) {
        total_hat += kernel.degree(x) as f64;
        total_tilde += good_degree(g, good, x) as f64;
    }
    let i_hat = flow / vol_hat;
    let i_tilde = if vol_tilde > 0.0 { cut_edges as f64 / vol_tilde } else { 0.0 };
    Ok(ConductanceRecord {
        set_id,
        size: a.len(),
        i_hat,
        i_tilde,
        volume_hat: (vol_hat, total_hat),
        volume_tilde: (vol_tilde, total_tilde),
        bound,
        comparison_holds: i_hat >= i_tilde / bound,
    })
}
