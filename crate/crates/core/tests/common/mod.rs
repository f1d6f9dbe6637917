//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use delwalk_core::geometry::{build_delaunay, voronoi_cells_from_delaunay, DelaunayGraph, Graph};
use delwalk_core::partition::{classify_boxes, cluster_components, good_points};
use delwalk_core::pointproc::{sample_poisson, PointSet, Window};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn poisson_graph(half_side: f64, seed: u64) -> (PointSet, DelaunayGraph) {
    let ps = sample_poisson(1.0, &Window::centered(2, half_side).unwrap(), seed).unwrap();
    let dt = build_delaunay(&ps).unwrap();
    (ps, dt)
}

/// Graph restricted to filled points, with the good mask in the restricted numbering.
pub struct GoodInstance {
    pub graph: Graph,
    pub good: Vec<bool>,
    pub l: i64,
    pub enclosed_holes: usize,
}

pub fn good_instance(half_side: f64, s: f64, alpha: f64, seed: u64) -> GoodInstance {
    let (ps, dt) = poisson_graph(half_side, seed);
    let cells = voronoi_cells_from_delaunay(&dt);
    let field = classify_boxes(&ps, s, alpha).unwrap();
    let l = field.max_radius().unwrap();
    let decomp = cluster_components(&field, l).unwrap();
    let gp = good_points(&decomp, &ps, &cells).unwrap();
    let (graph, parent) = dt.graph().induced_subgraph(&gp.filled);
    let good = parent.iter().map(|&p| gp.good[p as usize]).collect();
    GoodInstance {
        graph,
        good,
        l,
        enclosed_holes: decomp.enclosed_holes().count(),
    }
}

/// Good vertex closest to the origin.
pub fn central_good(g: &Graph, good: &[bool]) -> usize {
    (0..g.len())
        .filter(|&v| good[v])
        .min_by(|&a, &b| {
            let na: f64 = g.position(a).iter().map(|c| c * c).sum();
            let nb: f64 = g.position(b).iter().map(|c| c * c).sum();
            na.total_cmp(&nb)
        })
        .unwrap()
}

/// Delaunay graph of a Poisson sample on `[0, side]^2` with untainted vertices, and a
/// good mask that removes the points inside a few random disks.
pub fn holed_instance(side: f64, disks: usize, seed: u64) -> (Graph, Vec<bool>) {
    let ps = sample_poisson(1.0, &Window::cube(2, 0.0, side).unwrap(), seed).unwrap();
    let dt = build_delaunay(&ps).unwrap();
    let g = dt.graph();
    let edges: Vec<(u32, u32)> = g.edges().map(|(a, b)| (a as u32, b as u32)).collect();
    let g = Graph::from_edges(2, g.positions().to_vec(), &edges, vec![false; g.len()]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let centres: Vec<(f64, f64, f64)> = (0..disks)
        .map(|_| {
            (
                rng.random_range(0.2 * side..0.8 * side),
                rng.random_range(0.2 * side..0.8 * side),
                rng.random_range(1.0..0.15 * side),
            )
        })
        .collect();
    let good = (0..g.len())
        .map(|v| {
            let p = g.position(v);
            centres.iter().all(|&(x, y, r)| (p[0] - x).hypot(p[1] - y) > r)
        })
        .collect();
    (g, good)
}

/// Induced kernel from the dense absorption system: with `P` the simple-walk matrix,
/// `Q` its non-good block and `R` the non-good-to-good block,
/// `ĉ = P_GG + P_GN (I − Q)^{-1} R`.
pub fn dense_induced_kernel(g: &Graph, good: &[bool]) -> DMatrix<f64> {
    let n = g.len();
    let gi: Vec<usize> = (0..n).filter(|&v| good[v]).collect();
    let ni: Vec<usize> = (0..n).filter(|&v| !good[v]).collect();
    let p = |x: usize, y: usize| {
        if g.has_edge(x, y) {
            1.0 / g.degree(x) as f64
        } else {
            0.0
        }
    };
    let mut out = DMatrix::<f64>::zeros(n, n);
    let (ng, nn) = (gi.len(), ni.len());
    let pgg = DMatrix::from_fn(ng, ng, |i, j| p(gi[i], gi[j]));
    let result = if nn == 0 {
        pgg
    } else {
        let pgn = DMatrix::from_fn(ng, nn, |i, j| p(gi[i], ni[j]));
        let q = DMatrix::from_fn(nn, nn, |i, j| if i == j { 1.0 } else { 0.0 } - p(ni[i], ni[j]));
        let r = DMatrix::from_fn(nn, ng, |i, j| p(ni[i], gi[j]));
        let h = q.lu().solve(&r).unwrap();
        pgg + pgn * h
    };
    for i in 0..ng {
        for j in 0..ng {
            out[(gi[i], gi[j])] = result[(i, j)];
        }
    }
    out
}
