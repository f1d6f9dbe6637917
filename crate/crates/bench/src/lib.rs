//! Fixtures shared by the benchmarks.

use delwalk_core::geometry::{build_delaunay, voronoi_cells_from_delaunay, Graph};
use delwalk_core::partition::{classify_boxes, cluster_components, good_points};
use delwalk_core::pointproc::{sample_poisson, PointSet, Window};

/// Unit-intensity Poisson sample on `[-h, h]^2`.
pub fn poisson_points(half_side: f64, seed: u64) -> PointSet {
    sample_poisson(1.0, &Window::centered(2, half_side).unwrap(), seed).unwrap()
}

/// Filled induced subgraph with its good mask, built the way the pipeline does.
pub struct Instance {
    pub graph: Graph,
    pub good: Vec<bool>,
}

pub fn good_instance(half_side: f64, seed: u64) -> Instance {
    let ps = poisson_points(half_side, seed);
    let dt = build_delaunay(&ps).unwrap();
    let cells = voronoi_cells_from_delaunay(&dt);
    let field = classify_boxes(&ps, 3.0, 2.4).unwrap();
    let l = field.max_radius().unwrap();
    let decomp = cluster_components(&field, l).unwrap();
    let gp = good_points(&decomp, &ps, &cells).unwrap();
    let (graph, parent) = dt.graph().induced_subgraph(&gp.filled);
    let good = parent.iter().map(|&p| gp.good[p as usize]).collect();
    Instance { graph, good }
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
