//! Delaunay triangulations, clipped Voronoi cells and the vertex graph.

mod delaunay;
mod graph;
mod io;
mod verify;
mod voronoi;

pub use delaunay::{build_delaunay, DelaunayGraph};
pub use graph::Graph;
pub use io::{read_graph, write_graph};
pub use verify::{verify_empty_circumcircle, Verdict};
pub use voronoi::{cells_intersecting_box, voronoi_cells, voronoi_cells_from_delaunay, FaceLabel, VoronoiCell};

use crate::error::GeometryError;

/// Degree of `v` and the length of its longest incident edge (0 for isolated vertices).
pub fn neighbor_stats(g: &Graph, v: usize) -> Result<(usize, f64), GeometryError> {
    g.check_vertex(v)?;
    let max = g
        .neighbors(v)
        .iter()
        .map(|&w| g.distance(v, w as usize))
        .fold(0.0, f64::max);
    Ok((g.degree(v), max))
}
