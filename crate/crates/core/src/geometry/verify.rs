use serde::{Deserialize, Serialize};

use super::DelaunayGraph;

/// Outcome of the exhaustive empty-circumcircle check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    /// Indices of simplices whose open circumdisk contains a vertex.
    Fail(Vec<usize>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Tests every simplex against every vertex. A vertex counts as inside when its distance
/// to the circumcenter is below the circumradius by more than `1e-12` relative.
pub fn verify_empty_circumcircle(g: &DelaunayGraph) -> Verdict {
    let graph = g.graph();
    let mut bad = Vec::new();
    for s in 0..g.simplex_count() {
        let c = g.circumcenter(s);
        let r = g.circumradius(s);
        let limit = r * (1.0 - 1e-12);
        let simplex = g.simplex(s);
        let violated = (0..graph.len()).any(|v| {
            if simplex.contains(&(v as u32)) {
                return false;
            }
            let d = graph
                .position(v)
                .iter()
                .zip(c)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            d < limit
        });
        if violated {
            bad.push(s);
        }
    }
    if bad.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(bad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_delaunay;
    use crate::pointproc::{PointSet, Window};

    #[test]
    fn flipped_diagonal_fails_on_both_triangles() {
        // Convex quad whose Delaunay diagonal is 1-3; the 0-2 diagonal is illegal.
        let ps = PointSet::from_coords(
            vec![0.0, 0.0, 2.0, -0.5, 4.0, 0.0, 2.0, 0.5],
            Window::cube(2, -5.0, 5.0).unwrap(),
            None,
        )
        .unwrap();
        let good = build_delaunay(&ps).unwrap();
        assert!(verify_empty_circumcircle(&good).is_pass());
        assert!(good.graph().has_edge(1, 3));
        let flipped = DelaunayGraph::from_simplices(&ps, &[[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(verify_empty_circumcircle(&flipped), Verdict::Fail(vec![0, 1]));
    }
}
