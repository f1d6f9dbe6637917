//! Voronoi cells clipped to the window.
//!
//! Each cell starts as the window rectangle and is cut by the bisector half-planes of
//! the nucleus' Delaunay neighbours (which determine the cell completely). Edges keep a
//! label saying whether they lie on a bisector or on a window side.

use serde::{Deserialize, Serialize};

use super::{build_delaunay, DelaunayGraph};
use crate::error::GeometryError;
use crate::pointproc::{PointSet, Window};

/// What bounds one edge of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceLabel {
    /// Bisector with the given nucleus.
    Neighbor(u32),
    /// Window side: `2 * axis` for the lower side, `2 * axis + 1` for the upper.
    Window(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoronoiCell {
    nucleus: usize,
    /// Counter-clockwise polygon vertices.
    vertices: Vec<[f64; 2]>,
    /// `faces[k]` bounds the edge from `vertices[k]` to `vertices[k + 1]`.
    faces: Vec<FaceLabel>,
    clipped: bool,
}

impl VoronoiCell {
    pub fn nucleus(&self) -> usize {
        self.nucleus
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[FaceLabel] {
        &self.faces
    }

    /// True when some edge of the cell lies on the window boundary.
    pub fn clipped(&self) -> bool {
        self.clipped
    }

    /// Nuclei sharing an edge with this cell.
    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.faces.iter().filter_map(|f| match *f {
            FaceLabel::Neighbor(j) => Some(j as usize),
            FaceLabel::Window(_) => None,
        })
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|k| {
                let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    /// Closed point-in-polygon test.
    pub fn contains(&self, p: &[f64]) -> bool {
        let n = self.vertices.len();
        (0..n).all(|k| {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
        })
    }

    /// Whether the closed cell meets the closed box `[lo, hi]` (separating-axis test).
    pub fn meets_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        let (clo, chi) = self.bounding_box();
        if (0..2).any(|k| chi[k] < lo[k] || clo[k] > hi[k]) {
            return false;
        }
        let corners = [[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
        let n = self.vertices.len();
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            let normal = [b[1] - a[1], a[0] - b[0]];
            let support = normal[0] * a[0] + normal[1] * a[1];
            let box_min = corners
                .iter()
                .map(|c| normal[0] * c[0] + normal[1] * c[1])
                .fold(f64::INFINITY, f64::min);
            if box_min > support {
                return false;
            }
        }
        true
    }
}

fn window_polygon(w: &Window) -> (Vec<[f64; 2]>, Vec<FaceLabel>) {
    let (lo, hi) = (w.lo(), w.hi());
    (
        vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]],
        vec![
            FaceLabel::Window(2),
            FaceLabel::Window(1),
            FaceLabel::Window(3),
            FaceLabel::Window(0),
        ],
    )
}

/// Cuts `poly` by `{z : |z - x| <= |z - y|}`, labelling the new edge `label`.
fn clip(poly: &mut Vec<[f64; 2]>, faces: &mut Vec<FaceLabel>, x: &[f64], y: &[f64], label: FaceLabel) {
    let dir = [y[0] - x[0], y[1] - x[1]];
    let half = 0.5 * (dir[0] * dir[0] + dir[1] * dir[1]);
    let f = |z: &[f64; 2]| (z[0] - x[0]) * dir[0] + (z[1] - x[1]) * dir[1] - half;
    let n = poly.len();
    let vals: Vec<f64> = poly.iter().map(f).collect();
    if vals.iter().all(|&v| v <= 0.0) {
        return;
    }
    let mut out_v = Vec::with_capacity(n + 1);
    let mut out_f = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (p, q) = (poly[k], poly[(k + 1) % n]);
        let (fp, fq) = (vals[k], vals[(k + 1) % n]);
        let cross = || {
            let t = fp / (fp - fq);
            [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
        };
        match (fp <= 0.0, fq <= 0.0) {
            (true, true) => {
                out_v.push(p);
                out_f.push(faces[k]);
            }
            (true, false) => {
                if fp < 0.0 {
                    out_v.push(p);
                    out_f.push(faces[k]);
                    out_v.push(cross());
                } else {
                    // p sits on the bisector, so the new edge starts at p itself.
                    out_v.push(p);
                }
                out_f.push(label);
            }
            (false, true) => {
                if fq < 0.0 {
                    out_v.push(cross());
                    out_f.push(faces[k]);
                }
            }
            (false, false) => {}
        }
    }
    *poly = out_v;
    *faces = out_f;
}

fn drop_short_edges(poly: &mut Vec<[f64; 2]>, faces: &mut Vec<FaceLabel>, eps: f64) {
    let mut k = 0;
    while poly.len() > 3 && k < poly.len() {
        let n = poly.len();
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        if (a[0] - b[0]).hypot(a[1] - b[1]) <= eps {
            poly.remove(k);
            faces.remove(k);
        } else {
            k += 1;
        }
    }
}

fn cell(
    ps_point: impl Fn(usize) -> [f64; 2],
    window: &Window,
    nucleus: usize,
    others: impl Iterator<Item = usize>,
) -> VoronoiCell {
    let (mut poly, mut faces) = window_polygon(window);
    let x = ps_point(nucleus);
    for j in others {
        if poly.is_empty() {
            break;
        }
        clip(&mut poly, &mut faces, &x, &ps_point(j), FaceLabel::Neighbor(j as u32));
    }
    drop_short_edges(&mut poly, &mut faces, 1e-12 * window.max_side());
    let clipped = faces.iter().any(|f| matches!(f, FaceLabel::Window(_)));
    VoronoiCell {
        nucleus,
        vertices: poly,
        faces,
        clipped,
    }
}

/// Cells of all nuclei of a triangulation, clipped to its window.
pub fn voronoi_cells_from_delaunay(g: &DelaunayGraph) -> Vec<VoronoiCell> {
    let graph = g.graph();
    let point = |i: usize| {
        let p = graph.position(i);
        [p[0], p[1]]
    };
    (0..graph.len())
        .map(|v| cell(point, g.window(), v, graph.neighbors(v).iter().map(|&j| j as usize)))
        .collect()
}

/// Voronoi cells of `ps`, clipped to its window. Small or collinear inputs, which have
/// no triangulation, are handled by clipping against every other point.
pub fn voronoi_cells(ps: &PointSet) -> Result<Vec<VoronoiCell>, GeometryError> {
    if ps.dim() != 2 {
        return Err(GeometryError::UnsupportedDimension(ps.dim()));
    }
    if ps.is_empty() {
        return Err(GeometryError::TooFewPoints { needed: 1, got: 0 });
    }
    match build_delaunay(ps) {
        Ok(g) => Ok(voronoi_cells_from_delaunay(&g)),
        Err(GeometryError::TooFewPoints { .. }) | Err(GeometryError::Degenerate(_)) => {
            let point = |i: usize| {
                let p = ps.point(i);
                [p[0], p[1]]
            };
            Ok((0..ps.len())
                .map(|v| cell(point, ps.window(), v, (0..ps.len()).filter(move |&j| j != v)))
                .collect())
        }
        Err(e) => Err(e),
    }
}

/// Nuclei whose cells meet the closed box `[lo, hi]`.
pub fn cells_intersecting_box(
    ps: &PointSet,
    cells: &[VoronoiCell],
    lo: &[f64],
    hi: &[f64],
) -> Result<Vec<usize>, GeometryError> {
    if cells.len() != ps.len() {
        return Err(GeometryError::Parameter(format!(
            "{} cells for {} points",
            cells.len(),
            ps.len()
        )));
    }
    let query = Window::new(lo.to_vec(), hi.to_vec())
        .map_err(|e| GeometryError::Parameter(e.to_string()))?;
    if !ps.window().intersects(&query) {
        return Err(GeometryError::Parameter(format!(
            "box {lo:?}..{hi:?} is disjoint from the window"
        )));
    }
    Ok(cells
        .iter()
        .filter(|c| c.meets_box(lo, hi))
        .map(|c| c.nucleus())
        .collect())
}
