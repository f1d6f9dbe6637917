//! Incremental Delaunay triangulation in the plane.
//!
//! Bowyer–Watson insertion over a triangulation closed by ghost triangles (one per hull
//! edge, sharing a vertex at infinity), so that points outside the current hull need no
//! super-triangle. Orientation and in-circle signs come from adaptive exact predicates,
//! which makes the empty-circumcircle property hold for every output simplex. Points are
//! inserted in Hilbert order and located by a visibility walk from the last new triangle.

use std::collections::HashMap;

use robust::{incircle, orient2d, Coord};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::GeometryError;
use crate::pointproc::{PointSet, Window};

const GHOST: u32 = u32::MAX;
const NONE: u32 = u32::MAX;

/// Delaunay triangulation of a point set together with its vertex graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayGraph {
    graph: Graph,
    window: Window,
    /// Flattened `(d+1)`-tuples of vertex indices, counter-clockwise in 2D.
    simplices: Vec<u32>,
    circumcenters: Vec<f64>,
    circumradii: Vec<f64>,
    on_hull: Vec<bool>,
}

impl DelaunayGraph {
    /// Assembles a triangulation from explicit simplices (no Delaunay check is made; use
    /// [`super::verify_empty_circumcircle`]). Simplices are re-oriented counter-clockwise.
    pub fn from_simplices(ps: &PointSet, simplices: &[[u32; 3]]) -> Result<Self, GeometryError> {
        if ps.dim() != 2 {
            return Err(GeometryError::UnsupportedDimension(ps.dim()));
        }
        let n = ps.len();
        let mut flat = Vec::with_capacity(simplices.len() * 3);
        for s in simplices {
            if let Some(&bad) = s.iter().find(|&&v| v as usize >= n) {
                return Err(GeometryError::InvalidVertex(bad as usize));
            }
            let o = orient2d(xy(ps.point(s[0] as usize)), xy(ps.point(s[1] as usize)), xy(ps.point(s[2] as usize)));
            if o == 0.0 {
                return Err(GeometryError::Degenerate(format!("flat simplex {s:?}")));
            }
            if o > 0.0 {
                flat.extend_from_slice(s);
            } else {
                flat.extend_from_slice(&[s[0], s[2], s[1]]);
            }
        }
        let mut edge_uses: HashMap<(u32, u32), u32> = HashMap::new();
        for t in flat.chunks_exact(3) {
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                *edge_uses.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let mut on_hull = vec![false; n];
        for (&(a, b), &uses) in &edge_uses {
            if uses == 1 {
                on_hull[a as usize] = true;
                on_hull[b as usize] = true;
            }
        }
        Self::assemble(ps, flat, on_hull)
    }

    fn assemble(ps: &PointSet, simplices: Vec<u32>, on_hull: Vec<bool>) -> Result<Self, GeometryError> {
        let n = ps.len();
        let window = ps.window().clone();
        let mut circumcenters = Vec::with_capacity(simplices.len() / 3 * 2);
        let mut circumradii = Vec::with_capacity(simplices.len() / 3);
        let mut edges = Vec::with_capacity(simplices.len());
        let mut tainted = on_hull.clone();
        for t in simplices.chunks_exact(3) {
            let (c, r) = circumcircle(ps.point(t[0] as usize), ps.point(t[1] as usize), ps.point(t[2] as usize));
            let inside = (0..2).all(|k| window.lo()[k] <= c[k] - r && c[k] + r <= window.hi()[k]);
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                if a < b {
                    edges.push((a, b));
                } else {
                    edges.push((b, a));
                }
                if !inside {
                    tainted[t[i] as usize] = true;
                }
            }
            circumcenters.extend_from_slice(&c);
            circumradii.push(r);
        }
        let graph = Graph::from_edges(2, ps.coords().to_vec(), &edges, tainted)?;
        debug_assert_eq!(graph.len(), n);
        Ok(Self {
            graph,
            window,
            simplices,
            circumcenters,
            circumradii,
            on_hull,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.graph.dim()
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    pub fn simplex_count(&self) -> usize {
        self.circumradii.len()
    }

    pub fn simplex(&self, i: usize) -> &[u32] {
        let k = self.dim() + 1;
        &self.simplices[i * k..(i + 1) * k]
    }

    pub fn simplices(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.simplices.chunks_exact(self.dim() + 1)
    }

    pub fn circumcenter(&self, i: usize) -> &[f64] {
        &self.circumcenters[i * self.dim()..(i + 1) * self.dim()]
    }

    pub fn circumradius(&self, i: usize) -> f64 {
        self.circumradii[i]
    }

    pub fn on_hull(&self, v: usize) -> bool {
        self.on_hull[v]
    }

    /// True when `v` is on the convex hull or one of its simplices has a circumdisk
    /// reaching outside the window, i.e. points outside the window could change its star.
    pub fn is_tainted(&self, v: usize) -> bool {
        self.graph.is_tainted(v)
    }
}

fn xy(p: &[f64]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

pub(crate) fn circumcircle(a: &[f64], b: &[f64], c: &[f64]) -> ([f64; 2], f64) {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    ([a[0] + ux, a[1] + uy], (ux * ux + uy * uy).sqrt())
}

/// Triangulates the points of `ps`.
///
/// Fails with fewer than three points, when all points are collinear, or when two
/// points coincide. Only `d = 2` is supported.
pub fn build_delaunay(ps: &PointSet) -> Result<DelaunayGraph, GeometryError> {
    if ps.dim() != 2 {
        return Err(GeometryError::UnsupportedDimension(ps.dim()));
    }
    if ps.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            needed: 3,
            got: ps.len(),
        });
    }
    let pts: Vec<[f64; 2]> = ps.iter().map(|p| [p[0], p[1]]).collect();
    let order = hilbert_order(&pts, ps.window());
    let mut b = Builder::new(&pts);
    let rest = b.init(&order)?;
    for &i in &rest {
        b.insert(i)?;
    }

    let mut simplices = Vec::new();
    let mut on_hull = vec![false; pts.len()];
    for (t, tri) in b.tris.iter().enumerate() {
        if !b.alive[t] {
            continue;
        }
        if let Some(k) = tri.v.iter().position(|&v| v == GHOST) {
            on_hull[tri.v[(k + 1) % 3] as usize] = true;
            on_hull[tri.v[(k + 2) % 3] as usize] = true;
        } else {
            simplices.extend_from_slice(&tri.v);
        }
    }
    DelaunayGraph::assemble(ps, simplices, on_hull)
}

fn hilbert_order(pts: &[[f64; 2]], window: &Window) -> Vec<u32> {
    const SIDE: u32 = 1 << 16;
    let scale = |v: f64, k: usize| {
        let t = (v - window.lo()[k]) / window.side(k);
        ((t * (SIDE - 1) as f64).round().clamp(0.0, (SIDE - 1) as f64)) as u32
    };
    let mut keyed: Vec<(u64, u32)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (hilbert_index(SIDE, scale(p[0], 0), scale(p[1], 1)), i as u32))
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn hilbert_index(side: u32, mut x: u32, mut y: u32) -> u64 {
    let mut d = 0u64;
    let mut s = side / 2;
    while s > 0 {
        let rx = (x & s) > 0;
        let ry = (y & s) > 0;
        d += (s as u64) * (s as u64) * ((3 * rx as u64) ^ ry as u64);
        if !ry {
            if rx {
                x = side - 1 - x;
                y = side - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

#[derive(Debug, Clone, Copy)]
struct Tri {
    /// Vertices, counter-clockwise; at most one is `GHOST`.
    v: [u32; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [u32; 3],
}

struct Builder<'a> {
    pts: &'a [[f64; 2]],
    tris: Vec<Tri>,
    alive: Vec<bool>,
    stamp: Vec<u32>,
    free: Vec<u32>,
    last: u32,
    round: u32,
    steps: usize,
    cavity: Vec<u32>,
    stack: Vec<u32>,
    first: HashMap<u32, u32>,
    second: HashMap<u32, u32>,
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [[f64; 2]]) -> Self {
        let cap = 2 * pts.len() + 8;
        Self {
            pts,
            tris: Vec::with_capacity(cap),
            alive: Vec::with_capacity(cap),
            stamp: Vec::with_capacity(cap),
            free: Vec::new(),
            last: 0,
            round: 0,
            steps: 0,
            cavity: Vec::new(),
            stack: Vec::new(),
            first: HashMap::new(),
            second: HashMap::new(),
        }
    }

    fn c(&self, v: u32) -> Coord<f64> {
        let p = self.pts[v as usize];
        Coord { x: p[0], y: p[1] }
    }

    fn orient(&self, a: u32, b: u32, p: u32) -> f64 {
        orient2d(self.c(a), self.c(b), self.c(p))
    }

    /// Builds the first triangle from the first non-collinear triple in `order`; returns
    /// the remaining points in insertion order.
    fn init(&mut self, order: &[u32]) -> Result<Vec<u32>, GeometryError> {
        let a = order[0];
        let Some(bi) = order.iter().position(|&j| self.pts[j as usize] != self.pts[a as usize]) else {
            return Err(GeometryError::DuplicatePoint(order[1] as usize));
        };
        let b = order[bi];
        let Some(ci) = order.iter().position(|&j| self.orient(a, b, j) != 0.0) else {
            return Err(GeometryError::Degenerate("all points are collinear".into()));
        };
        let c = order[ci];
        let (b, c) = if self.orient(a, b, c) > 0.0 { (b, c) } else { (c, b) };
        // Real triangle 0 and ghosts across its edges b-c, c-a, a-b.
        self.push(Tri { v: [a, b, c], n: [1, 2, 3] });
        self.push(Tri { v: [c, b, GHOST], n: [3, 2, 0] });
        self.push(Tri { v: [a, c, GHOST], n: [1, 3, 0] });
        self.push(Tri { v: [b, a, GHOST], n: [2, 1, 0] });
        self.last = 0;
        let rest = order
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != 0 && k != bi && k != ci)
            .map(|(_, &j)| j)
            .collect();
        Ok(rest)
    }

    fn push(&mut self, t: Tri) -> u32 {
        if let Some(slot) = self.free.pop() {
            self.tris[slot as usize] = t;
            self.alive[slot as usize] = true;
            slot
        } else {
            self.tris.push(t);
            self.alive.push(true);
            self.stamp.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    fn in_conflict(&self, t: u32, p: u32) -> bool {
        let v = self.tris[t as usize].v;
        if let Some(k) = v.iter().position(|&x| x == GHOST) {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            let o = self.orient(a, b, p);
            o > 0.0 || (o == 0.0 && self.strictly_between(a, b, p))
        } else {
            incircle(self.c(v[0]), self.c(v[1]), self.c(v[2]), self.c(p)) > 0.0
        }
    }

    /// For `p` collinear with `a`, `b`: is it strictly inside the segment?
    fn strictly_between(&self, a: u32, b: u32, p: u32) -> bool {
        let (a, b, p) = (self.pts[a as usize], self.pts[b as usize], self.pts[p as usize]);
        let k = if (b[0] - a[0]).abs() >= (b[1] - a[1]).abs() { 0 } else { 1 };
        let (lo, hi) = if a[k] < b[k] { (a[k], b[k]) } else { (b[k], a[k]) };
        lo < p[k] && p[k] < hi
    }

    fn locate(&mut self, p: u32) -> Result<u32, GeometryError> {
        let mut t = self.last;
        if let Some(k) = self.tris[t as usize].v.iter().position(|&x| x == GHOST) {
            t = self.tris[t as usize].n[k];
        }
        'walk: loop {
            let tri = self.tris[t as usize];
            if tri.v.contains(&GHOST) {
                return Ok(t);
            }
            self.steps += 1;
            let i0 = self.steps % 3;
            for j in 0..3 {
                let i = (i0 + j) % 3;
                if self.orient(tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], p) < 0.0 {
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            if tri.v.iter().any(|&v| self.pts[v as usize] == self.pts[p as usize]) {
                return Err(GeometryError::DuplicatePoint(p as usize));
            }
            return Ok(t);
        }
    }

    fn insert(&mut self, p: u32) -> Result<(), GeometryError> {
        let seed = self.locate(p)?;
        debug_assert!(self.in_conflict(seed, p));
        self.round += 1;
        let round = self.round;
        self.cavity.clear();
        self.stack.clear();
        self.stamp[seed as usize] = round;
        self.stack.push(seed);
        while let Some(t) = self.stack.pop() {
            self.cavity.push(t);
            for i in 0..3 {
                let nb = self.tris[t as usize].n[i];
                if self.stamp[nb as usize] != round && self.in_conflict(nb, p) {
                    self.stamp[nb as usize] = round;
                    self.stack.push(nb);
                }
            }
        }

        // Boundary edges (a, b) of the cavity with the outside triangle across them.
        let mut boundary: Vec<(u32, u32, u32, u32)> = Vec::new();
        for &t in &self.cavity {
            let tri = self.tris[t as usize];
            for i in 0..3 {
                let nb = tri.n[i];
                if self.stamp[nb as usize] != round {
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb, t));
                }
            }
        }
        for k in 0..self.cavity.len() {
            let t = self.cavity[k];
            self.alive[t as usize] = false;
            self.free.push(t);
        }
        self.first.clear();
        self.second.clear();
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, nb, old) in &boundary {
            let new = self.push(Tri { v: [a, b, p], n: [NONE, NONE, nb] });
            self.stamp[new as usize] = 0;
            let outer = &mut self.tris[nb as usize];
            let j = (0..3).find(|&j| outer.n[j] == old && outer.v[j] != a && outer.v[j] != b);
            match j {
                Some(j) => outer.n[j] = new,
                None => return Err(GeometryError::Degenerate("broken cavity adjacency".into())),
            }
            self.first.insert(a, new);
            self.second.insert(b, new);
            created.push(new);
        }
        for &t in &created {
            let [a, b, _] = self.tris[t as usize].v;
            let (Some(&across_bp), Some(&across_pa)) = (self.first.get(&b), self.second.get(&a)) else {
                return Err(GeometryError::Degenerate("cavity is not star-shaped".into()));
            };
            self.tris[t as usize].n[0] = across_bp;
            self.tris[t as usize].n[1] = across_pa;
            if a != GHOST && b != GHOST {
                self.last = t;
            }
        }
        Ok(())
    }
}
