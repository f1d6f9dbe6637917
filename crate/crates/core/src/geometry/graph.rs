use serde::{Deserialize, Serialize};

use crate::error::GeometryError;

/// Undirected simple graph with vertex positions, stored in compressed sparse rows.
///
/// Neighbour lists are sorted. Every walk, solver and estimator works on this type;
/// restrictions to vertex subsets are again `Graph`s with a parent map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    dim: usize,
    positions: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    tainted: Vec<bool>,
}

impl Graph {
    /// Builds the graph from an edge list; duplicate edges are merged, self-loops rejected.
    pub fn from_edges(
        dim: usize,
        positions: Vec<f64>,
        edges: &[(u32, u32)],
        tainted: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        if dim == 0 || !positions.len().is_multiple_of(dim) {
            return Err(GeometryError::Parameter(
                "position array does not match dimension".into(),
            ));
        }
        let n = positions.len() / dim;
        if tainted.len() != n {
            return Err(GeometryError::Parameter("tainted flags do not match vertex count".into()));
        }
        let mut deg = vec![0usize; n];
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            if a >= n || b >= n {
                return Err(GeometryError::InvalidVertex(a.max(b)));
            }
            if a == b {
                return Err(GeometryError::Parameter(format!("self-loop at vertex {a}")));
            }
            deg[a] += 1;
            deg[b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            targets[fill[a as usize]] = b;
            fill[a as usize] += 1;
            targets[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        // Sort and deduplicate each row, then compact.
        let mut out_offsets = vec![0usize; n + 1];
        let mut out_targets = Vec::with_capacity(targets.len());
        for i in 0..n {
            let row = &mut targets[offsets[i]..offsets[i + 1]];
            row.sort_unstable();
            let mut last = None;
            for &t in row.iter() {
                if last != Some(t) {
                    out_targets.push(t);
                    last = Some(t);
                }
            }
            out_offsets[i + 1] = out_targets.len();
        }
        Ok(Self {
            dim,
            positions,
            offsets: out_offsets,
            targets: out_targets,
            tainted,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.positions[v * self.dim..(v + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors(a).binary_search(&(b as u32)).is_ok()
    }

    pub fn is_tainted(&self, v: usize) -> bool {
        self.tainted[v]
    }

    pub fn tainted(&self) -> &[bool] {
        &self.tainted
    }

    /// Edges `(i, j)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| i < j)
                .map(move |j| (i, j))
        })
    }

    pub fn check_vertex(&self, v: usize) -> Result<(), GeometryError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(GeometryError::InvalidVertex(v))
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.position(a)
            .iter()
            .zip(self.position(b))
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Subgraph induced by `keep`. Returns the subgraph and, for each of its vertices,
    /// the index of the corresponding vertex in `self`.
    pub fn induced_subgraph(&self, keep: &[bool]) -> (Graph, Vec<u32>) {
        let mut new_index = vec![u32::MAX; self.len()];
        let mut parent = Vec::new();
        for (v, &k) in keep.iter().enumerate() {
            if k {
                new_index[v] = parent.len() as u32;
                parent.push(v as u32);
            }
        }
        let mut positions = Vec::with_capacity(parent.len() * self.dim);
        let mut offsets = Vec::with_capacity(parent.len() + 1);
        let mut targets = Vec::new();
        let mut tainted = Vec::with_capacity(parent.len());
        offsets.push(0);
        for &p in &parent {
            let p = p as usize;
            positions.extend_from_slice(self.position(p));
            tainted.push(self.tainted[p]);
            // Rows stay sorted because the relabelling is monotone.
            targets.extend(
                self.neighbors(p)
                    .iter()
                    .map(|&q| new_index[q as usize])
                    .filter(|&q| q != u32::MAX),
            );
            offsets.push(targets.len());
        }
        (
            Graph {
                dim: self.dim,
                positions,
                offsets,
                targets,
                tainted,
            },
            parent,
        )
    }

    /// Connected-component label of every vertex (labels in order of first vertex).
    pub fn components(&self) -> Vec<u32> {
        let mut label = vec![u32::MAX; self.len()];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.len() {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in self.neighbors(v) {
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        stack.push(w as usize);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// True when the vertices flagged in `mask` induce a connected subgraph.
    pub fn is_connected_on(&self, mask: &[bool]) -> bool {
        let Some(start) = mask.iter().position(|&m| m) else {
            return true;
        };
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in self.neighbors(v) {
                let w = w as usize;
                if mask[w] && !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == mask.iter().filter(|&&m| m).count()
    }

    /// Vertex whose position is closest to `p` (ties by lowest index).
    pub fn nearest_vertex(&self, p: &[f64]) -> Option<usize> {
        (0..self.len())
            .map(|v| {
                let d: f64 = self
                    .position(v)
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d, v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, v)| v)
    }
}
