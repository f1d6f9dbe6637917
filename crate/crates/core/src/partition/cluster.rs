use serde::{Deserialize, Serialize};

use super::field::{unit_offsets, GoodBoxField};
use crate::error::PartitionError;
use crate::pointproc::Window;

/// Disjoint-set forest with path halving and union by size.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub(crate) fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Connected component of the complement of the cluster (∞-connectivity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    /// Grid indices (see [`ClusterDecomposition::z_of`]), increasing.
    pub boxes: Vec<usize>,
    /// False when the component touches `‖z‖∞ = L`.
    pub enclosed: bool,
    /// ℓ∞ diameter in boxes, counting a single box as 1.
    pub diameter: i64,
}

/// Largest ℓ1-connected component of good boxes in `[-L, L]^d`, the ∞-connected
/// components of its complement, and the filled cluster (cluster plus enclosed holes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    dim: usize,
    l: i64,
    s: f64,
    alpha: f64,
    k: f64,
    cluster: Vec<bool>,
    /// Hole id per grid box, `u32::MAX` inside the cluster.
    hole_of: Vec<u32>,
    holes: Vec<Hole>,
    window: Window,
    point_count: usize,
}

impl ClusterDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid radius `L`.
    pub fn l(&self) -> i64 {
        self.l
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn degree_cap(&self) -> f64 {
        super::degree_cap(self.dim, self.s, self.alpha)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Boxes per axis, `2L + 1`.
    pub fn side(&self) -> usize {
        (2 * self.l + 1) as usize
    }

    pub fn grid_len(&self) -> usize {
        self.cluster.len()
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0;
        for &c in z {
            if c.abs() > self.l {
                return None;
            }
            idx = idx * side + (c + self.l) as usize;
        }
        Some(idx)
    }

    pub fn z_of(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut z = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            z[a] = (idx % side) as i64 - self.l;
            idx /= side;
        }
        z
    }

    pub fn box_bounds(&self, z: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k;
        (
            z.iter().map(|&c| c as f64 * k - k / 2.0).collect(),
            z.iter().map(|&c| c as f64 * k + k / 2.0).collect(),
        )
    }

    pub fn in_cluster(&self, idx: usize) -> bool {
        self.cluster[idx]
    }

    pub fn in_filled(&self, idx: usize) -> bool {
        self.cluster[idx] || self.holes[self.hole_of[idx] as usize].enclosed
    }

    /// Hole containing the box, if it is outside the cluster.
    pub fn hole_id(&self, idx: usize) -> Option<usize> {
        (self.hole_of[idx] != u32::MAX).then_some(self.hole_of[idx] as usize)
    }

    pub fn cluster_size(&self) -> usize {
        self.cluster.iter().filter(|&&c| c).count()
    }

    pub fn filled_size(&self) -> usize {
        (0..self.grid_len()).filter(|&i| self.in_filled(i)).count()
    }

    /// True when no box is good; all other fields are then trivially empty.
    pub fn is_empty(&self) -> bool {
        !self.cluster.iter().any(|&c| c)
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn enclosed_holes(&self) -> impl Iterator<Item = &Hole> + '_ {
        self.holes.iter().filter(|h| h.enclosed)
    }

    /// Largest enclosed-hole diameter (0 without holes).
    pub fn max_hole_diameter(&self) -> i64 {
        self.enclosed_holes().map(|h| h.diameter).max().unwrap_or(0)
    }
}

/// Extracts the cluster of good boxes in `[-L, L]^d` with its holes.
///
/// Ties between equally large components go to the one with the lexicographically
/// smallest box index.
pub fn cluster_components(field: &GoodBoxField, l: i64) -> Result<ClusterDecomposition, PartitionError> {
    if l < 0 || field.max_radius().is_none_or(|r| r < l) {
        return Err(PartitionError::Parameter(format!(
            "grid radius {l} exceeds the field range (max {:?})",
            field.max_radius()
        )));
    }
    let dim = field.dim();
    let side = (2 * l + 1) as usize;
    let n = side.pow(dim as u32);
    let z_of = |mut idx: usize| {
        let mut z = vec![0i64; dim];
        for a in (0..dim).rev() {
            z[a] = (idx % side) as i64 - l;
            idx /= side;
        }
        z
    };
    let index_of = |z: &[i64]| -> Option<usize> {
        let mut idx = 0;
        for &c in z {
            if c.abs() > l {
                return None;
            }
            idx = idx * side + (c + l) as usize;
        }
        Some(idx)
    };
    let good: Vec<bool> = (0..n)
        .map(|i| field.is_good(field.index_of(&z_of(i)).expect("inside range")))
        .collect();

    // Half of the neighbour offsets suffice for union-find.
    let all = unit_offsets(dim);
    let positive = |o: &Vec<i64>| o.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
    let inf_offsets: Vec<Vec<i64>> = all.iter().filter(|o| positive(o)).cloned().collect();
    let l1_offsets: Vec<Vec<i64>> = inf_offsets
        .iter()
        .filter(|o| o.iter().map(|c| c.abs()).sum::<i64>() == 1)
        .cloned()
        .collect();

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if !good[i] {
            continue;
        }
        let z = z_of(i);
        for o in &l1_offsets {
            let y: Vec<i64> = z.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(j) = index_of(&y) {
                if good[j] {
                    uf.union(i as u32, j as u32);
                }
            }
        }
    }
    let mut comp_size = vec![0usize; n];
    for i in 0..n {
        if good[i] {
            comp_size[uf.find(i as u32) as usize] += 1;
        }
    }
    // Scanning in index order, the first root reaching the maximum owns the smallest box.
    let mut best: Option<(usize, u32)> = None;
    for i in 0..n {
        if good[i] {
            let r = uf.find(i as u32);
            let size = comp_size[r as usize];
            if best.is_none_or(|(s, _)| size > s) {
                best = Some((size, r));
            }
        }
    }
    let cluster: Vec<bool> = match best {
        Some((_, root)) => (0..n).map(|i| good[i] && uf.find(i as u32) == root).collect(),
        None => vec![false; n],
    };

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if cluster[i] {
            continue;
        }
        let z = z_of(i);
        for o in &inf_offsets {
            let y: Vec<i64> = z.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(j) = index_of(&y) {
                if !cluster[j] {
                    uf.union(i as u32, j as u32);
                }
            }
        }
    }
    let mut hole_of = vec![u32::MAX; n];
    let mut root_to_hole = std::collections::HashMap::new();
    let mut holes: Vec<Hole> = Vec::new();
    let mut extent: Vec<(Vec<i64>, Vec<i64>)> = Vec::new();
    for i in 0..n {
        if cluster[i] {
            continue;
        }
        let r = uf.find(i as u32);
        let id = *root_to_hole.entry(r).or_insert_with(|| {
            holes.push(Hole {
                boxes: Vec::new(),
                enclosed: true,
                diameter: 0,
            });
            extent.push((vec![i64::MAX; dim], vec![i64::MIN; dim]));
            holes.len() - 1
        });
        hole_of[i] = id as u32;
        let z = z_of(i);
        let hole = &mut holes[id];
        hole.boxes.push(i);
        if z.iter().any(|c| c.abs() == l) {
            hole.enclosed = false;
        }
        let (lo, hi) = &mut extent[id];
        for a in 0..dim {
            lo[a] = lo[a].min(z[a]);
            hi[a] = hi[a].max(z[a]);
        }
    }
    for (hole, (lo, hi)) in holes.iter_mut().zip(&extent) {
        hole.diameter = (0..dim).map(|a| hi[a] - lo[a] + 1).max().unwrap_or(0);
    }

    Ok(ClusterDecomposition {
        dim,
        l,
        s: field.s(),
        alpha: field.alpha(),
        k: field.k(),
        cluster,
        hole_of,
        holes,
        window: field.window().clone(),
        point_count: field.point_count(),
    })
}

/// `(L, largest enclosed-hole ℓ∞ diameter)` for each decomposition.
pub fn hole_diameter_stats(decomps: &[ClusterDecomposition]) -> Result<Vec<(i64, i64)>, PartitionError> {
    if decomps.len() < 2 {
        return Err(PartitionError::Parameter("need decompositions for at least two L".into()));
    }
    Ok(decomps.iter().map(|d| (d.l(), d.max_hole_diameter())).collect())
}
