use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::PartitionError;
use crate::pointproc::{PointSet, Window};
use crate::rng::{self, streams};

/// Sub-boxes per side of a box: `⌈3√d⌉`.
pub fn subboxes_per_side(dim: usize) -> usize {
    (3.0 * (dim as f64).sqrt()).ceil() as usize
}

/// Degree cap `α (3K)^d` satisfied by every good point.
pub fn degree_cap(dim: usize, s: f64, alpha: f64) -> f64 {
    alpha * (3.0 * subboxes_per_side(dim) as f64 * s).powi(dim as i32)
}

/// All offsets in `{-1, 0, 1}^dim`.
pub(crate) fn unit_offsets(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|o| {
                (-1..=1).map(move |k| {
                    let mut o = o.clone();
                    o.push(k);
                    o
                })
            })
            .collect();
    }
    out
}

/// Nice/good classification of the boxes `B_z = K z + [-K/2, K/2]^d` lying inside the
/// window, with `K = ⌈3√d⌉ s` and every box split into `⌈3√d⌉^d` sub-boxes of side `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodBoxField {
    dim: usize,
    s: f64,
    alpha: f64,
    /// Smallest in-range index along each axis.
    zlo: Vec<i64>,
    /// Number of in-range indices along each axis.
    shape: Vec<usize>,
    /// `m^d` sub-box counts per box, boxes in row-major order.
    counts: Vec<u32>,
    nice: Vec<bool>,
    good: Vec<bool>,
    window: Window,
    point_count: usize,
}

impl GoodBoxField {
    /// Classifies boxes from explicit sub-box counts (row-major boxes, row-major sub-boxes).
    pub fn from_counts(
        dim: usize,
        s: f64,
        alpha: f64,
        zlo: Vec<i64>,
        shape: Vec<usize>,
        counts: Vec<u32>,
    ) -> Result<Self, PartitionError> {
        check_params(s, alpha)?;
        if dim == 0 || zlo.len() != dim || shape.len() != dim {
            return Err(PartitionError::Parameter("index range does not match dimension".into()));
        }
        if shape.iter().any(|&n| n < 3) {
            return Err(PartitionError::Configuration(format!(
                "need at least 3 boxes per axis, got {shape:?}"
            )));
        }
        let m = subboxes_per_side(dim).pow(dim as u32);
        let boxes: usize = shape.iter().product();
        if counts.len() != boxes * m {
            return Err(PartitionError::Parameter(format!(
                "expected {} sub-box counts, got {}",
                boxes * m,
                counts.len()
            )));
        }
        let k = subboxes_per_side(dim) as f64 * s;
        let lo: Vec<f64> = zlo.iter().map(|&z| z as f64 * k - k / 2.0).collect();
        let hi: Vec<f64> = zlo
            .iter()
            .zip(&shape)
            .map(|(&z, &n)| (z + n as i64 - 1) as f64 * k + k / 2.0)
            .collect();
        let window = Window::new(lo, hi).map_err(|e| PartitionError::Parameter(e.to_string()))?;
        let point_count = counts.iter().map(|&c| c as usize).sum();
        let mut field = Self {
            dim,
            s,
            alpha,
            zlo,
            shape,
            counts,
            nice: Vec::new(),
            good: Vec::new(),
            window,
            point_count,
        };
        field.classify();
        Ok(field)
    }

    fn classify(&mut self) {
        let m = self.subbox_count();
        let cap = self.alpha * self.s.powi(self.dim as i32);
        self.nice = self
            .counts
            .chunks_exact(m)
            .map(|c| c.iter().all(|&n| n >= 1 && n as f64 <= cap))
            .collect();
        let offsets = unit_offsets(self.dim);
        self.good = (0..self.len())
            .map(|i| {
                let z = self.z_of(i);
                offsets.iter().all(|o| {
                    let y: Vec<i64> = z.iter().zip(o).map(|(a, b)| a + b).collect();
                    self.index_of(&y).is_some_and(|j| self.nice[j])
                })
            })
            .collect();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Box side `K`.
    pub fn k(&self) -> f64 {
        subboxes_per_side(self.dim) as f64 * self.s
    }

    pub fn subbox_count(&self) -> usize {
        subboxes_per_side(self.dim).pow(self.dim as u32)
    }

    pub fn degree_cap(&self) -> f64 {
        degree_cap(self.dim, self.s, self.alpha)
    }

    /// Number of in-range boxes.
    pub fn len(&self) -> usize {
        self.nice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nice.is_empty()
    }

    pub fn zlo(&self) -> &[i64] {
        &self.zlo
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Window that produced the counts (the union of boxes for count-level fields).
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub(crate) fn set_origin(&mut self, window: Window, point_count: usize) {
        self.window = window;
        self.point_count = point_count;
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..self.dim {
            let off = z[a] - self.zlo[a];
            if off < 0 || off >= self.shape[a] as i64 {
                return None;
            }
            idx = idx * self.shape[a] + off as usize;
        }
        Some(idx)
    }

    pub fn z_of(&self, mut idx: usize) -> Vec<i64> {
        let mut z = vec![0i64; self.dim];
        for a in (0..self.dim).rev() {
            z[a] = self.zlo[a] + (idx % self.shape[a]) as i64;
            idx /= self.shape[a];
        }
        z
    }

    /// Closed box `B_z` as `(lo, hi)`.
    pub fn box_bounds(&self, z: &[i64]) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        (
            z.iter().map(|&c| c as f64 * k - k / 2.0).collect(),
            z.iter().map(|&c| c as f64 * k + k / 2.0).collect(),
        )
    }

    pub fn subbox_counts(&self, idx: usize) -> &[u32] {
        let m = self.subbox_count();
        &self.counts[idx * m..(idx + 1) * m]
    }

    pub fn is_nice(&self, idx: usize) -> bool {
        self.nice[idx]
    }

    pub fn is_good(&self, idx: usize) -> bool {
        self.good[idx]
    }

    pub fn good_fraction(&self) -> f64 {
        self.good.iter().filter(|&&g| g).count() as f64 / self.len() as f64
    }

    pub fn nice_fraction(&self) -> f64 {
        self.nice.iter().filter(|&&g| g).count() as f64 / self.len() as f64
    }

    /// Largest `L` such that `[-L, L]^d` lies inside the index range (`None` if the
    /// range does not contain the origin).
    pub fn max_radius(&self) -> Option<i64> {
        (0..self.dim)
            .map(|a| {
                let hi = self.zlo[a] + self.shape[a] as i64 - 1;
                (-self.zlo[a]).min(hi)
            })
            .min()
            .filter(|&l| l >= 0)
    }
}

fn check_params(s: f64, alpha: f64) -> Result<(), PartitionError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(PartitionError::Parameter(format!("sub-box side must be positive (got {s})")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(PartitionError::Parameter(format!("alpha must be positive (got {alpha})")));
    }
    Ok(())
}

/// Counts the points of `ps` in every sub-box of every box inside the window and
/// classifies the boxes.
pub fn classify_boxes(ps: &PointSet, s: f64, alpha: f64) -> Result<GoodBoxField, PartitionError> {
    check_params(s, alpha)?;
    let dim = ps.dim();
    let per_side = subboxes_per_side(dim);
    let k = per_side as f64 * s;
    let w = ps.window();
    let mut zlo = Vec::with_capacity(dim);
    let mut shape = Vec::with_capacity(dim);
    for a in 0..dim {
        let first = ((w.lo()[a] + k / 2.0) / k).ceil() as i64;
        let last = ((w.hi()[a] - k / 2.0) / k).floor() as i64;
        let n = last - first + 1;
        if n < 3 {
            return Err(PartitionError::Configuration(format!(
                "window side {} along axis {a} holds {} boxes of side {k}; need at least 3",
                w.side(a),
                n.max(0)
            )));
        }
        zlo.push(first);
        shape.push(n as usize);
    }
    let m = per_side.pow(dim as u32);
    let boxes: usize = shape.iter().product();
    let mut counts = vec![0u32; boxes * m];
    'points: for p in ps.iter() {
        let mut bidx = 0usize;
        let mut sidx = 0usize;
        for a in 0..dim {
            let rel = p[a] - (zlo[a] as f64 * k - k / 2.0);
            if rel < 0.0 {
                continue 'points;
            }
            let b = (rel / k).floor() as usize;
            let b = if b == shape[a] && rel <= shape[a] as f64 * k { b - 1 } else { b };
            if b >= shape[a] {
                continue 'points;
            }
            let sub = (((rel - b as f64 * k) / s).floor() as usize).min(per_side - 1);
            bidx = bidx * shape[a] + b;
            sidx = sidx * per_side + sub;
        }
        counts[bidx * m + sidx] += 1;
    }
    let mut field = GoodBoxField::from_counts(dim, s, alpha, zlo, shape, counts)?;
    field.set_origin(w.clone(), ps.len());
    Ok(field)
}

/// Field whose sub-box counts are i.i.d. Poisson(`intensity · s^d`) on the index cube
/// `[-radius, radius]^d`: the exact law of the counts of a Poisson process, without
/// generating the points. Used for hole statistics on grids far larger than any point
/// sample could cover.
pub fn sample_poisson_field(
    dim: usize,
    s: f64,
    alpha: f64,
    intensity: f64,
    radius: i64,
    seed: u64,
) -> Result<GoodBoxField, PartitionError> {
    check_params(s, alpha)?;
    if radius < 1 {
        return Err(PartitionError::Configuration("field radius must be at least 1".into()));
    }
    let mean = intensity * s.powi(dim as i32);
    let law = Poisson::new(mean)
        .map_err(|e| PartitionError::Parameter(format!("intensity {intensity}: {e}")))?;
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32) * subboxes_per_side(dim).pow(dim as u32);
    let mut rng = rng::stream(seed, streams::MAIN);
    let counts: Vec<u32> = (0..total)
        .map(|_| {
            let x: f64 = law.sample(&mut rng);
            x as u32
        })
        .collect();
    GoodBoxField::from_counts(dim, s, alpha, vec![-radius; dim], vec![side; dim], counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_side_in_two_dimensions() {
        assert_eq!(subboxes_per_side(2), 5);
        assert_eq!(subboxes_per_side(3), 6);
        assert_eq!(degree_cap(2, 10.0, 2.0), 45_000.0);
    }

    #[test]
    fn index_round_trip() {
        let f = GoodBoxField::from_counts(2, 1.0, 2.0, vec![-2, 3], vec![4, 3], vec![1; 12 * 25]).unwrap();
        for i in 0..f.len() {
            assert_eq!(f.index_of(&f.z_of(i)), Some(i));
        }
        assert_eq!(f.z_of(0), vec![-2, 3]);
        assert_eq!(f.index_of(&[-3, 3]), None);
    }

    #[test]
    fn all_ones_field_is_good_inside() {
        let f = GoodBoxField::from_counts(2, 1.0, 2.0, vec![-2, -2], vec![5, 5], vec![1; 25 * 25]).unwrap();
        for i in 0..f.len() {
            let z = f.z_of(i);
            let interior = z.iter().all(|c| c.abs() <= 1);
            assert!(f.is_nice(i));
            assert_eq!(f.is_good(i), interior);
        }
        assert_eq!(f.max_radius(), Some(2));
    }

    #[test]
    fn counts_outside_the_cap_are_not_nice() {
        let mut counts = vec![1u32; 9 * 25];
        counts[4 * 25 + 7] = 0;
        counts[25] = 3;
        let f = GoodBoxField::from_counts(2, 1.0, 2.0, vec![-1, -1], vec![3, 3], counts).unwrap();
        assert!(!f.is_nice(4));
        assert!(!f.is_nice(1));
        assert!(f.is_nice(0));
        assert!(!f.is_good(4));
    }

    #[test]
    fn small_window_is_a_configuration_error() {
        let ps = PointSet::from_coords(vec![0.0, 0.0], Window::centered(2, 60.0).unwrap(), None).unwrap();
        assert!(matches!(classify_boxes(&ps, 10.0, 2.0), Err(PartitionError::Configuration(_))));
    }

    #[test]
    fn classification_counts_every_interior_point() {
        let w = Window::centered(2, 7.5).unwrap();
        let ps = crate::pointproc::sample_poisson(3.0, &w, 2).unwrap();
        let f = classify_boxes(&ps, 1.0, 3.0).unwrap();
        assert_eq!(f.k(), 5.0);
        assert_eq!(f.shape(), &[3, 3]);
        let total: u32 = (0..f.len()).flat_map(|i| f.subbox_counts(i).to_vec()).sum();
        assert_eq!(total as usize, ps.len());
    }
}
