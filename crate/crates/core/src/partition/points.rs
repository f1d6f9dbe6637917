use serde::{Deserialize, Serialize};

use super::ClusterDecomposition;
use crate::error::PartitionError;
use crate::geometry::{Graph, VoronoiCell};
use crate::pointproc::PointSet;

/// Vertices whose Voronoi cell meets a cluster box (`good`) or a filled box (`filled`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodPoints {
    pub good: Vec<bool>,
    pub filled: Vec<bool>,
}

impl GoodPoints {
    pub fn is_good(&self, v: usize) -> bool {
        self.good[v]
    }

    pub fn is_filled(&self, v: usize) -> bool {
        self.filled[v]
    }

    pub fn good_count(&self) -> usize {
        self.good.iter().filter(|&&g| g).count()
    }

    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|&&g| g).count()
    }

    pub fn good_indices(&self) -> Vec<usize> {
        (0..self.good.len()).filter(|&v| self.good[v]).collect()
    }
}

/// Maps the cluster and its filled closure back to vertices by exact cell/box
/// intersection tests.
pub fn good_points(
    decomp: &ClusterDecomposition,
    ps: &PointSet,
    cells: &[VoronoiCell],
) -> Result<GoodPoints, PartitionError> {
    if cells.len() != ps.len() {
        return Err(PartitionError::Consistency(format!(
            "{} cells for {} points",
            cells.len(),
            ps.len()
        )));
    }
    if decomp.window() != ps.window() || decomp.point_count() != ps.len() {
        return Err(PartitionError::Consistency(
            "decomposition was built from a different point set".into(),
        ));
    }
    if ps.dim() != 2 || decomp.dim() != 2 {
        return Err(PartitionError::Consistency("cells are only available in 2D".into()));
    }
    let k = decomp.k();
    let l = decomp.l();
    let mut good = vec![false; ps.len()];
    let mut filled = vec![false; ps.len()];
    for cell in cells {
        if cell.vertices().is_empty() {
            continue;
        }
        let (lo, hi) = cell.bounding_box();
        // Boxes B_z with z k - k/2 <= hi and z k + k/2 >= lo.
        let zr: Vec<(i64, i64)> = (0..2)
            .map(|a| {
                let first = ((lo[a] - k / 2.0) / k).ceil() as i64;
                let last = ((hi[a] + k / 2.0) / k).floor() as i64;
                (first.max(-l), last.min(l))
            })
            .collect();
        let v = cell.nucleus();
        'boxes: for x in zr[0].0..=zr[0].1 {
            for y in zr[1].0..=zr[1].1 {
                let Some(idx) = decomp.index_of(&[x, y]) else { continue };
                let in_cluster = decomp.in_cluster(idx);
                let in_filled = decomp.in_filled(idx);
                if (in_cluster && !good[v]) || (in_filled && !filled[v]) {
                    let (blo, bhi) = decomp.box_bounds(&[x, y]);
                    if cell.meets_box(&blo, &bhi) {
                        good[v] |= in_cluster;
                        filled[v] |= in_filled;
                    }
                }
                if good[v] && filled[v] {
                    break 'boxes;
                }
            }
        }
    }
    Ok(GoodPoints { good, filled })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthEntry {
    pub l: i64,
    pub cluster_boxes: usize,
    pub good_points: usize,
    /// Sum over good points of their degree in the graph restricted to filled points.
    pub degree_sum: usize,
    /// `degree_sum / L^d`.
    pub ratio: f64,
    pub empty_cluster: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthReport {
    pub entries: Vec<VolumeGrowthEntry>,
    /// Largest over smallest ratio among non-empty entries; `None` when every cluster
    /// is empty.
    pub ratio_spread: Option<f64>,
    /// Set when the spread exceeds 2.
    pub drift: bool,
}

/// Degree sums of good points across nested grid radii.
pub fn volume_growth_report(
    levels: &[(&ClusterDecomposition, &GoodPoints)],
    graph: &Graph,
) -> Result<VolumeGrowthReport, PartitionError> {
    if levels.len() < 2 {
        return Err(PartitionError::Parameter("need at least two values of L".into()));
    }
    let mut entries = Vec::with_capacity(levels.len());
    for (decomp, points) in levels {
        if points.good.len() != graph.len() {
            return Err(PartitionError::Consistency("good-point mask does not match graph".into()));
        }
        let degree_sum: usize = (0..graph.len())
            .filter(|&v| points.good[v])
            .map(|v| {
                graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&w| points.filled[w as usize])
                    .count()
            })
            .sum();
        let l = decomp.l();
        entries.push(VolumeGrowthEntry {
            l,
            cluster_boxes: decomp.cluster_size(),
            good_points: points.good_count(),
            degree_sum,
            ratio: degree_sum as f64 / (l.max(1) as f64).powi(decomp.dim() as i32),
            empty_cluster: decomp.is_empty(),
        });
    }
    let ratios: Vec<f64> = entries.iter().filter(|e| !e.empty_cluster).map(|e| e.ratio).collect();
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio_spread = (!ratios.is_empty()).then(|| max / min);
    Ok(VolumeGrowthReport {
        entries,
        ratio_spread,
        drift: ratio_spread.is_some_and(|r| r > 2.0),
    })
}
