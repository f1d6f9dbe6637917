//! JSON records written by each stage.
//!
//! Every record carries the digest of the config that produced it.

use delwalk_core::analysis::{ConductanceRecord, DiffusionReport, DistanceCurve, IsoProfile, TailMomentReport};
use delwalk_core::corrector::SublinearityProfile;
use delwalk_core::partition::VolumeGrowthReport;
use delwalk_core::pointproc::{ProcessSpec, Window};
use delwalk_core::stats::LinearFit;
use delwalk_core::WalkKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub config_digest: String,
    pub seed: u64,
    pub process: ProcessSpec,
    pub window: Window,
    pub points: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulateSummary {
    pub config_digest: String,
    pub vertices: usize,
    pub edges: usize,
    pub simplices: usize,
    pub tainted: usize,
    pub empty_circumcircle: bool,
    /// Simplices whose open circumdisk holds another point.
    pub violations: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifySummary {
    pub config_digest: String,
    pub s: f64,
    pub alpha: f64,
    pub box_side: f64,
    pub degree_cap: f64,
    pub boxes: usize,
    pub nice_fraction: f64,
    pub good_fraction: f64,
    /// Cluster radius defining the good points written to `good_points.csv`.
    pub primary_l: i64,
    pub cluster_boxes: usize,
    pub filled_boxes: usize,
    pub holes: usize,
    pub enclosed_holes: usize,
    pub max_hole_diameter: i64,
    pub good_points: usize,
    pub filled_points: usize,
    pub max_good_degree: usize,
    pub good_connected: bool,
    pub volume_growth: Option<VolumeGrowthReport>,
    /// `(L, largest hole diameter)` per cluster radius.
    pub hole_diameters: Option<Vec<(i64, i64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub kind: WalkKind,
    pub file: String,
    pub seed: u64,
    pub jumps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkSummary {
    pub config_digest: String,
    /// Good vertex nearest the origin, in original ids.
    pub start: usize,
    pub filled_vertices: usize,
    pub good_vertices: usize,
    pub kernel_entries: usize,
    pub max_row_sum_error: f64,
    pub detailed_balance_residual: f64,
    pub solver_residual: f64,
    pub walks: Vec<WalkRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSummary {
    pub start: usize,
    pub steps: usize,
    pub walks: usize,
    pub censored: usize,
    pub m0: Vec<f64>,
    pub mean_square: Vec<f64>,
    pub fit: Option<LinearFit>,
    pub ratio_relative_change: f64,
    /// Vertices with enough visits for a drift estimate.
    pub drift_vertices: usize,
    /// Largest `|mean increment| / SE` over those vertices and coordinates.
    pub max_drift_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorSummary {
    pub config_digest: String,
    pub region_radius: f64,
    pub interior: usize,
    pub boundary: usize,
    pub tolerance: f64,
    pub residual: f64,
    pub iterations: usize,
    pub max_defect: f64,
    pub max_principle: bool,
    pub profile: SublinearityProfile,
    pub ratios_decreasing: bool,
    pub martingale: Option<MartingaleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceSummary {
    pub sets: usize,
    pub bound: f64,
    pub violations: usize,
    /// Smallest `i_hat · bound / i_tilde` over sets with `i_tilde > 0`.
    pub min_margin: Option<f64>,
    pub records: Vec<ConductanceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSummary {
    pub start: usize,
    pub curve: Vec<(f64, f64)>,
    pub fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub config_digest: String,
    pub dim: usize,
    /// Good vertex nearest the origin, in original ids.
    pub start: usize,
    pub conductance: ConductanceSummary,
    pub iso: IsoProfile,
    pub heat: HeatSummary,
    pub distance: DistanceCurve,
    pub distance_ratio: f64,
    pub diffusion: DiffusionReport,
    pub tail: TailMomentReport,
}
