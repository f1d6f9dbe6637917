//! Point-process realizations inside finite windows.

mod assumptions;
mod io;
mod palm;
mod sample;

pub use assumptions::{assumption_report, AssumptionConfig, AssumptionReport, CurvePoint};
pub use io::{read_point_set, write_point_set};
pub use palm::{default_rejection_radius, palm_sample, palm_sample_with_radius};
pub use sample::{
    sample, sample_matern_cluster, sample_matern_cluster_with_parents, sample_matern_hardcore,
    sample_poisson,
};

use serde::{Deserialize, Serialize};

use crate::error::PointProcError;

/// Relative size of the general-position jitter, in units of the longest window side.
pub const JITTER_SCALE: f64 = 1e-9;

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, PointProcError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(PointProcError::Parameter(
                "window corners must have the same positive dimension".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(PointProcError::Parameter(format!(
                "empty or non-finite window {lo:?}..{hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, PointProcError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// `[-half_side, half_side]^dim`.
    pub fn centered(dim: usize, half_side: f64) -> Result<Self, PointProcError> {
        Self::cube(dim, -half_side, half_side)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_side(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.side(i)).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// True when `other` lies inside `self` (closed containment).
    pub fn contains_window(&self, other: &Window) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn intersects(&self, other: &Window) -> bool {
        other.dim() == self.dim()
            && (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    pub fn padded(&self, margin: f64) -> Window {
        Window {
            lo: self.lo.iter().map(|x| x - margin).collect(),
            hi: self.hi.iter().map(|x| x + margin).collect(),
        }
    }

    pub fn is_centered_at_origin(&self) -> bool {
        self.lo.iter().zip(&self.hi).all(|(a, b)| (a + b).abs() <= 1e-12 * (b - a))
    }

    pub(crate) fn clamp(&self, p: &mut [f64]) {
        for (i, x) in p.iter_mut().enumerate() {
            *x = x.clamp(self.lo[i], self.hi[i]);
        }
    }
}

/// Law of the point process to sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessSpec {
    Poisson {
        intensity: f64,
    },
    #[serde(rename = "matern_hardcore_I", alias = "matern_hardcore_i")]
    MaternHardcoreI { intensity: f64, hardcore_radius: f64 },
    #[serde(rename = "matern_hardcore_II", alias = "matern_hardcore_ii")]
    MaternHardcoreII { intensity: f64, hardcore_radius: f64 },
    MaternCluster {
        parent_intensity: f64,
        mean_offspring: f64,
        cluster_radius: f64,
    },
}

impl ProcessSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessSpec::Poisson { .. } => "poisson",
            ProcessSpec::MaternHardcoreI { .. } => "matern_hardcore_I",
            ProcessSpec::MaternHardcoreII { .. } => "matern_hardcore_II",
            ProcessSpec::MaternCluster { .. } => "matern_cluster",
        }
    }

    pub fn validate(&self) -> Result<(), PointProcError> {
        let bad = |what: &str, v: f64| {
            Err(PointProcError::Parameter(format!(
                "{}: {what} must be {} (got {v})",
                self.name(),
                if what.contains("radius") || what == "mean_offspring" {
                    "finite and nonnegative"
                } else {
                    "finite and positive"
                }
            )))
        };
        match *self {
            ProcessSpec::Poisson { intensity } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return bad("intensity", intensity);
                }
            }
            ProcessSpec::MaternHardcoreI {
                intensity,
                hardcore_radius,
            }
            | ProcessSpec::MaternHardcoreII {
                intensity,
                hardcore_radius,
            } => {
                if !(intensity > 0.0 && intensity.is_finite()) {
                    return bad("intensity", intensity);
                }
                if !(hardcore_radius >= 0.0 && hardcore_radius.is_finite()) {
                    return bad("hardcore_radius", hardcore_radius);
                }
            }
            ProcessSpec::MaternCluster {
                parent_intensity,
                mean_offspring,
                cluster_radius,
            } => {
                if !(parent_intensity > 0.0 && parent_intensity.is_finite()) {
                    return bad("parent_intensity", parent_intensity);
                }
                if !(mean_offspring >= 0.0 && mean_offspring.is_finite()) {
                    return bad("mean_offspring", mean_offspring);
                }
                if !(cluster_radius > 0.0 && cluster_radius.is_finite()) {
                    return Err(PointProcError::Parameter(format!(
                        "matern_cluster: cluster_radius must be finite and positive (got {cluster_radius})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Intensity of the primary (pre-thinning) Poisson process; for cluster processes the
    /// intensity of the returned offspring.
    pub fn base_intensity(&self) -> f64 {
        match *self {
            ProcessSpec::Poisson { intensity }
            | ProcessSpec::MaternHardcoreI { intensity, .. }
            | ProcessSpec::MaternHardcoreII { intensity, .. } => intensity,
            ProcessSpec::MaternCluster {
                parent_intensity,
                mean_offspring,
                ..
            } => parent_intensity * mean_offspring,
        }
    }
}

/// Where a point set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// `None` for hand-built point sets.
    pub process: Option<ProcessSpec>,
    pub seed: u64,
    /// Acceptance radius used by non-Poisson Palm sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_radius: Option<f64>,
}

/// A finite configuration of distinct points inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    window: Window,
    provenance: Provenance,
    palm_conditioned: bool,
    warning: Option<String>,
}

impl PointSet {
    pub(crate) fn from_parts(
        coords: Vec<f64>,
        window: Window,
        provenance: Provenance,
        palm_conditioned: bool,
    ) -> Self {
        let dim = window.dim();
        debug_assert_eq!(coords.len() % dim, 0);
        Self {
            dim,
            coords,
            window,
            provenance,
            palm_conditioned,
            warning: None,
        }
    }

    /// Builds a point set from explicit coordinates (flattened, `dim` per point).
    ///
    /// With `jitter_seed`, every coordinate is perturbed by a seeded offset of at most
    /// [`JITTER_SCALE`] times the longest window side, then clamped to the window; this
    /// breaks cocircular and collinear ties in hand-made inputs.
    pub fn from_coords(
        coords: Vec<f64>,
        window: Window,
        jitter_seed: Option<u64>,
    ) -> Result<Self, PointProcError> {
        let dim = window.dim();
        if !coords.len().is_multiple_of(dim) {
            return Err(PointProcError::Parameter(format!(
                "coordinate count {} is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        let mut ps = Self::from_parts(
            coords,
            window,
            Provenance {
                process: None,
                seed: jitter_seed.unwrap_or(0),
                rejection_radius: None,
            },
            false,
        );
        for (i, p) in ps.iter().enumerate() {
            if !ps.window.contains(p) {
                return Err(PointProcError::Parameter(format!(
                    "point {i} {p:?} lies outside the window"
                )));
            }
        }
        if let Some(seed) = jitter_seed {
            sample::jitter(&mut ps.coords, &ps.window, seed, 0);
        }
        Ok(ps)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn palm_conditioned(&self) -> bool {
        self.palm_conditioned
    }

    /// Index of the Palm point (always 0 for Palm samples).
    pub fn palm_origin(&self) -> Option<usize> {
        self.palm_conditioned.then_some(0)
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub(crate) fn set_warning(&mut self, msg: String) {
        self.warning = Some(msg);
    }

    /// Number of points in the closed box `[lo, hi]`.
    pub fn count_in_box(&self, lo: &[f64], hi: &[f64]) -> usize {
        self.iter()
            .filter(|p| p.iter().enumerate().all(|(i, x)| lo[i] <= *x && *x <= hi[i]))
            .count()
    }

    /// The same points with the first `skip` removed (used to strip a Palm origin).
    pub fn without_prefix(&self, skip: usize) -> PointSet {
        let mut out = self.clone();
        out.coords.drain(..skip.min(self.len()) * self.dim);
        out.palm_conditioned = false;
        out
    }
}
