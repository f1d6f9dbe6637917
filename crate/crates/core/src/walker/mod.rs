//! Discrete-time, variable-speed and induced random walks on graphs, and the exact
//! induced kernel.

mod io;
mod kernel;
mod walks;

pub use io::{read_kernel_csv, read_walk_csv, write_kernel_csv, write_walk_csv};
pub use kernel::{induced_kernel, induced_kernel_exact, InducedKernel};
pub use walks::{
    dtrw_step, holding_time, induced_step, run_dtrw, run_induced_continuous, run_induced_discrete, run_vsrw,
    TRAP_LIMIT,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    Dtrw,
    Vsrw,
    InducedDiscrete,
    InducedContinuous,
}

impl WalkKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, WalkKind::Vsrw | WalkKind::InducedContinuous)
    }
}

/// A walk trajectory: vertex `vertices[k]` is entered at `times[k]`. For discrete kinds
/// the times are the step indices; the first entry is always `(start, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    kind: WalkKind,
    seed: u64,
    vertices: Vec<u32>,
    times: Vec<f64>,
}

impl WalkPath {
    pub(crate) fn new(kind: WalkKind, seed: u64, vertices: Vec<u32>, times: Vec<f64>) -> Self {
        debug_assert_eq!(vertices.len(), times.len());
        Self {
            kind,
            seed,
            vertices,
            times,
        }
    }

    pub fn kind(&self) -> WalkKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn start(&self) -> usize {
        self.vertices[0] as usize
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of jumps.
    pub fn jumps(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().unwrap() as usize
    }

    /// The same path with every vertex `v` replaced by `map[v]`, e.g. to translate ids of
    /// an induced subgraph back to its parent.
    pub fn relabel(&self, map: &[u32]) -> WalkPath {
        WalkPath::new(
            self.kind,
            self.seed,
            self.vertices.iter().map(|&v| map[v as usize]).collect(),
            self.times.clone(),
        )
    }

    /// Vertex occupied at time `t` (for discrete kinds, after `⌊t⌋` steps).
    pub fn vertex_at(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        self.vertices[k.saturating_sub(1)] as usize
    }
}
