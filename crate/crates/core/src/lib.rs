//! Random walks on Delaunay triangulations generated by point processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`pointproc`] samples Poisson and Matérn configurations (stationary and Palm)
//!   and estimates void/tail/moment curves.
//! * [`geometry`] builds the Delaunay triangulation (Bowyer–Watson with adaptive
//!   predicates) and its clipped Voronoi dual.
//! * [`partition`] classifies nice/good boxes, extracts the good-box cluster with its
//!   holes, and maps them back to good points.
//! * [`walker`] simulates the discrete-time, variable-speed and induced walks and
//!   computes the induced kernel exactly by hole absorption.
//! * [`corrector`] solves finite-volume harmonic coordinates and runs sublinearity and
//!   martingale diagnostics.
//! * [`analysis`] holds conductances, isoperimetric profiles, heat kernels, expected
//!   distances, diffusion coefficients and Palm moment/lens audits.

pub mod analysis;
pub mod corrector;
pub mod error;
pub mod geometry;
mod linalg;
pub mod partition;
pub mod pointproc;
pub mod rng;
pub mod stats;
pub mod walker;

pub use error::{Error, Result};
pub use geometry::{build_delaunay, DelaunayGraph, Graph, VoronoiCell};
pub use partition::{ClusterDecomposition, GoodBoxField, GoodPoints};
pub use pointproc::{PointSet, ProcessSpec, Window};
pub use walker::{InducedKernel, WalkKind, WalkPath};
