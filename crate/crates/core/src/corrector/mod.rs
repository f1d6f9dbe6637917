//! Harmonic coordinates on finite regions, the corrector `χ = id − φ`, and its growth
//! and martingale diagnostics.

mod embedding;
mod io;
mod martingale;
mod profile;

pub use embedding::{box_region, corrector_values, solve_harmonic_embedding, HarmonicEmbedding, MAX_ITERATIONS};
pub use io::{read_embedding_csv, write_embedding_csv};
pub use martingale::{martingale_diagnostic, DriftEntry, MartingaleReport};
pub use profile::{sublinearity_profile, PolyGrowthEntry, RecursionEntry, SublinearityProfile};
