//! Estimators checking the quantitative predictions: conductances and isoperimetric
//! profiles, heat-kernel decay, expected distance, diffusion coefficients, and Palm
//! tail and lens diagnostics.

mod conductance;
mod diffusion;
mod distance;
mod heat;
mod iso;
mod palm;

pub use conductance::{conductance_pair, ConductanceRecord};
pub use diffusion::{diffusion_report, DiffusionConfig, DiffusionReport, SampleCounts};
pub use distance::{expected_distance_curve, DistanceCurve, DistancePoint};
pub use heat::{
    heat_kernel_curve, heat_kernel_laws, heat_kernel_mc, heat_kernel_second_moment, log_log_slope,
    poisson_truncation, DEFAULT_MAX_TERMS, POISSON_TAIL,
};
pub use iso::{iso_profile_estimate, IsoProfile, EXHAUSTIVE_LIMIT};
pub use palm::{palm_record, tail_moment_report, LensAudit, PalmRecord, SurvivalPoint, TailMomentReport};
