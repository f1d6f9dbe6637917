//! Nice and good boxes, the good-box cluster with its holes, and good points.

mod cluster;
mod field;
mod io;
mod points;

pub use cluster::{cluster_components, hole_diameter_stats, ClusterDecomposition, Hole};
pub use field::{classify_boxes, degree_cap, sample_poisson_field, subboxes_per_side, GoodBoxField};
pub use io::{read_field_csv, write_field_csv};
pub use points::{good_points, volume_growth_report, GoodPoints, VolumeGrowthEntry, VolumeGrowthReport};
