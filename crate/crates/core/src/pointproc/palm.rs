use super::sample::{jitter, poisson_coords, sample};
use super::{PointSet, ProcessSpec, Provenance, Window};
use crate::error::PointProcError;
use crate::rng::{self, derive_seed, streams};

/// Attempts allowed before acceptance sampling gives up.
pub const PALM_ATTEMPTS: usize = 10_000;

/// Default acceptance radius for non-Poisson Palm sampling: `0.1 / intensity^(1/d)`.
pub fn default_rejection_radius(spec: &ProcessSpec, dim: usize) -> f64 {
    0.1 / spec.base_intensity().powf(1.0 / dim as f64)
}

/// Sample from the Palm distribution: the returned set contains the origin at index 0.
///
/// For Poisson processes the origin is simply added to an independent stationary sample.
/// For Matérn processes a stationary sample is drawn, the point nearest the origin is
/// accepted if it lies within the default rejection radius, and the configuration is
/// translated so that this point sits at the origin.
pub fn palm_sample(spec: &ProcessSpec, window: &Window, seed: u64) -> Result<PointSet, PointProcError> {
    palm_sample_with_radius(spec, window, seed, default_rejection_radius(spec, window.dim()))
}

pub fn palm_sample_with_radius(
    spec: &ProcessSpec,
    window: &Window,
    seed: u64,
    rejection_radius: f64,
) -> Result<PointSet, PointProcError> {
    spec.validate()?;
    if !window.is_centered_at_origin() {
        return Err(PointProcError::Parameter(
            "Palm samples need a window centred at the origin".into(),
        ));
    }
    let dim = window.dim();
    if let ProcessSpec::Poisson { intensity } = *spec {
        let mut rng = rng::stream(seed, streams::MAIN);
        let mut coords = vec![0.0; dim];
        coords.extend(poisson_coords(intensity, window, &mut rng)?);
        jitter(&mut coords, window, seed, 1);
        return Ok(PointSet::from_parts(
            coords,
            window.clone(),
            Provenance {
                process: Some(spec.clone()),
                seed,
                rejection_radius: None,
            },
            true,
        ));
    }

    if !(rejection_radius > 0.0) {
        return Err(PointProcError::Parameter(format!(
            "rejection radius must be positive (got {rejection_radius})"
        )));
    }
    for attempt in 0..PALM_ATTEMPTS {
        let ps = sample(spec, window, derive_seed(seed, attempt as u64))?;
        let nearest = ps
            .iter()
            .enumerate()
            .map(|(i, p)| (p.iter().map(|x| x * x).sum::<f64>(), i))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let Some((d2, centre)) = nearest else { continue };
        if d2 > rejection_radius * rejection_radius {
            continue;
        }
        let shift = ps.point(centre).to_vec();
        let mut coords = Vec::with_capacity(ps.coords().len());
        coords.extend(std::iter::repeat_n(0.0, dim));
        for (i, p) in ps.iter().enumerate() {
            if i == centre {
                continue;
            }
            let moved: Vec<f64> = p.iter().zip(&shift).map(|(x, s)| x - s).collect();
            if window.contains(&moved) {
                coords.extend(moved);
            }
        }
        return Ok(PointSet::from_parts(
            coords,
            window.clone(),
            Provenance {
                process: Some(spec.clone()),
                seed,
                rejection_radius: Some(rejection_radius),
            },
            true,
        ));
    }
    Err(PointProcError::SamplingFailure {
        attempts: PALM_ATTEMPTS,
    })
}
