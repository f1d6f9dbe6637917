use std::collections::HashMap;

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};

use super::{PointSet, ProcessSpec, Provenance, Window, JITTER_SCALE};
use crate::error::PointProcError;
use crate::rng::{self, streams, Rng};

/// Dispatches on the process kind.
pub fn sample(spec: &ProcessSpec, window: &Window, seed: u64) -> Result<PointSet, PointProcError> {
    match spec {
        ProcessSpec::Poisson { intensity } => sample_poisson(*intensity, window, seed),
        ProcessSpec::MaternHardcoreI { .. } | ProcessSpec::MaternHardcoreII { .. } => {
            sample_matern_hardcore(spec, window, seed)
        }
        ProcessSpec::MaternCluster { .. } => sample_matern_cluster(spec, window, seed),
    }
}

/// Homogeneous Poisson process of the given intensity in `window`.
pub fn sample_poisson(intensity: f64, window: &Window, seed: u64) -> Result<PointSet, PointProcError> {
    let spec = ProcessSpec::Poisson { intensity };
    spec.validate()?;
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut coords = poisson_coords(intensity, window, &mut rng)?;
    jitter(&mut coords, window, seed, 0);
    Ok(PointSet::from_parts(
        coords,
        window.clone(),
        provenance(spec, seed),
        false,
    ))
}

/// Matérn hardcore process of type I or II.
///
/// Candidates are drawn on the window padded by the hardcore radius, thinned, then
/// clipped, so points near the window edge see the same competition as interior ones.
pub fn sample_matern_hardcore(
    spec: &ProcessSpec,
    window: &Window,
    seed: u64,
) -> Result<PointSet, PointProcError> {
    spec.validate()?;
    let (intensity, radius, type_two) = match *spec {
        ProcessSpec::MaternHardcoreI {
            intensity,
            hardcore_radius,
        } => (intensity, hardcore_radius, false),
        ProcessSpec::MaternHardcoreII {
            intensity,
            hardcore_radius,
        } => (intensity, hardcore_radius, true),
        _ => {
            return Err(PointProcError::Parameter(format!(
                "{} is not a hardcore process",
                spec.name()
            )))
        }
    };
    let dim = window.dim();
    let padded = window.padded(radius);
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut cand = poisson_coords(intensity, &padded, &mut rng)?;
    jitter(&mut cand, &padded, seed, 0);
    let n = cand.len() / dim;
    let mut marks_rng = rng::stream(seed, streams::MARKS);
    let marks: Vec<f64> = (0..n).map(|_| marks_rng.random::<f64>()).collect();

    let mut keep = vec![true; n];
    if radius > 0.0 {
        let grid = CellGrid::new(&cand, dim, radius);
        let r2 = radius * radius;
        for i in 0..n {
            let pi = &cand[i * dim..(i + 1) * dim];
            let beaten = grid.neighbours(pi).any(|j| {
                j != i && dist2(pi, &cand[j * dim..(j + 1) * dim]) < r2 && {
                    // Type I: any close neighbour deletes. Type II: only an older mark does.
                    !type_two || (marks[j], j) < (marks[i], i)
                }
            });
            keep[i] = !beaten;
        }
    }
    let coords: Vec<f64> = (0..n)
        .filter(|&i| keep[i] && window.contains(&cand[i * dim..(i + 1) * dim]))
        .flat_map(|i| cand[i * dim..(i + 1) * dim].iter().copied())
        .collect();
    let mut ps = PointSet::from_parts(coords, window.clone(), provenance(spec.clone(), seed), false);
    let expected = hardcore_intensity(intensity, radius, dim, type_two) * window.volume();
    if expected < 1.0 {
        ps.set_warning(format!(
            "hardcore radius {radius} leaves about {expected:.3} expected points in the window"
        ));
    }
    Ok(ps)
}

/// Matérn cluster process: Poisson parents on the window padded by the cluster radius,
/// each with a Poisson number of children uniform in its ball. Only children that land in
/// the window are returned.
pub fn sample_matern_cluster(
    spec: &ProcessSpec,
    window: &Window,
    seed: u64,
) -> Result<PointSet, PointProcError> {
    sample_matern_cluster_with_parents(spec, window, seed).map(|(ps, _)| ps)
}

/// Like [`sample_matern_cluster`], also returning the flattened parent coordinates.
pub fn sample_matern_cluster_with_parents(
    spec: &ProcessSpec,
    window: &Window,
    seed: u64,
) -> Result<(PointSet, Vec<f64>), PointProcError> {
    spec.validate()?;
    let ProcessSpec::MaternCluster {
        parent_intensity,
        mean_offspring,
        cluster_radius,
    } = *spec
    else {
        return Err(PointProcError::Parameter(format!(
            "{} is not a cluster process",
            spec.name()
        )));
    };
    let dim = window.dim();
    let padded = window.padded(cluster_radius);
    let mut rng = rng::stream(seed, streams::MAIN);
    let parents = poisson_coords(parent_intensity, &padded, &mut rng)?;
    let mut coords = Vec::new();
    if mean_offspring > 0.0 {
        let offspring = Poisson::new(mean_offspring)
            .map_err(|e| PointProcError::Parameter(e.to_string()))?;
        let mut child = vec![0.0; dim];
        for parent in parents.chunks_exact(dim) {
            let k = offspring.sample(&mut rng) as usize;
            for _ in 0..k {
                uniform_in_ball(&mut rng, cluster_radius, &mut child);
                for (c, p) in child.iter_mut().zip(parent) {
                    *c += p;
                }
                if window.contains(&child) {
                    coords.extend_from_slice(&child);
                }
            }
        }
    }
    jitter(&mut coords, window, seed, 0);
    let ps = PointSet::from_parts(coords, window.clone(), provenance(spec.clone(), seed), false);
    Ok((ps, parents))
}

fn provenance(spec: ProcessSpec, seed: u64) -> Provenance {
    Provenance {
        process: Some(spec),
        seed,
        rejection_radius: None,
    }
}

pub(crate) fn poisson_coords(
    intensity: f64,
    window: &Window,
    rng: &mut Rng,
) -> Result<Vec<f64>, PointProcError> {
    let mean = intensity * window.volume();
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| PointProcError::Parameter(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let dim = window.dim();
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for axis in 0..dim {
            coords.push(window.lo()[axis] + window.side(axis) * rng.random::<f64>());
        }
    }
    Ok(coords)
}

/// Seeded general-position jitter; coordinates with index below `skip_points * dim` are
/// left untouched.
pub(crate) fn jitter(coords: &mut [f64], window: &Window, seed: u64, skip_points: usize) {
    let dim = window.dim();
    let scale = JITTER_SCALE * window.max_side();
    let mut rng = rng::stream(seed, streams::JITTER);
    for p in coords.chunks_exact_mut(dim).skip(skip_points) {
        for x in p.iter_mut() {
            *x += scale * (2.0 * rng.random::<f64>() - 1.0);
        }
        window.clamp(p);
    }
}

fn uniform_in_ball(rng: &mut Rng, radius: f64, out: &mut [f64]) {
    loop {
        for x in out.iter_mut() {
            *x = 2.0 * rng.random::<f64>() - 1.0;
        }
        if out.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            break;
        }
    }
    for x in out.iter_mut() {
        *x *= radius;
    }
}

/// Volume of the unit ball in dimension `dim`.
pub(crate) fn unit_ball_volume(dim: usize) -> f64 {
    let d = dim as f64;
    std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

/// Intensity of the thinned hardcore process.
pub(crate) fn hardcore_intensity(intensity: f64, radius: f64, dim: usize, type_two: bool) -> f64 {
    let v = unit_ball_volume(dim) * radius.powi(dim as i32);
    if v == 0.0 {
        intensity
    } else if type_two {
        (1.0 - (-intensity * v).exp()) / v
    } else {
        intensity * (-intensity * v).exp()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Uniform hash grid for fixed-radius neighbour queries.
struct CellGrid {
    dim: usize,
    side: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl CellGrid {
    fn new(coords: &[f64], dim: usize, side: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            cells.entry(Self::key(p, side)).or_default().push(i);
        }
        Self { dim, side, cells }
    }

    fn key(p: &[f64], side: f64) -> Vec<i64> {
        p.iter().map(|x| (x / side).floor() as i64).collect()
    }

    fn neighbours<'a>(&'a self, p: &[f64]) -> impl Iterator<Item = usize> + 'a {
        let base = Self::key(p, self.side);
        let offsets = 3usize.pow(self.dim as u32);
        (0..offsets).flat_map(move |mut code| {
            let mut key = base.clone();
            for k in key.iter_mut() {
                *k += (code % 3) as i64 - 1;
                code /= 3;
            }
            self.cells.get(&key).into_iter().flatten().copied()
        })
    }
}
