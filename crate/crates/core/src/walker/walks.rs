use rand::Rng as _;
use rand_distr::{Distribution, Exp1};

use super::{WalkKind, WalkPath};
use crate::error::WalkError;
use crate::geometry::Graph;
use crate::rng::{self, streams, Rng};

/// Consecutive steps allowed outside the good set before the walk is declared trapped.
pub const TRAP_LIMIT: usize = 1_000_000;

fn check_start(g: &Graph, x0: usize) -> Result<(), WalkError> {
    if x0 >= g.len() {
        return Err(WalkError::InvalidVertex(x0));
    }
    if g.degree(x0) == 0 {
        return Err(WalkError::Isolated(x0));
    }
    Ok(())
}

fn check_good(g: &Graph, good: &[bool], x0: usize) -> Result<(), WalkError> {
    check_start(g, x0)?;
    if good.len() != g.len() {
        return Err(WalkError::Parameter("good mask does not match the graph".into()));
    }
    if !good[x0] {
        return Err(WalkError::NotGood(x0));
    }
    Ok(())
}

/// One step of the simple random walk: a uniformly chosen neighbour.
#[inline]
pub fn dtrw_step(g: &Graph, v: usize, rng: &mut Rng) -> usize {
    let nb = g.neighbors(v);
    nb[rng.random_range(0..nb.len())] as usize
}

/// Runs the simple walk from a good vertex until it is back in the good set. Returns
/// the vertex reached and the number of simple steps taken.
pub fn induced_step(g: &Graph, good: &[bool], v: usize, rng: &mut Rng) -> Result<(usize, usize), WalkError> {
    let mut w = v;
    let mut steps = 0;
    loop {
        w = dtrw_step(g, w, rng);
        steps += 1;
        if good[w] {
            return Ok((w, steps));
        }
        if steps >= TRAP_LIMIT {
            return Err(WalkError::Trapped { steps });
        }
    }
}

/// Exponential holding time with the given rate.
#[inline]
pub fn holding_time(rate: f64, clock: &mut Rng) -> f64 {
    let e: f64 = Exp1.sample(clock);
    e / rate
}

/// Discrete-time simple random walk: `n_steps` uniform neighbour moves.
pub fn run_dtrw(g: &Graph, x0: usize, n_steps: usize, seed: u64) -> Result<WalkPath, WalkError> {
    check_start(g, x0)?;
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut vertices = Vec::with_capacity(n_steps + 1);
    vertices.push(x0 as u32);
    let mut v = x0;
    for _ in 0..n_steps {
        v = dtrw_step(g, v, &mut rng);
        vertices.push(v as u32);
    }
    let times = (0..vertices.len()).map(|k| k as f64).collect();
    Ok(WalkPath::new(WalkKind::Dtrw, seed, vertices, times))
}

/// Variable-speed walk: holding time at `x` is exponential with rate `deg(x)`, jumps go
/// to a uniform neighbour. Jump choices use the same stream as [`run_dtrw`], so the
/// embedded chain coincides with the discrete walk of the same seed.
pub fn run_vsrw(g: &Graph, x0: usize, horizon: f64, seed: u64) -> Result<WalkPath, WalkError> {
    check_start(g, x0)?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(WalkError::Parameter(format!("horizon must be positive (got {horizon})")));
    }
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut clock = rng::stream(seed, streams::CLOCK);
    let mut vertices = vec![x0 as u32];
    let mut times = vec![0.0];
    let mut v = x0;
    let mut t = 0.0;
    loop {
        t += holding_time(g.degree(v) as f64, &mut clock);
        if t > horizon {
            break;
        }
        v = dtrw_step(g, v, &mut rng);
        vertices.push(v as u32);
        times.push(t);
    }
    Ok(WalkPath::new(WalkKind::Vsrw, seed, vertices, times))
}

/// The simple walk observed at its successive visits to `good`.
pub fn run_induced_discrete(
    g: &Graph,
    good: &[bool],
    x0: usize,
    n_steps: usize,
    seed: u64,
) -> Result<WalkPath, WalkError> {
    check_good(g, good, x0)?;
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut vertices = Vec::with_capacity(n_steps + 1);
    vertices.push(x0 as u32);
    let mut v = x0;
    for _ in 0..n_steps {
        v = induced_step(g, good, v, &mut rng)?.0;
        vertices.push(v as u32);
    }
    let times = (0..vertices.len()).map(|k| k as f64).collect();
    Ok(WalkPath::new(WalkKind::InducedDiscrete, seed, vertices, times))
}

/// The induced walk driven by a rate-one Poisson clock.
pub fn run_induced_continuous(
    g: &Graph,
    good: &[bool],
    x0: usize,
    horizon: f64,
    seed: u64,
) -> Result<WalkPath, WalkError> {
    check_good(g, good, x0)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(WalkError::Parameter(format!("horizon must be nonnegative (got {horizon})")));
    }
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut clock = rng::stream(seed, streams::CLOCK);
    let mut vertices = vec![x0 as u32];
    let mut times = vec![0.0];
    let mut v = x0;
    let mut t = 0.0;
    loop {
        t += holding_time(1.0, &mut clock);
        if t > horizon {
            break;
        }
        v = induced_step(g, good, v, &mut rng)?.0;
        vertices.push(v as u32);
        times.push(t);
    }
    Ok(WalkPath::new(WalkKind::InducedContinuous, seed, vertices, times))
}
