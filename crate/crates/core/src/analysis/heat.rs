use rand_distr::{Distribution, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::AnalysisError;
use crate::geometry::Graph;
use crate::rng::{self, streams};
use crate::stats;
use crate::walker::InducedKernel;

/// Poisson tail mass neglected by the uniformization sum.
pub const POISSON_TAIL: f64 = 1e-12;

/// Default cap on kernel applications in one uniformization pass.
pub const DEFAULT_MAX_TERMS: usize = 200_000;

fn poisson_weight(t: f64, k: usize) -> f64 {
    if t == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (-t + k as f64 * t.ln() - ln_gamma(k as f64 + 1.0)).exp()
}

/// Smallest `k` with `P[Poisson(t) > k] < POISSON_TAIL`.
pub fn poisson_truncation(t: f64) -> usize {
    if t == 0.0 {
        return 0;
    }
    // Accumulate the upper tail directly from a point well beyond the mode, where the
    // terms decay geometrically, to avoid cancellation in 1 - cdf.
    let mut k = (t + 10.0 * t.sqrt() + 20.0).ceil() as usize;
    loop {
        let mut tail = 0.0;
        let mut j = k + 1;
        loop {
            let w = poisson_weight(t, j);
            tail += w;
            if w < tail * 1e-17 || w == 0.0 {
                break;
            }
            j += 1;
        }
        if tail >= POISSON_TAIL {
            k += (t.sqrt().ceil() as usize).max(1);
            continue;
        }
        // Walk back while the tail stays small.
        while k > 0 {
            let w = poisson_weight(t, k);
            if tail + w >= POISSON_TAIL {
                break;
            }
            tail += w;
            k -= 1;
        }
        return k;
    }
}

fn check_grid(t_grid: &[f64]) -> Result<(), AnalysisError> {
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalysisError::Parameter("time grid must be nonnegative and increasing".into()));
    }
    Ok(())
}

/// Law of the rate-one continuous-time walk driven by `kernel`, started at `x`, at each
/// time of `t_grid`: `P_t = Σ_k e^{-t} t^k / k! · K^k`, truncated once the Poisson tail
/// is below [`POISSON_TAIL`]. Kernel rows are needed for every vertex reached.
pub fn heat_kernel_laws(
    kernel: &InducedKernel,
    x: usize,
    t_grid: &[f64],
    max_terms: usize,
) -> Result<Vec<Vec<f64>>, AnalysisError> {
    check_grid(t_grid)?;
    if x >= kernel.len() || !kernel.has_row(x) {
        return Err(AnalysisError::MissingRow(x));
    }
    let horizons: Vec<usize> = t_grid.iter().map(|&t| poisson_truncation(t)).collect();
    let needed = *horizons.last().unwrap();
    if needed > max_terms {
        let cap = t_grid
            .iter()
            .zip(&horizons)
            .filter(|(_, &h)| h <= max_terms)
            .map(|(&t, _)| t)
            .last()
            .unwrap_or_else(|| (max_terms as f64 - 10.0 * (max_terms as f64).sqrt()).max(0.0));
        return Err(AnalysisError::Resource {
            needed,
            suggested_t_cap: cap,
        });
    }
    let n = kernel.len();
    let mut laws = vec![vec![0.0; n]; t_grid.len()];
    let mut p = vec![0.0; n];
    p[x] = 1.0;
    let mut next = vec![0.0; n];
    for k in 0..=needed {
        for (law, (&t, &h)) in laws.iter_mut().zip(t_grid.iter().zip(&horizons)) {
            if k > h {
                continue;
            }
            let w = poisson_weight(t, k);
            if w < 1e-300 {
                continue;
            }
            for (l, &q) in law.iter_mut().zip(&p) {
                *l += w * q;
            }
        }
        if k < needed {
            kernel
                .push_forward(&p, &mut next)
                .map_err(|e| match e {
                    crate::error::WalkError::NotGood(v) => AnalysisError::MissingRow(v),
                    other => AnalysisError::Parameter(other.to_string()),
                })?;
            std::mem::swap(&mut p, &mut next);
        }
    }
    Ok(laws)
}

/// `(t, P_x[Ŷ_t = x])` by uniformization.
pub fn heat_kernel_curve(
    kernel: &InducedKernel,
    x: usize,
    t_grid: &[f64],
    max_terms: usize,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let laws = heat_kernel_laws(kernel, x, t_grid, max_terms)?;
    Ok(t_grid.iter().zip(&laws).map(|(&t, law)| (t, law[x])).collect())
}

/// `(t, E_x‖Ŷ_t − x‖²)` by uniformization, with positions taken from `g`.
pub fn heat_kernel_second_moment(
    g: &Graph,
    kernel: &InducedKernel,
    x: usize,
    t_grid: &[f64],
    max_terms: usize,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    if g.len() != kernel.len() {
        return Err(AnalysisError::Parameter("graph does not match the kernel".into()));
    }
    let laws = heat_kernel_laws(kernel, x, t_grid, max_terms)?;
    Ok(t_grid
        .iter()
        .zip(&laws)
        .map(|(&t, law)| {
            let m = law
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(y, &p)| {
                    let d2 = g.distance(x, y);
                    p * d2 * d2
                })
                .sum();
            (t, m)
        })
        .collect())
}

/// Slope of `log P` against `log t` over the points with `t` in `[lo, hi]`.
pub fn log_log_slope(curve: &[(f64, f64)], lo: f64, hi: f64) -> Option<stats::LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .iter()
        .filter(|(t, p)| *t >= lo && *t <= hi && *t > 0.0 && *p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .unzip();
    stats::linear_fit(&xs, &ys)
}

/// Monte Carlo estimate of `P_x[Ŷ_t = x]` and its standard error.
pub fn heat_kernel_mc(
    kernel: &InducedKernel,
    x: usize,
    t: f64,
    walkers: usize,
    seed: u64,
) -> Result<(f64, f64), AnalysisError> {
    if x >= kernel.len() || !kernel.has_row(x) {
        return Err(AnalysisError::MissingRow(x));
    }
    if walkers < 2 || !(t >= 0.0) {
        return Err(AnalysisError::Parameter("need at least two walkers and t ≥ 0".into()));
    }
    let mut rng = rng::stream(seed, streams::MAIN);
    let mut clock = rng::stream(seed, streams::CLOCK);
    let jumps = (t > 0.0).then(|| Poisson::new(t).unwrap());
    let mut hits = 0usize;
    for _ in 0..walkers {
        let n = jumps.as_ref().map_or(0, |d| d.sample(&mut clock) as u64);
        let mut v = x;
        for _ in 0..n {
            if !kernel.has_row(v) {
                return Err(AnalysisError::MissingRow(v));
            }
            v = kernel.sample_step(v, &mut rng);
        }
        hits += usize::from(v == x);
    }
    let p = hits as f64 / walkers as f64;
    Ok((p, (p * (1.0 - p) / (walkers - 1) as f64).sqrt()))
}
