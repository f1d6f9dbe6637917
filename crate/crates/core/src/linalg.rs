//! Jacobi-preconditioned conjugate gradients for symmetric positive definite operators.

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖∞` recomputed from scratch at exit.
    pub residual: f64,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` from a zero initial guess, stopping when the true residual satisfies
/// `‖b - A x‖∞ ≤ tol` or after `max_iter` iterations. `apply(v, out)` writes `A v`.
pub(crate) fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let true_residual = |x: &[f64], ap: &mut [f64]| {
        apply(x, ap);
        b.iter().zip(ap.iter()).map(|(b, a)| (b - a).abs()).fold(0.0, f64::max)
    };
    if inf_norm(&r) <= tol {
        return CgOutcome { x, iterations, residual: inf_norm(&r), converged: true };
    }
    while iterations < max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        iterations += 1;
        if inf_norm(&r) <= tol {
            // Guard against drift of the recursive residual.
            let res = true_residual(&x, &mut ap);
            if res <= tol {
                return CgOutcome { x, iterations, residual: res, converged: true };
            }
            apply(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let residual = true_residual(&x, &mut ap);
    CgOutcome { x, iterations, residual, converged: residual <= tol }
}
