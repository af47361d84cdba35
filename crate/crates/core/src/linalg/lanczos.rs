//! Extreme Ritz values from a short preconditioned Lanczos run.

use super::operator::LinearOperator;
use super::vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzBounds {
    pub min: f64,
    pub max: f64,
}

/// Runs `steps` Lanczos steps on `P A` (both symmetric, `P` positive
/// definite) in the `P^-1` inner product and returns the extreme eigenvalues
/// of the tridiagonal matrix. The start vector is the constant vector, so the
/// result is deterministic.
pub fn lanczos_extreme_ritz<A, P>(a: &A, p: &P, steps: usize) -> RitzBounds
where
    A: LinearOperator + ?Sized,
    P: LinearOperator + ?Sized,
{
    let n = a.dim();
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    let mut r: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut z = p.apply_vec(&r);
    let mut beta = vec::dot(&r, &z).sqrt();
    let mut q_prev = vec![0.0; n];
    let mut u = vec![0.0; n];
    for j in 0..steps.min(n) {
        if beta == 0.0 {
            break;
        }
        let q: Vec<f64> = r.iter().map(|v| v / beta).collect();
        let w: Vec<f64> = z.iter().map(|v| v / beta).collect();
        a.apply(&w, &mut u);
        let alpha = vec::dot(&w, &u);
        for i in 0..n {
            r[i] = u[i] - alpha * q[i] - beta * q_prev[i];
        }
        alphas.push(alpha);
        if j > 0 {
            betas.push(beta);
        }
        p.apply(&r, &mut z);
        beta = vec::dot(&r, &z).max(0.0).sqrt();
        q_prev = q;
    }
    RitzBounds {
        min: tridiagonal_eigen_bound(&alphas, &betas, true),
        max: tridiagonal_eigen_bound(&alphas, &betas, false),
    }
}

/// Number of eigenvalues below `x` (Sturm sequence count).
fn count_below(alphas: &[f64], betas: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, a) in alphas.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { betas[i - 1] * betas[i - 1] };
        d = a - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_eigen_bound(alphas: &[f64], betas: &[f64], smallest: bool) -> f64 {
    if alphas.is_empty() {
        return 0.0;
    }
    // Gershgorin interval.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, a) in alphas.iter().enumerate() {
        let rad = if i > 0 { betas[i - 1].abs() } else { 0.0 }
            + betas.get(i).map_or(0.0, |b| b.abs());
        lo = lo.min(a - rad);
        hi = hi.max(a + rad);
    }
    let target = if smallest { 1 } else { alphas.len() };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(alphas, betas, mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}
