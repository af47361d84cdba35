//! Dense vector kernels with a fixed summation order.

const BLOCK: usize = 64;

/// Pairwise sum; the association order depends only on the length.
pub fn pairwise_sum<F: Fn(usize) -> f64 + Copy>(start: usize, end: usize, term: F) -> f64 {
    let len = end - start;
    if len <= BLOCK {
        let mut s = 0.0;
        for i in start..end {
            s += term(i);
        }
        s
    } else {
        let mid = start + len / 2;
        pairwise_sum(start, mid, term) + pairwise_sum(mid, end, term)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    pairwise_sum(0, x.len(), |i| x[i] * y[i])
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `y = x + b * y`
pub fn xpby(x: &[f64], b: f64, y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = xi + b * *yi;
    }
}

pub fn scale(a: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= a;
    }
}

/// `x - y`
pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
