use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = dyn Fn(&[f64; 3]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync;

/// The desired state `ubar`.
#[derive(Clone)]
pub enum TargetFunction {
    /// Indicator function of the axis-aligned box `[lower, upper]`.
    BoxIndicator { dim: usize, lower: [f64; 3], upper: [f64; 3] },
    /// A smooth function together with its exact gradient.
    Smooth { value: Arc<ScalarFn>, gradient: Arc<GradientFn> },
    /// `factor * inner`.
    Scaled { factor: f64, inner: Arc<TargetFunction> },
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BoxIndicator { dim, lower, upper } => f
                .debug_struct("BoxIndicator")
                .field("lower", &&lower[..*dim])
                .field("upper", &&upper[..*dim])
                .finish(),
            Self::Smooth { .. } => f.write_str("Smooth"),
            Self::Scaled { factor, inner } => {
                f.debug_struct("Scaled").field("factor", factor).field("inner", inner).finish()
            }
        }
    }
}

impl TargetFunction {
    /// Indicator of `[lower, upper]` in `dim` dimensions; only the first
    /// `dim` components of the corners are used.
    pub fn box_indicator(dim: usize, lower: &[f64], upper: &[f64]) -> Result<Self> {
        if !(1..=3).contains(&dim) || lower.len() < dim || upper.len() < dim {
            return Err(Error::InvalidArgument("box corners do not match the dimension".into()));
        }
        let mut lo = [0.0; 3];
        let mut hi = [1.0; 3];
        for k in 0..dim {
            if !(0.0 <= lower[k] && lower[k] < upper[k] && upper[k] <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "box corner component {k} must satisfy 0 <= lower < upper <= 1"
                )));
            }
            lo[k] = lower[k];
            hi[k] = upper[k];
        }
        Ok(Self::BoxIndicator { dim, lower: lo, upper: hi })
    }

    /// Indicator of `(0.25, 0.75)^dim`.
    pub fn centered_box(dim: usize) -> Result<Self> {
        Self::box_indicator(dim, &[0.25; 3], &[0.75; 3])
    }

    /// The constant function one on the whole unit cube.
    pub fn one(dim: usize) -> Result<Self> {
        Self::box_indicator(dim, &[0.0; 3], &[1.0; 3])
    }

    pub fn zero() -> Self {
        Self::smooth(|_| 0.0, |_| [0.0; 3])
    }

    pub fn smooth<F, G>(value: F, gradient: G) -> Self
    where
        F: Fn(&[f64; 3]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    {
        Self::Smooth { value: Arc::new(value), gradient: Arc::new(gradient) }
    }

    /// `prod_k sin(pi x_k)` over the first `dim` coordinates.
    pub fn sine_product(dim: usize) -> Self {
        use std::f64::consts::PI;
        Self::smooth(
            move |x| (0..dim).map(|k| (PI * x[k]).sin()).product(),
            move |x| {
                let mut g = [0.0; 3];
                for (k, gk) in g.iter_mut().enumerate().take(dim) {
                    *gk = (0..dim)
                        .map(|j| if j == k { PI * (PI * x[j]).cos() } else { (PI * x[j]).sin() })
                        .product();
                }
                g
            },
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::Scaled { factor, inner: Arc::new(self.clone()) }
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            Self::BoxIndicator { dim, lower, upper } => {
                let inside = (0..*dim).all(|k| lower[k] <= x[k] && x[k] <= upper[k]);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Smooth { value, .. } => value(x),
            Self::Scaled { factor, inner } => factor * inner.eval(x),
        }
    }

    /// Exact gradient; zero almost everywhere for box indicators.
    pub fn gradient(&self, x: &[f64; 3]) -> [f64; 3] {
        match self {
            Self::BoxIndicator { .. } => [0.0; 3],
            Self::Smooth { gradient, .. } => gradient(x),
            Self::Scaled { factor, inner } => inner.gradient(x).map(|g| factor * g),
        }
    }

    /// For (scaled) box indicators, `(height, dim, lower, upper)`.
    pub(crate) fn as_box(&self) -> Option<(f64, usize, [f64; 3], [f64; 3])> {
        match self {
            Self::BoxIndicator { dim, lower, upper } => Some((1.0, *dim, *lower, *upper)),
            Self::Smooth { .. } => None,
            Self::Scaled { factor, inner } => {
                inner.as_box().map(|(c, d, lo, hi)| (factor * c, d, lo, hi))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validation() {
        assert!(TargetFunction::box_indicator(2, &[0.5, 0.1], &[0.4, 0.9]).is_err());
        assert!(TargetFunction::box_indicator(2, &[-0.1, 0.1], &[0.4, 0.9]).is_err());
        assert!(TargetFunction::box_indicator(3, &[0.1, 0.1], &[0.4, 0.9]).is_err());
        let b = TargetFunction::centered_box(2).unwrap();
        assert_eq!(b.eval(&[0.5, 0.5, 7.0]), 1.0);
        assert_eq!(b.eval(&[0.5, 0.8, 0.0]), 0.0);
    }

    #[test]
    fn sine_gradient_matches_differences() {
        let t = TargetFunction::sine_product(3);
        let x = [0.3, 0.7, 0.45];
        let g = t.gradient(&x);
        let eps = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += eps;
            xm[k] -= eps;
            let fd = (t.eval(&xp) - t.eval(&xm)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn scaled_box_keeps_shape() {
        let b = TargetFunction::centered_box(1).unwrap().scaled(-3.0);
        assert_eq!(b.eval(&[0.5, 0.0, 0.0]), -3.0);
        let (c, d, lo, hi) = b.as_box().unwrap();
        assert_eq!((c, d, lo[0], hi[0]), (-3.0, 1, 0.25, 0.75));
    }
}
