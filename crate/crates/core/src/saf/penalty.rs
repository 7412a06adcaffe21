//! Sparsity penalties, used only through their elementwise gradient.

use std::fmt::Debug;

use crate::error::{Error, Result};

/// Gradient rule `f'(x)` of a separable sparsity penalty `f(w) = sum_m g(w_m)`.
///
/// The gradient must be finite for every finite input.
pub trait SparsityPenalty: Debug + Send {
    fn gradient(&self, x: f64) -> f64;

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.gradient(v);
        }
    }

    /// True when the gradient is identically zero, letting callers skip the
    /// zero-attraction step.
    fn is_null(&self) -> bool {
        false
    }

    fn name(&self) -> &'static str;
}

/// `f(w) = sum_m ln(1 + |w_m| / theta)` with gradient
/// `sgn(w_m) / (theta + |w_m|)`.
///
/// Small `theta` separates inactive taps (pulled strongly towards zero) from
/// active ones (barely affected).
#[derive(Debug, Clone, Copy)]
pub struct LogPenalty {
    theta: f64,
}

impl LogPenalty {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "log-penalty shrinkage factor must be positive, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl SparsityPenalty for LogPenalty {
    #[inline]
    fn gradient(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            x.signum() / (self.theta + x.abs())
        }
    }

    fn name(&self) -> &'static str {
        "log"
    }
}

/// No penalty: `f'(x) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullPenalty;

impl SparsityPenalty for NullPenalty {
    fn gradient(&self, _x: f64) -> f64 {
        0.0
    }

    fn is_null(&self) -> bool {
        true
    }

    fn name(&self) -> &'static str {
        "none"
    }
}

/// Elementwise log-penalty gradient of a whole vector.
pub fn log_penalty_grad(penalty: &LogPenalty, psi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; psi.len()];
    penalty.gradient_into(psi, &mut out);
    out
}
