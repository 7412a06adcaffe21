//! Multiband subband adaptive filter and the two-step sparsity-aware robust
//! update.
//!
//! One fullband weight vector `w` (length `M`) is adapted from `N` decimated
//! subband errors. Each decimated iteration `k` runs
//!
//! ```text
//! e_i   = d_i(kN) - u_i^T w
//! psi   = w + sum_i mu_i phi_i e_i u_i / (|u_i|^2 + delta)
//! P     = f'(psi) - sum_i u_i (u_i^T f'(psi)) / (|u_i|^2 + delta)
//! w'    = psi - rho P
//! ```
//!
//! where `u_i = [u_i(kN), u_i(kN-1), ..., u_i(kN-M+1)]` is the band-`i`
//! regressor, `phi_i` comes from a [`RobustCriterion`] and `f'` from a
//! [`SparsityPenalty`].

mod criterion;
mod penalty;

pub use criterion::{correction_factor, LeastSquares, MhCriterion, RobustCriterion, MH_THRESHOLD_FACTOR};
pub use penalty::{log_penalty_grad, LogPenalty, NullPenalty, SparsityPenalty};

use crate::error::{Error, Result};
use crate::history::{dot, norm_sq, SampleHistory};

/// Default regularizer added to every `|u_i|^2` denominator.
pub const DEFAULT_DELTA_REG: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SafState {
    w: Vec<f64>,
    psi: Vec<f64>,
    regressors: Vec<SampleHistory>,
    iteration: usize,
    delta_reg: f64,
    gradient: Vec<f64>,
}

impl SafState {
    /// `w(0) = 0` with all-zero regressors.
    pub fn new(taps: usize, bands: usize, delta_reg: f64) -> Result<Self> {
        if taps == 0 || bands == 0 {
            return Err(Error::InvalidParameter(
                "filter needs at least one tap and one band".into(),
            ));
        }
        if !(delta_reg >= 0.0 && delta_reg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "regularizer must be finite and non-negative, got {delta_reg}"
            )));
        }
        Ok(Self {
            w: vec![0.0; taps],
            psi: vec![0.0; taps],
            regressors: (0..bands).map(|_| SampleHistory::new(taps)).collect(),
            iteration: 0,
            delta_reg,
            gradient: vec![0.0; taps],
        })
    }

    pub fn taps(&self) -> usize {
        self.w.len()
    }

    pub fn bands(&self) -> usize {
        self.regressors.len()
    }

    /// Decimated iteration counter `k`.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn delta_reg(&self) -> f64 {
        self.delta_reg
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Intermediate estimate from the most recent coarse update.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn set_weights(&mut self, w: &[f64]) {
        assert_eq!(w.len(), self.taps(), "weight length mismatch");
        self.w.copy_from_slice(w);
    }

    /// Feeds one full-rate sample `u_i(n)` per band.
    pub fn push_band_samples(&mut self, samples: &[f64]) {
        assert_eq!(samples.len(), self.bands(), "one sample per band expected");
        for (r, &s) in self.regressors.iter_mut().zip(samples) {
            r.push(s);
        }
    }

    /// Overwrites band `band`'s regressor, newest sample first.
    pub fn load_regressor(&mut self, band: usize, newest_first: &[f64]) {
        assert_eq!(newest_first.len(), self.taps(), "regressor length mismatch");
        let r = &mut self.regressors[band];
        r.clear();
        for &s in newest_first.iter().rev() {
            r.push(s);
        }
    }

    pub fn regressor(&self, band: usize) -> &[f64] {
        self.regressors[band].window()
    }

    fn denominator(&self, band: usize) -> f64 {
        norm_sq(self.regressor(band)) + self.delta_reg
    }

    /// `e_i = d_i - u_i^T w` for every band.
    pub fn subband_errors(&self, desired: &[f64], errors: &mut [f64]) {
        assert_eq!(desired.len(), self.bands());
        assert_eq!(errors.len(), self.bands());
        for (i, (e, &d)) in errors.iter_mut().zip(desired).enumerate() {
            *e = d - dot(self.regressor(i), &self.w);
        }
    }

    /// `psi = w + sum_i mu_i phi_i e_i u_i / (|u_i|^2 + delta)`.
    ///
    /// Bands with a zero denominator (silent regressor and `delta = 0`)
    /// contribute nothing.
    pub fn coarse_update(&mut self, errors: &[f64], scalings: &[f64], steps: &[f64]) {
        let n = self.bands();
        assert!(errors.len() == n && scalings.len() == n && steps.len() == n);
        self.psi.copy_from_slice(&self.w);
        for i in 0..n {
            let gain = steps[i] * scalings[i] * errors[i];
            if gain == 0.0 {
                continue;
            }
            let denom = self.denominator(i);
            if denom == 0.0 {
                continue;
            }
            let c = gain / denom;
            for (p, &u) in self.psi.iter_mut().zip(self.regressors[i].window()) {
                *p += c * u;
            }
        }
    }

    /// Penalty direction `P(k)` evaluated at the current `psi`.
    ///
    /// Each band's projection is formed as a scalar inner product first, so
    /// the cost is `O(NM)` rather than the `O(NM^2)` of forming
    /// `u_i u_i^T` explicitly.
    pub fn penalty_direction(&mut self, penalty: &dyn SparsityPenalty, out: &mut [f64]) {
        assert_eq!(out.len(), self.taps());
        penalty.gradient_into(&self.psi, &mut self.gradient);
        out.copy_from_slice(&self.gradient);
        for i in 0..self.bands() {
            let denom = self.denominator(i);
            if denom == 0.0 {
                continue;
            }
            let u = self.regressors[i].window();
            let c = dot(u, &self.gradient) / denom;
            for (p, &x) in out.iter_mut().zip(u) {
                *p -= c * x;
            }
        }
    }

    /// `w(k+1) = psi - rho P` and advance to the next iteration.
    ///
    /// Fails with [`Error::Divergence`] if any weight becomes non-finite.
    pub fn zero_attract_update(&mut self, direction: &[f64], rho: f64) -> Result<()> {
        assert_eq!(direction.len(), self.taps());
        if rho == 0.0 {
            self.w.copy_from_slice(&self.psi);
        } else {
            for ((w, &p), &d) in self.w.iter_mut().zip(&self.psi).zip(direction) {
                *w = p - rho * d;
            }
        }
        if self.w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: self.iteration,
            });
        }
        self.iteration += 1;
        Ok(())
    }
}
