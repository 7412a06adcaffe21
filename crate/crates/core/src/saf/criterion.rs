//! Robustness criteria: rules mapping a subband error to a scaling factor.

use std::collections::VecDeque;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Threshold multiplier on the robust standard deviation (99% Gaussian quantile).
pub const MH_THRESHOLD_FACTOR: f64 = 2.576;

/// A robust cost `phi(e)` expressed through its scaling factor
/// `phi'(e) / e`.
///
/// Implementations must return a finite value in `[0, 1]` for every finite
/// error.
pub trait RobustCriterion: Debug + Send {
    /// Per-iteration state update with the current error of `band`.
    /// Called once per band and iteration, before [`scaling`](Self::scaling).
    fn observe(&mut self, band: usize, error: f64);

    fn scaling(&self, band: usize, error: f64) -> f64;

    fn name(&self) -> &'static str;
}

/// `phi(e) = e^2 / 2`, i.e. a constant scaling factor of one.
#[derive(Debug, Clone, Copy, Default)]
pub struct LeastSquares;

impl RobustCriterion for LeastSquares {
    fn observe(&mut self, _band: usize, _error: f64) {}

    fn scaling(&self, _band: usize, _error: f64) -> f64 {
        1.0
    }

    fn name(&self) -> &'static str {
        "least-squares"
    }
}

#[derive(Debug, Clone)]
struct MhBand {
    window: VecDeque<f64>,
    variance: f64,
    threshold: f64,
    started: bool,
}

/// Modified Huber criterion: quadratic cost below a per-band threshold `xi_i`,
/// flat above it, so the scaling factor is 1 for `|e| < xi_i` and 0 otherwise.
///
/// The threshold tracks `xi_i = 2.576 * sigma_i`, where `sigma_i^2` is an
/// exponentially weighted median of the last `N_w` squared errors:
///
/// ```text
/// sigma_i^2(k) = lambda * sigma_i^2(k-1) + c_sigma (1 - lambda) med(a_i),
/// c_sigma = 1.483 (1 + 5 / (N_w - 1))
/// ```
///
/// with `lambda` taken as 0 on the first update.
#[derive(Debug, Clone)]
pub struct MhCriterion {
    lambda: f64,
    window_len: usize,
    c_sigma: f64,
    bands: Vec<MhBand>,
    scratch: Vec<f64>,
}

impl MhCriterion {
    pub fn new(bands: usize, lambda: f64, window_len: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "forgetting factor must lie in [0, 1), got {lambda}"
            )));
        }
        if window_len < 2 {
            return Err(Error::InvalidParameter(
                "median window needs at least 2 samples".into(),
            ));
        }
        let band = MhBand {
            window: VecDeque::with_capacity(window_len),
            variance: 0.0,
            threshold: 0.0,
            started: false,
        };
        Ok(Self {
            lambda,
            window_len,
            c_sigma: correction_factor(window_len),
            bands: vec![band; bands],
            scratch: Vec::with_capacity(window_len),
        })
    }

    pub fn c_sigma(&self) -> f64 {
        self.c_sigma
    }

    pub fn threshold(&self, band: usize) -> f64 {
        self.bands[band].threshold
    }

    pub fn variance(&self, band: usize) -> f64 {
        self.bands[band].variance
    }

    /// Pushes `error^2` into the band's window and refreshes the variance
    /// estimate and threshold. Returns `(sigma^2, xi)`.
    ///
    /// The median is taken over whatever part of the window has been filled.
    pub fn update_threshold(&mut self, band: usize, error: f64) -> (f64, f64) {
        let st = &mut self.bands[band];
        if st.window.len() == self.window_len {
            st.window.pop_back();
        }
        st.window.push_front(error * error);

        self.scratch.clear();
        self.scratch.extend(st.window.iter().copied());
        let med = median(&mut self.scratch);

        st.variance = if st.started {
            self.lambda * st.variance + self.c_sigma * (1.0 - self.lambda) * med
        } else {
            st.started = true;
            self.c_sigma * med
        };
        st.threshold = MH_THRESHOLD_FACTOR * st.variance.sqrt();
        (st.variance, st.threshold)
    }

    /// 1 if `|error| < xi_band`, else 0. A zero threshold passes only a zero
    /// error.
    pub fn mh_scaling(&self, band: usize, error: f64) -> f64 {
        let xi = self.bands[band].threshold;
        let pass = if xi == 0.0 { error == 0.0 } else { error.abs() < xi };
        if pass {
            1.0
        } else {
            0.0
        }
    }
}

impl RobustCriterion for MhCriterion {
    fn observe(&mut self, band: usize, error: f64) {
        self.update_threshold(band, error);
    }

    fn scaling(&self, band: usize, error: f64) -> f64 {
        self.mh_scaling(band, error)
    }

    fn name(&self) -> &'static str {
        "modified-huber"
    }
}

/// `1.483 (1 + 5 / (N_w - 1))`.
pub fn correction_factor(window_len: usize) -> f64 {
    1.483 * (1.0 + 5.0 / (window_len as f64 - 1.0))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
