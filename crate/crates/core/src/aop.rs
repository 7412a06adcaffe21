//! Alternating optimization of the two free parameters of the update:
//! per-band step-sizes `mu_i(k)` for the coarse step and the penalty weight
//! `rho(k)` for the zero-attraction step.
//!
//! Step-sizes aim to make the power of each intermediate a-posteriori error
//! equal the subband noise power, giving `mu_i = 1 - sqrt(sigma_nu^2 / sigma_e^2)`
//! with both powers estimated over an exponential window
//! `zeta = 1 - 1/(kappa M)`. Errors enter the estimates through the scaling
//! factor `phi_i`, so samples rejected as impulses do not inflate them.

use crate::error::{Error, Result};
use crate::history::{dot, norm_sq};

pub const DEFAULT_KAPPA: f64 = 6.0;
pub const DEFAULT_EPS1: f64 = 1e-5;
pub const DEFAULT_EPS2: f64 = 1e-5;

/// `1 - 1/(kappa M)`.
pub fn window_factor(kappa: f64, taps: usize) -> f64 {
    1.0 - 1.0 / (kappa * taps as f64)
}

#[derive(Debug, Clone)]
struct BandStats {
    error_power: f64,
    input_power: f64,
    cross: Vec<f64>,
    noise_power: f64,
}

/// Running per-band power and cross-correlation estimates.
#[derive(Debug, Clone)]
pub struct SubbandStats {
    zeta: f64,
    eps1: f64,
    eps2: f64,
    bands: Vec<BandStats>,
}

impl SubbandStats {
    /// Window factor from `kappa >= 1`.
    pub fn new(bands: usize, taps: usize, kappa: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa must be >= 1, got {kappa}")));
        }
        Self::with_window(bands, taps, window_factor(kappa, taps), eps1, eps2)
    }

    /// Explicit window factor `zeta` in `[0, 1)`.
    pub fn with_window(bands: usize, taps: usize, zeta: f64, eps1: f64, eps2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&zeta) {
            return Err(Error::InvalidParameter(format!("window factor must lie in [0, 1), got {zeta}")));
        }
        if !(eps1 >= 0.0 && eps2 >= 0.0) {
            return Err(Error::InvalidParameter("guards must be non-negative".into()));
        }
        let band = BandStats {
            error_power: 0.0,
            input_power: 0.0,
            cross: vec![0.0; taps],
            noise_power: 0.0,
        };
        Ok(Self {
            zeta,
            eps1,
            eps2,
            bands: vec![band; bands],
        })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn error_power(&self, band: usize) -> f64 {
        self.bands[band].error_power
    }

    pub fn input_power(&self, band: usize) -> f64 {
        self.bands[band].input_power
    }

    pub fn cross_correlation(&self, band: usize) -> &[f64] {
        &self.bands[band].cross
    }

    pub fn noise_power(&self, band: usize) -> f64 {
        self.bands[band].noise_power
    }

    /// `sigma_e^2 <- zeta sigma_e^2 + (1 - zeta) phi^2 e^2`.
    pub fn update_error_power(&mut self, band: usize, phi: f64, error: f64) -> f64 {
        let z = self.zeta;
        let st = &mut self.bands[band];
        let pe = phi * error;
        st.error_power = z * st.error_power + (1.0 - z) * pe * pe;
        st.error_power
    }

    /// Updates the input power (from the newest band sample `regressor[0]`)
    /// and the error/input cross-correlation, then
    /// `sigma_nu^2 = sigma_e^2 - |r_ue|^2 / (sigma_u^2 + eps1)`.
    /// A negative result keeps the previous noise estimate.
    ///
    /// Must follow [`update_error_power`](Self::update_error_power) in the
    /// same iteration.
    pub fn update_noise_power(&mut self, band: usize, phi: f64, error: f64, regressor: &[f64]) -> f64 {
        let z = self.zeta;
        let eps1 = self.eps1;
        let st = &mut self.bands[band];
        assert_eq!(regressor.len(), st.cross.len(), "regressor length mismatch");
        let newest = regressor[0];
        st.input_power = z * st.input_power + (1.0 - z) * newest * newest;
        let g = (1.0 - z) * phi * error;
        for (r, &u) in st.cross.iter_mut().zip(regressor) {
            *r = z * *r + g * u;
        }
        let denom = st.input_power + eps1;
        let explained = if denom > 0.0 { norm_sq(&st.cross) / denom } else { 0.0 };
        let raw = st.error_power - explained;
        if raw >= 0.0 {
            st.noise_power = raw;
        }
        st.noise_power
    }

    /// `mu_i = clamp(1 - sqrt(sigma_nu^2 / (sigma_e^2 + eps2)), 0, 1)`;
    /// 1 while no noise power has been estimated.
    pub fn step_size(&self, band: usize) -> f64 {
        let st = &self.bands[band];
        if st.noise_power == 0.0 {
            return 1.0;
        }
        let denom = st.error_power + self.eps2;
        if denom <= 0.0 {
            return 0.0;
        }
        (1.0 - (st.noise_power / denom).sqrt()).clamp(0.0, 1.0)
    }

    /// All three updates for one band, returning the new step-size.
    pub fn update(&mut self, band: usize, phi: f64, error: f64, regressor: &[f64]) -> f64 {
        self.update_error_power(band, phi, error);
        self.update_noise_power(band, phi, error, regressor);
        self.step_size(band)
    }
}

/// Estimated optimal penalty weight
/// `max((psi - w)^T P / (|P|^2 + eps1), 0)`, with `w(k)` standing in for the
/// unknown system. Zero when `P = 0`.
pub fn rho_opt(psi: &[f64], w: &[f64], direction: &[f64], eps1: f64) -> f64 {
    let pp = norm_sq(direction);
    if pp == 0.0 {
        return 0.0;
    }
    let num: f64 = psi
        .iter()
        .zip(w)
        .zip(direction)
        .map(|((a, b), p)| (a - b) * p)
        .sum();
    (num / (pp + eps1)).max(0.0)
}

/// Adaptive penalty weight: zero at the first iteration, [`rho_opt`] after.
#[derive(Debug, Clone)]
pub struct RhoState {
    rho: f64,
    eps1: f64,
}

impl RhoState {
    pub fn new(eps1: f64) -> Self {
        Self { rho: 0.0, eps1 }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn update(&mut self, iteration: usize, psi: &[f64], w: &[f64], direction: &[f64]) -> f64 {
        self.rho = if iteration == 0 {
            0.0
        } else {
            rho_opt(psi, w, direction, self.eps1)
        };
        self.rho
    }
}

/// Change in squared deviation caused by the zero-attraction step,
/// `|w_o - w(k+1)|^2 - |w_o - psi|^2 = -2 rho (psi - w_o)^T P + rho^2 |P|^2`.
///
/// Needs the true system, so it is an analysis tool rather than part of the
/// adaptive recursion.
pub fn delta_of_rho(psi_dev: &[f64], direction: &[f64], rho: f64) -> f64 {
    -2.0 * rho * dot(psi_dev, direction) + rho * rho * norm_sq(direction)
}

/// Minimizer of [`delta_of_rho`]: `(psi - w_o)^T P / |P|^2` (unclamped).
pub fn rho_opt_true(psi_dev: &[f64], direction: &[f64]) -> f64 {
    let pp = norm_sq(direction);
    if pp == 0.0 {
        0.0
    } else {
        dot(psi_dev, direction) / pp
    }
}

/// Open interval `(0, 2 rho_opt_true)` of weights that strictly reduce the
/// deviation; `None` if it is empty.
pub fn rho_interval(psi_dev: &[f64], direction: &[f64]) -> Option<(f64, f64)> {
    let upper = 2.0 * rho_opt_true(psi_dev, direction);
    (upper > 0.0).then_some((0.0, upper))
}
