//! Brute-force reference implementations and shared fixtures for the
//! integration tests. The oracles are written from the defining formulas,
//! without touching the crate's fast paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use sarnsaf::harness::{Algorithm, Experiment, ExperimentConfig, SystemSource};
use sarnsaf::scenario::{NoiseModel, SystemKind};

/// Frequency grid on `[0, pi]` for response checks.
pub const GRID: usize = 4096;

pub fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y[n] = sum_m h[m] x[n - m]`, zero initial state.
pub fn convolve(h: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| (0..h.len()).filter(|&m| m <= n).map(|m| h[m] * x[n - m]).sum())
        .collect()
}

/// `[s(n), s(n-1), ..., s(n-M+1)]` with zeros before the start.
pub fn regressor_at(s: &[f64], n: usize, taps: usize) -> Vec<f64> {
    (0..taps).map(|j| if j <= n { s[n - j] } else { 0.0 }).collect()
}

/// `|H(e^{jw})|` from the DTFT sum.
pub fn dtft_mag(h: &[f64], w: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &c) in h.iter().enumerate() {
        re += c * (w * n as f64).cos();
        im -= c * (w * n as f64).sin();
    }
    re.hypot(im)
}

/// `P = (I - sum_i u_i u_i^T / (|u_i|^2 + delta)) g` with each projector
/// formed as a full `M x M` matrix.
pub fn naive_direction(grad: &[f64], us: &[Vec<f64>], delta: f64) -> Vec<f64> {
    let m = grad.len();
    let mut a = vec![vec![0.0; m]; m];
    for (r, row) in a.iter_mut().enumerate() {
        row[r] = 1.0;
    }
    for u in us {
        let d = inner(u, u) + delta;
        for r in 0..m {
            for c in 0..m {
                a[r][c] -= u[r] * u[c] / d;
            }
        }
    }
    a.iter().map(|row| inner(row, grad)).collect()
}

/// `psi = w + sum_i mu_i phi_i e_i u_i / (|u_i|^2 + delta)`, term by term.
pub fn naive_coarse(
    w: &[f64],
    us: &[Vec<f64>],
    errors: &[f64],
    phis: &[f64],
    mus: &[f64],
    delta: f64,
) -> Vec<f64> {
    let mut psi = w.to_vec();
    for i in 0..us.len() {
        let d = inner(&us[i], &us[i]) + delta;
        for (m, p) in psi.iter_mut().enumerate() {
            *p += mus[i] * phis[i] * errors[i] * us[i][m] / d;
        }
    }
    psi
}

/// Log-penalty gradient `sgn(x) / (theta + |x|)`.
pub fn log_grad(theta: f64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| if v == 0.0 { 0.0 } else { v.signum() / (theta + v.abs()) })
        .collect()
}

/// `|a - b|^2`.
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

pub fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(|a, b| a.total_cmp(b));
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Stationary Gaussian-mode run; returns (estimated, true) subband noise power
/// per band, the estimate averaged over the second half of the run.
pub fn noise_power_recovery(variance: f64) -> Vec<(f64, f64)> {
    let cfg = ExperimentConfig {
        taps: 128,
        total_samples: 400_000,
        switch_at: usize::MAX,
        runs: 1,
        algorithm: Algorithm::AopSaNsaf,
        noise: NoiseModel::Gaussian { variance },
        system: SystemSource::Synthetic { kind: SystemKind::Dispersive, chi: 0.3663 },
        ..ExperimentConfig::default()
    };
    let exp = Experiment::new(cfg).unwrap();
    let half = 400_000 / 4 / 2;
    let mut sums = [0.0; 4];
    let mut count = 0;
    exp.run_trial_with(11, |k, f| {
        if k >= half {
            let stats = f.stats().unwrap();
            for (i, s) in sums.iter_mut().enumerate() {
                *s += stats.noise_power(i);
            }
            count += 1;
        }
    })
    .unwrap();
    (0..4)
        .map(|i| {
            let h = exp.bank().filter(i);
            (sums[i] / count as f64, variance * inner(h, h))
        })
        .collect()
}

/// Smallest frequency beyond which the prototype stays `att_db` below DC.
pub fn prototype_edge(p: &[f64], att_db: f64) -> f64 {
    let limit = dtft_mag(p, 0.0) * 10f64.powf(-att_db / 20.0);
    let mut edge = PI;
    for j in (0..=GRID).rev() {
        let w = PI * j as f64 / GRID as f64;
        if dtft_mag(p, w) > limit {
            break;
        }
        edge = w;
    }
    edge
}

/// Worst stopband level of band `i` in dB below its passband peak, where the
/// stopband is everything at least `edge` away from both images `+-w_i`.
pub fn stopband_db(h: &[f64], centre: f64, edge: f64) -> f64 {
    let mags: Vec<(f64, f64)> = (0..=GRID)
        .map(|j| {
            let w = PI * j as f64 / GRID as f64;
            (w, dtft_mag(h, w))
        })
        .collect();
    let peak = mags.iter().map(|m| m.1).fold(0.0, f64::max);
    let worst = mags
        .iter()
        .filter(|(w, _)| (w - centre).abs() >= edge && (w + centre).abs() >= edge && (2.0 * PI - w - centre).abs() >= edge)
        .map(|m| m.1)
        .fold(0.0, f64::max);
    20.0 * (peak / worst).log10()
}

/// Time average of `u_i^T u_j / (|u_i| |u_j|)` over decimated instants with
/// full regressors, maximized over band pairs.
pub fn worst_cross_correlation(y: &[Vec<f64>], taps: usize) -> f64 {
    let n_bands = y.len();
    let mut worst = 0.0f64;
    for i in 0..n_bands {
        for j in i + 1..n_bands {
            let (mut acc, mut count) = (0.0, 0);
            let mut n = taps;
            while n < y[0].len() {
                let (mut uij, mut uii, mut ujj) = (0.0, 0.0, 0.0);
                for m in 0..taps {
                    let (a, b) = (y[i][n - m], y[j][n - m]);
                    uij += a * b;
                    uii += a * a;
                    ujj += b * b;
                }
                acc += uij / (uii * ujj).sqrt();
                count += 1;
                n += n_bands;
            }
            worst = worst.max((acc / count as f64).abs());
        }
    }
    worst
}
