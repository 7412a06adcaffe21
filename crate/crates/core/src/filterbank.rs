//! Cosine-modulated (pseudo-QMF) analysis filter banks.
//!
//! A symmetric lowpass prototype `p` of length `L` is designed with a Kaiser
//! window and modulated into `N` bandpass filters
//!
//! ```text
//! h_i(n) = 2 p(n) cos( (pi/N)(i + 1/2)(n - (L-1)/2) + (-1)^i pi/4 ),  i = 0..N-1
//! ```
//!
//! whose passbands are centred on `(2i+1) pi / (2N)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::history::{dot, SampleHistory};

/// Number of grid points on `[0, pi]` used to verify designs.
pub const DESIGN_GRID: usize = 4096;

/// Relative deviation of `sum_i |H_i|^2` from its mean that the default
/// N=4, L=33, 60 dB design stays under. Shorter or lower-attenuation designs
/// exceed it and are not rejected for that.
pub const POWER_COMPLEMENTARITY_TOLERANCE: f64 = 0.01;

/// Symmetric (linear-phase) lowpass prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    coefficients: Vec<f64>,
}

impl PrototypeFilter {
    /// Wraps externally supplied taps, checking finiteness and symmetry.
    pub fn from_coefficients(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidParameter("prototype has no taps".into()));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("prototype has non-finite taps".into()));
        }
        let scale = coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let l = coefficients.len();
        for n in 0..l / 2 {
            if (coefficients[n] - coefficients[l - 1 - n]).abs() > 1e-9 * scale {
                return Err(Error::InvalidParameter(format!(
                    "prototype is not linear phase: tap {n} differs from tap {}",
                    l - 1 - n
                )));
            }
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Smallest frequency beyond which `|P(w)|` stays at least
    /// `attenuation_db` below its peak, on a `grid + 1` point grid of `[0, pi]`.
    pub fn stopband_edge(&self, attenuation_db: f64, grid: usize) -> f64 {
        let mags: Vec<f64> = (0..=grid)
            .map(|g| magnitude_response(&self.coefficients, PI * g as f64 / grid as f64))
            .collect();
        let peak = mags.iter().copied().fold(0.0, f64::max);
        let floor = peak * 10f64.powf(-attenuation_db / 20.0);
        match mags.iter().rposition(|&m| m > floor) {
            Some(g) if g == grid => PI,
            Some(g) => PI * (g + 1) as f64 / grid as f64,
            None => 0.0,
        }
    }
}

/// `N` analysis filters of common length.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBank {
    filters: Vec<Vec<f64>>,
}

impl AnalysisBank {
    /// Builds a bank from arbitrary filters (all of the same, nonzero length).
    pub fn from_filters(filters: Vec<Vec<f64>>) -> Result<Self> {
        let len = filters.first().map(Vec::len).unwrap_or(0);
        if len == 0 || filters.iter().any(|h| h.len() != len) {
            return Err(Error::InvalidParameter(
                "analysis filters must be nonempty and of equal length".into(),
            ));
        }
        Ok(Self { filters })
    }

    pub fn bands(&self) -> usize {
        self.filters.len()
    }

    pub fn filter_len(&self) -> usize {
        self.filters[0].len()
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn filter(&self, band: usize) -> &[f64] {
        &self.filters[band]
    }

    /// Full-rate convolution of `x` with every analysis filter, zero initial
    /// state, output truncated to `x.len()` samples.
    pub fn analyze(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.filters
            .iter()
            .map(|h| {
                (0..x.len())
                    .map(|n| {
                        let taps = h.len().min(n + 1);
                        (0..taps).map(|m| h[m] * x[n - m]).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Streaming analyzer with cold-start delay lines.
    pub fn analyzer(&self) -> SubbandAnalyzer {
        SubbandAnalyzer {
            filters: self.filters.clone(),
            line: SampleHistory::new(self.filter_len()),
        }
    }

    /// Centre frequency `(2i+1) pi / (2N)` of band `i`.
    pub fn center(&self, band: usize) -> f64 {
        (2 * band + 1) as f64 * PI / (2 * self.bands()) as f64
    }

    /// Worst-case stopband attenuation in dB over all bands, relative to each
    /// band's own peak gain.
    ///
    /// Band `i`'s stopband is every `omega` in `[0, pi]` at least `edge` away
    /// from both `omega_i` and its mirror image `-omega_i` (mod `2 pi`), where
    /// `edge` is the prototype's stopband edge.
    pub fn stopband_attenuation_db(&self, edge: f64, grid: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for (i, h) in self.filters.iter().enumerate() {
            let c = self.center(i);
            let mut peak = 0.0f64;
            let mut stop = 0.0f64;
            for g in 0..=grid {
                let w = PI * g as f64 / grid as f64;
                let mag = magnitude_response(h, w);
                peak = peak.max(mag);
                let dist = (w - c).abs().min(w + c).min(2.0 * PI - w - c);
                if dist >= edge - 1e-12 {
                    stop = stop.max(mag);
                }
            }
            let att = if stop == 0.0 {
                f64::INFINITY
            } else {
                -20.0 * (stop / peak).log10()
            };
            worst = worst.min(att);
        }
        worst
    }

    /// `max |S(w) - mean S| / mean S` with `S(w) = sum_i |H_i(w)|^2` sampled
    /// on `grid + 1` points of `[0, pi]`.
    pub fn power_complementarity_error(&self, grid: usize) -> f64 {
        let sums: Vec<f64> = (0..=grid)
            .map(|g| {
                let w = PI * g as f64 / grid as f64;
                self.filters
                    .iter()
                    .map(|h| magnitude_response(h, w).powi(2))
                    .sum()
            })
            .collect();
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        sums.iter()
            .map(|s| (s - mean).abs() / mean)
            .fold(0.0, f64::max)
    }
}

/// Streaming form of [`AnalysisBank::analyze`]: one full-rate input sample in,
/// one output sample per band out.
#[derive(Debug, Clone)]
pub struct SubbandAnalyzer {
    filters: Vec<Vec<f64>>,
    line: SampleHistory,
}

impl SubbandAnalyzer {
    pub fn bands(&self) -> usize {
        self.filters.len()
    }

    /// Feeds `x(n)` and writes `u_i(n)` for every band into `out`.
    pub fn push(&mut self, x: f64, out: &mut [f64]) {
        self.line.push(x);
        let window = self.line.window();
        for (o, h) in out.iter_mut().zip(&self.filters) {
            *o = dot(h, window);
        }
    }
}

/// `|sum_n h[n] e^{-j w n}|`.
pub fn magnitude_response(h: &[f64], w: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &c) in h.iter().enumerate() {
        let (s, co) = (w * n as f64).sin_cos();
        re += c * co;
        im -= c * s;
    }
    re.hypot(im)
}

/// Kaiser window shape parameter for a stopband attenuation in dB.
pub fn kaiser_beta(attenuation_db: f64) -> f64 {
    if attenuation_db > 50.0 {
        0.1102 * (attenuation_db - 8.7)
    } else if attenuation_db >= 21.0 {
        0.5842 * (attenuation_db - 21.0).powf(0.4) + 0.07886 * (attenuation_db - 21.0)
    } else {
        0.0
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kaiser_lowpass(len: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let norm = bessel_i0(beta);
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let m = n as f64 - mid;
            let ideal = if m == 0.0 {
                cutoff / PI
            } else {
                (cutoff * m).sin() / (PI * m)
            };
            let r = if len > 1 { m / mid } else { 0.0 };
            let win = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / norm;
            ideal * win
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= dc;
    }
    // Exact symmetry regardless of rounding in the window evaluation.
    for n in 0..len / 2 {
        let avg = 0.5 * (taps[n] + taps[len - 1 - n]);
        taps[n] = avg;
        taps[len - 1 - n] = avg;
    }
    taps
}

/// Kaiser lowpass whose cutoff puts `|P(pi/(2N))|^2` at one half.
fn half_power_prototype(bands: usize, len: usize, window_db: f64) -> Result<PrototypeFilter> {
    let beta = kaiser_beta(window_db);
    let crossover = PI / (2 * bands) as f64;
    let half_power_gap = |cutoff: f64| {
        let taps = kaiser_lowpass(len, cutoff, beta);
        magnitude_response(&taps, crossover).powi(2) - 0.5
    };

    let (mut lo, mut hi) = (0.25 * crossover, 2.0 * crossover);
    if half_power_gap(lo) > 0.0 || half_power_gap(hi) < 0.0 {
        return Err(Error::Design(format!(
            "no cutoff gives half-power crossover for N={bands}, L={len}"
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if half_power_gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    PrototypeFilter::from_coefficients(kaiser_lowpass(len, 0.5 * (lo + hi), beta))
}

/// Designs a Kaiser-window prototype for an `bands`-band pseudo-QMF bank.
///
/// The cutoff is found by bisection so that `|P(pi/(2N))|^2 = 1/2`, which
/// makes adjacent modulated bands cross at half power and minimizes the
/// power-complementarity error. The modulated bank is then checked against
/// `attenuation_db`; a prototype too short to reach it is an error.
pub fn design_prototype(bands: usize, len: usize, attenuation_db: f64) -> Result<PrototypeFilter> {
    if bands == 0 {
        return Err(Error::InvalidParameter("band count must be at least 1".into()));
    }
    if len < 2 * bands {
        return Err(Error::InvalidParameter(format!(
            "prototype length {len} is shorter than 2N = {}",
            2 * bands
        )));
    }
    if !(attenuation_db > 0.0 && attenuation_db.is_finite()) {
        return Err(Error::InvalidParameter("attenuation must be positive".into()));
    }

    // The cosine modulation leaks a little of each mirrored image into the
    // stopband, so the window is designed for slightly more than requested
    // until the modulated bank meets the target.
    let mut shortfall = 0.0;
    let mut found = None;
    for step in 0..=40 {
        let proto = half_power_prototype(bands, len, attenuation_db + 0.5 * step as f64)?;
        // Non-adjacent passbands start 3*pi/(2N) away from a band centre.
        let edge = proto.stopband_edge(attenuation_db, DESIGN_GRID);
        let limit = 3.0 * PI / (2 * bands) as f64;
        if edge > limit {
            return Err(Error::Design(format!(
                "N={bands}, L={len}: {attenuation_db} dB is only reached at {edge:.4} rad, beyond the non-adjacent band limit {limit:.4} rad"
            )));
        }
        let bank = modulate(&proto, bands);
        let achieved = bank.stopband_attenuation_db(edge, DESIGN_GRID);
        if achieved >= attenuation_db {
            found = Some(proto);
            break;
        }
        shortfall = achieved;
    }
    let Some(proto) = found else {
        return Err(Error::Design(format!(
            "N={bands}, L={len} reaches only {shortfall:.2} dB stopband attenuation, {attenuation_db} dB requested"
        )));
    };
    Ok(proto)
}

/// Pseudo-QMF cosine modulation of `proto` into `bands` analysis filters.
pub fn modulate(proto: &PrototypeFilter, bands: usize) -> AnalysisBank {
    assert!(bands >= 1, "band count must be at least 1");
    let p = proto.coefficients();
    let mid = (p.len() - 1) as f64 / 2.0;
    let filters = (0..bands)
        .map(|i| {
            let freq = PI / bands as f64 * (i as f64 + 0.5);
            let phase = if i % 2 == 0 { PI / 4.0 } else { -PI / 4.0 };
            p.iter()
                .enumerate()
                .map(|(n, &c)| 2.0 * c * (freq * (n as f64 - mid) + phase).cos())
                .collect()
        })
        .collect();
    AnalysisBank { filters }
}

/// Serializes a prototype: header `# prototype N=<n> L=<l>` then one tap per line.
pub fn format_prototype(proto: &PrototypeFilter, bands: usize) -> String {
    let mut s = format!("# prototype N={bands} L={}\n", proto.len());
    for c in proto.coefficients() {
        // `Display` for f64 is plain decimal and round-trips exactly.
        let _ = writeln!(s, "{c}");
    }
    s
}

/// Parses the output of [`format_prototype`], returning the taps and band count.
pub fn parse_prototype(text: &str) -> Result<(PrototypeFilter, usize)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty prototype file".into()))?;
    let (bands, len) = parse_header(header, "prototype", "N", "L")?;
    let taps = lines
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad coefficient {l:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if taps.len() != len {
        return Err(Error::Parse(format!(
            "header declares L={len} but file has {} taps",
            taps.len()
        )));
    }
    Ok((PrototypeFilter::from_coefficients(taps)?, bands))
}

pub fn write_prototype(path: &Path, proto: &PrototypeFilter, bands: usize) -> Result<()> {
    std::fs::write(path, format_prototype(proto, bands))?;
    Ok(())
}

pub fn read_prototype(path: &Path) -> Result<(PrototypeFilter, usize)> {
    let text = std::fs::read_to_string(path)?;
    parse_prototype(&text).map_err(|e| Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Parses `# <kind> A=<int> B=<value>`; shared with the system file format.
pub(crate) fn parse_header(line: &str, kind: &str, first: &str, second: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse(format!("expected header `# {kind} {first}=.. {second}=..`, got {line:?}"));
    let rest = line
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|r| r.strip_prefix(kind))
        .ok_or_else(bad)?;
    let mut a = None;
    let mut b = None;
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=').ok_or_else(bad)?;
        let v: usize = v.parse().map_err(|_| bad())?;
        if k == first {
            a = Some(v);
        } else if k == second {
            b = Some(v);
        } else {
            return Err(bad());
        }
    }
    Ok((a.ok_or_else(bad)?, b.ok_or_else(bad)?))
}
