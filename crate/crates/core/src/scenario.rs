//! Experimental world: correlated input, additive noise and unknown systems.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::history::dot;

/// Allowed gap between requested and achieved sparseness.
pub const CHI_TOLERANCE: f64 = 0.02;

/// Default number of active taps in a synthetic sparse system.
pub const DEFAULT_ACTIVE_TAPS: usize = 16;

/// First-order autoregressive input `u(n) = a u(n-1) + g(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputModel {
    pub pole: f64,
    pub driving_variance: f64,
}

impl InputModel {
    pub fn ar1(pole: f64) -> Result<Self> {
        let m = Self {
            pole,
            driving_variance: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pole.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "AR(1) pole must satisfy |a| < 1, got {}",
                self.pole
            )));
        }
        if !(self.driving_variance > 0.0 && self.driving_variance.is_finite()) {
            return Err(Error::InvalidParameter("driving variance must be positive".into()));
        }
        Ok(())
    }

    /// Stationary variance `sigma_g^2 / (1 - a^2)`.
    pub fn stationary_variance(&self) -> f64 {
        self.driving_variance / (1.0 - self.pole * self.pole)
    }

    pub fn source(&self) -> Ar1Source {
        Ar1Source {
            pole: self.pole,
            scale: self.driving_variance.sqrt(),
            last: 0.0,
        }
    }
}

/// Streaming AR(1) generator starting from `u(-1) = 0`.
#[derive(Debug, Clone)]
pub struct Ar1Source {
    pole: f64,
    scale: f64,
    last: f64,
}

impl Ar1Source {
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let g: f64 = rng.sample(StandardNormal);
        self.last = self.pole * self.last + self.scale * g;
        self.last
    }
}

pub fn gen_ar1<R: Rng + ?Sized>(model: &InputModel, len: usize, rng: &mut R) -> Vec<f64> {
    let mut src = model.source();
    (0..len).map(|_| src.next(rng)).collect()
}

/// Additive noise `nu(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// No noise at all.
    Silent,
    Gaussian { variance: f64 },
    /// Symmetric alpha-stable with characteristic function `exp(-gamma |t|^alpha)`.
    AlphaStable { alpha: f64, gamma: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Silent => Ok(()),
            NoiseModel::Gaussian { variance } if variance >= 0.0 && variance.is_finite() => Ok(()),
            NoiseModel::Gaussian { variance } => Err(Error::InvalidParameter(format!(
                "noise variance must be non-negative, got {variance}"
            ))),
            NoiseModel::AlphaStable { alpha, gamma } => {
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must lie in (0, 2], got {alpha}"
                    )));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "gamma must be positive, got {gamma}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Silent => 0.0,
            NoiseModel::Gaussian { variance } => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            NoiseModel::AlphaStable { alpha, gamma } => sample_alpha_stable(alpha, gamma, rng),
        }
    }
}

/// One symmetric alpha-stable draw via the Chambers-Mallows-Stuck transform:
///
/// ```text
/// V ~ U(-pi/2, pi/2), W ~ Exp(1)
/// X = sin(alpha V) / cos(V)^(1/alpha) * (cos((1 - alpha) V) / W)^((1 - alpha)/alpha)
/// ```
///
/// (`X = tan V` for `alpha = 1`), scaled by `gamma^(1/alpha)`. For `alpha = 2`
/// the result is Gaussian with variance `2 gamma`.
pub fn sample_alpha_stable<R: Rng + ?Sized>(alpha: f64, gamma: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let v = PI * u - FRAC_PI_2;
    let w: f64 = rng.sample(Exp1);
    let x = if alpha == 1.0 {
        v.tan()
    } else {
        let cos_v = v.cos();
        (alpha * v).sin() / cos_v.powf(1.0 / alpha)
            * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
    };
    gamma.powf(1.0 / alpha) * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Sparse,
    Dispersive,
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Sparse => "sparse",
            SystemKind::Dispersive => "dispersive",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sparse" => Ok(SystemKind::Sparse),
            "dispersive" => Ok(SystemKind::Dispersive),
            other => Err(Error::Parse(format!("unknown system kind {other:?}"))),
        }
    }
}

/// Unknown impulse response `w_o`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    taps: Vec<f64>,
    kind: SystemKind,
}

impl SystemModel {
    pub fn new(taps: Vec<f64>, kind: SystemKind) -> Result<Self> {
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("system has non-finite taps".into()));
        }
        if taps.iter().all(|&t| t == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(Self { taps, kind })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn sparseness(&self) -> f64 {
        sparseness(&self.taps).expect("system is nonzero by construction")
    }
}

/// `chi(w) = M / (M - sqrt M) * (1 - |w|_1 / (sqrt M |w|_2))`, clamped to
/// `[0, 1]` against rounding. 1 for a single active tap, 0 for a flat response.
pub fn sparseness(w: &[f64]) -> Result<f64> {
    let m = w.len() as f64;
    if w.len() < 2 {
        return Err(Error::InvalidParameter("sparseness needs at least two taps".into()));
    }
    let l1: f64 = w.iter().map(|x| x.abs()).sum();
    let l2 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let sm = m.sqrt();
    let chi = m / (m - sm) * (1.0 - l1 / (sm * l2));
    Ok(chi.clamp(0.0, 1.0))
}

/// Shape parameters for [`synth_system`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemShape {
    /// Number of nonzero taps of a sparse system.
    pub active_taps: usize,
    /// Bisection steps for the decay rate.
    pub max_iterations: usize,
}

impl Default for SystemShape {
    fn default() -> Self {
        Self {
            active_taps: DEFAULT_ACTIVE_TAPS,
            max_iterations: 100,
        }
    }
}

/// Synthetic unit-norm system with sparseness within [`CHI_TOLERANCE`] of
/// `target_chi`.
///
/// Sparse systems put geometrically decaying magnitudes with random signs on
/// `active_taps` random positions; dispersive systems are dense Gaussian
/// responses under an exponential envelope. The decay rate is bisected until
/// the sparseness matches. All random draws happen before tuning, so the
/// result depends only on the rng state.
pub fn synth_system<R: Rng + ?Sized>(
    taps: usize,
    kind: SystemKind,
    target_chi: f64,
    shape: SystemShape,
    rng: &mut R,
) -> Result<SystemModel> {
    if taps < 2 {
        return Err(Error::InvalidParameter("system needs at least two taps".into()));
    }
    if !(0.0..=1.0).contains(&target_chi) {
        return Err(Error::InvalidParameter(format!(
            "target sparseness must lie in [0, 1], got {target_chi}"
        )));
    }

    let build: Box<dyn Fn(f64) -> Vec<f64>> = match kind {
        SystemKind::Sparse => {
            let active = shape.active_taps;
            if active == 0 || active > taps {
                return Err(Error::InvalidParameter(format!(
                    "active taps must lie in 1..={taps}, got {active}"
                )));
            }
            let mut positions = index::sample(rng, taps, active).into_vec();
            positions.sort_unstable();
            let signs: Vec<f64> = (0..active)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            Box::new(move |rate: f64| {
                let mut w = vec![0.0; taps];
                for (j, (&p, &s)) in positions.iter().zip(&signs).enumerate() {
                    w[p] = s * (-rate * j as f64).exp();
                }
                w
            })
        }
        SystemKind::Dispersive => {
            let g: Vec<f64> = (0..taps).map(|_| rng.sample(StandardNormal)).collect();
            Box::new(move |rate: f64| {
                g.iter()
                    .enumerate()
                    .map(|(m, &x)| x * (-rate * m as f64 / taps as f64).exp())
                    .collect()
            })
        }
    };
    let chi_at = |rate: f64| sparseness(&build(rate)).unwrap_or(0.0);

    // chi grows with the decay rate.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while chi_at(hi) < target_chi && hi < 1e4 {
        hi *= 2.0;
        iterations += 1;
    }
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..shape.max_iterations {
        let mid = 0.5 * (lo + hi);
        let chi = chi_at(mid);
        if (chi - target_chi).abs() < best.0 {
            best = ((chi - target_chi).abs(), mid);
        }
        if chi < target_chi {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    for rate in [lo, hi] {
        let chi = chi_at(rate);
        if (chi - target_chi).abs() < best.0 {
            best = ((chi - target_chi).abs(), rate);
        }
    }

    let mut w = build(best.1);
    let achieved = sparseness(&w)?;
    if (achieved - target_chi).abs() > CHI_TOLERANCE {
        return Err(Error::SparsenessTuning {
            target: target_chi,
            achieved,
            iterations,
        });
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut w {
        *x /= norm;
    }
    SystemModel::new(w, kind)
}

/// [`synth_system`] from a fresh ChaCha8 generator seeded with `seed`.
///
/// The harness builds its first system the same way from `system_seed`, so
/// this reproduces it.
pub fn synth_system_seeded(
    taps: usize,
    kind: SystemKind,
    target_chi: f64,
    shape: SystemShape,
    seed: u64,
) -> Result<SystemModel> {
    synth_system(taps, kind, target_chi, shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `d(n) = u(n)^T w_o + nu(n)`.
pub fn desired(regressor: &[f64], system: &SystemModel, noise: f64) -> f64 {
    assert_eq!(regressor.len(), system.len(), "regressor length mismatch");
    dot(regressor, system.taps()) + noise
}

/// Header `# system M=<m> chi=<chi>` followed by one tap per line.
pub fn format_system(system: &SystemModel) -> String {
    let mut s = format!("# system M={} chi={:.4}\n", system.len(), system.sparseness());
    for t in system.taps() {
        let _ = writeln!(s, "{t}");
    }
    s
}

/// Parses [`format_system`] output. The kind is inferred from the stored
/// sparseness (`chi >= 0.5` is sparse).
pub fn parse_system(text: &str) -> Result<SystemModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty system file".into()))?;
    let bad = || Error::Parse(format!("expected header `# system M=.. chi=..`, got {header:?}"));
    let rest = header
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|r| r.strip_prefix("system"))
        .ok_or_else(bad)?;
    let mut m = None;
    let mut chi = None;
    for field in rest.split_whitespace() {
        match field.split_once('=') {
            Some(("M", v)) => m = Some(v.parse::<usize>().map_err(|_| bad())?),
            Some(("chi", v)) => chi = Some(v.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    let (m, chi) = (m.ok_or_else(bad)?, chi.ok_or_else(bad)?);
    let taps = lines
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad tap {l:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if taps.len() != m {
        return Err(Error::Parse(format!(
            "header declares M={m} but file has {} taps",
            taps.len()
        )));
    }
    let kind = if chi >= 0.5 {
        SystemKind::Sparse
    } else {
        SystemKind::Dispersive
    };
    SystemModel::new(taps, kind)
}

pub fn write_system(path: &Path, system: &SystemModel) -> Result<()> {
    std::fs::write(path, format_system(system))?;
    Ok(())
}

pub fn read_system(path: &Path) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path)?;
    parse_system(&text).map_err(|e| Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })
}
