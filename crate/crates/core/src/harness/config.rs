use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::aop::{DEFAULT_EPS1, DEFAULT_EPS2, DEFAULT_KAPPA};
use crate::error::{Error, Result};
use crate::saf::DEFAULT_DELTA_REG;
use crate::scenario::{NoiseModel, SystemKind, DEFAULT_ACTIVE_TAPS};

/// Algorithm presets built from the same pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Least-squares criterion, fixed step, no penalty.
    Nsaf,
    /// Modified Huber criterion, fixed step, no penalty.
    Rnsaf,
    /// Modified Huber, fixed step, log penalty with fixed weight.
    SaRnsaf,
    /// Modified Huber with variable step-sizes, no penalty.
    AopRnsaf,
    /// Least squares, variable step-sizes, log penalty with adaptive weight.
    AopSaNsaf,
    /// Modified Huber, variable step-sizes, log penalty with adaptive weight.
    AopSaRnsaf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Nsaf,
        Algorithm::Rnsaf,
        Algorithm::SaRnsaf,
        Algorithm::AopRnsaf,
        Algorithm::AopSaNsaf,
        Algorithm::AopSaRnsaf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsaf => "nsaf",
            Algorithm::Rnsaf => "rnsaf",
            Algorithm::SaRnsaf => "sa-rnsaf",
            Algorithm::AopRnsaf => "aop-rnsaf",
            Algorithm::AopSaNsaf => "aop-sa-nsaf",
            Algorithm::AopSaRnsaf => "aop-sa-rnsaf",
        }
    }

    pub fn robust(self) -> bool {
        !matches!(self, Algorithm::Nsaf | Algorithm::AopSaNsaf)
    }

    pub fn adaptive_steps(self) -> bool {
        matches!(self, Algorithm::AopRnsaf | Algorithm::AopSaNsaf | Algorithm::AopSaRnsaf)
    }

    pub fn sparsity_aware(self) -> bool {
        matches!(self, Algorithm::SaRnsaf | Algorithm::AopSaNsaf | Algorithm::AopSaRnsaf)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| Error::Parse(format!("unknown algorithm {s:?}")))
    }
}

/// Where an unknown system comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    Synthetic { kind: SystemKind, chi: f64 },
    File(PathBuf),
}

/// Everything needed to reproduce an experiment.
///
/// Parsed from `key = value` lines (see [`ExperimentConfig::parse`]); every
/// field has a default, so an empty file is a valid config.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub taps: usize,
    pub bands: usize,
    pub prototype_len: usize,
    pub attenuation_db: f64,
    pub prototype_file: Option<PathBuf>,
    pub total_samples: usize,
    pub runs: usize,
    pub algorithm: Algorithm,
    pub theta: f64,
    pub lambda: f64,
    pub window: usize,
    pub kappa: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta_reg: f64,
    pub mu: f64,
    pub rho: f64,
    pub noise: NoiseModel,
    pub input_pole: f64,
    pub system: SystemSource,
    pub switch_system: SystemSource,
    /// Full-rate sample at which the unknown system is replaced;
    /// `total_samples` disables the switch.
    pub switch_at: usize,
    pub active_taps: usize,
    pub seed: u64,
    /// Seed for synthesizing the unknown systems, shared by all runs.
    pub system_seed: u64,
    pub nmsd_stride: usize,
    pub fullband_error: bool,
    pub parallel: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            taps: 512,
            bands: 4,
            prototype_len: 33,
            attenuation_db: 60.0,
            prototype_file: None,
            total_samples: 160_000,
            runs: 50,
            algorithm: Algorithm::AopSaRnsaf,
            theta: 0.005,
            lambda: 0.99,
            window: 20,
            kappa: DEFAULT_KAPPA,
            eps1: DEFAULT_EPS1,
            eps2: DEFAULT_EPS2,
            delta_reg: DEFAULT_DELTA_REG,
            mu: 1.0,
            rho: 1e-6,
            noise: NoiseModel::AlphaStable {
                alpha: 1.6,
                gamma: 0.02,
            },
            input_pole: 0.9,
            system: SystemSource::Synthetic {
                kind: SystemKind::Sparse,
                chi: 0.9357,
            },
            switch_system: SystemSource::Synthetic {
                kind: SystemKind::Dispersive,
                chi: 0.3663,
            },
            switch_at: 80_000,
            active_taps: DEFAULT_ACTIVE_TAPS,
            seed: 1,
            system_seed: 2022,
            nmsd_stride: 1,
            fullband_error: false,
            parallel: true,
        }
    }
}

/// Recognized configuration keys.
pub const CONFIG_KEYS: &[&str] = &[
    "taps",
    "bands",
    "prototype_len",
    "attenuation_db",
    "prototype_file",
    "total_samples",
    "runs",
    "algorithm",
    "theta",
    "lambda",
    "window",
    "kappa",
    "eps1",
    "eps2",
    "delta_reg",
    "mu",
    "rho",
    "noise",
    "alpha",
    "gamma",
    "noise_variance",
    "input_pole",
    "system_kind",
    "system_chi",
    "system_file",
    "switch_kind",
    "switch_chi",
    "switch_file",
    "switch_at",
    "active_taps",
    "seed",
    "system_seed",
    "nmsd_stride",
    "fullband_error",
    "parallel",
];

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("invalid value {value:?} for {key}")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; unknown keys are errors. Relative file paths are kept as
    /// written.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let wrap = |e: Error| Error::Config {
                line: idx + 1,
                message: match e {
                    Error::Parse(m) | Error::InvalidParameter(m) => m,
                    other => other.to_string(),
                },
            };
            let (key, value) = line.split_once('=').ok_or_else(|| {
                wrap(Error::Parse(format!("expected `key = value`, got {line:?}")))
            })?;
            cfg.set(key.trim(), value.trim()).map_err(wrap)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative `*_file` paths resolve against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.prototype_file.as_mut() {
            resolve(p);
        }
        for src in [&mut cfg.system, &mut cfg.switch_system] {
            if let SystemSource::File(p) = src {
                resolve(p);
            }
        }
        Ok(cfg)
    }

    /// Applies a single `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "taps" => self.taps = num(key, value)?,
            "bands" => self.bands = num(key, value)?,
            "prototype_len" => self.prototype_len = num(key, value)?,
            "attenuation_db" => self.attenuation_db = num(key, value)?,
            "prototype_file" => self.prototype_file = Some(PathBuf::from(value)),
            "total_samples" => self.total_samples = num(key, value)?,
            "runs" => self.runs = num(key, value)?,
            "algorithm" => self.algorithm = value.parse()?,
            "theta" => self.theta = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "window" => self.window = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "eps1" => self.eps1 = num(key, value)?,
            "eps2" => self.eps2 = num(key, value)?,
            "delta_reg" => self.delta_reg = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "rho" => self.rho = num(key, value)?,
            "noise" => {
                self.noise = match value {
                    "none" => NoiseModel::Silent,
                    "gaussian" => NoiseModel::Gaussian { variance: 0.04 },
                    "alpha-stable" => NoiseModel::AlphaStable {
                        alpha: 1.6,
                        gamma: 0.02,
                    },
                    _ => return Err(Error::Parse(format!("unknown noise model {value:?}"))),
                }
            }
            "alpha" => self.set_alpha_stable(Some(num(key, value)?), None),
            "gamma" => self.set_alpha_stable(None, Some(num(key, value)?)),
            "noise_variance" => {
                self.noise = NoiseModel::Gaussian {
                    variance: num(key, value)?,
                }
            }
            "input_pole" => self.input_pole = num(key, value)?,
            "system_kind" => set_kind(&mut self.system, value.parse()?, 0.9357),
            "system_chi" => set_chi(&mut self.system, num(key, value)?, SystemKind::Sparse),
            "system_file" => self.system = SystemSource::File(PathBuf::from(value)),
            "switch_kind" => set_kind(&mut self.switch_system, value.parse()?, 0.3663),
            "switch_chi" => set_chi(&mut self.switch_system, num(key, value)?, SystemKind::Dispersive),
            "switch_file" => self.switch_system = SystemSource::File(PathBuf::from(value)),
            "switch_at" => {
                self.switch_at = if value == "none" {
                    usize::MAX
                } else {
                    num(key, value)?
                }
            }
            "active_taps" => self.active_taps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "system_seed" => self.system_seed = num(key, value)?,
            "nmsd_stride" => self.nmsd_stride = num(key, value)?,
            "fullband_error" => self.fullband_error = boolean(key, value)?,
            "parallel" => self.parallel = boolean(key, value)?,
            _ => return Err(Error::Parse(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    fn set_alpha_stable(&mut self, alpha: Option<f64>, gamma: Option<f64>) {
        let (a0, g0) = match self.noise {
            NoiseModel::AlphaStable { alpha, gamma } => (alpha, gamma),
            _ => (1.6, 0.02),
        };
        self.noise = NoiseModel::AlphaStable {
            alpha: alpha.unwrap_or(a0),
            gamma: gamma.unwrap_or(g0),
        };
    }

    /// Index of the first sample generated by the switched system, if any.
    pub fn switch_sample(&self) -> Option<usize> {
        (self.switch_at < self.total_samples).then_some(self.switch_at)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.taps < 2 {
            return bad(format!("taps must be >= 2, got {}", self.taps));
        }
        if self.bands == 0 {
            return bad("bands must be >= 1".into());
        }
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if self.total_samples < self.bands {
            return bad("total_samples must cover at least one decimated iteration".into());
        }
        if self.switch_at != usize::MAX && self.switch_at > self.total_samples {
            return bad(format!(
                "switch_at {} lies beyond total_samples {}",
                self.switch_at, self.total_samples
            ));
        }
        if self.nmsd_stride == 0 {
            return bad("nmsd_stride must be >= 1".into());
        }
        if !(self.mu > 0.0 && self.mu <= 2.0) {
            return bad(format!("mu must lie in (0, 2], got {}", self.mu));
        }
        if !(self.rho >= 0.0) {
            return bad(format!("rho must be non-negative, got {}", self.rho));
        }
        for (name, v) in [("theta", self.theta), ("attenuation_db", self.attenuation_db)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("delta_reg", self.delta_reg)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self.kappa < 1.0 {
            return bad(format!("kappa must be >= 1, got {}", self.kappa));
        }
        if !(0.0..1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1), got {}", self.lambda));
        }
        if self.window < 2 {
            return bad("window must be >= 2".into());
        }
        if !(self.input_pole.abs() < 1.0) {
            return bad(format!("input_pole must satisfy |a| < 1, got {}", self.input_pole));
        }
        self.noise.validate()
    }
}

fn set_kind(src: &mut SystemSource, kind: SystemKind, default_chi: f64) {
    let chi = match src {
        SystemSource::Synthetic { chi, .. } => *chi,
        SystemSource::File(_) => default_chi,
    };
    *src = SystemSource::Synthetic { kind, chi };
}

fn set_chi(src: &mut SystemSource, chi: f64, default_kind: SystemKind) {
    let kind = match src {
        SystemSource::Synthetic { kind, .. } => *kind,
        SystemSource::File(_) => default_kind,
    };
    *src = SystemSource::Synthetic { kind, chi };
}
