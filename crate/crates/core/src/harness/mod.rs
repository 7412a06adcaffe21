//! Monte-Carlo system-identification experiments.
//!
//! Each trial streams an AR(1) input through the unknown system, adds noise,
//! splits input and desired signal into subbands and adapts one filter,
//! recording the NMSD after every `nmsd_stride`-th decimated iteration at
//! full-rate index `n = kN`. Experiments average the linear NMSD of
//! independently seeded trials before converting to dB.

mod config;
mod curve;

pub use config::{Algorithm, ExperimentConfig, SystemSource, CONFIG_KEYS};
pub use curve::{
    nmsd, nmsd_ratio, ratio_to_db, LearningCurve, ERROR_DECIMALS, NMSD_DECIMALS, NMSD_FLOOR_DB,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aop::{RhoState, SubbandStats};
use crate::error::{Error, Result};
use crate::filterbank::{design_prototype, modulate, read_prototype, AnalysisBank};
use crate::history::{dot, SampleHistory};
use crate::pipeline::{RhoRule, StepRule, SubbandAdaptiveFilter};
use crate::saf::{
    LeastSquares, LogPenalty, MhCriterion, NullPenalty, RobustCriterion, SafState, SparsityPenalty,
};
use crate::scenario::{
    read_system, synth_system, InputModel, SystemModel, SystemShape,
};

/// Raw per-trial output before dB conversion.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub samples: Vec<usize>,
    /// Linear NMSD ratios.
    pub ratios: Vec<f64>,
    pub e_fullband: Option<Vec<f64>>,
}

impl TrialRecord {
    pub fn to_curve(&self) -> LearningCurve {
        LearningCurve {
            samples: self.samples.clone(),
            nmsd_db: self.ratios.iter().map(|&r| ratio_to_db(r)).collect(),
            e_fullband: self.e_fullband.clone(),
            runs: 1,
        }
        .quantized()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialFailure {
    pub trial: usize,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub curve: LearningCurve,
    /// Trials that diverged and were left out of the average.
    pub diverged: Vec<TrialFailure>,
}

/// Seed of trial `trial` under master seed `master` (SplitMix64 step).
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut z = master.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Prepared experiment: analysis bank and unknown systems are built once and
/// shared by all trials.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    bank: AnalysisBank,
    system: SystemModel,
    switched: Option<SystemModel>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let bank = match &config.prototype_file {
            Some(path) => {
                let (proto, bands) = read_prototype(path)?;
                if bands != config.bands {
                    return Err(Error::InvalidParameter(format!(
                        "prototype file is for N={bands}, config has bands = {}",
                        config.bands
                    )));
                }
                modulate(&proto, bands)
            }
            None => modulate(
                &design_prototype(config.bands, config.prototype_len, config.attenuation_db)?,
                config.bands,
            ),
        };

        let mut rng = ChaCha8Rng::seed_from_u64(config.system_seed);
        let shape = SystemShape {
            active_taps: config.active_taps,
            ..SystemShape::default()
        };
        let mut build = |src: &SystemSource| -> Result<SystemModel> {
            let sys = match src {
                SystemSource::Synthetic { kind, chi } => {
                    synth_system(config.taps, *kind, *chi, shape, &mut rng)?
                }
                SystemSource::File(path) => read_system(path)?,
            };
            if sys.len() != config.taps {
                return Err(Error::InvalidParameter(format!(
                    "system has {} taps, config has taps = {}",
                    sys.len(),
                    config.taps
                )));
            }
            Ok(sys)
        };
        let system = build(&config.system)?;
        let switched = match config.switch_sample() {
            Some(_) => Some(build(&config.switch_system)?),
            None => None,
        };
        Ok(Self {
            config,
            bank,
            system,
            switched,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn bank(&self) -> &AnalysisBank {
        &self.bank
    }

    pub fn system(&self) -> &SystemModel {
        &self.system
    }

    pub fn switched_system(&self) -> Option<&SystemModel> {
        self.switched.as_ref()
    }

    /// Fresh adaptive filter configured for the selected algorithm.
    pub fn build_filter(&self) -> Result<SubbandAdaptiveFilter> {
        let c = &self.config;
        let state = SafState::new(c.taps, c.bands, c.delta_reg)?;
        let criterion: Box<dyn RobustCriterion> = if c.algorithm.robust() {
            Box::new(MhCriterion::new(c.bands, c.lambda, c.window)?)
        } else {
            Box::new(LeastSquares)
        };
        let penalty: Box<dyn SparsityPenalty> = if c.algorithm.sparsity_aware() {
            Box::new(LogPenalty::new(c.theta)?)
        } else {
            Box::new(NullPenalty)
        };
        let steps = if c.algorithm.adaptive_steps() {
            StepRule::Adaptive(SubbandStats::new(c.bands, c.taps, c.kappa, c.eps1, c.eps2)?)
        } else {
            StepRule::Fixed(c.mu)
        };
        let rho = match c.algorithm {
            Algorithm::SaRnsaf => RhoRule::Fixed(c.rho),
            Algorithm::AopSaNsaf | Algorithm::AopSaRnsaf => RhoRule::Adaptive(RhoState::new(c.eps1)),
            _ => RhoRule::Zero,
        };
        Ok(SubbandAdaptiveFilter::new(state, criterion, penalty, steps, rho))
    }

    /// Runs one trial, calling `inspect` after every decimated iteration.
    pub fn run_trial_with<F>(&self, seed: u64, mut inspect: F) -> Result<TrialRecord>
    where
        F: FnMut(usize, &SubbandAdaptiveFilter),
    {
        let c = &self.config;
        let n_bands = c.bands;
        let input = InputModel::ar1(c.input_pole)?;
        let mut input_rng = ChaCha8Rng::seed_from_u64(seed);
        input_rng.set_stream(1);
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(2);

        let mut source = input.source();
        let mut fullband = SampleHistory::new(c.taps);
        let mut u_analyzer = self.bank.analyzer();
        let mut d_analyzer = self.bank.analyzer();
        let mut filter = self.build_filter()?;

        let mut u_bands = vec![0.0; n_bands];
        let mut d_bands = vec![0.0; n_bands];
        let iterations = c.total_samples.div_ceil(n_bands);
        let reported = iterations.div_ceil(c.nmsd_stride);
        let mut record = TrialRecord {
            samples: Vec::with_capacity(reported),
            ratios: Vec::with_capacity(reported),
            e_fullband: c.fullband_error.then(|| Vec::with_capacity(reported)),
        };

        let mut system = &self.system;
        for n in 0..c.total_samples {
            if Some(n) == c.switch_sample() {
                system = self.switched.as_ref().expect("switched system is built when enabled");
            }
            let u = source.next(&mut input_rng);
            fullband.push(u);
            let d = dot(fullband.window(), system.taps()) + c.noise.sample(&mut noise_rng);

            u_analyzer.push(u, &mut u_bands);
            filter.push_band_samples(&u_bands);
            d_analyzer.push(d, &mut d_bands);

            if n % n_bands != 0 {
                continue;
            }
            let k = n / n_bands;
            let e_full = d - dot(fullband.window(), filter.weights());
            filter.adapt(&d_bands)?;
            inspect(k, &filter);
            if k.is_multiple_of(c.nmsd_stride) {
                record.samples.push(n);
                let ratio = nmsd_ratio(filter.weights(), system.taps())?;
                // Finite weights can still be large enough to overflow the deviation.
                if !ratio.is_finite() {
                    return Err(Error::Divergence { iteration: k });
                }
                record.ratios.push(ratio);
                if let Some(e) = record.e_fullband.as_mut() {
                    e.push(e_full);
                }
            }
        }
        Ok(record)
    }

    pub fn run_trial_record(&self, seed: u64) -> Result<TrialRecord> {
        self.run_trial_with(seed, |_, _| {})
    }

    /// Single-trial learning curve.
    pub fn run_trial(&self, seed: u64) -> Result<LearningCurve> {
        self.run_trial_record(seed).map(|r| r.to_curve())
    }

    /// All `runs` trials, with per-trial seeds derived from the master seed.
    /// Serial and parallel execution produce identical results.
    pub fn run(&self) -> Result<ExperimentOutcome> {
        let c = &self.config;
        let one = |t: usize| {
            // A single run uses the master seed itself, matching `run_trial`.
            let seed = if c.runs == 1 { c.seed } else { trial_seed(c.seed, t) };
            self.run_trial_record(seed)
        };
        let results: Vec<Result<TrialRecord>> = if c.parallel {
            (0..c.runs).into_par_iter().map(one).collect()
        } else {
            (0..c.runs).map(one).collect()
        };

        let mut diverged = Vec::new();
        let mut ok = Vec::with_capacity(c.runs);
        for (trial, r) in results.into_iter().enumerate() {
            match r {
                Ok(rec) => ok.push(rec),
                Err(Error::Divergence { iteration }) => diverged.push(TrialFailure { trial, iteration }),
                Err(e) => return Err(e),
            }
        }
        if ok.is_empty() {
            return Err(Error::AllTrialsDiverged { runs: c.runs });
        }
        let curve = if c.runs == 1 { ok[0].to_curve() } else { average(&ok) };
        Ok(ExperimentOutcome { curve, diverged })
    }
}

/// Mean linear NMSD (and mean squared fullband error) of `records`, in dB.
/// `records` must be non-empty and of equal length.
pub fn average(records: &[TrialRecord]) -> LearningCurve {
    let first = records.first().expect("at least one trial record");
    let count = records.len() as f64;
    let mut ratios = vec![0.0; first.ratios.len()];
    let mut e_ms = first.e_fullband.as_ref().map(|e| vec![0.0; e.len()]);
    for rec in records {
        assert_eq!(rec.ratios.len(), ratios.len(), "trial lengths differ");
        for (acc, r) in ratios.iter_mut().zip(&rec.ratios) {
            *acc += r;
        }
        if let (Some(acc), Some(e)) = (e_ms.as_mut(), rec.e_fullband.as_ref()) {
            for (a, x) in acc.iter_mut().zip(e) {
                *a += x * x;
            }
        }
    }
    LearningCurve {
        samples: first.samples.clone(),
        nmsd_db: ratios.iter().map(|s| ratio_to_db(s / count)).collect(),
        e_fullband: e_ms.map(|v| v.into_iter().map(|s| s / count).collect()),
        runs: records.len(),
    }
    .quantized()
}

/// One trial of `config` with the given seed.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<LearningCurve> {
    Experiment::new(config.clone())?.run_trial(seed)
}

/// Averaged experiment over `config.runs` trials.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    Experiment::new(config.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::NoiseModel;

    fn small(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            taps: 32,
            bands: 2,
            prototype_len: 16,
            attenuation_db: 30.0,
            total_samples: 4000,
            switch_at: 2000,
            runs: 3,
            active_taps: 4,
            algorithm,
            system: SystemSource::Synthetic {
                kind: crate::scenario::SystemKind::Sparse,
                chi: 0.85,
            },
            switch_system: SystemSource::Synthetic {
                kind: crate::scenario::SystemKind::Dispersive,
                chi: 0.35,
            },
            noise: NoiseModel::Gaussian { variance: 1e-3 },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn reported_samples_are_multiples_of_band_count() {
        let mut cfg = small(Algorithm::Nsaf);
        cfg.nmsd_stride = 3;
        let curve = run_trial(&cfg, 1).unwrap();
        for (j, &n) in curve.samples.iter().enumerate() {
            assert_eq!(n, 3 * j * cfg.bands);
        }
        assert_eq!(curve.samples.len(), (4000 / 2usize).div_ceil(3));
    }

    #[test]
    fn single_run_experiment_equals_trial() {
        let mut cfg = small(Algorithm::AopSaRnsaf);
        cfg.runs = 1;
        cfg.seed = 77;
        let trial = run_trial(&cfg, 77).unwrap();
        let exp = run_experiment(&cfg).unwrap();
        assert_eq!(exp.curve, trial);
        assert!(exp.diverged.is_empty());
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|t| trial_seed(1, t)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }

    #[test]
    fn every_algorithm_runs() {
        for a in Algorithm::ALL {
            let curve = run_trial(&small(a), 5).unwrap();
            assert!(curve.nmsd_db.iter().all(|v| v.is_finite()), "{a}");
        }
    }

    #[test]
    fn fullband_error_column() {
        let mut cfg = small(Algorithm::Nsaf);
        cfg.fullband_error = true;
        let curve = run_trial(&cfg, 2).unwrap();
        assert_eq!(curve.e_fullband.as_ref().unwrap().len(), curve.len());
        let exp = run_experiment(&cfg).unwrap();
        assert!(exp.curve.e_fullband.unwrap().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mismatched_system_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        let sys = SystemModel::new(vec![1.0, 0.0, 0.5], crate::scenario::SystemKind::Sparse).unwrap();
        crate::scenario::write_system(&path, &sys).unwrap();
        let mut cfg = small(Algorithm::Nsaf);
        cfg.system = SystemSource::File(path);
        assert!(matches!(Experiment::new(cfg), Err(Error::InvalidParameter(_))));
    }
}
