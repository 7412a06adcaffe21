//! A complete subband adaptive filter: SAF state plus criterion, penalty and
//! parameter rules, advanced one decimated iteration at a time.

use crate::aop::{RhoState, SubbandStats};
use crate::error::Result;
use crate::saf::{RobustCriterion, SafState, SparsityPenalty};

/// How the per-band step-sizes are chosen.
#[derive(Debug, Clone)]
pub enum StepRule {
    Fixed(f64),
    /// Variable step-sizes from noise/error power estimates.
    Adaptive(SubbandStats),
}

/// How the penalty weight is chosen.
#[derive(Debug, Clone)]
pub enum RhoRule {
    /// No zero attraction.
    Zero,
    Fixed(f64),
    Adaptive(RhoState),
}

#[derive(Debug)]
pub struct SubbandAdaptiveFilter {
    state: SafState,
    criterion: Box<dyn RobustCriterion>,
    penalty: Box<dyn SparsityPenalty>,
    steps: StepRule,
    rho: RhoRule,
    errors: Vec<f64>,
    scalings: Vec<f64>,
    mus: Vec<f64>,
    direction: Vec<f64>,
    last_rho: f64,
}

impl SubbandAdaptiveFilter {
    pub fn new(
        state: SafState,
        criterion: Box<dyn RobustCriterion>,
        penalty: Box<dyn SparsityPenalty>,
        steps: StepRule,
        rho: RhoRule,
    ) -> Self {
        let (n, m) = (state.bands(), state.taps());
        Self {
            state,
            criterion,
            penalty,
            steps,
            rho,
            errors: vec![0.0; n],
            scalings: vec![1.0; n],
            mus: vec![1.0; n],
            direction: vec![0.0; m],
            last_rho: 0.0,
        }
    }

    pub fn state(&self) -> &SafState {
        &self.state
    }

    pub fn weights(&self) -> &[f64] {
        self.state.weights()
    }

    /// Feeds one full-rate analysis output per band.
    pub fn push_band_samples(&mut self, samples: &[f64]) {
        self.state.push_band_samples(samples);
    }

    /// Subband errors of the last iteration.
    pub fn errors(&self) -> &[f64] {
        &self.errors
    }

    pub fn scalings(&self) -> &[f64] {
        &self.scalings
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.mus
    }

    pub fn rho(&self) -> f64 {
        self.last_rho
    }

    pub fn stats(&self) -> Option<&SubbandStats> {
        match &self.steps {
            StepRule::Adaptive(s) => Some(s),
            StepRule::Fixed(_) => None,
        }
    }

    /// One decimated iteration given `d_i(kN)` for every band.
    pub fn adapt(&mut self, desired: &[f64]) -> Result<()> {
        let k = self.state.iteration();
        self.state.subband_errors(desired, &mut self.errors);

        for (i, &e) in self.errors.iter().enumerate() {
            self.criterion.observe(i, e);
            self.scalings[i] = self.criterion.scaling(i, e);
        }

        match &mut self.steps {
            StepRule::Fixed(mu) => self.mus.fill(*mu),
            StepRule::Adaptive(stats) => {
                for i in 0..self.errors.len() {
                    self.mus[i] = stats.update(i, self.scalings[i], self.errors[i], self.state.regressor(i));
                }
            }
        }

        self.state.coarse_update(&self.errors, &self.scalings, &self.mus);

        let rho = match &mut self.rho {
            RhoRule::Zero => 0.0,
            RhoRule::Fixed(_) if self.penalty.is_null() => 0.0,
            RhoRule::Fixed(r) => {
                self.state.penalty_direction(self.penalty.as_ref(), &mut self.direction);
                *r
            }
            RhoRule::Adaptive(rs) => {
                self.state.penalty_direction(self.penalty.as_ref(), &mut self.direction);
                rs.update(k, self.state.psi(), self.state.weights(), &self.direction)
            }
        };
        self.last_rho = rho;
        self.state.zero_attract_update(&self.direction, rho)
    }
}
