//! Frequency validation: repeat a bounding campaign on a distribution with a
//! known reference value and count how often the bound covers it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{truth, Distribution, Truth, TRUTH_DRAWS};
use crate::g_entropic::{bound_cvar, bound_evar, SearchConfig};
use crate::risk_core::{var_bound_confidence, EssentialBound};
use crate::seeding;

fn default_truth_draws() -> usize {
    TRUTH_DRAWS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    pub distribution: Distribution,
    pub trials: usize,
    pub n: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default = "default_truth_draws")]
    pub truth_draws: usize,
    #[serde(default)]
    pub search: SearchConfig,
}

impl ValidationConfig {
    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        if self.trials == 0 || self.n == 0 || self.truth_draws == 0 {
            return Err(Error::invalid("trials, n and truth_draws must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        self.search.validate()
    }
}

/// One line of the coverage CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub trial: usize,
    pub bound: f64,
    pub truth: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub truth: Truth,
    /// Per-campaign confidence `1 - (1-ε)^N`.
    pub confidence: f64,
    pub cvar_covered: usize,
    pub evar_covered: usize,
    pub cvar_rows: Vec<ValidationRow>,
    pub evar_rows: Vec<ValidationRow>,
}

pub fn run_validation(cfg: &ValidationConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let truth = truth(&cfg.distribution, cfg.alpha, cfg.truth_draws, cfg.seed)?;
    let ell = EssentialBound::new(cfg.distribution.upper())?;
    let rows: Vec<(ValidationRow, ValidationRow)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seeding::stream(cfg.seed, trial as u64);
            let samples = cfg.distribution.sample_set(cfg.n, &mut rng)?;
            let c = bound_cvar(&samples, ell, cfg.alpha, cfg.epsilon, &cfg.search)?.bound;
            let e = bound_evar(&samples, ell, cfg.alpha, cfg.epsilon, &cfg.search)?.bound;
            Ok((
                ValidationRow {
                    trial,
                    bound: c,
                    truth: truth.cvar,
                    covered: c >= truth.cvar,
                },
                ValidationRow {
                    trial,
                    bound: e,
                    truth: truth.evar,
                    covered: e >= truth.evar,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (cvar_rows, evar_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(ValidationReport {
        truth,
        confidence: var_bound_confidence(cfg.n as u64, cfg.epsilon)?,
        cvar_covered: cvar_rows.iter().filter(|r| r.covered).count(),
        evar_covered: evar_rows.iter().filter(|r| r.covered).count(),
        cvar_rows,
        evar_rows,
    })
}
