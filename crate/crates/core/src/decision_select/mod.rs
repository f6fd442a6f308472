//! Percentile-guaranteed decision selection by uniform sampling.
//!
//! Draw `N = min_samples(γ, ε)` decisions uniformly, keep the best. With
//! probability at least `γ`, the fraction of the decision space that strictly
//! beats the kept decision is at most `ε`.

pub mod tsp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_core::{min_samples, ConfidenceSpec};
use crate::seeding;
use rand_chacha::ChaCha8Rng;

/// A decision space with a uniform sampler and a reward to maximize.
///
/// The reward must attain its maximum on the space; that is a caller
/// obligation and is not checked.
pub trait DecisionDomain: Sync {
    type Decision: Clone + Send + Sync;

    /// One uniform draw. Each call receives its own stream, derived from the
    /// campaign seed and the draw index.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Self::Decision>;

    fn reward(&self, decision: &Self::Decision) -> Result<f64>;

    fn descriptor(&self) -> String;
}

/// Outcome of [`good_decision`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport<D> {
    pub descriptor: String,
    pub best_decision: D,
    pub best_reward: f64,
    /// Draw index of the best decision (ties go to the earliest draw).
    pub best_index: usize,
    pub samples_used: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub seed: u64,
}

/// Draw `n` decisions with per-index streams and evaluate them. Output order is
/// the draw order regardless of scheduling.
pub fn evaluate_draws<D: DecisionDomain>(
    domain: &D,
    n: usize,
    seed: u64,
) -> Result<Vec<(D::Decision, f64)>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeding::stream(seed, i as u64);
            let d = domain.sample(&mut rng)?;
            let r = domain.reward(&d)?;
            if !r.is_finite() {
                return Err(Error::invalid(format!(
                    "reward of draw {i} is not finite ({r})"
                )));
            }
            Ok((d, r))
        })
        .collect()
}

/// Index of the largest reward; earliest index on ties.
pub fn argmax_first(rewards: impl IntoIterator<Item = f64>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rewards.into_iter().enumerate() {
        match best {
            Some((_, b)) if r <= b => {}
            _ => best = Some((i, r)),
        }
    }
    best
}

/// Select a decision that is in the `100(1-ε)`-th percentile of `domain` with
/// probability at least `γ`.
pub fn good_decision<D: DecisionDomain>(
    domain: &D,
    spec: ConfidenceSpec,
    seed: u64,
) -> Result<SelectionReport<D::Decision>> {
    let n = min_samples(spec)? as usize;
    select_from(domain, n, spec, seed)
}

/// [`good_decision`] with an explicit sample count (for overriding the
/// minimum, e.g. single-candidate dry runs).
pub fn select_from<D: DecisionDomain>(
    domain: &D,
    n: usize,
    spec: ConfidenceSpec,
    seed: u64,
) -> Result<SelectionReport<D::Decision>> {
    if n == 0 {
        return Err(Error::invalid("at least one decision must be sampled"));
    }
    let mut draws = evaluate_draws(domain, n, seed)?;
    let (best_index, best_reward) =
        argmax_first(draws.iter().map(|(_, r)| *r)).expect("n >= 1 draws");
    let best_decision = draws.swap_remove(best_index).0;
    Ok(SelectionReport {
        descriptor: domain.descriptor(),
        best_decision,
        best_reward,
        best_index,
        samples_used: n,
        epsilon: spec.epsilon,
        gamma: spec.gamma,
        seed,
    })
}

/// Monte-Carlo estimate of the volume fraction of strictly better decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub fraction: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Fraction of `trials` fresh uniform draws whose reward strictly exceeds the
/// reward of `decision`, with its binomial standard error.
pub fn violation_volume_estimate<D: DecisionDomain>(
    domain: &D,
    decision: &D::Decision,
    trials: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let reference = domain.reward(decision)?;
    let draws = evaluate_draws(domain, trials, seed)?;
    let better = draws.iter().filter(|(_, r)| *r > reference).count();
    let p = better as f64 / trials as f64;
    Ok(VolumeEstimate {
        fraction: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}
