//! Risk-aware verification of the robot system and percentile-optimal
//! synthesis of its controller parameters.
//!
//! Verification bounds `CVaR_α(-R)` and `EVaR_α(-R)` where `R` is the
//! robustness of a rollout from a uniformly drawn scenario. Since robustness is
//! floored at `-0.1`, `-R <= 0.1` almost surely and `0.1` serves as the
//! essential bound. Synthesis draws controller parameters uniformly, evaluates
//! the CVaR bound (the riskmap) of each, and keeps the smallest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decision_select::{
    select_from, violation_volume_estimate, DecisionDomain, SelectionReport, VolumeEstimate,
};
use crate::error::{Error, Result};
use crate::g_entropic::{bound_cvar, bound_evar, BoundResult, SearchConfig};
use crate::risk_core::{
    min_samples, var_bound_confidence, ConfidenceSpec, EssentialBound, SampleSet,
};
use crate::seeding;
use crate::sim::{
    robustness, robustness::FLOOR, rollout, sample_scenario, ControllerParams, ParamSpace,
    ScenarioDraw, SimConfig,
};

/// Essential bound on negated robustness.
pub const NEG_ROBUSTNESS_BOUND: f64 = -FLOOR;

/// Robustness of one rollout, with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSample {
    pub value: f64,
    pub draw: ScenarioDraw,
    pub params: ControllerParams,
}

/// `n` rollouts under `params` from scenarios drawn with per-index streams of
/// `master_seed`.
pub fn collect_robustness(
    params: &ControllerParams,
    n: usize,
    master_seed: u64,
    sim: &SimConfig,
) -> Result<Vec<RobustnessSample>> {
    params.validate()?;
    sim.validate()?;
    if n == 0 {
        return Err(Error::invalid("at least one rollout is required"));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let wrap = |e| Error::Rollout {
                index: i,
                source: Box::new(e),
            };
            let mut rng = seeding::stream(master_seed, i as u64);
            let draw = sample_scenario(&mut rng).map_err(wrap)?;
            let traj = rollout(&draw, params, sim).map_err(wrap)?;
            let value = robustness(&traj).map_err(wrap)?;
            Ok(RobustnessSample {
                value,
                draw,
                params: *params,
            })
        })
        .collect()
}

/// Where robustness samples come from: the simulator, or a stand-in.
pub trait RobustnessSource: Sync {
    fn robustness(&self, params: &ControllerParams, n: usize, seed: u64) -> Result<SampleSet>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Simulator {
    pub sim: SimConfig,
}

impl RobustnessSource for Simulator {
    fn robustness(&self, params: &ControllerParams, n: usize, seed: u64) -> Result<SampleSet> {
        let samples = collect_robustness(params, n, seed, &self.sim)?;
        SampleSet::new(samples.into_iter().map(|s| s.value).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Upper bound on `CVaR_α(-R)`.
    pub r_cvar: f64,
    /// Upper bound on `EVaR_α(-R)`.
    pub r_evar: f64,
    pub n_used: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub ell: f64,
    pub confidence: f64,
    pub master_seed: u64,
    pub robustness_min: f64,
    pub robustness_mean: f64,
    pub robustness_max: f64,
    pub warning: Option<String>,
    pub cvar: BoundResult,
    pub evar: BoundResult,
}

/// Bound the risk of `-R` given robustness samples.
pub fn verify_values(
    robustness: &SampleSet,
    alpha: f64,
    spec: ConfidenceSpec,
    master_seed: u64,
    search: &SearchConfig,
) -> Result<VerificationReport> {
    spec.validate()?;
    let neg = robustness.negated();
    let ell = EssentialBound::new(NEG_ROBUSTNESS_BOUND)?;
    let cvar = bound_cvar(&neg, ell, alpha, spec.epsilon, search)?;
    let evar = bound_evar(&neg, ell, alpha, spec.epsilon, search)?;
    let warning = (spec.epsilon >= 1.0 - spec.gamma).then(|| {
        format!(
            "epsilon {} >= 1 - gamma {}: the bound is dominated by the essential bound",
            spec.epsilon,
            1.0 - spec.gamma
        )
    });
    Ok(VerificationReport {
        r_cvar: cvar.bound,
        r_evar: evar.bound,
        n_used: robustness.len(),
        epsilon: spec.epsilon,
        gamma: spec.gamma,
        alpha,
        ell: NEG_ROBUSTNESS_BOUND,
        confidence: var_bound_confidence(robustness.len() as u64, spec.epsilon)?,
        master_seed,
        robustness_min: robustness.min(),
        robustness_mean: robustness.mean(),
        robustness_max: robustness.max(),
        warning,
        cvar,
        evar,
    })
}

/// Draw `min_samples(γ, ε)` robustness values from `source` and bound their risk.
pub fn verify(
    source: &impl RobustnessSource,
    params: &ControllerParams,
    alpha: f64,
    spec: ConfidenceSpec,
    master_seed: u64,
    search: &SearchConfig,
) -> Result<VerificationReport> {
    let n = min_samples(spec)? as usize;
    let values = source.robustness(params, n, master_seed)?;
    verify_values(&values, alpha, spec, master_seed, search)
}

/// Settings behind a riskmap evaluation, shared by every candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskMapSettings {
    pub gamma1: f64,
    pub alpha: f64,
    pub epsilon_inner: f64,
    /// Defaults to `min_samples(gamma1, epsilon_inner)`.
    #[serde(default)]
    pub n_inner: Option<usize>,
}

impl Default for RiskMapSettings {
    fn default() -> Self {
        Self {
            gamma1: 0.95,
            alpha: 0.1,
            epsilon_inner: 0.02,
            n_inner: None,
        }
    }
}

impl RiskMapSettings {
    pub fn query(&self, params: ControllerParams) -> Result<RiskMapQuery> {
        let n_inner = match self.n_inner {
            Some(n) => n,
            None => min_samples(ConfidenceSpec::new(self.epsilon_inner, self.gamma1)?)? as usize,
        };
        let q = RiskMapQuery {
            params,
            gamma1: self.gamma1,
            alpha: self.alpha,
            n_inner,
        };
        q.validate(self.epsilon_inner)?;
        Ok(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMapQuery {
    pub params: ControllerParams,
    pub gamma1: f64,
    pub alpha: f64,
    pub n_inner: usize,
}

impl RiskMapQuery {
    /// `n_inner` draws must certify `epsilon_inner` at confidence `gamma1`.
    pub fn validate(&self, epsilon_inner: f64) -> Result<()> {
        self.params.validate()?;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie in (0,1], got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.gamma1) {
            return Err(Error::invalid(format!(
                "gamma1 must lie in [0,1), got {}",
                self.gamma1
            )));
        }
        if self.n_inner == 0 {
            return Err(Error::invalid("n_inner must be positive"));
        }
        let conf = var_bound_confidence(self.n_inner as u64, epsilon_inner)?;
        if conf < self.gamma1 {
            return Err(Error::invalid(format!(
                "n_inner = {} gives confidence {conf} < gamma1 = {} at epsilon_inner = {epsilon_inner}",
                self.n_inner, self.gamma1
            )));
        }
        Ok(())
    }
}

/// Upper bound on `CVaR_α(-R_p)` from `n_inner` robustness draws seeded by
/// `master_seed`.
pub fn riskmap(
    source: &impl RobustnessSource,
    query: &RiskMapQuery,
    epsilon_inner: f64,
    master_seed: u64,
    search: &SearchConfig,
) -> Result<f64> {
    Ok(riskmap_bound(source, query, epsilon_inner, master_seed, search)?.bound)
}

/// [`riskmap`] with the optimizer diagnostics.
pub fn riskmap_bound(
    source: &impl RobustnessSource,
    query: &RiskMapQuery,
    epsilon_inner: f64,
    master_seed: u64,
    search: &SearchConfig,
) -> Result<BoundResult> {
    query.validate(epsilon_inner)?;
    let values = source.robustness(&query.params, query.n_inner, master_seed)?;
    let ell = EssentialBound::new(NEG_ROBUSTNESS_BOUND)?;
    bound_cvar(&values.negated(), ell, query.alpha, epsilon_inner, search)
}

/// Certified lower bound on expected robustness in the worst `100α%` of
/// cases, given a riskmap value.
pub fn expected_shortfall_interpretation(bound: f64) -> f64 {
    -bound
}

/// A scalar objective over controller parameters, evaluated with a seed.
pub trait RiskMap: Sync {
    fn evaluate(&self, params: &ControllerParams, seed: u64) -> Result<f64>;
    fn descriptor(&self) -> String;
}

/// The riskmap of a robustness source.
#[derive(Debug, Clone)]
pub struct SourceRiskMap<S> {
    pub source: S,
    pub settings: RiskMapSettings,
    pub search: SearchConfig,
}

impl<S: RobustnessSource> RiskMap for SourceRiskMap<S> {
    fn evaluate(&self, params: &ControllerParams, seed: u64) -> Result<f64> {
        let q = self.settings.query(*params)?;
        riskmap(
            &self.source,
            &q,
            self.settings.epsilon_inner,
            seed,
            &self.search,
        )
    }

    fn descriptor(&self) -> String {
        format!(
            "riskmap/cvar alpha={} gamma1={} epsilon_inner={}",
            self.settings.alpha, self.settings.gamma1, self.settings.epsilon_inner
        )
    }
}

/// Cheap analytic stand-in for the simulator riskmap: a smooth bowl over the
/// normalized parameter box plus seeded Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateRiskMap {
    pub noise: f64,
}

impl SurrogateRiskMap {
    pub fn mean(&self, p: &ControllerParams) -> f64 {
        let full = ParamSpace::default();
        let u: Vec<f64> = p
            .as_array()
            .iter()
            .enumerate()
            .map(|(k, v)| (v - full.lower[k]) / (full.upper[k] - full.lower[k]))
            .collect();
        let centre = [0.35, 0.6, 0.3, 0.15];
        let weights = [0.08, 0.05, 0.03, 0.12];
        let bowl: f64 = (0..4)
            .map(|k| weights[k] * (u[k] - centre[k]).powi(2))
            .sum();
        -0.16 + bowl + 0.02 * (u[0] - centre[0]) * (u[3] - centre[3])
    }
}

impl RiskMap for SurrogateRiskMap {
    fn evaluate(&self, params: &ControllerParams, seed: u64) -> Result<f64> {
        params.validate()?;
        let z: f64 = StandardNormal.sample(&mut ChaCha8Rng::seed_from_u64(seed));
        Ok(self.mean(params) + self.noise * z)
    }

    fn descriptor(&self) -> String {
        format!("surrogate noise={}", self.noise)
    }
}

/// A controller candidate: parameters and the seed of its riskmap evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: ControllerParams,
    pub seed: u64,
}

/// Candidates drawn uniformly from a parameter box; reward is `-riskmap`.
///
/// With `shared_seed` set, every candidate is evaluated on the same scenario
/// batch (common random numbers); otherwise each draws its own.
pub struct SynthesisDomain<'a, M> {
    pub map: &'a M,
    pub space: ParamSpace,
    pub shared_seed: Option<u64>,
}

impl<M: RiskMap> DecisionDomain for SynthesisDomain<'_, M> {
    type Decision = Candidate;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Candidate> {
        let params = self.space.sample(rng);
        let seed = self.shared_seed.unwrap_or_else(|| rng.random());
        Ok(Candidate { params, seed })
    }

    fn reward(&self, c: &Candidate) -> Result<f64> {
        Ok(-self.map.evaluate(&c.params, c.seed)?)
    }

    fn descriptor(&self) -> String {
        format!("synthesis/{}", self.map.descriptor())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisOptions {
    pub space: ParamSpace,
    pub common_random_numbers: bool,
    /// Overrides the candidate count implied by `(gamma2, epsilon2)`.
    pub candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub selection: SelectionReport<Candidate>,
    pub riskmap: f64,
    /// `-riskmap`: certified expected robustness in the worst cases.
    pub certified_shortfall: f64,
    pub common_random_numbers: bool,
}

pub fn synthesize<M: RiskMap>(
    map: &M,
    spec: ConfidenceSpec,
    master_seed: u64,
    options: &SynthesisOptions,
) -> Result<SynthesisReport> {
    options.space.validate()?;
    let domain = SynthesisDomain {
        map,
        space: options.space,
        shared_seed: options
            .common_random_numbers
            .then(|| seeding::labelled(master_seed, "common-random-numbers")),
    };
    let n = match options.candidates {
        Some(n) => n,
        None => min_samples(spec)? as usize,
    };
    let selection = select_from(&domain, n, spec, master_seed)?;
    let value = -selection.best_reward;
    Ok(SynthesisReport {
        selection,
        riskmap: value,
        certified_shortfall: expected_shortfall_interpretation(value),
        common_random_numbers: options.common_random_numbers,
    })
}

/// Fraction of fresh `(params, seed)` draws whose riskmap is strictly below
/// that of `chosen`.
pub fn riskmap_violation_fraction<M: RiskMap>(
    map: &M,
    space: ParamSpace,
    chosen: &Candidate,
    trials: usize,
    seed: u64,
) -> Result<VolumeEstimate> {
    let domain = SynthesisDomain {
        map,
        space,
        shared_seed: None,
    };
    violation_volume_estimate(&domain, chosen, trials, seed)
}
