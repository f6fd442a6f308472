//! Resolved command inputs and their execution. Every field that influences
//! the numbers lives in the inputs record, so a report can be replayed from
//! its echo alone.

use riskbound::decision_select::good_decision;
use riskbound::decision_select::tsp::{
    all_tour_costs, exact_violation_fraction, tsp_cost, TspDomain, TspInstance,
};
use riskbound::fixtures::Distribution;
use riskbound::risk_core::{expectation_bound, min_samples, scenario_max, var_bound_confidence};
use riskbound::sim::{
    robustness, rollout, sample_scenario, ControllerParams, NoiseModel, ParamSpace, SimConfig,
    Trajectory,
};
use riskbound::validation::{run_validation, ValidationConfig, ValidationReport};
use riskbound::verify_synth::{
    collect_robustness, synthesize, verify_values, RiskMapSettings, Simulator, SourceRiskMap,
    SurrogateRiskMap, SynthesisOptions, SynthesisReport,
};
use riskbound::{
    bound_cvar, bound_evar, seeding, ConfidenceSpec, Error, EssentialBound, Result, SampleSet,
    SearchConfig,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Var,
    Expect,
    Cvar,
    Evar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    pub kind: BoundKind,
    pub samples: SampleSet,
    pub ell: Option<f64>,
    pub epsilon: f64,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub search: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TspInputs {
    pub instance: TspInstance,
    pub gamma: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub audit: bool,
}

/// Largest instance the exhaustive audit will enumerate (10! tours).
pub const AUDIT_LIMIT: usize = 10;

/// Settings shared by `verify` and `synthesize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub alpha: f64,
    /// Miss mass of each verification / riskmap bound.
    pub epsilon_inner: f64,
    /// Confidence of each verification / riskmap bound.
    pub gamma1: f64,
    pub epsilon2: f64,
    pub gamma2: f64,
    pub seed: Option<u64>,
    pub noise_model: NoiseModel,
    pub dt: f64,
    pub horizon: f64,
    pub n_inner: Option<usize>,
    /// Controller under verification.
    pub params: ControllerParams,
    pub space: ParamSpace,
    pub common_random_numbers: bool,
    pub candidates: Option<usize>,
    /// Replace the simulator riskmap by the analytic surrogate with this noise.
    pub surrogate_noise: Option<f64>,
    pub histogram_bins: usize,
    pub search: SearchConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        Self {
            alpha: 0.1,
            epsilon_inner: 0.02,
            gamma1: 0.95,
            epsilon2: 0.01,
            gamma2: 0.99,
            seed: None,
            noise_model: sim.noise,
            dt: sim.dt,
            horizon: sim.horizon,
            n_inner: None,
            params: ControllerParams::default(),
            space: ParamSpace::default(),
            common_random_numbers: false,
            candidates: None,
            surrogate_noise: None,
            histogram_bins: 20,
            search: SearchConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            horizon: self.horizon,
            noise: self.noise_model,
        }
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidInput("a master seed is required".into()))
    }

    fn settings(&self) -> RiskMapSettings {
        RiskMapSettings {
            gamma1: self.gamma1,
            alpha: self.alpha,
            epsilon_inner: self.epsilon_inner,
            n_inner: self.n_inner,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateInputs {
    pub seed: u64,
    pub params: ControllerParams,
    #[serde(default)]
    pub sim: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum Inputs {
    Bound(BoundInputs),
    Validate(ValidationConfig),
    Tsp(TspInputs),
    Verify(CampaignConfig),
    Synthesize(CampaignConfig),
    Simulate(SimulateInputs),
}

impl Inputs {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Inputs::Bound(_) => None,
            Inputs::Validate(c) => Some(c.seed),
            Inputs::Tsp(t) => Some(t.seed),
            Inputs::Verify(c) | Inputs::Synthesize(c) => c.seed,
            Inputs::Simulate(s) => Some(s.seed),
        }
    }
}

/// Numbers for the report plus data for optional CSV artifacts.
pub struct Outcome {
    pub outputs: Value,
    pub robustness: Option<Vec<f64>>,
    pub validation: Option<ValidationReport>,
    pub trajectory: Option<Trajectory>,
}

impl Outcome {
    fn new(outputs: Value) -> Self {
        Self {
            outputs,
            robustness: None,
            validation: None,
            trajectory: None,
        }
    }
}

pub fn run(inputs: &Inputs) -> Result<Outcome> {
    match inputs {
        Inputs::Bound(b) => run_bound(b),
        Inputs::Validate(v) => {
            let rep = run_validation(v)?;
            let mut out = Outcome::new(serde_json::to_value(&rep)?);
            out.validation = Some(rep);
            Ok(out)
        }
        Inputs::Tsp(t) => run_tsp(t),
        Inputs::Verify(c) => run_verify(c),
        Inputs::Synthesize(c) => run_synthesize(c),
        Inputs::Simulate(s) => run_simulate(s),
    }
}

fn required(name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required for this bound")))
}

fn run_bound(b: &BoundInputs) -> Result<Outcome> {
    let n = b.samples.len();
    let confidence = var_bound_confidence(n as u64, b.epsilon)?;
    let ell = b.ell.map(EssentialBound::new).transpose()?;
    if let Some(ell) = ell {
        ell.check(&b.samples)?;
    }
    let outputs = match b.kind {
        BoundKind::Var => {
            json!({ "kind": "var", "bound": scenario_max(&b.samples), "confidence": confidence, "n_samples": n })
        }
        BoundKind::Expect => {
            let ell =
                ell.ok_or_else(|| Error::InvalidInput("--ell is required for this bound".into()))?;
            let bound = expectation_bound(scenario_max(&b.samples), ell, b.epsilon)?;
            json!({ "kind": "expect", "bound": bound, "confidence": confidence, "n_samples": n })
        }
        BoundKind::Cvar | BoundKind::Evar => {
            let ell =
                ell.ok_or_else(|| Error::InvalidInput("--ell is required for this bound".into()))?;
            let alpha = required("alpha", b.alpha)?;
            let f = if b.kind == BoundKind::Cvar {
                bound_cvar
            } else {
                bound_evar
            };
            serde_json::to_value(f(&b.samples, ell, alpha, b.epsilon, &b.search)?)?
        }
    };
    Ok(Outcome::new(outputs))
}

fn run_tsp(t: &TspInputs) -> Result<Outcome> {
    let spec = ConfidenceSpec::new(t.epsilon, t.gamma)?;
    let domain = TspDomain {
        instance: t.instance.clone(),
    };
    let rep = good_decision(&domain, spec, t.seed)?;
    let cost = tsp_cost(&domain.instance, &rep.best_decision)?;
    let mut outputs = json!({
        "descriptor": rep.descriptor,
        "tour": rep.best_decision,
        "cost": cost,
        "best_index": rep.best_index,
        "samples_used": rep.samples_used,
        "confidence": var_bound_confidence(rep.samples_used as u64, t.epsilon)?,
    });
    if t.audit {
        if domain.instance.count() > AUDIT_LIMIT {
            return Err(Error::InvalidInput(format!(
                "exhaustive audit enumerates n! tours and is limited to {AUDIT_LIMIT} nodes"
            )));
        }
        let costs = all_tour_costs(&domain.instance);
        let vf = exact_violation_fraction(&domain.instance, &rep.best_decision, &costs)?;
        outputs["audit"] = json!({
            "tours": costs.len(),
            "violation_fraction": vf,
            "percentile": 100.0 * (1.0 - vf),
            "within_epsilon": vf <= t.epsilon,
        });
    }
    Ok(Outcome::new(outputs))
}

fn run_verify(c: &CampaignConfig) -> Result<Outcome> {
    if c.surrogate_noise.is_some() {
        return Err(Error::InvalidInput(
            "verify runs on the simulator; surrogate_noise is not allowed".into(),
        ));
    }
    let seed = c.seed()?;
    let spec = ConfidenceSpec::new(c.epsilon_inner, c.gamma1)?;
    let n = min_samples(spec)? as usize;
    let samples = collect_robustness(&c.params, n, seed, &c.sim())?;
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let rep = verify_values(
        &SampleSet::new(values.clone())?,
        c.alpha,
        spec,
        seed,
        &c.search,
    )?;
    let mut out = Outcome::new(json!({ "params": c.params, "verification": rep }));
    out.robustness = Some(values);
    Ok(out)
}

fn run_synthesize(c: &CampaignConfig) -> Result<Outcome> {
    let seed = c.seed()?;
    let spec = ConfidenceSpec::new(c.epsilon2, c.gamma2)?;
    let options = SynthesisOptions {
        space: c.space,
        common_random_numbers: c.common_random_numbers,
        candidates: c.candidates,
    };
    let report: SynthesisReport;
    let mut robustness_values = None;
    match c.surrogate_noise {
        Some(noise) => {
            report = synthesize(&SurrogateRiskMap { noise }, spec, seed, &options)?;
        }
        None => {
            let map = SourceRiskMap {
                source: Simulator { sim: c.sim() },
                settings: c.settings(),
                search: c.search,
            };
            report = synthesize(&map, spec, seed, &options)?;
            let chosen = report.selection.best_decision;
            let n_inner = c.settings().query(chosen.params)?.n_inner;
            let samples = collect_robustness(&chosen.params, n_inner, chosen.seed, &c.sim())?;
            robustness_values = Some(samples.into_iter().map(|s| s.value).collect::<Vec<_>>());
        }
    }
    let mut outputs = json!({ "synthesis": report });
    if let Some(v) = &robustness_values {
        let s = SampleSet::new(v.clone())?;
        outputs["robustness_of_selected"] =
            json!({ "n": s.len(), "min": s.min(), "mean": s.mean(), "max": s.max() });
    }
    let mut out = Outcome::new(outputs);
    out.robustness = robustness_values;
    Ok(out)
}

fn run_simulate(s: &SimulateInputs) -> Result<Outcome> {
    s.params.validate()?;
    let mut rng = seeding::stream(s.seed, 0);
    let draw = sample_scenario(&mut rng)?;
    let traj = rollout(&draw, &s.params, &s.sim)?;
    let last = *traj.states.last().expect("rollout has states");
    let r = if traj.final_time() >= riskbound::sim::robustness::HORIZON - 1e-9 {
        Some(robustness(&traj)?)
    } else {
        None
    };
    let mut out = Outcome::new(json!({
        "draw": draw,
        "steps": traj.states.len() - 1,
        "final_state": last,
        "robustness": r,
    }));
    out.trajectory = Some(traj);
    Ok(out)
}

/// Named fixture or inline JSON for `validate --distribution`.
pub fn parse_distribution(text: &str) -> Result<Distribution> {
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(text)?)
    } else {
        Distribution::named(text)
    }
}
