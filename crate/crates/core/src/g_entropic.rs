//! High-confidence upper bounds on g-entropic risk measures.
//!
//! A g-entropic risk measure with conjugate `g*` and divergence level `β` admits
//!
//! ```text
//! ER(X) = inf_{μ, t>0} E[L(X, μ, t)],   L(x, μ, t) = t (μ + g*(x/t - μ + β))
//! ```
//!
//! Replacing the expectation by `(1-ε) max_k L(x_k, μ, t) + ε L(ℓ, μ, t)` gives a
//! bound that holds with probability `1 - (1-ε)^N` over the draw of the samples.
//! The outer infimum is non-convex in `(μ, t)` and is searched numerically.
//!
//! Internally the search runs over the location `z = tμ` and `s = ln t`: the
//! loss becomes `z + t g*((x - z)/t + β)`, whose optimum stays on the scale of
//! the samples for every `t`, and `t > 0` holds without constraints.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::NelderMead;
use crate::risk_core::{var_bound_confidence, EssentialBound, SampleSet};

/// Convex conjugate `g*` of the divergence-generating function.
#[derive(Clone)]
pub enum Conjugate {
    /// `g*(y) = max(y, 0) / α`
    Cvar { alpha: f64 },
    /// `g*(y) = e^{y - 1}`
    Evar,
    /// User-supplied conjugate; the scenario value is taken over every sample.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Conjugate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conjugate::Cvar { alpha } => write!(f, "Cvar {{ alpha: {alpha} }}"),
            Conjugate::Evar => write!(f, "Evar"),
            Conjugate::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// A g-entropic loss: conjugate, divergence level and a label for reports.
#[derive(Debug, Clone)]
pub struct LossSpec {
    conjugate: Conjugate,
    beta: f64,
    label: String,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "risk level alpha must lie in (0,1], got {alpha}"
        )))
    }
}

impl LossSpec {
    /// CVaR at level `α`: `g*(y) = max(y,0)/α`, `β = 0`.
    pub fn cvar(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            conjugate: Conjugate::Cvar { alpha },
            beta: 0.0,
            label: format!("cvar@{alpha}"),
        })
    }

    /// EVaR at level `α`: `g*(y) = e^{y-1}`, `β = -ln α`.
    pub fn evar(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            conjugate: Conjugate::Evar,
            beta: -alpha.ln(),
            label: format!("evar@{alpha}"),
        })
    }

    pub fn custom(
        label: impl Into<String>,
        beta: f64,
        conjugate: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!(
                "divergence level beta must be >= 0, got {beta}"
            )));
        }
        Ok(Self {
            conjugate: Conjugate::Custom(Arc::new(conjugate)),
            beta,
            label: label.into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn conjugate(&self) -> &Conjugate {
        &self.conjugate
    }

    fn nondecreasing(&self) -> bool {
        !matches!(self.conjugate, Conjugate::Custom(_))
    }

    /// Loss in location form, `z + t g*((x - z)/t + β)`. Returns `+inf` when the
    /// value is not representable (EVaR exponent above `exponent_cap`, or a
    /// non-finite custom conjugate).
    pub fn loss_at_location(&self, x: f64, z: f64, t: f64, exponent_cap: f64) -> f64 {
        match &self.conjugate {
            Conjugate::Cvar { alpha } => z + (x - z).max(0.0) / alpha,
            Conjugate::Evar => {
                let exponent = (x - z) / t + self.beta - 1.0;
                if exponent > exponent_cap {
                    f64::INFINITY
                } else {
                    z + t * exponent.exp()
                }
            }
            Conjugate::Custom(g) => {
                let v = z + t * g((x - z) / t + self.beta);
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `L(x, μ, t) = t(μ + g*(x/t - μ + β))`.
    pub fn loss(&self, x: f64, mu: f64, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.loss_at_location(x, t * mu, t, SearchConfig::default().exponent_cap))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("t must be positive, got {t}")))
    }
}

/// CVaR loss `tμ + (1/α) max(x - tμ, 0)`.
pub fn loss_cvar(x: f64, mu: f64, t: f64, alpha: f64) -> Result<f64> {
    LossSpec::cvar(alpha)?.loss(x, mu, t)
}

/// EVaR loss `tμ + t e^{x/t - μ - ln α - 1}`; `+inf` once the exponent passes
/// the default cap.
pub fn loss_evar(x: f64, mu: f64, t: f64, alpha: f64) -> Result<f64> {
    LossSpec::evar(alpha)?.loss(x, mu, t)
}

/// Outer search settings. The grid covers `t ∈ [t_min, t_max]` (log-spaced) and
/// the location `tμ ∈ [min - span, ℓ + span]` with `span = ℓ - min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub t_points: usize,
    pub location_points: usize,
    /// Number of best grid cells used as Nelder–Mead starts.
    pub refine_starts: usize,
    pub tolerance: f64,
    /// Evaluation cap per refinement run.
    pub max_evaluations: usize,
    pub exponent_cap: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            t_min: 1e-3,
            t_max: 1e3,
            t_points: 25,
            location_points: 25,
            refine_starts: 3,
            tolerance: 1e-8,
            max_evaluations: 2000,
            exponent_cap: 700.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid("search range requires 0 < t_min < t_max"));
        }
        if self.t_points < 2 || self.location_points < 2 {
            return Err(Error::invalid(
                "search grid needs at least 2 points per axis",
            ));
        }
        if self.refine_starts == 0 || self.max_evaluations == 0 {
            return Err(Error::invalid(
                "refine_starts and max_evaluations must be positive",
            ));
        }
        if !(self.tolerance >= 0.0) || !(self.exponent_cap > 0.0) {
            return Err(Error::invalid(
                "tolerance must be >= 0 and exponent_cap > 0",
            ));
        }
        Ok(())
    }
}

/// The box the grid covered, echoed in results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub t_min: f64,
    pub t_max: f64,
    pub location_min: f64,
    pub location_max: f64,
}

/// Minimized bound `r*` with its argument and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub label: String,
    pub bound: f64,
    pub arg_mu: f64,
    pub arg_t: f64,
    pub evaluations: usize,
    /// `1 - (1-ε)^N`.
    pub confidence: f64,
    pub n_samples: usize,
    pub epsilon: f64,
    pub ell: f64,
    pub search_box: SearchBox,
    pub converged: bool,
    /// True when the optimum lies on or outside the grid box.
    pub at_box_edge: bool,
    /// True when the search stayed above `ℓ` and `ℓ` itself is reported. Only
    /// the built-in measures, which never exceed the essential supremum, are
    /// capped this way.
    #[serde(default)]
    pub capped_at_ell: bool,
}

struct Objective<'a> {
    spec: &'a LossSpec,
    samples: &'a SampleSet,
    x_max: f64,
    ell: f64,
    epsilon: f64,
    cap: f64,
}

impl Objective<'_> {
    fn scenario_value(&self, z: f64, t: f64) -> f64 {
        if self.spec.nondecreasing() {
            self.spec.loss_at_location(self.x_max, z, t, self.cap)
        } else {
            self.samples
                .values()
                .iter()
                .map(|&x| self.spec.loss_at_location(x, z, t, self.cap))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }

    /// `(1-ε) ζ*_N(μ,t) + ε u_b(μ,t)` at location `z`, `t = e^s`.
    fn eval(&self, z: f64, s: f64) -> f64 {
        let t = s.exp();
        if !(t > 0.0 && t.is_finite()) {
            return f64::INFINITY;
        }
        let upper = if self.epsilon > 0.0 {
            self.spec.loss_at_location(self.ell, z, t, self.cap)
        } else {
            0.0
        };
        let scenario = if self.epsilon < 1.0 {
            self.scenario_value(z, t)
        } else {
            0.0
        };
        let v = (1.0 - self.epsilon) * scenario + self.epsilon * upper;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimize `(1-ε) max_k L(x_k,μ,t) + ε L(ℓ,μ,t)` over `(μ, t)`.
///
/// The reported bound is the best value found, which upper-bounds the true
/// infimum. `ε` is accepted on the closed interval `[0,1]`.
pub fn bound_g_entropic(
    samples: &SampleSet,
    ell: EssentialBound,
    spec: &LossSpec,
    epsilon: f64,
    search: &SearchConfig,
) -> Result<BoundResult> {
    search.validate()?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!(
            "epsilon must lie in [0,1], got {epsilon}"
        )));
    }
    ell.check(samples)?;

    let x_min = samples.min();
    let x_max = samples.max();
    let ell_v = ell.value();
    let span = if ell_v > x_min {
        ell_v - x_min
    } else {
        ell_v.abs().max(1.0)
    };
    let search_box = SearchBox {
        t_min: search.t_min,
        t_max: search.t_max,
        location_min: x_min - span,
        location_max: ell_v + span,
    };
    let objective = Objective {
        spec,
        samples,
        x_max,
        ell: ell_v,
        epsilon,
        cap: search.exponent_cap,
    };

    let s_lo = search.t_min.ln();
    let s_hi = search.t_max.ln();
    let s_step = (s_hi - s_lo) / (search.t_points - 1) as f64;
    let z_step =
        (search_box.location_max - search_box.location_min) / (search.location_points - 1) as f64;
    let cells: Vec<(f64, f64)> = (0..search.t_points)
        .flat_map(|i| {
            (0..search.location_points).map(move |j| {
                (
                    search_box.location_min + z_step * j as f64,
                    s_lo + s_step * i as f64,
                )
            })
        })
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(z, s)| objective.eval(z, s))
        .collect();
    let mut evaluations = values.len();

    let mut order: Vec<usize> = (0..cells.len())
        .filter(|&k| values[k].is_finite())
        .collect();
    if order.is_empty() {
        return Err(Error::Search(format!(
            "no finite objective value on the {}x{} search grid",
            search.t_points, search.location_points
        )));
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(search.refine_starts);

    let nm = NelderMead {
        tolerance: search.tolerance,
        max_evaluations: search.max_evaluations,
    };
    let runs: Vec<_> = order
        .par_iter()
        .map(|&k| {
            let (z0, s0) = cells[k];
            nm.minimize(|p| objective.eval(p[0], p[1]), &[z0, s0], &[z_step, s_step])
        })
        .collect();

    let mut best_value = values[order[0]];
    let (mut best_z, mut best_s) = cells[order[0]];
    let mut converged = false;
    for run in &runs {
        evaluations += run.evaluations;
        if run.value < best_value {
            best_value = run.value;
            best_z = run.x[0];
            best_s = run.x[1];
            converged = run.converged;
        } else if run.value == best_value {
            converged |= run.converged;
        }
    }

    let capped_at_ell = spec.nondecreasing() && best_value > ell_v;
    if capped_at_ell {
        best_value = ell_v;
    }
    let t = best_s.exp();
    let at_box_edge = best_s <= s_lo + 0.5 * s_step
        || best_s >= s_hi - 0.5 * s_step
        || best_z <= search_box.location_min + 0.5 * z_step
        || best_z >= search_box.location_max - 0.5 * z_step;

    Ok(BoundResult {
        label: spec.label().to_string(),
        bound: best_value,
        arg_mu: best_z / t,
        arg_t: t,
        evaluations,
        confidence: var_bound_confidence(samples.len() as u64, epsilon)?,
        n_samples: samples.len(),
        epsilon,
        ell: ell_v,
        search_box,
        converged,
        at_box_edge,
        capped_at_ell,
    })
}

/// Upper bound on `CVaR_α`.
pub fn bound_cvar(
    samples: &SampleSet,
    ell: EssentialBound,
    alpha: f64,
    epsilon: f64,
    search: &SearchConfig,
) -> Result<BoundResult> {
    bound_g_entropic(samples, ell, &LossSpec::cvar(alpha)?, epsilon, search)
}

/// Upper bound on `EVaR_α`.
pub fn bound_evar(
    samples: &SampleSet,
    ell: EssentialBound,
    alpha: f64,
    epsilon: f64,
    search: &SearchConfig,
) -> Result<BoundResult> {
    bound_g_entropic(samples, ell, &LossSpec::evar(alpha)?, epsilon, search)
}
