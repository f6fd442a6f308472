//! Scenario-program primitives, sample-complexity arithmetic and empirical
//! risk-measure oracles.
//!
//! The scenario program over scalar draws `x_1..x_N` is
//!
//! ```text
//! minimize ζ  subject to  ζ >= x_k,  k = 1..N
//! ```
//!
//! whose solution is simply the sample maximum. With probability at least
//! `1 - (1-ε)^N` that maximum sits above the `ε`-level value-at-risk of the
//! underlying distribution, which is what every bound in this crate builds on.
//!
//! Confidence arithmetic runs in the log domain (`ln_1p`, `exp_m1`) so that
//! confidences close to one keep their precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::golden_section;

/// Ordered multiset of finite scalar draws, `N >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SampleSet {
    values: Vec<f64>,
}

impl SampleSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample set is empty"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample {k} is not finite ({})",
                values[k]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Values sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Elementwise negation, used to bound risk of `-R` from robustness draws.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        SampleSet::new(values).map_err(serde::de::Error::custom)
    }
}

/// Miss mass `ε ∈ (0,1)` and confidence `γ ∈ [0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSpec {
    pub epsilon: f64,
    pub gamma: f64,
}

impl ConfidenceSpec {
    pub fn new(epsilon: f64, gamma: f64) -> Result<Self> {
        let spec = Self { epsilon, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!(
                "gamma must lie in [0,1), got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Essential upper bound `ℓ`: the bounded variable satisfies `P[x <= ℓ] = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EssentialBound(f64);

impl EssentialBound {
    pub fn new(ell: f64) -> Result<Self> {
        if !ell.is_finite() {
            return Err(Error::invalid(format!(
                "essential bound must be finite, got {ell}"
            )));
        }
        Ok(Self(ell))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Fails with the index of the first sample above the bound.
    pub fn check(self, samples: &SampleSet) -> Result<()> {
        match samples.values().iter().position(|&v| v > self.0) {
            Some(k) => Err(Error::invalid(format!(
                "essential bound violated by sample {k} ({} > {})",
                samples.values()[k],
                self.0
            ))),
            None => Ok(()),
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0,1], got {v}")))
    }
}

fn check_risk_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "risk level alpha must lie in (0,1], got {alpha}"
        )))
    }
}

/// Solution of the scalar scenario program: the sample maximum.
pub fn scenario_max(samples: &SampleSet) -> f64 {
    samples.max()
}

/// `1 - (1-ε)^N`: confidence that [`scenario_max`] over `N` draws is at least
/// `VaR_ε`.
pub fn var_bound_confidence(n: u64, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    check_unit("epsilon", epsilon)?;
    Ok(-(n as f64 * (-epsilon).ln_1p()).exp_m1())
}

/// Smallest `N >= 1` with `1 - (1-ε)^N >= γ`.
pub fn min_samples(spec: ConfidenceSpec) -> Result<u64> {
    spec.validate()?;
    if spec.gamma == 0.0 {
        return Ok(1);
    }
    let log_miss = (-spec.gamma).ln_1p();
    let log_keep = (-spec.epsilon).ln_1p();
    // (1-ε)^N <= 1-γ  <=>  N ln(1-ε) <= ln(1-γ)
    let holds = |n: u64| n as f64 * log_keep <= log_miss;
    let mut n = ((log_miss / log_keep).ceil() as u64).max(1);
    while n > 1 && holds(n - 1) {
        n -= 1;
    }
    while !holds(n) {
        n += 1;
    }
    Ok(n)
}

/// Binomial tail `Σ_{i<d} C(N,i) ε^i (1-ε)^{N-i}`, the scenario bound on
/// `P[V(z*_N) > ε]` for a `d`-dimensional decision.
pub fn scenario_confidence_general(n: u64, d: u64, epsilon: f64) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("N and d must be positive"));
    }
    if d > n {
        return Err(Error::invalid(format!(
            "decision dimension {d} exceeds sample count {n}"
        )));
    }
    check_unit("epsilon", epsilon)?;
    if epsilon == 0.0 {
        return Ok(1.0);
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    let ratio = epsilon.ln() - (-epsilon).ln_1p();
    let mut log_term = n as f64 * (-epsilon).ln_1p();
    let mut logs = Vec::with_capacity(d as usize);
    for i in 0..d {
        logs.push(log_term);
        log_term += ((n - i) as f64).ln() - ((i + 1) as f64).ln() + ratio;
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - peak).exp()).sum();
    Ok((peak + sum.ln()).exp().min(1.0))
}

/// `ζ(1-ε) + ℓε`, the high-confidence upper bound on `E[X]` given the scenario
/// maximum `ζ` and essential bound `ℓ`.
pub fn expectation_bound(zeta: f64, ell: EssentialBound, epsilon: f64) -> Result<f64> {
    check_unit("epsilon", epsilon)?;
    if zeta > ell.value() {
        return Err(Error::invalid(format!(
            "scenario value {zeta} exceeds essential bound {}",
            ell.value()
        )));
    }
    Ok(zeta + epsilon * (ell.value() - zeta))
}

/// Empirical `VaR_ε`: the smallest sample `ζ` with `#{x <= ζ}/N >= 1-ε`.
pub fn empirical_var(samples: &SampleSet, epsilon: f64) -> Result<f64> {
    check_unit("epsilon", epsilon)?;
    let sorted = samples.sorted();
    let n = sorted.len() as f64;
    let target = 1.0 - epsilon;
    let mut k = 0;
    while k < sorted.len() {
        // advance over ties so the count includes every sample equal to sorted[k]
        let mut j = k;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[k] {
            j += 1;
        }
        if (j + 1) as f64 / n >= target - 1e-12 {
            return Ok(sorted[k]);
        }
        k = j + 1;
    }
    Ok(sorted[sorted.len() - 1])
}

/// Empirical `CVaR_α` in the infimum form `min_z z + mean((x - z)^+)/α`.
///
/// The objective is convex and piecewise linear with breakpoints at the
/// samples, so scanning the sorted samples with suffix sums is exact.
pub fn empirical_cvar(samples: &SampleSet, alpha: f64) -> Result<f64> {
    check_risk_level(alpha)?;
    let sorted = samples.sorted();
    let n = sorted.len();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }
    let mut best = f64::INFINITY;
    for (j, &z) in sorted.iter().enumerate() {
        let above = (n - j - 1) as f64;
        let excess = (suffix[j + 1] - above * z).max(0.0);
        best = best.min(z + excess / (n as f64 * alpha));
    }
    Ok(best)
}

/// Settings for the empirical EVaR line search.
#[derive(Debug, Clone, Copy)]
pub struct EvarSearch {
    pub z_min: f64,
    pub z_max: f64,
    pub points: usize,
    pub rel_tol: f64,
}

impl Default for EvarSearch {
    fn default() -> Self {
        Self {
            z_min: 1e-4,
            z_max: 1e4,
            points: 200,
            rel_tol: 1e-8,
        }
    }
}

/// Empirical `EVaR_α = inf_{z>0} (1/z) ln(mean(e^{z x}) / α)`.
pub fn empirical_evar(samples: &SampleSet, alpha: f64) -> Result<f64> {
    empirical_evar_with(samples, alpha, EvarSearch::default())
}

/// [`empirical_evar`] with an explicit search grid. The grid is applied to
/// `z * (max - min)`, so it is expressed for unit-range samples.
pub fn empirical_evar_with(samples: &SampleSet, alpha: f64, search: EvarSearch) -> Result<f64> {
    check_risk_level(alpha)?;
    let x_max = samples.max();
    let spread = x_max - samples.min();
    if spread == 0.0 {
        return Ok(x_max);
    }
    let n = samples.len() as f64;
    let log_alpha = alpha.ln();
    // objective in terms of w = ln(z * spread)
    let objective = |w: f64| {
        let z = w.exp() / spread;
        let m = samples
            .values()
            .iter()
            .map(|x| (z * (x - x_max)).exp())
            .sum::<f64>()
            / n;
        x_max + (m.ln() - log_alpha) / z
    };

    let lo = search.z_min.ln();
    let hi = search.z_max.ln();
    let step = (hi - lo) / (search.points - 1) as f64;
    let grid: Vec<f64> = (0..search.points)
        .map(|i| objective(lo + step * i as f64))
        .collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let a = lo + step * best.saturating_sub(1) as f64;
    let b = lo + step * (best + 1).min(search.points - 1) as f64;
    let (_, refined) = golden_section(objective, a, b, search.rel_tol);

    // z -> inf approaches the sample max; z -> 0 approaches the mean when α = 1
    let mut value = refined.min(grid[best]).min(x_max);
    if alpha == 1.0 {
        value = value.min(samples.mean());
    }
    Ok(value)
}
