//! Reference distributions for coverage campaigns.

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk_core::{empirical_cvar, empirical_evar, SampleSet};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// A scalar distribution with a known finite support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// Gaussian mixture truncated to `[lower, upper]` by rejection.
    Mixture {
        components: Vec<Component>,
        lower: f64,
        upper: f64,
    },
    Uniform {
        lower: f64,
        upper: f64,
    },
    Constant {
        value: f64,
    },
}

impl Distribution {
    /// Three-mode mixture on `[-3, 4]` with a heavy right shoulder.
    pub fn multimodal() -> Self {
        Distribution::Mixture {
            components: vec![
                Component {
                    weight: 0.5,
                    mean: -1.0,
                    sd: 0.3,
                },
                Component {
                    weight: 0.3,
                    mean: 1.0,
                    sd: 0.2,
                },
                Component {
                    weight: 0.2,
                    mean: 2.5,
                    sd: 0.3,
                },
            ],
            lower: -3.0,
            upper: 4.0,
        }
    }

    /// Stand-in for the negated robustness of a mostly safe system, bounded
    /// above by 0.1.
    pub fn negated_robustness() -> Self {
        Distribution::Mixture {
            components: vec![
                Component {
                    weight: 0.75,
                    mean: -0.25,
                    sd: 0.08,
                },
                Component {
                    weight: 0.2,
                    mean: -0.05,
                    sd: 0.04,
                },
                Component {
                    weight: 0.05,
                    mean: 0.08,
                    sd: 0.02,
                },
            ],
            lower: -0.6,
            upper: 0.1,
        }
    }

    /// Look up a fixture by name: `multimodal`, `robustness` or `constant`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "multimodal" => Ok(Self::multimodal()),
            "robustness" => Ok(Self::negated_robustness()),
            "constant" => Ok(Distribution::Constant { value: 1.0 }),
            other => Err(Error::invalid(format!(
                "unknown distribution '{other}' (expected multimodal, robustness or constant)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Mixture {
                components,
                lower,
                upper,
            } => {
                if components.is_empty() || !(lower < upper) {
                    return Err(Error::invalid("mixture needs components and lower < upper"));
                }
                if components
                    .iter()
                    .any(|c| !(c.weight > 0.0 && c.sd > 0.0 && c.mean.is_finite()))
                {
                    return Err(Error::invalid(
                        "mixture components need positive weight and sd",
                    ));
                }
                Ok(())
            }
            Distribution::Uniform { lower, upper } if lower < upper => Ok(()),
            Distribution::Uniform { .. } => Err(Error::invalid("uniform needs lower < upper")),
            Distribution::Constant { value } if value.is_finite() => Ok(()),
            Distribution::Constant { .. } => Err(Error::invalid("constant must be finite")),
        }
    }

    /// Upper end of the support, a valid essential bound.
    pub fn upper(&self) -> f64 {
        match self {
            Distribution::Mixture { upper, .. } | Distribution::Uniform { upper, .. } => *upper,
            Distribution::Constant { value } => *value,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Distribution::Mixture {
                components,
                lower,
                upper,
            } => {
                let total: f64 = components.iter().map(|c| c.weight).sum();
                loop {
                    let mut u = rng.random::<f64>() * total;
                    let c = components
                        .iter()
                        .find(|c| {
                            u -= c.weight;
                            u < 0.0
                        })
                        .unwrap_or(&components[components.len() - 1]);
                    let x = Normal::new(c.mean, c.sd).expect("validated sd").sample(rng);
                    if (*lower..=*upper).contains(&x) {
                        return x;
                    }
                }
            }
            Distribution::Uniform { lower, upper } => rng.random_range(*lower..=*upper),
            Distribution::Constant { value } => *value,
        }
    }

    pub fn sample_set(&self, n: usize, rng: &mut impl Rng) -> Result<SampleSet> {
        SampleSet::new((0..n).map(|_| self.sample(rng)).collect())
    }
}

/// Reference CVaR and EVaR, estimated from a large sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub alpha: f64,
    pub draws: usize,
    pub cvar: f64,
    pub evar: f64,
}

pub const TRUTH_DRAWS: usize = 20_000;

pub fn truth(dist: &Distribution, alpha: f64, draws: usize, seed: u64) -> Result<Truth> {
    let mut rng = seeding::stream(seeding::labelled(seed, "truth"), 0);
    let big = dist.sample_set(draws, &mut rng)?;
    Ok(Truth {
        alpha,
        draws,
        cvar: empirical_cvar(&big, alpha)?,
        evar: empirical_evar(&big, alpha)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_respect_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [
            Distribution::multimodal(),
            Distribution::negated_robustness(),
        ] {
            d.validate().unwrap();
            let s = d.sample_set(5000, &mut rng).unwrap();
            assert!(s.max() <= d.upper());
        }
    }

    #[test]
    fn mixture_mean_matches_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Distribution::multimodal()
            .sample_set(100_000, &mut rng)
            .unwrap();
        // truncation at [-3, 4] removes negligible mass
        let expected = 0.5 * -1.0 + 0.3 * 1.0 + 0.2 * 2.5;
        assert!((s.mean() - expected).abs() < 0.01, "{}", s.mean());
    }

    #[test]
    fn constant_truth_is_the_constant() {
        let t = truth(&Distribution::Constant { value: 1.0 }, 0.1, 100, 0).unwrap();
        assert!((t.cvar - 1.0).abs() < 1e-12);
        assert!((t.evar - 1.0).abs() < 1e-9);
    }

    #[test]
    fn truth_orders_measures() {
        let t = truth(&Distribution::multimodal(), 0.1, TRUTH_DRAWS, 3).unwrap();
        assert!(t.cvar <= t.evar);
        assert!(t.cvar > 2.0 && t.evar < 4.0);
    }

    #[test]
    fn parse_and_reject() {
        let d: Distribution =
            serde_json::from_str(r#"{"kind":"uniform","lower":0,"upper":2}"#).unwrap();
        assert_eq!(d.upper(), 2.0);
        assert!(Distribution::named("cauchy").is_err());
        assert!(Distribution::Uniform {
            lower: 1.0,
            upper: 1.0
        }
        .validate()
        .is_err());
    }
}
