//! Travelling-salesman demonstration domain: decisions are tours (permutations
//! of the nodes), reward is the negated closed-tour length.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DecisionDomain;
use crate::error::{Error, Result};

/// Node coordinates are drawn from `[-COORD_LIMIT, COORD_LIMIT]^2`.
pub const COORD_LIMIT: f64 = 5.0;

/// Largest instance for which pairwise distances are precomputed.
const CACHE_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct TspInstance {
    nodes: Vec<[f64; 2]>,
    distances: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    nodes: Vec<[f64; 2]>,
}

impl TryFrom<RawInstance> for TspInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        TspInstance::new(raw.nodes)
    }
}

impl From<TspInstance> for RawInstance {
    fn from(inst: TspInstance) -> Self {
        RawInstance { nodes: inst.nodes }
    }
}

impl TspInstance {
    pub fn new(nodes: Vec<[f64; 2]>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::invalid(format!(
                "a TSP instance needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("node coordinates must be finite"));
        }
        let n = nodes.len();
        let distances = (n <= CACHE_LIMIT).then(|| {
            let mut d = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    d[i * n + j] = euclid(nodes[i], nodes[j]);
                }
            }
            d
        });
        Ok(Self { nodes, distances })
    }

    /// `count` nodes uniform in `[-5, 5]^2`.
    pub fn random(count: usize, rng: &mut impl Rng) -> Result<Self> {
        let nodes = (0..count)
            .map(|_| {
                [
                    rng.random_range(-COORD_LIMIT..=COORD_LIMIT),
                    rng.random_range(-COORD_LIMIT..=COORD_LIMIT),
                ]
            })
            .collect();
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.distances {
            Some(d) => d[i * self.nodes.len() + j],
            None => euclid(self.nodes[i], self.nodes[j]),
        }
    }

    /// Number of distinct tours as permutations, `n!` (saturating).
    pub fn permutation_count(&self) -> u64 {
        (1..=self.count() as u64)
            .try_fold(1u64, |acc, k| acc.checked_mul(k))
            .unwrap_or(u64::MAX)
    }
}

// symmetric by construction so d(i,j) and d(j,i) are bit-identical
fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (p, q) = if (a[0], a[1]) <= (b[0], b[1]) {
        (a, b)
    } else {
        (b, a)
    };
    (q[0] - p[0]).hypot(q[1] - p[1])
}

/// Closed tour length `Σ d(p_k, p_{k+1}) + d(p_last, p_first)`.
///
/// Edge lengths are summed in sorted order, so rotations and reversals of a
/// tour give bit-identical costs and never count as strictly better.
pub fn tsp_cost(instance: &TspInstance, tour: &[usize]) -> Result<f64> {
    let n = instance.count();
    if tour.len() != n {
        return Err(Error::invalid(format!(
            "tour has {} entries, instance has {n} nodes",
            tour.len()
        )));
    }
    let mut seen = vec![false; n];
    for &k in tour {
        if k >= n || seen[k] {
            return Err(Error::invalid(format!(
                "tour is not a permutation of 0..{n}"
            )));
        }
        seen[k] = true;
    }
    Ok(cost_unchecked(instance, tour))
}

fn cost_unchecked(instance: &TspInstance, tour: &[usize]) -> f64 {
    let mut edges: Vec<f64> = tour
        .iter()
        .zip(tour.iter().cycle().skip(1))
        .map(|(&a, &b)| instance.distance(a, b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.iter().sum()
}

/// Uniformly random permutation of `0..n` (Fisher–Yates).
pub fn uniform_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Tours of a fixed instance; reward is the negated tour length.
#[derive(Debug, Clone)]
pub struct TspDomain {
    pub instance: TspInstance,
}

impl DecisionDomain for TspDomain {
    type Decision = Vec<usize>;

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        Ok(uniform_permutation(self.instance.count(), rng))
    }

    fn reward(&self, tour: &Vec<usize>) -> Result<f64> {
        Ok(-tsp_cost(&self.instance, tour)?)
    }

    fn descriptor(&self) -> String {
        format!("tsp/{}-nodes", self.instance.count())
    }
}

/// Costs of every permutation, in lexicographic permutation order.
pub fn all_tour_costs(instance: &TspInstance) -> Vec<f64> {
    let n = instance.count();
    (0..n)
        .permutations(n)
        .map(|p| cost_unchecked(instance, &p))
        .collect()
}

/// Exact fraction of permutations with strictly shorter tours than `tour`.
pub fn exact_violation_fraction(
    instance: &TspInstance,
    tour: &[usize],
    all_costs: &[f64],
) -> Result<f64> {
    let c = tsp_cost(instance, tour)?;
    let better = all_costs.iter().filter(|&&o| o < c).count();
    Ok(better as f64 / all_costs.len() as f64)
}
