//! Seeded simulator of three unicycle robots driving to individual goals under
//! a parameterized go-to-goal law and a barrier-based collision filter.
//!
//! Arena: `x ∈ [-1, 1]`, `y ∈ [-0.6, 0.6]` (meters), heading `θ ∈ [0, 2π)`.

pub mod controller;
pub mod robustness;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use controller::{filter_speeds, nominal_command, Command};
pub use robustness::{h_f, h_g, robustness, robustness_from_margins};

pub const AGENTS: usize = 3;
pub const X_LIMIT: f64 = 1.0;
pub const Y_LIMIT: f64 = 0.6;
/// Minimum separation margin for initial poses and goals.
pub const SCENARIO_MARGIN: f64 = 0.3;
pub const REJECTION_CAP: usize = 100_000;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agents: [AgentState; AGENTS],
    pub time: f64,
}

impl WorldState {
    pub fn new(agents: [AgentState; AGENTS]) -> Self {
        Self { agents, time: 0.0 }
    }

    pub fn positions(&self) -> [Point; AGENTS] {
        self.agents.map(|a| a.position())
    }
}

/// Controller parameters: go-to-goal gains `p1..p3` and barrier decay `p4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            p1: 1.0,
            p2: 2.0,
            p3: 1.0,
            p4: 10.0,
        }
    }
}

impl ControllerParams {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self {
            p1: p[0],
            p2: p[1],
            p3: p[2],
            p4: p[3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        ParamSpace::default().check(self)
    }
}

/// Axis-aligned box of controller parameters inside
/// `P = [0.2, 5]^3 × [0.1, 200]`. A box may collapse to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpace {
    pub lower: [f64; 4],
    pub upper: [f64; 4],
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self {
            lower: [0.2, 0.2, 0.2, 0.1],
            upper: [5.0, 5.0, 5.0, 200.0],
        }
    }
}

impl ParamSpace {
    pub fn point(p: ControllerParams) -> Self {
        Self {
            lower: p.as_array(),
            upper: p.as_array(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let full = ParamSpace::default();
        for k in 0..4 {
            let (lo, hi) = (self.lower[k], self.upper[k]);
            if !(lo <= hi && lo >= full.lower[k] && hi <= full.upper[k]) {
                return Err(Error::invalid(format!(
                    "parameter box for p{} must satisfy {} <= lower <= upper <= {}, got [{lo}, {hi}]",
                    k + 1,
                    full.lower[k],
                    full.upper[k]
                )));
            }
        }
        Ok(())
    }

    pub fn check(&self, p: &ControllerParams) -> Result<()> {
        for (k, v) in p.as_array().into_iter().enumerate() {
            if !(v >= self.lower[k] && v <= self.upper[k]) {
                return Err(Error::invalid(format!(
                    "p{} = {v} outside [{}, {}]",
                    k + 1,
                    self.lower[k],
                    self.upper[k]
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ControllerParams {
        let mut p = [0.0; 4];
        for k in 0..4 {
            p[k] = if self.lower[k] == self.upper[k] {
                self.lower[k]
            } else {
                rng.random_range(self.lower[k]..self.upper[k])
            };
        }
        ControllerParams::from_array(p)
    }
}

/// Additive per-step position noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    None,
    /// Zero-mean Gaussian per axis, resampled until within `truncation * sigma`.
    Gaussian {
        sigma: f64,
        truncation: f64,
    },
    Uniform {
        half_width: f64,
    },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian {
            sigma: 0.002,
            truncation: 3.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { sigma, truncation } if sigma > 0.0 && truncation > 0.0 => Ok(()),
            NoiseModel::Uniform { half_width } if half_width > 0.0 => Ok(()),
            other => Err(Error::invalid(format!("invalid noise model {other:?}"))),
        }
    }

    /// Largest per-axis displacement the model can produce.
    pub fn max_abs(&self) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma, truncation } => sigma * truncation,
            NoiseModel::Uniform { half_width } => half_width,
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            NoiseModel::None => 0.0,
            NoiseModel::Gaussian { sigma, truncation } => {
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                loop {
                    let v: f64 = normal.sample(rng);
                    if v.abs() <= truncation * sigma {
                        return v;
                    }
                }
            }
            NoiseModel::Uniform { half_width } => rng.random_range(-half_width..=half_width),
        }
    }
}

/// Integration step, horizon and noise for a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub noise: NoiseModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.033,
            horizon: robustness::HORIZON,
            noise: NoiseModel::default(),
        }
    }
}

impl SimConfig {
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseModel::None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        self.noise.validate()
    }

    /// Number of integration steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil() as usize
    }
}

/// Initial poses, goals, and the seed of the rollout's noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDraw {
    pub initial: WorldState,
    pub goals: [Point; AGENTS],
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub timestep: f64,
    pub states: Vec<WorldState>,
    pub params: ControllerParams,
    pub draw: ScenarioDraw,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.time)
    }
}

fn min_pairwise_distance(points: &[Point; AGENTS]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..AGENTS {
        for j in i + 1..AGENTS {
            best = best.min((points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]));
        }
    }
    best
}

fn uniform_point(rng: &mut impl Rng) -> Point {
    [
        rng.random_range(-X_LIMIT..=X_LIMIT),
        rng.random_range(-Y_LIMIT..=Y_LIMIT),
    ]
}

/// Rejection-sample three planar points with `min distance - 0.15 >= 0.3`.
/// Returns the points and the number of attempts used.
pub fn sample_separated_points(rng: &mut impl Rng) -> Result<([Point; AGENTS], usize)> {
    for attempt in 1..=REJECTION_CAP {
        let pts = [uniform_point(rng), uniform_point(rng), uniform_point(rng)];
        if min_pairwise_distance(&pts) - robustness::SAFETY_DISTANCE >= SCENARIO_MARGIN {
            return Ok((pts, attempt));
        }
    }
    Err(Error::Search(format!(
        "no separated configuration within {REJECTION_CAP} attempts"
    )))
}

/// Uniform draw of initial poses and goals, both with `h_g >= 0.3`.
pub fn sample_scenario(rng: &mut impl Rng) -> Result<ScenarioDraw> {
    let (starts, _) = sample_separated_points(rng)?;
    let agents = starts.map(|[x, y]| AgentState::new(x, y, rng.random_range(0.0..TAU)));
    let (goals, _) = sample_separated_points(rng)?;
    Ok(ScenarioDraw {
        initial: WorldState::new(agents),
        goals,
        seed: rng.random(),
    })
}

fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// One explicit-Euler step of the closed loop: nominal command, barrier filter,
/// unicycle kinematics, additive noise, arena clamp.
pub fn step(
    world: &WorldState,
    params: &ControllerParams,
    goals: &[Point; AGENTS],
    noise: &NoiseModel,
    noise_rng: &mut ChaCha8Rng,
    dt: f64,
) -> WorldState {
    let nominal: [Command; AGENTS] =
        std::array::from_fn(|i| nominal_command(&world.agents[i], goals[i], params));
    let speeds = filter_speeds(world, &nominal.map(|c| c.v), params.p4, dt);
    let mut next = *world;
    for (i, agent) in next.agents.iter_mut().enumerate() {
        let v = speeds[i];
        let (s, c) = agent.theta.sin_cos();
        let nx = agent.x + v * c * dt + noise.draw(noise_rng);
        let ny = agent.y + v * s * dt + noise.draw(noise_rng);
        agent.x = nx.clamp(-X_LIMIT, X_LIMIT);
        agent.y = ny.clamp(-Y_LIMIT, Y_LIMIT);
        agent.theta = wrap_angle(agent.theta + nominal[i].omega * dt);
    }
    next.time = world.time + dt;
    next
}

/// Closed-loop rollout from `draw` under `params`. Bit-identical for equal
/// `(draw, params, config)`.
pub fn rollout(
    draw: &ScenarioDraw,
    params: &ControllerParams,
    config: &SimConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let steps = config.steps();
    let mut rng = ChaCha8Rng::seed_from_u64(draw.seed);
    let mut states = Vec::with_capacity(steps + 1);
    let mut current = draw.initial;
    current.time = 0.0;
    states.push(current);
    for k in 1..=steps {
        let mut next = step(
            &current,
            params,
            &draw.goals,
            &config.noise,
            &mut rng,
            config.dt,
        );
        next.time = k as f64 * config.dt;
        states.push(next);
        current = next;
    }
    Ok(Trajectory {
        timestep: config.dt,
        states,
        params: *params,
        draw: *draw,
    })
}
