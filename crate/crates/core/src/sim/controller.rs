//! Go-to-goal law and barrier filter.

use std::f64::consts::PI;

use super::robustness::SAFETY_DISTANCE;
use super::{AgentState, ControllerParams, Point, WorldState, AGENTS};

pub const V_MAX: f64 = 0.2;
pub const OMEGA_MAX: f64 = 3.6;
/// Inside this radius the nominal command is zero.
pub const GOAL_TOLERANCE: f64 = 0.01;
const FILTER_ITERATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub v: f64,
    pub omega: f64,
}

/// Wrap to `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// `v = p1·d·cos e`, `ω = p2·e + p3·sin e·cos e`, saturated.
pub fn nominal_command(agent: &AgentState, goal: Point, params: &ControllerParams) -> Command {
    let dx = goal[0] - agent.x;
    let dy = goal[1] - agent.y;
    let d = dx.hypot(dy);
    if d < GOAL_TOLERANCE {
        return Command { v: 0.0, omega: 0.0 };
    }
    let e = wrap_pi(dy.atan2(dx) - agent.theta);
    let (s, c) = e.sin_cos();
    Command {
        v: (params.p1 * d * c).clamp(0.0, V_MAX),
        omega: (params.p2 * e + params.p3 * s * c).clamp(-OMEGA_MAX, OMEGA_MAX),
    }
}

struct Pair {
    i: usize,
    j: usize,
    h: f64,
    ci: f64,
    cj: f64,
}

fn pairs(world: &WorldState) -> Vec<Pair> {
    let mut out = Vec::with_capacity(3);
    for i in 0..AGENTS {
        for j in i + 1..AGENTS {
            let (a, b) = (&world.agents[i], &world.agents[j]);
            let (dx, dy) = (a.x - b.x, a.y - b.y);
            out.push(Pair {
                i,
                j,
                h: dx * dx + dy * dy - SAFETY_DISTANCE * SAFETY_DISTANCE,
                ci: 2.0 * (dx * a.theta.cos() + dy * a.theta.sin()),
                cj: -2.0 * (dx * b.theta.cos() + dy * b.theta.sin()),
            });
        }
    }
    out
}

fn hdot(p: &Pair, v: &[f64; AGENTS]) -> f64 {
    p.ci * v[p.i] + p.cj * v[p.j]
}

/// Restrict forward speeds so every pair satisfies `ḣ ≥ -k·h` with
/// `h = ‖p_i - p_j‖² - 0.15²` and `k = min(p4, 1/dt)`.
///
/// Each violated pair scales down the speeds of whichever agents are closing
/// in, sweeping over pairs until nothing changes. If that has not settled after
/// a few sweeps, each agent instead takes half of every pair's budget on its
/// own, which holds regardless of the other agents' speeds. Speeds are only
/// ever reduced.
pub fn filter_speeds(
    world: &WorldState,
    nominal: &[f64; AGENTS],
    p4: f64,
    dt: f64,
) -> [f64; AGENTS] {
    let k = p4.min(1.0 / dt);
    let pairs = pairs(world);
    let mut v = *nominal;
    for _ in 0..FILTER_ITERATIONS {
        let mut changed = false;
        for p in &pairs {
            let floor = -k * p.h;
            if hdot(p, &v) >= floor {
                continue;
            }
            let (mut closing, mut opening) = (0.0, 0.0);
            for (c, idx) in [(p.ci, p.i), (p.cj, p.j)] {
                let term = c * v[idx];
                if term < 0.0 {
                    closing += term;
                } else {
                    opening += term;
                }
            }
            let s = ((floor - opening) / closing).clamp(0.0, 1.0);
            for (c, idx) in [(p.ci, p.i), (p.cj, p.j)] {
                if c * v[idx] < 0.0 {
                    v[idx] *= s;
                }
            }
            changed = true;
        }
        if !changed {
            return v;
        }
    }
    if pairs.iter().all(|p| hdot(p, &v) >= -k * p.h) {
        return v;
    }
    let mut v = *nominal;
    for p in &pairs {
        for (c, idx) in [(p.ci, p.i), (p.cj, p.j)] {
            if c < 0.0 {
                v[idx] = v[idx].min((k * p.h / (-2.0 * c)).max(0.0));
            }
        }
    }
    v
}
