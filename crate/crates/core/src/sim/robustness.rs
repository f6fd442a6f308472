//! Safety and goal margins, and the scalar robustness of a trajectory.

use super::{Point, Trajectory, WorldState, AGENTS};
use crate::error::{Error, Result};

pub const SAFETY_DISTANCE: f64 = 0.15;
pub const GOAL_RADIUS: f64 = 0.1;
/// Lower clamp of the robustness value.
pub const FLOOR: f64 = -0.1;
/// Shortest trajectory the robustness is defined on, seconds.
pub const HORIZON: f64 = 30.0;

/// Smallest pairwise planar distance minus 0.15.
pub fn h_g(world: &WorldState) -> f64 {
    let p = world.positions();
    let mut best = f64::INFINITY;
    for i in 0..AGENTS {
        for j in i + 1..AGENTS {
            best = best.min((p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]));
        }
    }
    best - SAFETY_DISTANCE
}

/// Largest `0.1 - distance to goal` over agents.
pub fn h_f(world: &WorldState, goals: &[Point; AGENTS]) -> f64 {
    world
        .agents
        .iter()
        .zip(goals)
        .map(|(a, g)| GOAL_RADIUS - (a.x - g[0]).hypot(a.y - g[1]))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Combine `ρ_g = min h_g` and `ρ_f = max h_f` into one value:
/// `ρ_g` when both are nonnegative, otherwise the failing margin floored at -0.1
/// (the safety margin takes precedence).
pub fn robustness_from_margins(rho_g: f64, rho_f: f64) -> f64 {
    if rho_g >= 0.0 && rho_f >= 0.0 {
        rho_g
    } else if rho_g < 0.0 {
        rho_g.max(FLOOR)
    } else {
        rho_f.max(FLOOR)
    }
}

/// Robustness over the discrete state sequence of a trajectory spanning at
/// least 30 s.
pub fn robustness(traj: &Trajectory) -> Result<f64> {
    if traj.states.is_empty() || traj.final_time() < HORIZON - 1e-9 {
        return Err(Error::invalid(format!(
            "trajectory covers {} s, robustness needs {HORIZON} s",
            traj.final_time()
        )));
    }
    let rho_g = traj.states.iter().map(h_g).fold(f64::INFINITY, f64::min);
    let rho_f = traj
        .states
        .iter()
        .map(|s| h_f(s, &traj.draw.goals))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(robustness_from_margins(rho_g, rho_f))
}

#[cfg(test)]
mod tests {
    use super::super::{AgentState, ControllerParams, ScenarioDraw};
    use super::*;

    fn at(points: [Point; 3]) -> WorldState {
        WorldState::new(points.map(|[x, y]| AgentState::new(x, y, 0.0)))
    }

    fn constant_trajectory(world: WorldState, goals: [Point; 3], secs: f64) -> Trajectory {
        let dt = 0.5;
        let states = (0..=(secs / dt) as usize)
            .map(|k| WorldState {
                time: k as f64 * dt,
                ..world
            })
            .collect();
        Trajectory {
            timestep: dt,
            states,
            params: ControllerParams::default(),
            draw: ScenarioDraw {
                initial: world,
                goals,
                seed: 0,
            },
        }
    }

    #[test]
    fn h_g_examples() {
        assert!((h_g(&at([[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]])) - 0.35).abs() < 1e-12);
        assert_eq!(h_g(&at([[0.2, 0.1], [0.2, 0.1], [0.9, 0.5]])), -0.15);
        let s = 0.15;
        let tri = at([[0.0, 0.0], [s, 0.0], [s / 2.0, s * 3f64.sqrt() / 2.0]]);
        assert!(h_g(&tri).abs() < 1e-12);
    }

    #[test]
    fn h_f_examples() {
        let w = at([[0.0, 0.0], [0.5, 0.0], [-0.5, 0.0]]);
        assert_eq!(h_f(&w, &[[0.0, 0.0], [0.5, 0.4], [-0.5, -0.4]]), 0.1);
        assert!((h_f(&w, &[[1.0, 0.0], [0.5, 1.0], [-0.5, -1.0]]) + 0.9).abs() < 1e-12);
        let got = h_f(&w, &[[0.05, 0.0], [0.5, 0.2], [-0.5, 0.3]]);
        assert!((got - 0.05).abs() < 1e-12);
    }

    #[test]
    fn robustness_examples() {
        let goals = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]];
        let w = at([[0.0, 0.0], [1.0, 0.0], [0.0, 0.35]]);
        let r = robustness(&constant_trajectory(w, goals, 30.0)).unwrap();
        assert!((r - 0.2).abs() < 1e-12);

        let crash = at([[0.0, 0.0], [0.0, 0.0], [0.8, 0.4]]);
        assert_eq!(
            robustness(&constant_trajectory(crash, goals, 30.0)).unwrap(),
            -0.1
        );

        let far = at([[-0.5, 0.0], [0.5, 0.0], [0.0, 0.5]]);
        let goals = [[-0.5, 0.5], [0.5, 0.5], [0.0, -0.1]];
        assert_eq!(
            robustness(&constant_trajectory(far, goals, 30.0)).unwrap(),
            -0.1
        );
        assert_eq!(robustness_from_margins(0.3, -0.4), -0.1);
        assert_eq!(robustness_from_margins(0.3, -0.05), -0.05);
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let w = at([[0.0, 0.0], [1.0, 0.0], [0.0, 0.5]]);
        let err = robustness(&constant_trajectory(w, [[0.0, 0.0]; 3], 10.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
