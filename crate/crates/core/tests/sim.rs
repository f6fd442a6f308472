use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use riskbound::sim::*;

fn fixture_draw(seed: u64) -> ScenarioDraw {
    ScenarioDraw {
        initial: WorldState::new([
            AgentState::new(-0.8, -0.4, 0.0),
            AgentState::new(0.0, 0.4, 3.0),
            AgentState::new(0.8, -0.4, 1.5),
        ]),
        goals: [[-0.5, 0.3], [0.2, -0.3], [0.7, 0.4]],
        seed,
    }
}

#[test]
fn fixture_rollout_is_safe_and_reaches_goals() {
    let traj = rollout(
        &fixture_draw(0),
        &ControllerParams::default(),
        &SimConfig::noiseless(),
    )
    .unwrap();
    let r = robustness(&traj).unwrap();
    assert!(r >= 0.0, "robustness {r}");
    let last = traj.states.last().unwrap();
    assert!(h_f(last, &traj.draw.goals) >= 0.0);
}

#[test]
fn lone_robot_approaches_goal_monotonically() {
    let world = WorldState::new([
        AgentState::new(-0.25, 0.0, 0.7),
        AgentState::new(0.9, 0.5, 0.0),
        AgentState::new(0.9, -0.5, 0.0),
    ]);
    let goals = [[0.25, 0.0], [0.9, 0.5], [0.9, -0.5]];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut current = world;
    let dist = |w: &WorldState| (w.agents[0].x - 0.25).hypot(w.agents[0].y);
    assert!((dist(&current) - 0.5).abs() < 1e-12);
    for _ in 0..100 {
        let next = step(
            &current,
            &ControllerParams::default(),
            &goals,
            &NoiseModel::None,
            &mut rng,
            0.033,
        );
        assert!(dist(&next) <= dist(&current) + 1e-15);
        current = next;
    }
    assert!(dist(&current) < 0.5);
}

#[test]
fn noise_free_rollouts_keep_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let space = ParamSpace::default();
    let cases: Vec<_> = (0..40)
        .map(|_| (sample_scenario(&mut rng).unwrap(), space.sample(&mut rng)))
        .collect();
    let worst = cases
        .par_iter()
        .map(|(draw, p)| {
            let traj = rollout(draw, p, &SimConfig::noiseless()).unwrap();
            traj.states.iter().map(h_g).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    assert!(worst >= -1e-3, "min separation margin {worst}");
}

#[test]
fn euler_converges_at_first_order() {
    let draw = fixture_draw(0);
    let params = ControllerParams::default();
    let final_state = |dt: f64| {
        let cfg = SimConfig {
            dt,
            horizon: 4.0,
            noise: NoiseModel::None,
        };
        let traj = rollout(&draw, &params, &cfg).unwrap();
        let s = traj.states.last().unwrap();
        assert!((s.time - 4.0).abs() < 1e-9);
        s.positions()
    };
    let reference = final_state(0.04 / 64.0);
    let err = |dt: f64| {
        let p = final_state(dt);
        p.iter()
            .zip(&reference)
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(0.04), err(0.02), err(0.01));
    let order_a = (e1 / e2).log2();
    let order_b = (e2 / e3).log2();
    assert!(
        order_a >= 0.8 && order_b >= 0.8,
        "orders {order_a} {order_b} from {e1} {e2} {e3}"
    );
}

#[test]
fn rollouts_are_identical_across_threads() {
    let draw = fixture_draw(5);
    let params = ControllerParams {
        p1: 2.0,
        p2: 3.0,
        p3: 0.5,
        p4: 40.0,
    };
    let serial = rollout(&draw, &params, &SimConfig::default()).unwrap();
    let parallel: Vec<_> = (0..8)
        .into_par_iter()
        .map(|_| rollout(&draw, &params, &SimConfig::default()).unwrap())
        .collect();
    assert!(parallel.iter().all(|t| *t == serial));
    let other = rollout(&fixture_draw(6), &params, &SimConfig::default()).unwrap();
    assert_ne!(other.states, serial.states);
}

#[test]
fn scenario_acceptance_rate_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 2000;
    let attempts: usize = (0..trials)
        .map(|_| sample_separated_points(&mut rng).unwrap().1)
        .sum();
    let rate = trials as f64 / attempts as f64;
    assert!(rate > 0.01, "acceptance rate {rate}");
    assert!(
        (0.46..0.54).contains(&rate),
        "acceptance rate {rate} left its regression band"
    );
}

fn margin() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(-0.1), Just(0.1), -1.0f64..1.0]
}

proptest! {
    #[test]
    fn robustness_range_and_sign(rho_g in margin(), rho_f in margin()) {
        let r = robustness_from_margins(rho_g, rho_f);
        prop_assert!(r >= -0.1);
        prop_assert!(r <= rho_g.max(-0.1));
        prop_assert_eq!(r >= 0.0, rho_g >= 0.0 && rho_f >= 0.0);
        let branches = [
            rho_g >= 0.0 && rho_f >= 0.0,
            rho_g < 0.0,
            rho_g >= 0.0 && rho_f < 0.0,
        ];
        prop_assert_eq!(branches.iter().filter(|b| **b).count(), 1);
    }

    #[test]
    fn noisy_steps_stay_in_arena(seed in any::<u64>(), p1 in 0.2f64..5.0, p4 in 0.1f64..200.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = sample_scenario(&mut rng).unwrap();
        let params = ControllerParams { p1, p2: 2.0, p3: 1.0, p4 };
        let noise = NoiseModel::Uniform { half_width: 0.05 };
        let mut w = draw.initial;
        for _ in 0..60 {
            w = step(&w, &params, &draw.goals, &noise, &mut rng, 0.033);
            for a in &w.agents {
                prop_assert!(a.x.abs() <= 1.0 && a.y.abs() <= 0.6);
                prop_assert!((0.0..std::f64::consts::TAU).contains(&a.theta));
            }
        }
        let r = robustness_from_margins(h_g(&w), h_f(&w, &draw.goals));
        prop_assert!(r <= (2f64.powi(2) + 1.2f64.powi(2)).sqrt());
    }
}
