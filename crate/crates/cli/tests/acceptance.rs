//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use common::{cvar_bound_oracle, evar_bound_oracle, rel_err};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riskbound::decision_select::good_decision;
use riskbound::decision_select::tsp::{
    all_tour_costs, exact_violation_fraction, TspDomain, TspInstance,
};
use riskbound::fixtures::Distribution;
use riskbound::risk_core::{empirical_cvar, empirical_evar, empirical_var, min_samples};
use riskbound::sim::robustness::SAFETY_DISTANCE;
use riskbound::sim::{h_g, rollout, sample_scenario, ControllerParams, NoiseModel, SimConfig};
use riskbound::validation::{run_validation, ValidationConfig};
use riskbound::verify_synth::{
    riskmap_violation_fraction, synthesize, SurrogateRiskMap, SynthesisOptions,
};
use riskbound::{
    bound_cvar, bound_evar, seeding, ConfidenceSpec, EssentialBound, SampleSet, SearchConfig,
};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

struct Instance {
    samples: SampleSet,
    ell: f64,
    epsilon: f64,
    alpha: f64,
}

fn random_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let scale = 10f64.powf(rng.random_range(-1.0..1.5));
            let n = rng.random_range(1..=300);
            let v: Vec<f64> = (0..n)
                .map(|_| scale * rng.random_range(-1.0..1.0))
                .collect();
            let samples = SampleSet::new(v).unwrap();
            let ell = samples.max() + scale * 10f64.powf(rng.random_range(-3.0..1.0));
            Instance {
                samples,
                ell,
                epsilon: rng.random_range(0.001..0.3),
                alpha: rng.random_range(0.01..=1.0),
            }
        })
        .collect()
}

fn sample_complexity() -> Outcome {
    let table = [
        (0.95, 0.02, 149),
        (0.95, 0.01, 299),
        (1.0 - 1e-6, 0.05, 270),
        (0.99, 0.01, 459),
    ];
    for (gamma, eps, want) in table {
        let got = min_samples(ConfidenceSpec::new(eps, gamma).unwrap()).unwrap();
        if got != want {
            return Err(format!(
                "(gamma {gamma}, eps {eps}) gave {got}, want {want}"
            ));
        }
    }
    Ok("149, 299, 270, 459".into())
}

fn oracle_equivalence(evar: bool) -> Outcome {
    let cfg = SearchConfig::default();
    let mut worst = 0.0f64;
    for (k, inst) in random_instances(500, if evar { 2 } else { 1 })
        .iter()
        .enumerate()
    {
        let ell = EssentialBound::new(inst.ell).unwrap();
        let x = inst.samples.max();
        let (got, want) = if evar {
            let r = bound_evar(&inst.samples, ell, inst.alpha, inst.epsilon, &cfg)
                .map_err(|e| e.to_string())?;
            (
                r.bound,
                evar_bound_oracle(x, inst.ell, inst.epsilon, inst.alpha),
            )
        } else {
            let r = bound_cvar(&inst.samples, ell, inst.alpha, inst.epsilon, &cfg)
                .map_err(|e| e.to_string())?;
            (
                r.bound,
                cvar_bound_oracle(x, inst.ell, inst.epsilon, inst.alpha),
            )
        };
        let err = rel_err(got, want);
        worst = worst.max(err);
        if err > 1e-4 {
            return Err(format!(
                "instance {k}: {got} vs oracle {want} (rel err {err:.2e})"
            ));
        }
    }
    Ok(format!("500 instances, max rel err {worst:.2e}"))
}

fn orderings() -> Outcome {
    let cfg = SearchConfig::default();
    let instances = random_instances(500, 3);
    for (k, inst) in instances.iter().enumerate() {
        let s = &inst.samples;
        let var = empirical_var(s, inst.alpha).unwrap();
        let cvar = empirical_cvar(s, inst.alpha).unwrap();
        let evar = empirical_evar(s, inst.alpha).unwrap();
        let tol = 1e-9 * s.max().abs().max(1.0);
        if var > cvar + tol || cvar > evar + tol {
            return Err(format!("instance {k}: VaR {var} CVaR {cvar} EVaR {evar}"));
        }
        let ell = EssentialBound::new(inst.ell).unwrap();
        let rc = bound_cvar(s, ell, inst.alpha, inst.epsilon, &cfg)
            .unwrap()
            .bound;
        let re = bound_evar(s, ell, inst.alpha, inst.epsilon, &cfg)
            .unwrap()
            .bound;
        if re < rc - 1e-6 {
            return Err(format!("instance {k}: EVaR bound {re} < CVaR bound {rc}"));
        }
    }
    Ok("500 instances: VaR <= CVaR <= EVaR and r_E >= r_C - 1e-6".into())
}

fn coverage() -> Outcome {
    let cfg = ValidationConfig {
        distribution: Distribution::multimodal(),
        trials: 50,
        n: 149,
        epsilon: 0.02,
        alpha: 0.1,
        seed: 20240,
        truth_draws: 20_000,
        search: SearchConfig::default(),
    };
    let rep = run_validation(&cfg).map_err(|e| e.to_string())?;
    let detail = format!("CVaR {}/50, EVaR {}/50", rep.cvar_covered, rep.evar_covered);
    if rep.cvar_covered >= 45 && rep.evar_covered >= 45 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tsp_percentile() -> Outcome {
    let spec = ConfidenceSpec::new(0.05, 0.9).unwrap();
    let campaigns = 200;
    let mut hits = 0;
    for c in 0..campaigns {
        let inst =
            TspInstance::random(7, &mut seeding::stream(seeding::labelled(c, "instance"), 0))
                .unwrap();
        let costs = all_tour_costs(&inst);
        let domain = TspDomain { instance: inst };
        let rep = good_decision(&domain, spec, c).map_err(|e| e.to_string())?;
        let vf = exact_violation_fraction(&domain.instance, &rep.best_decision, &costs).unwrap();
        if vf <= 0.05 {
            hits += 1;
        }
    }
    let fraction = hits as f64 / campaigns as f64;
    let threshold = 0.9 - 3.0 * (0.9f64 * 0.1 / campaigns as f64).sqrt();

    let demo = TspDomain {
        instance: TspInstance::random(9, &mut ChaCha8Rng::seed_from_u64(1)).unwrap(),
    };
    let rep = good_decision(&demo, ConfidenceSpec::new(0.01, 0.95).unwrap(), 42)
        .map_err(|e| e.to_string())?;
    let demo_vf = exact_violation_fraction(
        &demo.instance,
        &rep.best_decision,
        &all_tour_costs(&demo.instance),
    )
    .unwrap();
    let detail = format!(
        "{hits}/{campaigns} = {fraction:.3} (threshold {threshold:.3}); 9-node demo N={} cost {:.4} exact VF {demo_vf:.2e}",
        rep.samples_used, -rep.best_reward
    );
    if fraction >= threshold && rep.samples_used == 299 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulator_safety() -> Outcome {
    let sim = SimConfig {
        noise: NoiseModel::None,
        ..SimConfig::default()
    };
    let params = ControllerParams::default();
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let draw = sample_scenario(&mut seeding::stream(77, k)).map_err(|e| e.to_string())?;
        let traj = rollout(&draw, &params, &sim).map_err(|e| e.to_string())?;
        for state in &traj.states {
            worst = worst.min(h_g(state) + SAFETY_DISTANCE);
        }
    }
    let detail = format!("100 noise-free rollouts, min pairwise distance {worst:.5} m");
    if worst >= SAFETY_DISTANCE - 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn surrogate_synthesis() -> Outcome {
    let map = SurrogateRiskMap { noise: 0.01 };
    let spec = ConfidenceSpec::new(0.01, 0.99).unwrap();
    let options = SynthesisOptions::default();
    let audit_trials = 2000;
    let se = (0.01f64 * 0.99 / audit_trials as f64).sqrt();
    let threshold = 0.01 + 3.0 * se;
    let mut passed = 0;
    let mut worst = 0.0f64;
    for c in 0..20u64 {
        let rep = synthesize(&map, spec, 1000 + c, &options).map_err(|e| e.to_string())?;
        if rep.selection.samples_used != 459 {
            return Err(format!(
                "campaign {c} used {} candidates",
                rep.selection.samples_used
            ));
        }
        let chosen = rep.selection.best_decision;
        let seed = seeding::labelled(1000 + c, "audit");
        let vf = riskmap_violation_fraction(&map, options.space, &chosen, audit_trials, seed)
            .map_err(|e| e.to_string())?;
        worst = worst.max(vf.fraction);
        if vf.fraction <= threshold {
            passed += 1;
        }
    }
    let detail = format!("{passed}/20 campaigns with VF <= {threshold:.4}, worst VF {worst:.4}");
    if passed >= 19 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cli(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_riskbound"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(out)
    } else {
        Err(format!(
            "{args:?} exited {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn full_synthesis() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let hist = dir.path().join("robustness_histogram.csv");
    let report = dir.path().join("synthesis.json");
    let started = Instant::now();
    cli(&[
        "--output",
        report.to_str().unwrap(),
        "synthesize",
        "--seed",
        "2024",
        "--histogram",
        hist.to_str().unwrap(),
    ])?;
    let elapsed = started.elapsed();
    let text = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
    let rep: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let used = &rep["outputs"]["synthesis"]["selection"]["samples_used"];
    let riskmap = &rep["outputs"]["synthesis"]["riskmap"];
    let csv = std::fs::read_to_string(&hist).map_err(|e| e.to_string())?;
    let total: usize = csv
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').nth(1)?.parse::<usize>().ok())
        .sum();
    let detail = format!(
        "{used} candidates x 149 rollouts in {:.1} s, riskmap {riskmap}, histogram of {total} values",
        elapsed.as_secs_f64()
    );
    if used == 459
        && total == 149
        && csv.starts_with("value,count")
        && elapsed < Duration::from_secs(7200)
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn replayability() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let samples = dir.path().join("samples.csv");
    std::fs::write(&samples, "0.3\n-1.25\n0.7\n0.1\n").map_err(|e| e.to_string())?;
    let s = samples.to_str().unwrap();
    let campaigns: Vec<(&str, Vec<&str>)> = vec![
        (
            "bound",
            vec![
                "bound",
                "--kind",
                "evar",
                "--samples",
                s,
                "--ell",
                "2",
                "--epsilon",
                "0.05",
                "--alpha",
                "0.2",
            ],
        ),
        (
            "validate",
            vec!["validate", "--seed", "9", "--trials", "10"],
        ),
        (
            "tsp",
            vec![
                "tsp",
                "--nodes",
                "8",
                "--seed",
                "9",
                "--audit",
                "exhaustive",
            ],
        ),
        ("verify", vec!["verify", "--seed", "9"]),
        (
            "synthesize",
            vec!["synthesize", "--seed", "9", "--surrogate-noise", "0.01"],
        ),
        (
            "synthesize-crn",
            vec!["synthesize", "--seed", "9", "--candidates", "5", "--crn"],
        ),
        ("simulate", vec!["simulate", "--seed", "9"]),
    ];
    for (name, args) in &campaigns {
        let path = dir.path().join(format!("{name}.json"));
        let mut full = vec!["--output", path.to_str().unwrap()];
        full.extend(args);
        cli(&full)?;
        cli(&["--workers", "1", "replay", path.to_str().unwrap()])
            .map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!(
        "{} campaign reports replayed bitwise",
        campaigns.len()
    ))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("sample-complexity table", sample_complexity),
        ("CVaR bound oracle equivalence", || {
            oracle_equivalence(false)
        }),
        ("EVaR bound oracle equivalence", || oracle_equivalence(true)),
        ("risk-measure and bound ordering", orderings),
        ("coverage frequency", coverage),
        ("TSP percentile guarantee", tsp_percentile),
        ("simulator safety", simulator_safety),
        ("surrogate synthesis percentile audit", surrogate_synthesis),
        ("full-simulator synthesis with histogram", full_synthesis),
        ("replayability", replayability),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
