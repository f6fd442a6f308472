use riskbound::fixtures::Distribution;
use riskbound::sim::{ControllerParams, SimConfig};
use riskbound::validation::{run_validation, ValidationConfig};
use riskbound::verify_synth::*;
use riskbound::{ConfidenceSpec, SearchConfig};

fn sim() -> Simulator {
    Simulator {
        sim: SimConfig::default(),
    }
}

#[test]
fn collection_is_reproducible() {
    let p = ControllerParams::default();
    let one = collect_robustness(&p, 1, 4, &SimConfig::default()).unwrap();
    assert_eq!(one.len(), 1);
    let a = collect_robustness(&p, 12, 4, &SimConfig::default()).unwrap();
    let b = collect_robustness(&p, 12, 4, &SimConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0], one[0]);
    assert!(a.iter().all(|s| s.value >= -0.1 && -s.value <= 0.1));
    assert!(collect_robustness(&p, 0, 4, &SimConfig::default()).is_err());
}

#[test]
fn verification_campaign_orders_bounds() {
    let spec = ConfidenceSpec::new(0.02, 0.95).unwrap();
    let rep = verify(
        &sim(),
        &ControllerParams::default(),
        0.1,
        spec,
        11,
        &SearchConfig::default(),
    )
    .unwrap();
    assert_eq!(rep.n_used, 149);
    assert!(rep.r_evar >= rep.r_cvar - 1e-6);
    assert!(
        rep.r_cvar <= 0.1 + 1e-9 && rep.r_evar <= 0.1 + 1e-9,
        "{} {}",
        rep.r_cvar,
        rep.r_evar
    );
    assert!(rep.r_cvar >= -rep.robustness_max - 1e-9);
    assert!(rep.confidence >= 0.95);
}

#[test]
fn riskmap_is_deterministic_and_monotone_in_epsilon() {
    let p = ControllerParams {
        p1: 1.2,
        p2: 2.5,
        p3: 0.8,
        p4: 5.0,
    };
    let search = SearchConfig::default();
    let strict = RiskMapSettings::default().query(p).unwrap();
    let a = riskmap(&sim(), &strict, 0.02, 99, &search).unwrap();
    let b = riskmap(&sim(), &strict, 0.02, 99, &search).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let loose = RiskMapQuery {
        gamma1: 0.0,
        ..strict
    };
    let zero = riskmap(&sim(), &loose, 0.0, 99, &search).unwrap();
    assert!(zero <= a + 1e-12, "{zero} > {a}");
}

#[test]
fn synthetic_robustness_is_covered() {
    let cfg = ValidationConfig {
        distribution: Distribution::negated_robustness(),
        trials: 50,
        n: 149,
        epsilon: 0.02,
        alpha: 0.1,
        seed: 2718,
        truth_draws: 20_000,
        search: SearchConfig::default(),
    };
    let rep = run_validation(&cfg).unwrap();
    assert!(
        rep.cvar_covered >= 45,
        "cvar covered {}/50",
        rep.cvar_covered
    );
    assert!(
        rep.evar_covered >= 45,
        "evar covered {}/50",
        rep.evar_covered
    );
}

#[test]
fn simulator_synthesis_smoke() {
    let map = SourceRiskMap {
        source: Simulator {
            sim: SimConfig {
                horizon: 30.0,
                ..SimConfig::default()
            },
        },
        settings: RiskMapSettings {
            gamma1: 0.5,
            alpha: 0.1,
            epsilon_inner: 0.2,
            n_inner: None,
        },
        search: SearchConfig::default(),
    };
    let options = SynthesisOptions {
        candidates: Some(4),
        ..Default::default()
    };
    let spec = ConfidenceSpec::new(0.01, 0.99).unwrap();
    let a = synthesize(&map, spec, 7, &options).unwrap();
    let b = synthesize(&map, spec, 7, &options).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.selection.samples_used, 4);
    let chosen = a.selection.best_decision;
    let again = map.evaluate(&chosen.params, chosen.seed).unwrap();
    assert_eq!(again, a.riskmap);
}
