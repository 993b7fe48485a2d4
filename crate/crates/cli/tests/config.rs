use serde_json::{json, Value};

use adaptctl_cli::bundled::{self, BUNDLED};
use adaptctl_cli::config::{validate_value, Scenario};
use adaptctl_cli::{emit, validate_str};

fn bundled_value(name: &str) -> Value {
    serde_json::from_str(bundled::text(name).unwrap()).unwrap()
}

fn errors(v: &Value) -> Vec<String> {
    validate_value(v).expect_err("config should be rejected")
}

fn minimal_mrac() -> Value {
    json!({
        "name": "minimal",
        "kind": "mrac_state",
        "plant": { "a": [[0.0, 1.0], [4.0, -1.0]], "b": [0.0, 1.0] },
        "reference": { "a_m": [[0.0, 1.0], [-4.0, -4.0]], "b_m": [0.0, 4.0] },
        "controller": { "gamma": 1.0, "gamma_k": 1.0 },
        "input": { "kind": "constant", "value": 1.0 },
        "sim": { "horizon": 1.0, "step": 0.01 }
    })
}

#[test]
fn minimal_mrac_config_parses() {
    let cfg = validate_value(&minimal_mrac()).unwrap();
    assert_eq!(cfg.scenario.kind(), "mrac_state");
    assert!(cfg.criteria.is_empty());
    assert_eq!(cfg.sim.decimate, 1);
}

#[test]
fn every_bundled_scenario_validates() {
    assert!(BUNDLED.len() >= 8);
    for (name, text) in BUNDLED {
        let cfg = validate_str(text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(&cfg.name, name);
        assert!(!cfg.criteria.is_empty(), "{name} declares no criteria");
    }
}

#[test]
fn narrative_scenarios_are_bundled() {
    for name in ["convergence", "drift", "drift_sigma", "bursting", "saturation", "minmax", "observer", "str"] {
        assert!(bundled::text(name).is_some(), "{name}");
    }
}

#[test]
fn emit_round_trips() {
    for (name, text) in BUNDLED {
        let cfg = validate_str(text).unwrap();
        let back = validate_str(&emit(&cfg)).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(back, cfg, "{name}");
    }
}

#[test]
fn str_gamma_outside_open_interval() {
    for g in [3.0, 2.0, 0.0] {
        let mut v = bundled_value("str");
        v["controller"]["gamma"] = json!(g);
        let errs = errors(&v);
        assert_eq!(errs.len(), 1, "{errs:?}");
        assert!(errs[0].contains("(0, 2)"), "{errs:?}");
    }
}

#[test]
fn two_missing_fields_reported_together() {
    let mut v = minimal_mrac();
    v["controller"].as_object_mut().unwrap().remove("gamma");
    v["sim"].as_object_mut().unwrap().remove("step");
    let errs = errors(&v);
    assert_eq!(errs.len(), 2, "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("controller.gamma")));
    assert!(errs.iter().any(|e| e.contains("sim.step")));
}

#[test]
fn ill_typed_fields_in_separate_blocks_reported_together() {
    let mut v = minimal_mrac();
    v["controller"]["gamma_k"] = json!("fast");
    v["sim"]["decimate"] = json!(-1);
    let errs = errors(&v);
    assert_eq!(errs.len(), 2, "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("`controller`")));
    assert!(errs.iter().any(|e| e.contains("`sim`")));
}

#[test]
fn spr_of_relative_degree_two_model_is_a_validation_error() {
    let mut v = bundled_value("spr_output");
    v["reference"] = json!({ "num": [1.0], "den": [1.0, 2.0, 1.0] });
    let errs = errors(&v);
    assert!(errs.iter().any(|e| e.contains("SPR")), "{errs:?}");

    let mut v = bundled_value("augmented");
    v["analysis"] = json!({ "certificates": [{ "certificate": "spr" }] });
    let errs = errors(&v);
    assert!(errs.iter().any(|e| e.contains("relative degree 2")), "{errs:?}");
}

#[test]
fn unknown_kind_and_field() {
    let mut v = minimal_mrac();
    v["kind"] = json!("pid");
    v["extra"] = json!(1);
    let errs = errors(&v);
    assert!(errs.iter().any(|e| e.contains("unknown scenario kind `pid`")));
    assert!(errs.iter().any(|e| e.contains("unknown field `extra`")));
}

#[test]
fn hyphenated_estimator_kind_is_accepted() {
    let mut v = bundled_value("estimator_rls");
    v["kind"] = json!("estimator-only");
    let cfg = validate_value(&v).unwrap();
    assert!(matches!(cfg.scenario, Scenario::EstimatorOnly { .. }));
}

#[test]
fn discrete_horizon_must_be_whole_steps() {
    let mut v = bundled_value("str");
    v["sim"]["horizon"] = json!(10.5);
    assert!(errors(&v).iter().any(|e| e.contains("horizon")));
}

#[test]
fn negative_noise_bound_and_duplicate_criteria() {
    let mut v = bundled_value("drift");
    v["disturbance"]["vmax"] = json!(-0.1);
    let c = v["criteria"][0].clone();
    v["criteria"].as_array_mut().unwrap().push(c);
    let errs = errors(&v);
    assert_eq!(errs.len(), 2, "{errs:?}");
}

#[test]
fn log_family_box_must_exclude_minus_one() {
    let mut v = bundled_value("minmax");
    v["plant"]["family"] = json!("log");
    v["plant"]["theta_lo"] = json!(-1.5);
    assert!(!errors(&v).is_empty());
}

#[test]
fn inner_excitation_window_defaults_to_full_window() {
    let mut v = bundled_value("pe_robust");
    v["analysis"]["certificates"][1].as_object_mut().unwrap().remove("delta0");
    let cfg = validate_value(&v).unwrap();
    assert!(emit(&cfg).contains("pe_robustness"));
    assert!(!emit(&cfg).contains("delta0"));
}
