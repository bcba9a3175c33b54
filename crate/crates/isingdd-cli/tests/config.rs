use isingdd::network::GraphKind;
use isingdd::sequences::GateKind;
use isingdd_cli::config::{default_targets, parse_graph, parse_pulse, ExperimentConfig};
use isingdd_cli::CliError;
use jsonschema::{Draft, JSONSchema};
use serde_json::{json, Value};
use std::path::PathBuf;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema() -> JSONSchema {
    let text = std::fs::read_to_string(root().join("schemas/experiment.schema.json")).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    JSONSchema::options().with_draft(Draft::Draft7).compile(&value).unwrap()
}

fn minimal() -> Value {
    json!({
        "name": "t",
        "gate": {"kind": "cnot"},
        "series": [{"label": "a", "graph": {"kind": "chain", "n": 2}, "pulse": {"order": 0}}],
        "delta_grid": [0.0, 0.1],
        "disorder": {"seed": 1, "num_draws": 2},
        "output": {"dir": "out"}
    })
}

#[test]
fn shipped_configs_match_the_schema() {
    let s = schema();
    let mut seen = 0;
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let value: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        if let Err(errors) = s.validate(&value) {
            let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
            panic!("{}: {msgs:?}", path.display());
        }
        ExperimentConfig::load(&path).unwrap();
        seen += 1;
    }
    assert!(seen >= 2);
}

#[test]
fn schema_and_parser_agree_on_rejections() {
    let s = schema();
    let cases: Vec<(&str, Box<dyn Fn(&mut Value)>)> = vec![
        ("unknown top-level key", Box::new(|v| v["extra"] = json!(1))),
        ("unknown gate kind", Box::new(|v| v["gate"]["kind"] = json!("toffoli"))),
        ("missing disorder", Box::new(|v| drop(v.as_object_mut().unwrap().remove("disorder")))),
        ("both pulse sources", Box::new(|v| v["series"][0]["pulse"]["shapes"] = json!("s.json"))),
        ("neither pulse source", Box::new(|v| v["series"][0]["pulse"] = json!({}))),
        ("empty grid", Box::new(|v| v["delta_grid"] = json!([]))),
        ("negative grid entry", Box::new(|v| v["delta_grid"] = json!([-0.1]))),
        ("no draws", Box::new(|v| v["disorder"]["num_draws"] = json!(0))),
        ("label with a slash", Box::new(|v| v["series"][0]["label"] = json!("a/b"))),
        ("unknown graph key", Box::new(|v| v["series"][0]["graph"]["size"] = json!(3))),
    ];
    assert!(s.is_valid(&minimal()));
    ExperimentConfig::from_json(&minimal().to_string()).unwrap();
    for (what, edit) in cases {
        let mut v = minimal();
        edit(&mut v);
        assert!(!s.is_valid(&v), "schema accepted: {what}");
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{what}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn parser_checks_beyond_the_schema() {
    let mut v = minimal();
    v["series"] = json!([
        {"label": "a", "graph": {"kind": "chain", "n": 2}, "pulse": {"order": 0}},
        {"label": "a", "graph": {"kind": "chain", "n": 2}, "pulse": {"order": 0}}
    ]);
    assert!(ExperimentConfig::from_json(&v.to_string()).is_err());
    assert!(matches!(ExperimentConfig::from_json("{not json"), Err(CliError::Config(_))));
}

#[test]
fn serialised_config_round_trips() {
    let cfg = ExperimentConfig::load(&root().join("configs/fig5.json")).unwrap();
    let back = ExperimentConfig::from_json(&cfg.canonical_json()).unwrap();
    assert_eq!(back, cfg);
    let value: Value = serde_json::from_str(&cfg.canonical_json()).unwrap();
    assert!(schema().is_valid(&value));
    assert_eq!(cfg.steps_per_tau_p, 2048);
    assert_eq!(cfg.disorder.num_draws, 50);
}

#[test]
fn defaults() {
    let cfg = ExperimentConfig::from_json(&minimal().to_string()).unwrap();
    assert_eq!(cfg.nrep, 5);
    assert_eq!(cfg.gate.tau1, 1.0);
    assert!(!cfg.gate.symmetrized);
    assert_eq!(cfg.steps_per_tau_p, isingdd_cli::config::DEFAULT_STEPS);
    assert_eq!(default_targets(GateKind::Cnot, GraphKind::Star, 6), vec![1, 0]);
    assert_eq!(default_targets(GateKind::Cnot, GraphKind::Chain, 6), vec![2, 3]);
}

#[test]
fn graph_and_pulse_shorthands() {
    let g = parse_graph("star6", None).unwrap();
    assert_eq!((g.kind, g.n, g.coupling), (GraphKind::Star, 6, None));
    let g = parse_graph("chain4", Some(0.1)).unwrap();
    assert_eq!((g.kind, g.n, g.coupling), (GraphKind::Chain, 4, Some(0.1)));
    assert!(parse_graph("ring5", None).is_err());
    assert_eq!(parse_pulse("order1").unwrap().order, Some(1));
    assert_eq!(parse_pulse("gaussian").unwrap().order, Some(0));
    // Anything else names a shape file, read when the library is built.
    let p = parse_pulse("order7").unwrap();
    assert_eq!((p.order, p.shapes), (None, Some(PathBuf::from("order7"))));
}
