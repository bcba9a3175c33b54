use isingdd_cli::config::ExperimentConfig;
use isingdd_cli::experiment::run;
use isingdd_cli::manifest::{sha256_hex, verify_manifest, Manifest, MANIFEST_NAME};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;

fn small(combined: bool) -> ExperimentConfig {
    let mut v = json!({
        "name": "small",
        "gate": {"kind": "rotation", "axis": "y", "angle": std::f64::consts::FRAC_PI_2},
        "series": [
            {"label": "chain2", "graph": {"kind": "chain", "n": 2, "J": 0.02}, "targets": [0], "pulse": {"order": 0}},
            {"label": "star3", "graph": {"kind": "star", "n": 3, "J": 0.02}, "targets": [1, 2], "pulse": {"order": 0}}
        ],
        "delta_grid": [0.0, 0.05, 0.1, 0.2],
        "disorder": {"seed": 7, "num_draws": 3},
        "steps_per_tau_p": 256,
        "weights": {"delta_rms": 0.05},
        "output": {"dir": "unused"}
    });
    if combined {
        v["output"]["combined"] = json!("all.csv");
    }
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

fn contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small(false);
    run(&cfg, Some(a.path())).unwrap();
    run(&cfg, Some(b.path())).unwrap();
    let (ca, cb) = (contents(a.path()), contents(b.path()));
    let names: Vec<&str> = ca.keys().map(String::as_str).collect();
    assert_eq!(
        names,
        ["chain2_sweep.csv", "chain2_weights.csv", MANIFEST_NAME, "star3_sweep.csv", "star3_weights.csv", "summary.json"]
    );
    assert_eq!(ca, cb);
}

#[test]
fn manifest_lists_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(false);
    run(&cfg, Some(dir.path())).unwrap();
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap()).unwrap();
    assert_eq!(m.tool, "isingdd");
    assert_eq!(m.config, cfg);
    assert_eq!(m.config_sha256, sha256_hex(cfg.canonical_json().as_bytes()));
    assert_eq!(m.files.len(), 5);
    for f in &m.files {
        let data = std::fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(f.bytes, data.len() as u64);
        assert_eq!(f.sha256, sha256_hex(&data));
    }
    assert!(verify_manifest(dir.path()).unwrap().is_empty());
}

#[test]
fn tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    run(&small(false), Some(dir.path())).unwrap();
    let target = dir.path().join("star3_sweep.csv");
    let mut text = std::fs::read_to_string(&target).unwrap();
    text = text.replacen("0.", "1.", 1);
    std::fs::write(&target, text).unwrap();
    std::fs::remove_file(dir.path().join("summary.json")).unwrap();
    let bad = verify_manifest(dir.path()).unwrap();
    let names: Vec<String> = bad.iter().map(|p| p.to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["star3_sweep.csv", "summary.json"]);
}

#[test]
fn sha256_reference_value() {
    assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

#[test]
fn combined_output_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&small(true), Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("all.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>()[..2], ["delta_rms", "mean_infidelity"]);
    let ns: Vec<String> = r.records().map(|x| x.unwrap()[4].to_string()).collect();
    assert_eq!(ns, ["2", "2", "2", "2", "3", "3", "3", "3"]);
    assert!(!dir.path().join("chain2_sweep.csv").exists());

    assert_eq!(summary.series.len(), 2);
    let s = &summary.series[1];
    assert_eq!((s.label.as_str(), s.n, s.targets.clone(), s.pulse_order), ("star3", 3, vec![1, 2], Some(0)));
    assert!(s.infidelity_at_zero.is_some());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["series"][0]["label"], "chain2");
}

#[test]
fn invalid_targets_fail_before_writing() {
    let mut cfg = small(false);
    cfg.series[1].targets = Some(vec![0, 1]);
    let dir = tempfile::tempdir().unwrap();
    let err = run(&cfg, Some(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    assert!(!dir.path().join(MANIFEST_NAME).exists());
}
