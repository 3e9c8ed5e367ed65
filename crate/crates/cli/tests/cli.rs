use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavspin"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn regime_point() -> Value {
    json!({
        "physical": {
            "g1": 400.0, "g2": 50000f64.sqrt(), "delta1": 8000.0, "delta2": 2500.0,
            "omega1": [1.0, 0.0], "omega2": [-1.0, 0.0], "omega3": [0.0, 0.0], "omega4": [0.0, 0.0],
            "omega": 20.0, "delta": 0.0, "mu_z": [0.0, 0.0], "j": 1.0, "gamma": 0.1, "atoms_per_cavity": 2
        },
        "graph": {"chain": {"n": 2}}
    })
}

#[test]
fn validate_accepts_the_working_point_and_rejects_a_strong_drive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ok.json", &regime_point());
    let o = run(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &stdout_json(&o)["result"];
    assert_eq!(r["condition1_ok"], true);
    assert!(r["ratios"].as_array().unwrap().iter().all(|c| c["ok"] == true));

    let mut bad = regime_point();
    bad["physical"]["omega1"] = json!([3.0, 0.0]);
    let cfg = write(dir.path(), "bad.json", &bad);
    let o = run(&["validate", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let failed: Vec<String> = stdout_json(&o)["result"]["ratios"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["ok"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, ["cond2: J >= |Omega_1|"]);
}

#[test]
fn map_params_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &regime_point());
    let o = run(&["map-params", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let got = &stdout_json(&o)["result"]["spin_params"];

    let p: cavspin::PhysicalParams = serde_json::from_value(regime_point()["physical"].clone()).unwrap();
    let graph = cavspin::CavityGraph::chain(2, false).unwrap();
    let c = cavspin::effective::derive_couplings(&p).unwrap();
    let sp = cavspin::effective::couplings_to_spin_params(&c, 2, &graph).unwrap();
    for (k, v) in [("a", sp.a), ("b", sp.b), ("c", sp.c), ("d", sp.d), ("e", sp.e)] {
        assert_eq!(got[k].as_f64().unwrap(), v, "{k}");
    }
}

#[test]
fn evolution_without_couplings_is_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "graph": {"chain": {"n": 3}},
        "spin_model": {"two_s": 2},
        "task": {"evolve": {
            "times": {"uniform": {"t_final": 5.0, "points": 6}},
            "initial": {"basis": [0, 1, 2]},
            "observables": [{"sz": 0}, {"sz": 1}, {"sz": 2}, {"sz_sz": [0, 2]}]
        }}
    });
    let path = write(dir.path(), "c.json", &cfg);
    let o = run(&["evolve", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let series = stdout_json(&o)["result"]["series"].clone();
    let expected = [1.0, 0.0, -1.0, -1.0, 1.0];
    for (s, want) in series.as_array().unwrap().iter().zip(expected) {
        for v in s["values"].as_array().unwrap() {
            assert!((v.as_f64().unwrap() - want).abs() < 1e-12, "{}", s["name"]);
        }
    }
}

#[test]
fn reruns_are_byte_identical_and_outputs_reproduce_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "graph": {"chain": {"n": 4, "periodic": true}},
        "spin_model": {"d": 0.7, "e": -0.3, "two_s": 1},
        "seed": 11,
        "task": {"evolve": {"times": {"list": [0.0, 0.4, 1.3]}, "initial": "random"}}
    });
    let path = write(dir.path(), "c.json", &cfg);
    let a = run(&["evolve", "--config", &path, "--format", "csv", "--output", "a.csv"], dir.path());
    let b = run(&["evolve", "--config", &path, "--format", "csv", "--output", "b.csv", "--threads", "1"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let first = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(first, fs::read(dir.path().join("b.csv")).unwrap());

    let c = run(&["evolve", "--config", "a.csv", "--output", "c.csv"], dir.path());
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("c.csv")).unwrap());

    let j = run(&["evolve", "--config", &path, "--output", "a.json"], dir.path());
    assert_eq!(j.status.code(), Some(0));
    let k = run(&["evolve", "--config", "a.json", "--output", "b.json"], dir.path());
    assert_eq!(k.status.code(), Some(0));
    let ja = fs::read_to_string(dir.path().join("a.json")).unwrap();
    assert_eq!(ja, fs::read_to_string(dir.path().join("b.json")).unwrap());

    let other = run(&["evolve", "--config", &path, "--seed", "12", "--format", "csv"], dir.path());
    assert_ne!(other.stdout, first);
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &regime_point());
    let csv_out = run(&["map-params", "--config", &cfg, "--format", "csv"], dir.path());
    let json_out = run(&["map-params", "--config", &cfg], dir.path());
    let sp = &stdout_json(&json_out)["result"]["spin_params"];
    let text = String::from_utf8(csv_out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config={"));
    assert_eq!(lines.next(), Some("name,value"));
    for line in lines {
        let (name, value) = line.split_once(',').unwrap();
        if let Some(v) = sp.get(name) {
            assert_eq!(value.parse::<f64>().unwrap(), v.as_f64().unwrap(), "{name}");
        }
    }
}

#[test]
fn sweeps_keep_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = regime_point();
    cfg["task"] = json!({"sweep": {"parameter": "physical.omega1.0", "values": [0.5, 3.0, 1.0], "task": {"validate": {}}}});
    let path = write(dir.path(), "c.json", &cfg);
    let o = run(&["sweep", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let points = stdout_json(&o)["result"]["points"].clone();
    let flags: Vec<(f64, bool)> = points
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p["value"].as_f64().unwrap(), p["result"]["condition2_ok"].as_bool().unwrap()))
        .collect();
    assert_eq!(flags, [(0.5, true), (3.0, false), (1.0, true)]);
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = regime_point();
    cfg["physical"]["delta1"] = json!("large");
    let path = write(dir.path(), "c.json", &cfg);
    let o = run(&["validate", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("physical.delta1"), "{err}");

    let path = write(dir.path(), "d.json", &regime_point());
    let o = run(&["evolve", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(3));

    let o = run(&["validate", "--config", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn rejected_parameters_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = regime_point();
    cfg["physical"]["j"] = json!(0.01);
    cfg["task"] = json!({"compare": {"times": {"list": [0.0, 1.0]}}});
    let path = write(dir.path(), "c.json", &cfg);
    let o = run(&["compare", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime"));
}

#[test]
fn inverted_target_ground_state_is_the_afm_ring() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "graph": {"chain": {"n": 4, "periodic": true}},
        "spin_model": {"d": -1.0, "e": -1.0, "two_s": 1, "afm_target": true}
    });
    let path = write(dir.path(), "c.json", &cfg);
    let o = run(&["ground-state", "--config", &path], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = &stdout_json(&o)["result"];
    assert_eq!(r["which"], "highest");
    // heisenberg ring of four spins 1/2: E0 = -2, gap 1, nearest-neighbour <SzSz> = -1/6
    assert!((r["energies"][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((r["gap"]["gap"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    for c in r["correlations"].as_array().unwrap() {
        assert!((c["raw"].as_f64().unwrap() + 1.0 / 6.0).abs() < 1e-9);
    }
}
