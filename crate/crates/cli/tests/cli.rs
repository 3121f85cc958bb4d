use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn potkit(args: &[&str], scene: &Value, out: &Path) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scene.json");
    fs::write(&path, serde_json::to_vec_pretty(scene).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_potkit"))
        .args(args)
        .arg("--scene")
        .arg(&path)
        .arg("--out")
        .arg(out)
        .env_remove("POTKIT_SEED")
        .env_remove("POTKIT_TOL")
        .output()
        .unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap()
}

fn atom_scene() -> Value {
    json!({
        "n": 3,
        "measures": { "mu": { "kind": "atomic", "atoms": [{ "point": [0, 0, 0], "mass": 2.0 }] } },
        "tasks": {
            "wolff": {
                "mode": "asymptotics", "measure": "mu", "p": 2.5, "x0": [0, 0, 0],
                "path": { "direction": [1, 0, 0], "first": 1, "last": 20 }
            },
            "riesz": {
                "measure": "mu", "alpha": 2.0, "x0": [0, 0, 0],
                "path": { "direction": [0, 1, 0] }, "expect": 2.0
            }
        }
    })
}

#[test]
fn wolff_atom_limit() {
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["wolff"], &atom_scene(), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (n, p, a) = (3.0, 2.5, 2.0f64);
    let expected = (p - 1.0) / (n - p) * a.powf(1.0 / (p - 1.0));
    let limit = report(out.path())["result"]["limit"].as_f64().unwrap();
    assert!((limit / expected - 1.0).abs() < 1e-6, "{limit} vs {expected}");
    let csv = fs::read_to_string(out.path().join("wolff.csv")).unwrap();
    assert!(csv.starts_with("r,scaled_value,raw_value\n"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn riesz_expect_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["riesz"], &atom_scene(), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    assert_eq!(r["status"], "ok");
    assert!(fs::read_to_string(out.path().join("riesz.csv")).unwrap().starts_with("r,ratio,potential\n"));
}

#[test]
fn failed_expectation_exits_two() {
    let mut scene = atom_scene();
    scene["tasks"]["riesz"]["expect"] = json!(3.0);
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["riesz"], &scene, out.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(out.path())["status"], "check-failed");
}

#[test]
fn bad_inclusion_reports_counterexample() {
    let scene = json!({
        "n": 4, "seed": 5,
        "tasks": { "cones": { "include": [
            { "inner": { "kind": "A", "p": 2.0 }, "outer": { "kind": "R", "r": 1 }, "samples": 2000 }
        ] } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["cones", "include"], &scene, out.path());
    assert_eq!(o.status.code(), Some(2));
    let r = report(out.path());
    let cx = &r["result"]["inclusions"][0]["counterexamples"][0];
    let v: Vec<f64> = cx.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(v.len(), 4);
    // Σλ ≥ 0 yet the smallest entry is negative
    assert!(v.iter().sum::<f64>() >= -1e-12);
    assert!(v.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
}

#[test]
fn malformed_scene_writes_nothing() {
    let scene = json!({
        "n": 3,
        "measures": { "mu": { "kind": "atomic", "atoms": [{ "point": [0, 0, 0], "mass": "heavy" }] } }
    });
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("never");
    let o = potkit(&["wolff"], &scene, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/measures/mu/atoms/0/mass"));
    assert!(!out.exists());
}

#[test]
fn unknown_fields_are_located() {
    let scene = json!({
        "n": 3,
        "measures": { "mu": { "kind": "atomic", "atoms": [], "weight": 1 } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["density"], &scene, &out.path().join("x"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/measures/mu") && err.contains("weight"), "{err}");
}

#[test]
fn randomized_tasks_need_a_seed() {
    let scene = json!({
        "n": 4,
        "tasks": { "cones": { "include": [{ "inner": { "kind": "A", "p": 3.0 }, "outer": { "kind": "A", "p": 2.0 } }] } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["cones", "include"], &scene, &out.path().join("x"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/seed"));
}

#[test]
fn repeated_runs_are_identical() {
    let scene = json!({
        "n": 6, "seed": 9,
        "tasks": { "cones": {
            "include": [{ "inner": { "kind": "A", "p": 4.0 }, "outer": { "kind": "R", "r": 3 }, "samples": 5000 }],
            "pgamma": [{ "kind": "Gamma", "k": 2 }, { "kind": "A", "p": 3.0 }]
        } }
    });
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for verb in ["include", "pgamma"] {
        assert_eq!(potkit(&["cones", verb], &scene, a.path()).status.code(), Some(0));
        assert_eq!(potkit(&["cones", verb], &scene, b.path()).status.code(), Some(0));
        for entry in fs::read_dir(a.path()).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        }
    }
    let r = report(a.path());
    let pg = r["result"]["cones"][0]["p_gamma"].as_f64().unwrap();
    assert!((pg - (6.0 * 1.0 / 4.0 + 2.0)).abs() < 1e-9);
}

#[test]
fn density_and_box_counting() {
    let scene = json!({
        "n": 2,
        "measures": { "mu": { "kind": "uniform-ball", "center": [0, 0], "radius": 1.0, "density": 1.0 } },
        "sets": { "C": { "kind": "cantor", "depth": 9 } },
        "tasks": { "density": {
            "upper": { "measure": "mu", "x": [0, 0], "d": 2.0, "ladder": { "r0": 0.5, "count": 12 } },
            "boxes": { "set": "C", "scales": [0.1111111111111111, 0.037037037037037035, 0.012345679012345678, 0.004115226337448559] }
        } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["density"], &scene, out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path());
    // μ(B_r)/r² = π for the unit-density disc
    let lim = &r["result"]["upper"]["limsup"];
    assert_eq!(lim["estimate"], "finite");
    assert!((lim["value"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    let dim = r["result"]["boxes"]["dimension"].as_f64().unwrap();
    assert!((dim - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{dim}");
    assert!(fs::read_to_string(out.path().join("boxes.csv")).unwrap().starts_with("scale,count\n"));
}

#[test]
fn plaplace_reproduces_affine_data() {
    let scene = json!({
        "n": 2,
        "tasks": { "plaplace": {
            "p": 3.0,
            "grid": { "lo": [0, 0], "hi": [1, 1], "h": 0.0625 },
            "boundary": { "form": "affine", "constant": 1.0, "gradient": [0.5, -0.25] }
        } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["plaplace"], &scene, out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.path().join("solution.csv")).unwrap();
    let nodes = 17;
    for line in csv.lines().skip(1) {
        let (i, v) = line.split_once(',').unwrap();
        let i: usize = i.parse().unwrap();
        let v: f64 = v.parse().unwrap();
        // nodes are numbered with the last axis fastest
        let (x, y) = ((i / nodes) as f64 * 0.0625, (i % nodes) as f64 * 0.0625);
        let exact = 1.0 + 0.5 * x - 0.25 * y;
        assert!((v - exact).abs() < 1e-5, "node {i}: {v} vs {exact}");
    }
}

#[test]
fn capacity_of_a_sphere() {
    let scene = json!({
        "n": 3,
        "sets": { "S": { "kind": "primitives", "primitives": [{ "shape": "sphere", "center": [0, 0, 0], "radius": 0.5 }] } },
        "tasks": { "capacity": {
            "set": "S", "capacity": { "kind": "riesz", "alpha": 2.0 },
            "omega": { "shape": "ball", "center": [0, 0, 0], "radius": 100.0 }, "h": 0.125
        } }
    });
    let out = tempfile::tempdir().unwrap();
    let o = potkit(&["capacity"], &scene, out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(out.path())["result"].clone();
    for key in ["value", "lower", "upper", "h", "iterations"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    // Newtonian capacity of a sphere of radius ρ with kernel |x|^{-1}: ρ
    let v = r["value"].as_f64().unwrap();
    assert!((v - 0.5).abs() < 0.05 * 0.5, "{v}");
}
