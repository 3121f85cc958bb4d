//! Runs `potkit verify-all` twice and judges every criterion from the emitted report,
//! recomputing the closed-form oracles here rather than trusting the binary's verdicts.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const SEED: &str = "20261017";

fn verify_all(out: &Path) -> Value {
    let status = Command::new(env!("CARGO_BIN_EXE_potkit"))
        .args(["verify-all", "--seed", SEED, "--out"])
        .arg(out)
        .status()
        .expect("potkit runs");
    assert!(matches!(status.code(), Some(0) | Some(2)), "unexpected exit status {status:?}");
    serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap()
}

fn criterion(report: &Value, id: u64) -> &Value {
    report["criteria"].as_array().unwrap().iter().find(|c| c["id"] == id).unwrap_or_else(|| panic!("criterion {id} missing"))
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// ∫_a^b g by composite Simpson with `m` (even) panels.
fn simpson(g: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = g(a) + g(b);
    for i in 1..m {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Radial p-capacity of (B̄_r, B_R) in ℝⁿ: the radial equation (ρ^{n−1}|u'|^{p−2}u')' = 0
/// gives |u'| = c^{1/(p−1)} ρ^{−(n−1)/(p−1)}; the drop from 1 to 0 fixes c, and the
/// capacity is the flux c·|𝕊^{n−1}|.
fn radial_capacity(n: usize, p: f64, r: f64, big_r: f64) -> f64 {
    let e = (n as f64 - 1.0) / (p - 1.0);
    let integral = simpson(|s| s.powf(-e), r, big_r, 20_000);
    let c = integral.powf(1.0 - p);
    let sphere = match n {
        3 => 4.0 * PI,
        _ => unreachable!(),
    };
    c * sphere
}

fn judge(report: &Value) -> Vec<(u64, bool, String)> {
    let mut out = Vec::new();

    let m = &criterion(report, 1)["measured"];
    let exact = 1.5 / 0.5 * 2f64.powf(1.0 / 1.5);
    let ok = rel(f(&m["limit"]), exact) <= 1e-3 && f(&m["quadrature_rel_error"]) <= 1e-6;
    out.push((1, ok, format!("limit {} vs {exact}", m["limit"])));

    let m = &criterion(report, 2)["measured"];
    let exact = 2f64.powf(1.0 / 2.0);
    out.push((2, rel(f(&m["limit"]), exact) <= 5e-3, format!("limit {} vs {exact}", m["limit"])));

    let m = &criterion(report, 3)["measured"];
    out.push((3, rel(f(&m["limit"]), 2.0) <= 1e-2, format!("limit {} vs 2", m["limit"])));

    let m = &criterion(report, 4)["measured"];
    out.push((4, rel(f(&m["slope"]), 1.5) <= 0.1, format!("slope {} vs 1.5", m["slope"])));

    let m = &criterion(report, 5)["measured"];
    let exact = radial_capacity(3, 2.5, 0.25, 1.0);
    let ok = rel(f(&m["value"]), exact) <= 0.05 && rel(f(&m["radial"]), exact) <= 1e-6;
    out.push((5, ok, format!("capacity {} vs radial {exact}", m["value"])));

    let m = &criterion(report, 6)["measured"];
    let mut ok = true;
    for fam in ["single_atom", "two_atom"] {
        let b = &m[fam];
        ok &= b["c1"].is_number() && f(&b["c1"]) >= 0.05 && f(&b["c2"]) <= 50.0;
    }
    out.push((6, ok, format!("bands {} / {}", m["single_atom"], m["two_atom"])));

    let m = &criterion(report, 7)["measured"];
    let mut ok = true;
    for row in m["flux"].as_array().unwrap() {
        ok &= (f(&row["flux"]) + 1.0).abs() <= 0.02 && rel(f(&row["flux"]), f(&row["flux_half_radius"])) <= 0.01;
    }
    for row in m["grid"].as_array().unwrap() {
        let (n, p) = (f(&row["n"]), f(&row["p"]));
        let sphere = if n == 3.0 { 4.0 * PI } else { 2.0 * PI * PI };
        let expected = (p - 1.0) / (n - p) * (1.0 / sphere).powf(1.0 / (p - 1.0));
        ok &= rel(f(&row["expected"]), expected) <= 1e-12 && f(&row["max_rel_deviation"]) <= 0.05;
    }
    out.push((7, ok, "flux and grid windows".into()));

    let m = &criterion(report, 8)["measured"];
    let fam = m["ball_family"].as_array().unwrap();
    let w = &m["witness"];
    let ok = fam[0]["verdict"] == "not-thin"
        && fam[1]["verdict"] == "thin"
        && f(&w["linear_ratio_min"]) >= 1.0
        && w["center_tail_increasing"] == true
        && w["ray_decays"] == true;
    out.push((8, ok, format!("verdicts {} / {}, linear ratio {}", fam[0]["verdict"], fam[1]["verdict"], w["linear_ratio_min"])));

    let m = &criterion(report, 9)["measured"];
    let incl = m["inclusions"].as_array().unwrap();
    let ok = incl.iter().all(|r| r["failures"] == 0 && f(&r["tested"]) >= 1e5)
        && f(&m["refuted_control"]["failures"]) > 0.0
        && f(&m["p_gamma_formula_max_error"]) <= 1e-9
        && f(&m["exponent_identity_max_error"]) <= 1e-12
        && m["a2_rn2_disagreements"] == 0;
    out.push((9, ok, format!("{} inclusions", incl.len())));

    let m = &criterion(report, 10)["measured"];
    let pairs: f64 = m["runs"].as_array().unwrap().iter().map(|r| f(&r["pairs"])).sum();
    out.push((10, f(&m["max_violation"]) <= 1e-10 && pairs >= 100.0, format!("max violation {}", m["max_violation"])));
    out
}

#[test]
fn acceptance() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = verify_all(a.path());
    let second = verify_all(b.path());

    let mut results = judge(&first);
    let mut same = true;
    for name in ["report.json", "verify.csv"] {
        same &= fs::read(a.path().join(name)).unwrap() == fs::read(b.path().join(name)).unwrap();
    }
    same &= criterion(&first, 11)["passed"] == true;
    results.push((11, same, "two runs byte-identical".into()));

    for (id, ok, detail) in &results {
        println!("criterion {id:>2}: {} ({detail})", if *ok { "PASS" } else { "FAIL" });
    }
    for c in first["criteria"].as_array().unwrap() {
        let id = c["id"].as_u64().unwrap();
        let ours = results.iter().find(|r| r.0 == id).unwrap().1;
        assert_eq!(c["passed"].as_bool().unwrap(), ours, "binary and oracle disagree on criterion {id}");
    }
    let failed: Vec<u64> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
