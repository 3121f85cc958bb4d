//! The built-in acceptance suite run by `verify-all`.

use std::time::Instant;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use potkit::asymptotic::ApproachPath;
use potkit::capacity::{condenser_capacity, p_capacity, riesz_capacity, CapacityKind, Domain, RieszLpOptions, VariationalOptions};
use potkit::cones::{inclusion_check, member_a, member_r, p_gamma, p_gamma_k_formula, ConeSpec};
use potkit::measures::{Measure, Profile, RadialProfileMeasure};
use potkit::plaplace::{
    comparison_violation, envelope_check, flux_normalization, solve_p_dirichlet, super_asymptotic_report,
    BoundaryData, EnvelopeBand, EnvelopeSample, FundamentalSolution, PSolveOptions,
};
use potkit::quadrature::ball_volume;
use potkit::riesz::{riesz_asymptotic_report, RieszParams};
use potkit::sets::ParametricSet;
use potkit::thinness::{thinness_report, ThinnessOptions, Verdict};
use potkit::wolff::{thin_witness_blowup, wolff_asymptotic_report, wolff_potential, wolff_potentials, WitnessOptions, WolffParams};
use potkit::{BoxDomain, EvaluationGrid, Mirror, Point};

use crate::output::{Artifacts, Csv};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub threshold: &'static str,
    pub passed: bool,
    pub measured: Value,
}

type Outcome = Result<(bool, Value)>;

struct Criterion {
    id: u32,
    title: &'static str,
    threshold: &'static str,
    run: fn(u64) -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "Wolff atom asymptotics, p < n",
        threshold: "limit within 0.1% of 3*2^(2/3); log-grid quadrature within 1e-6",
        run: wolff_atom,
    },
    Criterion {
        id: 2,
        title: "Wolff atom asymptotics, p = n",
        threshold: "W/log(1/|x|) limit within 0.5% of a^(1/(n-1))",
        run: wolff_atom_critical,
    },
    Criterion {
        id: 3,
        title: "Riesz atom-plus-uniform asymptotics",
        threshold: "ratio limit within 1% of the atom mass, path to 2^-20",
        run: riesz_atom,
    },
    Criterion { id: 4, title: "Riesz capacity scaling", threshold: "log-log slope within 10% of n - alpha", run: capacity_scaling },
    Criterion {
        id: 5,
        title: "p-capacity of a ball condenser",
        threshold: "within 5% of the radial solution",
        run: condenser,
    },
    Criterion { id: 6, title: "Wolff envelope band", threshold: "c1 >= 0.05 and c2 <= 50 at every point", run: envelope },
    Criterion {
        id: 7,
        title: "Fundamental-solution normalization",
        threshold: "flux within 2% of -1, rho-independent within 1%; grid u/G_p within 5% of m",
        run: normalization,
    },
    Criterion {
        id: 8,
        title: "Thinness of the ball family and blow-up witness",
        threshold: "s=1 not thin, s=4 thin; witness grows at least linearly and decays along a ray",
        run: witness,
    },
    Criterion {
        id: 9,
        title: "Cone inclusions and critical exponents",
        threshold: "no counterexample in 1e5 samples; p_Gamma formula to 1e-9; exponent identity to 1e-12",
        run: cone_suite,
    },
    Criterion {
        id: 10,
        title: "Discrete comparison principle",
        threshold: "ordered boundary data give ordered solutions up to 1e-10",
        run: comparison,
    },
    Criterion {
        id: 11,
        title: "Determinism of repeated runs",
        threshold: "byte-identical results on re-run with the same seed",
        run: determinism,
    },
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.id).collect()
}

fn evaluate(c: &Criterion, seed: u64) -> CriterionResult {
    let (passed, measured) = match (c.run)(seed) {
        Ok(r) => r,
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    CriterionResult { id: c.id, title: c.title, threshold: c.threshold, passed, measured }
}

/// Runs the selected criteria (all when `only` is empty). Progress goes to stderr;
/// the artifacts carry no timings.
pub fn run_all(seed: u64, only: &[u32]) -> Result<(Artifacts, Vec<CriterionResult>)> {
    let mut results = Vec::new();
    for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let t = Instant::now();
        let r = evaluate(c, seed);
        eprintln!(
            "criterion {:>2} {} ({:.1} s): {}",
            c.id,
            if r.passed { "pass" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            c.title
        );
        results.push(r);
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    let mut artifacts = Artifacts::new();
    artifacts.json(
        "report.json",
        &json!({
            "command": "verify-all",
            "seed": seed,
            "status": if failed.is_empty() { "ok" } else { "check-failed" },
            "failed": failed,
            "criteria": results,
        }),
    )?;
    let mut csv = Csv::new(&["id", "passed", "title"]);
    for r in &results {
        csv.row(&[r.id.to_string(), r.passed.to_string(), format!("\"{}\"", r.title)]);
    }
    artifacts.csv("verify.csv", csv);
    Ok((artifacts, results))
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn e1(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

fn wolff_atom(_: u64) -> Outcome {
    let (p, a) = (2.5, 2.0);
    let o = Point::origin(3);
    let mu = Measure::atom(o.clone(), a)?;
    let path = ApproachPath::geometric(e1(3), 2.0, 1, 20)?;
    let params = WolffParams::new(p, 1.0);
    let rep = wolff_asymptotic_report(&mu, &params, &o, &path)?;
    let expected = 3.0 * 2f64.powf(2.0 / 3.0);
    let err = rel(rep.report.limit(), expected);
    let xs = path.points(&o)?;
    let exact = wolff_potentials(&mu, &params, &xs)?;
    let grid = wolff_potentials(&mu, &params.clone().log_grid(256), &xs)?;
    let quad = exact.iter().zip(&grid).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    Ok((
        err <= 1e-3 && quad <= 1e-6,
        json!({ "limit": rep.report.limit(), "expected": expected, "rel_error": err, "quadrature_rel_error": quad }),
    ))
}

fn wolff_atom_critical(_: u64) -> Outcome {
    let a = 2.0;
    let o = Point::origin(3);
    let mu = Measure::atom(o.clone(), a)?;
    let path = ApproachPath::geometric(e1(3), 2.0, 1, 20)?;
    let rep = wolff_asymptotic_report(&mu, &WolffParams::new(3.0, 1.0), &o, &path)?;
    let expected = a.sqrt();
    let err = rel(rep.report.limit(), expected);
    Ok((err <= 5e-3, json!({ "limit": rep.report.limit(), "expected": expected, "rel_error": err })))
}

fn riesz_atom(_: u64) -> Outcome {
    let a = 2.0;
    let o = Point::origin(3);
    let uniform = RadialProfileMeasure::new(o.clone(), Profile::Power { c: ball_volume(3), m: 3.0 }, Some(1.0))?;
    let mu = Measure::sum(vec![Measure::atom(o.clone(), a)?, Measure::Radial(uniform)])?;
    let path = ApproachPath::geometric(e1(3), 2.0, 1, 20)?;
    let rep = riesz_asymptotic_report(&mu, &RieszParams::new(2.0, None), &o, &path)?;
    let err = rel(rep.report.limit(), a);
    let last = *rep.report.ratios.last().expect("nonempty path");
    Ok((err <= 1e-2, json!({ "limit": rep.report.limit(), "expected": a, "rel_error": err, "deepest_ratio": last })))
}

fn capacity_scaling(_: u64) -> Outcome {
    let (alpha, h) = (1.5, 1.0 / 64.0);
    let o = Point::origin(3);
    let e = ParametricSet::sphere(&o, 0.125)?;
    let omega = Domain::Ball { center: vec![0.0; 3], radius: 0.25 };
    let scales = [1.0, 0.5, 0.25];
    let mut values = Vec::new();
    for lam in scales {
        let c = riesz_capacity(&e.scaled(o.coords(), lam), &omega.scaled(o.coords(), lam), alpha, h, &RieszLpOptions::default())?;
        values.push(c.value);
    }
    let slope = potkit::asymptotic::log_log_slope(&scales, &values);
    let expected = 3.0 - alpha;
    let err = rel(slope, expected);
    Ok((err <= 0.1, json!({ "scales": scales, "values": values, "slope": slope, "expected": expected, "rel_error": err })))
}

fn condenser(_: u64) -> Outcome {
    let (p, h) = (2.5, 1.0 / 96.0);
    let k = ParametricSet::ball(&Point::origin(3), 0.25)?;
    let omega = Domain::Ball { center: vec![0.0; 3], radius: 1.0 };
    let c = p_capacity(&k, &omega, p, h, &VariationalOptions::default())?;
    let exact = condenser_capacity(3, p, 0.25, 1.0);
    let err = rel(c.value, exact);
    Ok((err <= 0.05, json!({ "value": c.value, "lower": c.lower, "upper": c.upper, "radial": exact, "rel_error": err })))
}

fn envelope(_: u64) -> Outcome {
    let p = 2.5;
    let o = Point::origin(3);
    let mut radial = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        let mu = Measure::atom(o.clone(), a)?;
        let u = FundamentalSolution::new(&o, p, a)?;
        for t in [1.0 / 16.0, 0.125, 0.25, 0.5] {
            let x = Point::new(vec![t, 0.0, 0.0])?;
            for r in [t / 2.0, 2.0 * t, 4.0 * t, 8.0 * t] {
                let inf = u.m * potkit::plaplace::fundamental_profile(3, p, t + r);
                let wr = wolff_potential(&mu, &WolffParams::new(p, r), &x)?;
                let w2r = wolff_potential(&mu, &WolffParams::new(p, 2.0 * r), &x)?;
                radial.push(EnvelopeSample::from_values(x.coords().to_vec(), r, u.eval(x.coords()), inf, wr, w2r));
            }
        }
    }
    let grid = EvaluationGrid::new(&BoxDomain::new(vec![-1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0])?, 1.0 / 32.0)?;
    let mirror = Mirror(vec![false, true, true]);
    let mu = Measure::sum(vec![
        Measure::atom(Point::new(vec![-0.25, 0.0, 0.0])?, 1.0)?,
        Measure::atom(Point::new(vec![0.25, 0.0, 0.0])?, 0.5)?,
    ])?;
    let opts = PSolveOptions { levels: 3, ..PSolveOptions::default() };
    let sol = solve_p_dirichlet(&grid, &mirror, &mu, p, &BoundaryData::Constant { value: 0.0 }, &opts)?;
    let mut pair = Vec::new();
    let points = [[-0.25, 0.125], [0.25, 0.125], [-0.25, 0.1875], [0.25, 0.1875], [-0.125, 0.0625], [0.125, 0.0625], [0.0, 0.0625]];
    for [x1, y] in points {
        for r in [0.15, 0.25] {
            pair.push(envelope_check(&sol, &mu, &Point::new(vec![x1, y, 0.0])?, r)?);
        }
    }
    let finite = |s: &[EnvelopeSample]| s.iter().all(|e| e.u.is_finite() && e.u > 0.0);
    let (b1, b2) = (EnvelopeBand::from_samples(&radial), EnvelopeBand::from_samples(&pair));
    let ok = |b: &EnvelopeBand| b.c1 >= 0.05 && b.c2 <= 50.0 && b.lower_vacuous < b.samples;
    Ok((
        ok(&b1) && ok(&b2) && finite(&radial) && finite(&pair),
        json!({ "single_atom": b1, "two_atom": b2, "grid_residual": sol.residual }),
    ))
}

fn normalization(_: u64) -> Outcome {
    let mut flux = Vec::new();
    let mut pass = true;
    for (n, p) in [(3usize, 2.0), (3, 2.5), (4, 3.0)] {
        let f = flux_normalization(p, n, 0.5, 0.5 / 64.0)?;
        let g = flux_normalization(p, n, 0.25, 0.25 / 64.0)?;
        let ok = (f + 1.0).abs() <= 0.02 && rel(f, g) <= 0.01;
        pass &= ok;
        flux.push(json!({ "n": n, "p": p, "flux": f, "flux_half_radius": g, "passed": ok }));
    }
    let mut grid = Vec::new();
    for (n, p, h) in [(3usize, 2.0, 1.0 / 64.0), (3, 2.5, 1.0 / 64.0), (4, 3.0, 1.0 / 32.0)] {
        let o = Point::origin(n);
        let g = EvaluationGrid::new(&BoxDomain::new(vec![0.0; n], vec![1.0; n])?, h)?;
        let fs = FundamentalSolution::new(&o, p, 1.0)?;
        let opts = PSolveOptions { levels: 3, ..PSolveOptions::default() };
        let sol = solve_p_dirichlet(&g, &Mirror::all(n), &Measure::atom(o.clone(), 1.0)?, p, &fs.boundary_data(), &opts)?;
        let rep = super_asymptotic_report(&sol, &o, 1.0, 1.0)?;
        let ok = rep.max_rel_deviation <= 0.05;
        pass &= ok;
        grid.push(json!({
            "n": n, "p": p, "h": h, "expected": rep.expected, "window_mean": rep.window_mean,
            "max_rel_deviation": rep.max_rel_deviation, "window": [rep.distances.first(), rep.distances.last()],
            "passed": ok,
        }));
    }
    Ok((pass, json!({ "flux": flux, "grid": grid })))
}

fn witness(seed: u64) -> Outcome {
    let p = 2.5;
    let o = Point::origin(3);
    let kind = CapacityKind::Variational { p };
    let opts = ThinnessOptions::default();
    let mut verdicts = Vec::new();
    for s in [1.0, 4.0] {
        let e = ParametricSet::ball_family(&o, s, 2, 48)?;
        let (_, rep) = thinness_report(&e, &o, kind, &opts)?;
        verdicts.push(json!({ "s": s, "verdict": rep.verdict, "partial_sum": rep.partial_sum, "tail": rep.tail }));
    }
    let v = |i: usize| verdicts[i]["verdict"].clone();
    let flips = v(0) == json!(Verdict::NotThin) && v(1) == json!(Verdict::Thin);
    let (_, _, w) = thin_witness_blowup(4.0, p, &WitnessOptions { seed, ..WitnessOptions::default() })?;
    let grows = w.thinness.verdict == Verdict::Thin && w.linear_ratio_min >= 1.0 && w.center_tail_increasing;
    Ok((
        flips && grows && w.ray_decays,
        json!({
            "ball_family": verdicts,
            "witness": {
                "linear_ratio_min": w.linear_ratio_min,
                "center_tail_increasing": w.center_tail_increasing,
                "ray_decays": w.ray_decays,
                "ray": w.ray,
                "last_center_value": w.center_values.last(),
                "last_ray_value": w.ray_values.last(),
            },
        }),
    ))
}

fn inclusion_pairs(n: usize) -> Vec<(ConeSpec, ConeSpec)> {
    let nf = n as f64;
    let mut out = Vec::new();
    for (p, q) in [(2.5, 2.0), (3.0, 2.0), (nf, 3.0)] {
        out.push((ConeSpec::A { p }, ConeSpec::A { p: q }));
    }
    for s in 1..=n / 2 {
        for r in s + 1..=n / 2 {
            out.push((ConeSpec::R { r: s }, ConeSpec::R { r }));
        }
    }
    for p in [2.0, 3.0, nf] {
        for r in 1..=n / 2 {
            if r as f64 >= (nf - p) / 2.0 + 1.0 {
                out.push((ConeSpec::A { p }, ConeSpec::R { r }));
            }
        }
    }
    out
}

fn cone_suite(seed: u64) -> Outcome {
    let mut pass = true;
    let mut inclusions = Vec::new();
    let mut stream = seed;
    for n in [4usize, 6] {
        for (inner, outer) in inclusion_pairs(n) {
            stream = stream.wrapping_add(1);
            let r = inclusion_check(&inner, &outer, n, 100_000, stream)?;
            pass &= r.holds() && r.tested >= 100_000;
            inclusions.push(json!({ "n": n, "inner": r.inner, "outer": r.outer, "tested": r.tested, "failures": r.failures }));
        }
    }
    // a deliberately wrong inclusion must be refuted, or the search is blind
    let bad = inclusion_check(&ConeSpec::A { p: 2.0 }, &ConeSpec::R { r: 1 }, 4, 100_000, seed)?;
    pass &= !bad.holds();

    let (mut formula_err, mut identity_err) = (0.0f64, 0.0f64);
    for n in 2..=12usize {
        for k in 1..=n / 2 {
            let p = p_gamma(&ConeSpec::Gamma { k }, n)?;
            formula_err = formula_err.max((p - p_gamma_k_formula(n, k)).abs());
            let (nf, kf) = (n as f64, k as f64);
            identity_err = identity_err.max(((2.0 - nf / kf) + (nf - p) / (p - 1.0)).abs());
        }
    }
    pass &= formula_err <= 1e-9 && identity_err <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disagreements = 0usize;
    for n in [4usize, 6] {
        for _ in 0..10_000 {
            let l: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            if member_a(&l, 2.0) != member_r(&l, n / 2) {
                disagreements += 1;
            }
        }
    }
    pass &= disagreements == 0;
    Ok((
        pass,
        json!({
            "inclusions": inclusions,
            "refuted_control": { "inner": bad.inner, "outer": bad.outer, "failures": bad.failures },
            "p_gamma_formula_max_error": formula_err,
            "exponent_identity_max_error": identity_err,
            "a2_rn2_disagreements": disagreements,
        }),
    ))
}

fn comparison(seed: u64) -> Outcome {
    let grid = EvaluationGrid::new(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0])?, 1.0 / 64.0)?;
    let mirror = Mirror::none(2);
    let zero = Measure::zero(2);
    let opts = PSolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut per_p = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let mut worst_p = 0.0f64;
        for _ in 0..100 {
            let a: Vec<f64> = (0..grid.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = a.iter().map(|v| v + rng.gen_range(0.0..1.0)).collect();
            let lo = solve_p_dirichlet(&grid, &mirror, &zero, p, &BoundaryData::Nodal { values: a }, &opts)?;
            let hi = solve_p_dirichlet(&grid, &mirror, &zero, p, &BoundaryData::Nodal { values: b }, &opts)?;
            worst_p = worst_p.max(comparison_violation(&lo, &hi));
        }
        worst = worst.max(worst_p);
        per_p.push(json!({ "p": p, "pairs": 100, "max_violation": worst_p }));
    }
    Ok((worst <= 1e-10, json!({ "runs": per_p, "max_violation": worst })))
}

/// Re-runs the cheap criteria in process and compares their serialized results.
fn determinism(seed: u64) -> Outcome {
    let mut mismatched = Vec::new();
    for c in CRITERIA.iter().filter(|c| [1, 3, 9].contains(&c.id)) {
        let a = serde_json::to_vec(&evaluate(c, seed))?;
        let b = serde_json::to_vec(&evaluate(c, seed))?;
        if a != b {
            mismatched.push(c.id);
        }
    }
    Ok((mismatched.is_empty(), json!({ "rerun": [1, 3, 9], "mismatched": mismatched })))
}

/// One-line summaries for terminals.
pub fn summary_lines(results: &[CriterionResult]) -> Vec<String> {
    results
        .iter()
        .map(|r| format!("[{}] {:>2} {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.title))
        .collect()
}
