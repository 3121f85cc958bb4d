//! One runner per subcommand. Runners build every artifact in memory; nothing is
//! written unless the whole task succeeds.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use potkit::asymptotic::{log_log_slope, ApproachPath};
use potkit::capacity::{p_capacity, riesz_capacity, CapacityEstimate, CapacityKind, RieszLpOptions, VariationalOptions};
use potkit::cones::{inclusion_check, p_gamma, ConeSpec};
use potkit::density::{box_counting_dimension, geometric_ladder, upper_density, DensityOptions};
use potkit::measures::Measure;
use potkit::plaplace::{envelope_check, solve_p_dirichlet, super_asymptotic_report, EnvelopeBand, PSolveOptions};
use potkit::riesz::{riesz_asymptotic_report, RieszParams};
use potkit::sets::ParametricSet;
use potkit::thinness::{escaping_ray, thinness_report, ThinnessOptions};
use potkit::wolff::{thin_witness_blowup, wolff_asymptotic_report, WitnessOptions, WolffParams};
use potkit::{BoxDomain, EvaluationGrid, Mirror, Point};

use crate::output::{num, Artifacts, Csv};
use crate::scene::{
    AtomSpec, AtomicSpec, BallFamilySpec, MeasureSpec, PathSpec, Scene, SetSpec, Tasks, ThinTask, WitnessTask,
    WolffAsymptoticsTask, WolffTask,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConesVerb {
    Member,
    Include,
    Pgamma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Riesz,
    Capacity,
    Thin,
    Wolff,
    Plaplace,
    Cones(ConesVerb),
    Density,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Riesz => "riesz",
            Task::Capacity => "capacity",
            Task::Thin => "thin",
            Task::Wolff => "wolff",
            Task::Plaplace => "plaplace",
            Task::Cones(ConesVerb::Member) => "cones member",
            Task::Cones(ConesVerb::Include) => "cones include",
            Task::Cones(ConesVerb::Pgamma) => "cones pgamma",
            Task::Density => "density",
        }
    }
}

/// Settings that the command line may override on top of the scene.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
}

/// Artifacts of a finished task and the checks it failed.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// An `expect` comparison recorded in the report.
#[derive(Debug, Serialize)]
struct Check {
    name: String,
    measured: f64,
    expected: f64,
    tolerance: f64,
    passed: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    /// Relative comparison, absolute when the expectation is zero.
    fn close(&mut self, name: &str, measured: f64, expected: f64, tol: f64) {
        let err = if expected == 0.0 { measured.abs() } else { (measured / expected - 1.0).abs() };
        self.0.push(Check { name: name.into(), measured, expected, tolerance: tol, passed: err <= tol });
    }

    fn failures(&self) -> Vec<String> {
        self.0
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: measured {} against expected {} (tolerance {})", c.name, c.measured, c.expected, c.tolerance))
            .collect()
    }
}

struct Ctx<'a> {
    scene: &'a Scene,
    seed: Option<u64>,
    tol: f64,
    artifacts: Artifacts,
    checks: Checks,
    extra_failures: Vec<String>,
}

impl Ctx<'_> {
    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("this task is randomized and needs a seed (scene \"seed\" or --seed)"))
    }

    fn finish(mut self, task: Task, result: Value) -> Result<Outcome> {
        let mut failures = self.checks.failures();
        failures.append(&mut self.extra_failures);
        let report = json!({
            "command": task.name(),
            "seed": self.seed,
            "tolerance": self.tol,
            "status": if failures.is_empty() { "ok" } else { "check-failed" },
            "failures": failures,
            "checks": self.checks.0,
            "result": result,
        });
        self.artifacts.json("report.json", &report)?;
        Ok(Outcome { artifacts: self.artifacts, failures })
    }
}

fn point(v: &[f64]) -> Result<Point> {
    Ok(Point::new(v.to_vec())?)
}

fn path(p: &PathSpec) -> Result<ApproachPath> {
    Ok(ApproachPath::geometric(p.direction.clone(), p.base, p.first, p.last)?)
}

fn missing(task: &str) -> anyhow::Error {
    anyhow!("the scene has no tasks.{task} section")
}

pub fn run(task: Task, scene: &Scene, over: &Overrides) -> Result<Outcome> {
    let mut ctx = Ctx {
        scene,
        seed: over.seed.or(scene.seed),
        tol: over.tolerance.unwrap_or(scene.tolerance),
        artifacts: Artifacts::new(),
        checks: Checks::default(),
        extra_failures: Vec::new(),
    };
    if !(ctx.tol > 0.0) {
        bail!("tolerance must be positive");
    }
    let t = &scene.tasks;
    let result = match task {
        Task::Riesz => riesz(&mut ctx, t)?,
        Task::Capacity => capacity(&mut ctx, t)?,
        Task::Thin => thin(&mut ctx, t)?,
        Task::Wolff => wolff(&mut ctx, t)?,
        Task::Plaplace => plaplace(&mut ctx, t)?,
        Task::Cones(verb) => cones(&mut ctx, t, verb)?,
        Task::Density => density(&mut ctx, t)?,
    };
    ctx.finish(task, result)
}

fn riesz(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.riesz.as_ref().ok_or_else(|| missing("riesz"))?;
    let mu = ctx.scene.measure(&task.measure)?;
    let a = riesz_asymptotic_report(&mu, &RieszParams::new(task.alpha, task.diameter), &point(&task.x0)?, &path(&task.path)?)?;
    let mut csv = Csv::new(&["r", "ratio", "potential"]);
    let r = &a.report;
    for i in 0..r.distances.len() {
        csv.row(&[num(r.distances[i]), num(r.ratios[i]), num(r.values[i])]);
    }
    ctx.artifacts.csv("riesz.csv", csv);
    if let Some(e) = task.expect {
        ctx.checks.close("limit", r.limit(), e, ctx.tol);
    }
    Ok(json!({ "limit": r.limit(), "asymptotics": a }))
}

fn capacity_of(kind: CapacityKind, e: &ParametricSet, omega: &potkit::capacity::Domain, h: f64) -> Result<CapacityEstimate> {
    Ok(match kind {
        CapacityKind::Riesz { alpha } => riesz_capacity(e, omega, alpha, h, &RieszLpOptions::default())?,
        CapacityKind::Variational { p } => p_capacity(e, omega, p, h, &VariationalOptions::default())?,
    })
}

fn capacity(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.capacity.as_ref().ok_or_else(|| missing("capacity"))?;
    let e = ctx.scene.set(&task.set)?;
    let n = ctx.scene.n;
    let base = capacity_of(task.capacity, &e, &task.omega, task.h)?;
    if let Some(x) = task.expect {
        ctx.checks.close("value", base.value, x, ctx.tol);
    }
    let mut result = serde_json::to_value(&base)?;
    if !task.scales.is_empty() {
        let center = task.center.clone().unwrap_or_else(|| vec![0.0; n]);
        if center.len() != n {
            bail!("capacity center must have {n} coordinates");
        }
        let mut csv = Csv::new(&["lambda", "value", "lower", "upper"]);
        let mut values = Vec::new();
        for &lam in &task.scales {
            if !(lam > 0.0) {
                bail!("scales must be positive");
            }
            let c = if lam == 1.0 {
                base.clone()
            } else {
                capacity_of(task.capacity, &e.scaled(&center, lam), &task.omega.scaled(&center, lam), task.h)?
            };
            let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
            csv.row(&[num(lam), num(c.value), opt(c.lower), opt(c.upper)]);
            values.push(c.value);
        }
        ctx.artifacts.csv("scaling.csv", csv);
        let slope = if task.scales.len() >= 2 { log_log_slope(&task.scales, &values) } else { f64::NAN };
        let predicted = match task.capacity {
            CapacityKind::Riesz { alpha } => n as f64 - alpha,
            CapacityKind::Variational { p } => n as f64 - p,
        };
        if let Some(x) = task.expect_slope {
            ctx.checks.close("slope", slope, x, ctx.tol);
        }
        result["scaling"] = json!({ "scales": task.scales, "values": values, "slope": slope, "predicted_slope": predicted });
    }
    Ok(result)
}

fn thin(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.thin.as_ref().ok_or_else(|| missing("thin"))?;
    let e = ctx.scene.set(&task.set)?;
    let x0 = point(&task.x0)?;
    let mut opts = ThinnessOptions { count: task.count, ..ThinnessOptions::default() };
    opts.annulus.delta = task.delta;
    opts.annulus.h = task.h;
    let (terms, report) = thinness_report(&e, &x0, task.capacity, &opts)?;
    let mut csv = Csv::new(&["i", "term", "partial_sum"]);
    for (t, s) in terms.iter().zip(&report.partial_sums) {
        csv.row(&[t.i.to_string(), num(t.term), num(*s)]);
    }
    ctx.artifacts.csv("thin.csv", csv);
    let ray = if task.ray_budget > 0 { escaping_ray(&e, &x0, task.delta, task.ray_budget, ctx.seed()?) } else { None };
    Ok(json!({ "verdict": report.verdict, "report": report, "annuli": terms, "escaping_ray": ray }))
}

fn wolff(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.wolff.as_ref().ok_or_else(|| missing("wolff"))?;
    match task {
        WolffTask::Asymptotics(WolffAsymptoticsTask { measure, p, r, x0, path: ps, expect }) => {
            let mu = ctx.scene.measure(measure)?;
            let a = wolff_asymptotic_report(&mu, &WolffParams::new(*p, *r), &point(x0)?, &path(ps)?)?;
            let rep = &a.report;
            let mut csv = Csv::new(&["r", "scaled_value", "raw_value"]);
            for i in 0..rep.distances.len() {
                csv.row(&[num(rep.distances[i]), num(rep.ratios[i]), num(rep.values[i])]);
            }
            ctx.artifacts.csv("wolff.csv", csv);
            if let Some(e) = expect {
                ctx.checks.close("limit", rep.limit(), *e, ctx.tol);
            }
            Ok(json!({ "limit": rep.limit(), "asymptotics": a }))
        }
        WolffTask::Witness(WitnessTask { s, p, atoms, centers }) => {
            let opts = WitnessOptions {
                n: ctx.scene.n,
                atoms: *atoms,
                centers: *centers,
                seed: ctx.seed()?,
                ..WitnessOptions::default()
            };
            let (mu, _, report) = thin_witness_blowup(*s, *p, &opts)?;
            let mut csv = Csv::new(&["i", "offset", "scaled_value", "lower_bound"]);
            for k in 0..report.center_index.len() {
                csv.row(&[
                    report.center_index[k].to_string(),
                    num(report.center_offsets[k]),
                    num(report.center_values[k]),
                    num(report.center_lower_bounds[k]),
                ]);
            }
            ctx.artifacts.csv("centers.csv", csv);
            let mut ray = Csv::new(&["r", "value"]);
            for (d, v) in report.ray_distances.iter().zip(&report.ray_values) {
                ray.row(&[num(*d), num(*v)]);
            }
            ctx.artifacts.csv("ray.csv", ray);
            let scene = witness_scene(ctx.scene.n, *s, *p, &mu, opts.first_ball, *atoms, opts.seed)?;
            ctx.artifacts.json("witness-scene.json", &scene)?;
            Ok(json!({ "witness": report }))
        }
    }
}

/// The witness measure and ball family as a stand-alone scene.
fn witness_scene(n: usize, s: f64, p: f64, mu: &Measure, first: u32, last: u32, seed: u64) -> Result<Scene> {
    let Measure::Atomic(am) = mu else {
        bail!("witness measure is not atomic");
    };
    let atoms = am.atoms().iter().map(|a| AtomSpec { point: a.point.coords().to_vec(), mass: a.mass }).collect();
    let mut measures = BTreeMap::new();
    measures.insert("witness".to_string(), MeasureSpec::Atomic(AtomicSpec { atoms }));
    let mut sets = BTreeMap::new();
    sets.insert("E".to_string(), SetSpec::BallFamily(BallFamilySpec { x0: vec![0.0; n], s, first, last }));
    let mut dir = vec![0.0; n];
    dir[1] = 1.0;
    let mut tasks = Tasks::default();
    tasks.thin = Some(ThinTask {
        set: "E".into(),
        x0: vec![0.0; n],
        capacity: CapacityKind::Variational { p },
        count: 10,
        delta: 1.0,
        h: 0.125,
        ray_budget: 4096,
    });
    tasks.wolff = Some(WolffTask::Asymptotics(WolffAsymptoticsTask {
        measure: "witness".into(),
        p,
        r: 1.0,
        x0: vec![0.0; n],
        path: PathSpec { direction: dir, base: 2.0, first: 1, last: 20 },
        expect: None,
    }));
    Ok(Scene {
        n,
        domain: None,
        measures,
        sets,
        seed: Some(seed),
        tolerance: 0.05,
        tasks,
    })
}

fn plaplace(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.plaplace.as_ref().ok_or_else(|| missing("plaplace"))?;
    let n = ctx.scene.n;
    let g = &task.grid;
    let grid = EvaluationGrid::new(&BoxDomain::new(g.lo.clone(), g.hi.clone())?, g.h)?;
    let mirror = if g.mirror.is_empty() { Mirror::none(n) } else { Mirror(g.mirror.clone()) };
    let mu = match &task.measure {
        Some(name) => ctx.scene.measure(name)?,
        None => Measure::zero(n),
    };
    let opts = PSolveOptions { levels: task.levels, ..PSolveOptions::default() };
    let sol = solve_p_dirichlet(&grid, &mirror, &mu, task.p, &task.boundary, &opts)?;
    if task.dump {
        let mut csv = Csv::new(&["index", "value"]);
        for (i, v) in sol.values.iter().enumerate() {
            csv.row(&[i.to_string(), num(*v)]);
        }
        ctx.artifacts.csv("solution.csv", csv);
    }
    let mut result = json!({
        "nodes": grid.node_count(),
        "h": grid.pitch(),
        "residual": sol.residual,
        "energy": sol.energy,
        "functional": sol.functional,
        "iterations": sol.iterations,
    });
    if let Some(a) = &task.asymptotics {
        let rep = super_asymptotic_report(&sol, &point(&a.x0)?, a.mass, a.r)?;
        let mut csv = Csv::new(&["r", "value", "ratio"]);
        for i in 0..rep.distances.len() {
            csv.row(&[num(rep.distances[i]), num(rep.values[i]), num(rep.ratios[i])]);
        }
        ctx.artifacts.csv("asymptotics.csv", csv);
        ctx.checks.close("window_mean", rep.window_mean, rep.expected, ctx.tol);
        result["asymptotics"] = serde_json::to_value(&rep)?;
    }
    if let Some(env) = &task.envelope {
        let mut samples = Vec::new();
        for x in &env.points {
            for r in &env.radii {
                samples.push(envelope_check(&sol, &mu, &point(x)?, *r)?);
            }
        }
        let mut csv = Csv::new(&["sample", "r", "u", "inf_u", "wolff_r", "wolff_2r"]);
        for (i, s) in samples.iter().enumerate() {
            csv.row(&[i.to_string(), num(s.r), num(s.u), num(s.inf_u), num(s.wolff_r), num(s.wolff_2r)]);
        }
        ctx.artifacts.csv("envelope.csv", csv);
        result["envelope"] = json!({ "band": EnvelopeBand::from_samples(&samples), "samples": samples });
    }
    Ok(result)
}

fn cones(ctx: &mut Ctx, t: &Tasks, verb: ConesVerb) -> Result<Value> {
    let task = t.cones.as_ref().ok_or_else(|| missing("cones"))?;
    let n = ctx.scene.n;
    match verb {
        ConesVerb::Member => {
            let m = task.member.as_ref().ok_or_else(|| missing("cones.member"))?;
            m.cone.validate(n)?;
            let mut csv = Csv::new(&["index", "member", "defining_value"]);
            let mut rows = Vec::new();
            for (i, l) in m.lambdas.iter().enumerate() {
                if l.len() != n {
                    bail!("lambda vector {i} has {} entries, expected {n}", l.len());
                }
                let (inside, f) = (m.cone.contains(l), m.cone.defining_function(l));
                csv.row(&[i.to_string(), inside.to_string(), num(f)]);
                rows.push(json!({ "lambda": l, "member": inside, "defining_value": f }));
            }
            ctx.artifacts.csv("member.csv", csv);
            Ok(json!({ "cone": m.cone.label(), "results": rows }))
        }
        ConesVerb::Include => {
            if task.include.is_empty() {
                return Err(missing("cones.include"));
            }
            let seed = ctx.seed()?;
            let mut reports = Vec::new();
            for (i, inc) in task.include.iter().enumerate() {
                let r = inclusion_check(&inc.inner, &inc.outer, n, inc.samples, seed.wrapping_add(i as u64))?;
                if !r.holds() {
                    ctx.extra_failures.push(format!("{} is not contained in {}: {} counterexample(s)", r.inner, r.outer, r.failures));
                }
                reports.push(r);
            }
            Ok(json!({ "inclusions": reports }))
        }
        ConesVerb::Pgamma => {
            if task.pgamma.is_empty() {
                return Err(missing("cones.pgamma"));
            }
            let mut csv = Csv::new(&["cone", "p_gamma"]);
            let mut rows = Vec::new();
            for c in &task.pgamma {
                let label = c.label();
                match p_gamma(c, n) {
                    Ok(v) => {
                        csv.row(&[label.clone(), num(v)]);
                        rows.push(json!({ "cone": label, "p_gamma": v, "formula": gamma_formula(c, n) }));
                    }
                    Err(potkit::Error::NoSignChange(why)) => {
                        csv.row(&[label.clone(), num(f64::INFINITY)]);
                        rows.push(json!({ "cone": label, "p_gamma": "inf", "note": why }));
                    }
                    Err(e) => return Err(e).with_context(|| format!("p_gamma for {label}")),
                }
            }
            ctx.artifacts.csv("pgamma.csv", csv);
            Ok(json!({ "cones": rows }))
        }
    }
}

fn gamma_formula(c: &ConeSpec, n: usize) -> Option<f64> {
    match c {
        ConeSpec::Gamma { k } if *k < n => Some(potkit::cones::p_gamma_k_formula(n, *k)),
        _ => None,
    }
}

fn density(ctx: &mut Ctx, t: &Tasks) -> Result<Value> {
    let task = t.density.as_ref().ok_or_else(|| missing("density"))?;
    if task.upper.is_none() && task.boxes.is_none() {
        bail!("tasks.density needs an upper or a boxes section");
    }
    let mut result = json!({});
    if let Some(u) = &task.upper {
        let mu = ctx.scene.measure(&u.measure)?;
        let ladder = geometric_ladder(u.ladder.r0, u.ladder.ratio, u.ladder.count)?;
        let prof = upper_density(&mu, &point(&u.x)?, u.d, &ladder, &DensityOptions::default())?;
        let mut csv = Csv::new(&["r", "value"]);
        for (r, v) in &prof.samples {
            csv.row(&[num(*r), num(*v)]);
        }
        ctx.artifacts.csv("density.csv", csv);
        result["upper"] = serde_json::to_value(&prof)?;
    }
    if let Some(b) = &task.boxes {
        let e = ctx.scene.set(&b.set)?;
        let rep = box_counting_dimension(&e, &b.scales)?;
        let mut csv = Csv::new(&["scale", "count"]);
        for (s, c) in rep.scales.iter().zip(&rep.counts) {
            csv.row(&[num(*s), c.to_string()]);
        }
        ctx.artifacts.csv("boxes.csv", csv);
        result["boxes"] = serde_json::to_value(&rep)?;
    }
    Ok(result)
}
