//! Scene files: named measures and sets plus per-subcommand task parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use potkit::capacity::{CapacityKind, Domain};
use potkit::cones::ConeSpec;
use potkit::density::cantor_points;
use potkit::measures::{Atom, AtomicMeasure, GridMeasure, Measure, Profile, RadialProfileMeasure};
use potkit::plaplace::BoundaryData;
use potkit::quadrature::ball_volume;
use potkit::sets::{ParametricSet, Primitive};
use potkit::{BoxDomain, EvaluationGrid, Point};

/// Schema violation located by a JSON pointer.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "scene error at {at}: {}", self.message)
    }
}

impl std::error::Error for SceneError {}

fn at(pointer: impl Into<String>, message: impl Into<String>) -> SceneError {
    SceneError { pointer: pointer.into(), message: message.into() }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    /// Ambient dimension.
    pub n: usize,
    /// Optional bounding box of the problem.
    #[serde(default)]
    pub domain: Option<BoxSpec>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureSpec>,
    #[serde(default)]
    pub sets: BTreeMap<String, SetSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Relative tolerance for `expect` checks.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub tasks: Tasks,
}

fn default_tolerance() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    Atomic(AtomicSpec),
    Radial(RadialSpec),
    /// Constant density on a ball.
    UniformBall(UniformBallSpec),
    /// Piecewise-constant density on the cells of a lattice over [lo, hi].
    Grid(GridMeasureSpec),
    /// Sum of named measures.
    Sum(SumSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicSpec {
    pub atoms: Vec<AtomSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSpec {
    pub center: Vec<f64>,
    pub profile: Profile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformBallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub density: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeasureSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    pub density: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumSpec {
    pub parts: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SetSpec {
    Primitives(PrimitivesSpec),
    /// ∪_{i=first}^{last} B(x₀ + 2^{−i}e₁, 2^{−i} i^{−s}).
    BallFamily(BallFamilySpec),
    /// Middle-thirds Cantor points on the first axis.
    Cantor(CantorSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitivesSpec {
    pub primitives: Vec<Primitive>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallFamilySpec {
    pub x0: Vec<f64>,
    pub s: f64,
    pub first: u32,
    pub last: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorSpec {
    pub depth: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub direction: Vec<f64>,
    #[serde(default = "two")]
    pub base: f64,
    #[serde(default = "one_i")]
    pub first: i32,
    #[serde(default = "twenty")]
    pub last: i32,
}

fn two() -> f64 {
    2.0
}
fn one_i() -> i32 {
    1
}
fn twenty() -> i32 {
    20
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tasks {
    #[serde(default)]
    pub riesz: Option<RieszTask>,
    #[serde(default)]
    pub capacity: Option<CapacityTask>,
    #[serde(default)]
    pub thin: Option<ThinTask>,
    #[serde(default)]
    pub wolff: Option<WolffTask>,
    #[serde(default)]
    pub plaplace: Option<PlaplaceTask>,
    #[serde(default)]
    pub cones: Option<ConesTask>,
    #[serde(default)]
    pub density: Option<DensityTask>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszTask {
    pub measure: String,
    pub alpha: f64,
    #[serde(default)]
    pub diameter: Option<f64>,
    pub x0: Vec<f64>,
    pub path: PathSpec,
    /// Expected limit of the normalized ratio.
    #[serde(default)]
    pub expect: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityTask {
    pub set: String,
    pub capacity: CapacityKind,
    pub omega: Domain,
    pub h: f64,
    /// Dilation factors λ about `center`; the slope of log cap against log λ is reported.
    #[serde(default)]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub center: Option<Vec<f64>>,
    #[serde(default)]
    pub expect: Option<f64>,
    #[serde(default)]
    pub expect_slope: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThinTask {
    pub set: String,
    pub x0: Vec<f64>,
    pub capacity: CapacityKind,
    #[serde(default = "ten")]
    pub count: u32,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "eighth")]
    pub h: f64,
    /// Directions to try when searching for an escaping ray (0 disables the search).
    #[serde(default)]
    pub ray_budget: usize,
}

fn ten() -> u32 {
    10
}
fn eighth() -> f64 {
    0.125
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WolffTask {
    Asymptotics(WolffAsymptoticsTask),
    /// Canonical blow-up witness against the ball family E_s.
    Witness(WitnessTask),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WolffAsymptoticsTask {
    pub measure: String,
    pub p: f64,
    #[serde(default = "one")]
    pub r: f64,
    pub x0: Vec<f64>,
    pub path: PathSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessTask {
    pub s: f64,
    pub p: f64,
    #[serde(default = "forty_eight")]
    pub atoms: u32,
    #[serde(default = "twenty_four")]
    pub centers: u32,
}

fn forty_eight() -> u32 {
    48
}
fn twenty_four() -> u32 {
    24
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub h: f64,
    /// Axes whose lower face is a symmetry plane.
    #[serde(default)]
    pub mirror: Vec<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperAsymptoticSpec {
    pub x0: Vec<f64>,
    pub mass: f64,
    pub r: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub points: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaplaceTask {
    #[serde(default)]
    pub measure: Option<String>,
    pub p: f64,
    pub grid: GridSpec,
    pub boundary: BoundaryData,
    #[serde(default = "one_u")]
    pub levels: usize,
    #[serde(default)]
    pub asymptotics: Option<SuperAsymptoticSpec>,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpec>,
    /// Write the nodal solution as CSV.
    #[serde(default = "yes")]
    pub dump: bool,
}

fn one_u() -> usize {
    1
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    pub cone: ConeSpec,
    pub lambdas: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncludeSpec {
    pub inner: ConeSpec,
    pub outer: ConeSpec,
    #[serde(default = "hundred_thousand")]
    pub samples: usize,
}

fn hundred_thousand() -> usize {
    100_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConesTask {
    #[serde(default)]
    pub member: Option<MemberSpec>,
    #[serde(default)]
    pub include: Vec<IncludeSpec>,
    #[serde(default)]
    pub pgamma: Vec<ConeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub r0: f64,
    #[serde(default = "half")]
    pub ratio: f64,
    pub count: usize,
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpperDensitySpec {
    pub measure: String,
    pub x: Vec<f64>,
    pub d: f64,
    pub ladder: LadderSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCountSpec {
    pub set: String,
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityTask {
    #[serde(default)]
    pub upper: Option<UpperDensitySpec>,
    #[serde(default)]
    pub boxes: Option<BoxCountSpec>,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    path.iter()
        .filter_map(|seg| match seg {
            serde_path_to_error::Segment::Seq { index } => Some(format!("/{index}")),
            serde_path_to_error::Segment::Map { key } => Some(format!("/{}", escape(key))),
            serde_path_to_error::Segment::Enum { .. } | serde_path_to_error::Segment::Unknown => None,
        })
        .collect()
}

fn path_error<T: DeserializeOwned>(v: Value) -> Option<(String, String)> {
    serde_path_to_error::deserialize::<_, T>(v).err().map(|e| (pointer_of(e.path()), e.inner().to_string()))
}

/// Tagged objects are buffered before dispatch, which hides the failing field; re-reads
/// the object at `pointer` as its variant to locate it.
fn refine(root: &Value, pointer: &str) -> Option<(String, String)> {
    let obj = root.pointer(pointer)?.as_object()?;
    let parts: Vec<&str> = pointer.split('/').skip(1).collect();
    let (tag, family) = match parts.as_slice() {
        ["measures", _] => ("kind", "measure"),
        ["sets", _] => ("kind", "set"),
        ["tasks", "wolff"] => ("mode", "wolff"),
        _ => return None,
    };
    let variant = obj.get(tag)?.as_str()?.to_string();
    let mut rest = obj.clone();
    rest.remove(tag);
    let rest = Value::Object(rest);
    let (sub, msg) = match (family, variant.as_str()) {
        ("measure", "atomic") => path_error::<AtomicSpec>(rest),
        ("measure", "radial") => path_error::<RadialSpec>(rest),
        ("measure", "uniform-ball") => path_error::<UniformBallSpec>(rest),
        ("measure", "grid") => path_error::<GridMeasureSpec>(rest),
        ("measure", "sum") => path_error::<SumSpec>(rest),
        ("set", "primitives") => path_error::<PrimitivesSpec>(rest),
        ("set", "ball-family") => path_error::<BallFamilySpec>(rest),
        ("set", "cantor") => path_error::<CantorSpec>(rest),
        ("wolff", "asymptotics") => path_error::<WolffAsymptoticsTask>(rest),
        ("wolff", "witness") => path_error::<WitnessTask>(rest),
        _ => return Some((format!("{pointer}/{tag}"), format!("unknown {tag} '{variant}'"))),
    }?;
    Some((format!("{pointer}{sub}"), msg))
}

/// Parses a scene, reporting the JSON pointer of the first schema violation.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let root: Value = serde_json::from_str(text).map_err(|e| at("", format!("not valid JSON: {e}")))?;
    let scene: Scene = serde_path_to_error::deserialize(&root).map_err(|e| {
        let pointer = pointer_of(e.path());
        match refine(&root, &pointer) {
            Some((p, m)) => at(p, m),
            None => at(pointer, e.inner().to_string()),
        }
    })?;
    scene.validate()?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| at("", format!("cannot read {}: {e}", path.display())))?;
    parse_scene(&text)
}

fn check_len(pointer: &str, v: &[f64], n: usize) -> Result<(), SceneError> {
    if v.len() != n {
        return Err(at(pointer, format!("expected {n} coordinates, got {}", v.len())));
    }
    Ok(())
}

impl Scene {
    fn validate(&self) -> Result<(), SceneError> {
        if !(2..=12).contains(&self.n) {
            return Err(at("/n", "dimension must lie in 2..=12"));
        }
        if !(self.tolerance > 0.0) {
            return Err(at("/tolerance", "tolerance must be positive"));
        }
        if let Some(b) = &self.domain {
            check_len("/domain/lo", &b.lo, self.n)?;
            check_len("/domain/hi", &b.hi, self.n)?;
        }
        for (name, spec) in &self.measures {
            if let MeasureSpec::Sum(SumSpec { parts }) = spec {
                for (i, part) in parts.iter().enumerate() {
                    if !self.measures.contains_key(part) || part == name {
                        return Err(at(
                            format!("/measures/{}/parts/{i}", escape(name)),
                            format!("unknown measure '{part}'"),
                        ));
                    }
                }
            }
        }
        let t = &self.tasks;
        let need_measure = |ptr: &str, name: &str| {
            if self.measures.contains_key(name) {
                Ok(())
            } else {
                Err(at(ptr, format!("unknown measure '{name}'")))
            }
        };
        let need_set = |ptr: &str, name: &str| {
            if self.sets.contains_key(name) {
                Ok(())
            } else {
                Err(at(ptr, format!("unknown set '{name}'")))
            }
        };
        if let Some(r) = &t.riesz {
            need_measure("/tasks/riesz/measure", &r.measure)?;
            check_len("/tasks/riesz/x0", &r.x0, self.n)?;
        }
        if let Some(c) = &t.capacity {
            need_set("/tasks/capacity/set", &c.set)?;
        }
        if let Some(c) = &t.thin {
            need_set("/tasks/thin/set", &c.set)?;
            check_len("/tasks/thin/x0", &c.x0, self.n)?;
            if c.ray_budget > 0 && self.seed.is_none() {
                return Err(at("/seed", "a seed is required for the escaping-ray search"));
            }
        }
        if let Some(WolffTask::Asymptotics(w)) = &t.wolff {
            need_measure("/tasks/wolff/measure", &w.measure)?;
            check_len("/tasks/wolff/x0", &w.x0, self.n)?;
        }
        if let Some(WolffTask::Witness(_)) = &t.wolff {
            if self.seed.is_none() {
                return Err(at("/seed", "a seed is required for the escaping-ray search"));
            }
        }
        if let Some(pl) = &t.plaplace {
            if let Some(m) = &pl.measure {
                need_measure("/tasks/plaplace/measure", m)?;
            }
            check_len("/tasks/plaplace/grid/lo", &pl.grid.lo, self.n)?;
            check_len("/tasks/plaplace/grid/hi", &pl.grid.hi, self.n)?;
        }
        if let Some(c) = &t.cones {
            if !c.include.is_empty() && self.seed.is_none() {
                return Err(at("/seed", "a seed is required for randomized inclusion checks"));
            }
        }
        if let Some(d) = &t.density {
            if let Some(u) = &d.upper {
                need_measure("/tasks/density/upper/measure", &u.measure)?;
                check_len("/tasks/density/upper/x", &u.x, self.n)?;
            }
            if let Some(b) = &d.boxes {
                need_set("/tasks/density/boxes/set", &b.set)?;
            }
        }
        Ok(())
    }

    /// Builds the named measure.
    pub fn measure(&self, name: &str) -> Result<Measure, SceneError> {
        self.build_measure(name, 0)
    }

    fn build_measure(&self, name: &str, depth: usize) -> Result<Measure, SceneError> {
        let ptr = format!("/measures/{}", escape(name));
        if depth > 32 {
            return Err(at(ptr, "measure sums nest too deeply (cycle?)"));
        }
        let spec = self.measures.get(name).ok_or_else(|| at(&ptr, format!("unknown measure '{name}'")))?;
        let core = |e: potkit::Error| at(&ptr, e.to_string());
        let point = |v: &[f64], field: &str| -> Result<Point, SceneError> {
            check_len(&format!("{ptr}/{field}"), v, self.n)?;
            Point::new(v.to_vec()).map_err(core)
        };
        Ok(match spec {
            MeasureSpec::Atomic(AtomicSpec { atoms }) => {
                let mut out = Vec::with_capacity(atoms.len());
                for (i, a) in atoms.iter().enumerate() {
                    out.push(Atom { point: point(&a.point, &format!("atoms/{i}/point"))?, mass: a.mass });
                }
                Measure::Atomic(AtomicMeasure::new(self.n, out).map_err(core)?)
            }
            MeasureSpec::Radial(RadialSpec { center, profile, radius }) => Measure::Radial(
                RadialProfileMeasure::new(point(center, "center")?, profile.clone(), *radius).map_err(core)?,
            ),
            MeasureSpec::UniformBall(UniformBallSpec { center, radius, density }) => {
                let c = density * ball_volume(self.n);
                let profile = Profile::Power { c, m: self.n as f64 };
                Measure::Radial(RadialProfileMeasure::new(point(center, "center")?, profile, Some(*radius)).map_err(core)?)
            }
            MeasureSpec::Grid(GridMeasureSpec { lo, hi, h, density }) => {
                check_len(&format!("{ptr}/lo"), lo, self.n)?;
                check_len(&format!("{ptr}/hi"), hi, self.n)?;
                let b = BoxDomain::new(lo.clone(), hi.clone()).map_err(core)?;
                let g = EvaluationGrid::new(&b, *h).map_err(core)?;
                Measure::Grid(GridMeasure::new(g, density.clone()).map_err(core)?)
            }
            MeasureSpec::Sum(SumSpec { parts }) => {
                let ms = parts.iter().map(|p| self.build_measure(p, depth + 1)).collect::<Result<Vec<_>, _>>()?;
                Measure::sum(ms).map_err(core)?
            }
        })
    }

    /// Builds the named set.
    pub fn set(&self, name: &str) -> Result<ParametricSet, SceneError> {
        let ptr = format!("/sets/{}", escape(name));
        let spec = self.sets.get(name).ok_or_else(|| at(&ptr, format!("unknown set '{name}'")))?;
        let core = |e: potkit::Error| at(&ptr, e.to_string());
        match spec {
            SetSpec::Primitives(PrimitivesSpec { primitives }) => ParametricSet::new(self.n, primitives.clone()).map_err(core),
            SetSpec::BallFamily(BallFamilySpec { x0, s, first, last }) => {
                check_len(&format!("{ptr}/x0"), x0, self.n)?;
                ParametricSet::ball_family(&Point::new(x0.clone()).map_err(core)?, *s, *first, *last).map_err(core)
            }
            SetSpec::Cantor(CantorSpec { depth }) => cantor_points(self.n, *depth).map_err(core),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointer_locates_bad_field() {
        let e = parse_scene(r#"{"n": 3, "measures": {"mu": {"kind": "atomic", "atoms": [{"point": [0,0,0], "mass": "x"}]}}}"#)
            .unwrap_err();
        assert_eq!(e.pointer, "/measures/mu/atoms/0/mass");
    }

    #[test]
    fn unknown_names_are_rejected() {
        let e = parse_scene(
            r#"{"n": 3, "tasks": {"riesz": {"measure": "nu", "alpha": 2, "x0": [0,0,0], "path": {"direction": [1,0,0]}}}}"#,
        )
        .unwrap_err();
        assert_eq!(e.pointer, "/tasks/riesz/measure");
    }
}
