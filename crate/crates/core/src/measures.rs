//! Nonnegative finite measures and ball-mass queries μ(B(x,t)).
//!
//! Balls are closed: a point at distance d from x belongs to B(x,t) when
//! `d ≤ t·(1 + 1e-12)`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{invalid, Error, Result};
use crate::grid::EvaluationGrid;
use crate::point::{self, Point};
use crate::quadrature::GaussLegendre;

/// Relative slack under which a distance counts as lying on the ball boundary.
pub const BOUNDARY_RTOL: f64 = 1e-12;

#[inline]
pub(crate) fn within(d: f64, t: f64) -> bool {
    d <= t * (1.0 + BOUNDARY_RTOL)
}

fn check_mass(m: f64, what: &str) -> Result<()> {
    if !(m >= 0.0) || !m.is_finite() {
        return invalid(format!("{what} must be finite and nonnegative, got {m}"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// Finite sum of weighted Dirac masses at distinct points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomicMeasure {
    n: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(n: usize, atoms: Vec<Atom>) -> Result<Self> {
        if n < 2 {
            return invalid("dimension must be at least 2");
        }
        for (i, a) in atoms.iter().enumerate() {
            a.point.check_dim(n)?;
            check_mass(a.mass, "atom mass")?;
            if atoms[..i].iter().any(|b| b.point == a.point) {
                return invalid(format!("atom locations must be distinct: {:?} repeats", a.point));
            }
        }
        Ok(AtomicMeasure { n, atoms })
    }

    pub fn single(point: Point, mass: f64) -> Result<Self> {
        Self::new(point.dim(), vec![Atom { point, mass }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The same measure seen from one of its atoms, as a piecewise-constant radial profile.
    pub fn as_profile_about(&self, index: usize) -> Result<RadialProfileMeasure> {
        let Some(c) = self.atoms.get(index) else {
            return invalid(format!("no atom with index {index}"));
        };
        let mut d: Vec<(f64, f64)> =
            self.atoms.iter().map(|a| (a.point.dist(&c.point), a.mass)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut radii: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        let mut acc = 0.0;
        for (r, m) in d {
            acc += m;
            if radii.last() == Some(&r) {
                *masses.last_mut().unwrap() = acc;
            } else {
                radii.push(r);
                masses.push(acc);
            }
        }
        let radius = *radii.last().unwrap();
        RadialProfileMeasure::new(c.point.clone(), Profile::Table { radii, masses }, Some(radius))
    }
}

/// Cumulative mass t ↦ μ(B(center, t)) of a radial measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum Profile {
    /// `c·t^m`.
    Power { c: f64, m: f64 },
    /// `a + c·t^m`: an atom of mass `a` at the center plus a power law.
    AtomPlusPower { a: f64, c: f64, m: f64 },
    /// `masses[j]` on `[radii[j], radii[j+1])`, zero below `radii[0]`.
    Table { radii: Vec<f64>, masses: Vec<f64> },
}

impl Profile {
    fn validate(&self) -> Result<()> {
        match self {
            Profile::Power { c, m } => {
                check_mass(*c, "profile coefficient")?;
                if !(*m > 0.0) || !m.is_finite() {
                    return invalid("power profile exponent must be positive");
                }
            }
            Profile::AtomPlusPower { a, c, m } => {
                check_mass(*a, "profile atom")?;
                Profile::Power { c: *c, m: *m }.validate()?;
            }
            Profile::Table { radii, masses } => {
                if radii.is_empty() || radii.len() != masses.len() {
                    return invalid("profile table needs matching, nonempty radii and masses");
                }
                if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
                    return invalid("profile table radii must be nonnegative and increasing");
                }
                for m in masses {
                    check_mass(*m, "profile table mass")?;
                }
                if masses.windows(2).any(|w| w[1] < w[0]) {
                    return invalid("profile table masses must be nondecreasing");
                }
            }
        }
        Ok(())
    }

    /// Value at t (no support cutoff).
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Power { c, m } => c * t.powf(*m),
            Profile::AtomPlusPower { a, c, m } => a + c * t.powf(*m),
            Profile::Table { radii, masses } => {
                let k = radii.partition_point(|r| within(*r, t));
                if k == 0 { 0.0 } else { masses[k - 1] }
            }
        }
    }

    /// Mass concentrated at the center.
    pub fn atom(&self) -> f64 {
        match self {
            Profile::Power { .. } => 0.0,
            Profile::AtomPlusPower { a, .. } => *a,
            Profile::Table { radii, masses } => {
                if radii[0] == 0.0 { masses[0] } else { 0.0 }
            }
        }
    }
}

/// A measure invariant under rotations about `center`, optionally supported in
/// `B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialProfileMeasure {
    center: Point,
    profile: Profile,
    radius: Option<f64>,
}

impl RadialProfileMeasure {
    /// Power-law profiles need a support `radius` so that the total mass is finite.
    pub fn new(center: Point, profile: Profile, radius: Option<f64>) -> Result<Self> {
        profile.validate()?;
        if let Some(r) = radius {
            if !(r >= 0.0) || !r.is_finite() {
                return invalid("support radius must be finite and nonnegative");
            }
        } else if !matches!(profile, Profile::Table { .. }) {
            return invalid("power profiles need a support radius to have finite mass");
        }
        Ok(RadialProfileMeasure { center, profile, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// μ(B(center, t)).
    pub fn mass_within(&self, t: f64) -> f64 {
        let t = self.radius.map_or(t, |r| t.min(r));
        self.profile.eval(t)
    }

    pub fn total_mass(&self) -> f64 {
        match (&self.profile, self.radius) {
            (_, Some(r)) => self.profile.eval(r),
            (Profile::Table { masses, .. }, None) => *masses.last().unwrap(),
            _ => f64::INFINITY,
        }
    }

    /// Largest radius carrying mass.
    pub fn support_radius(&self) -> f64 {
        match (&self.profile, self.radius) {
            (Profile::Table { radii, .. }, r) => r.map_or(*radii.last().unwrap(), |r| r.min(*radii.last().unwrap())),
            (_, r) => r.unwrap_or(f64::INFINITY),
        }
    }

    /// Shell decomposition: (atom at center, continuous shell density s ↦ dμ/ds on
    /// (0, support], discrete shells (radius, mass)).
    pub(crate) fn shells(&self) -> (f64, Option<(f64, f64, f64)>, Vec<(f64, f64)>) {
        let cut = self.support_radius();
        match &self.profile {
            Profile::Power { c, m } => (0.0, Some((*c, *m, cut)), Vec::new()),
            Profile::AtomPlusPower { a, c, m } => (*a, Some((*c, *m, cut)), Vec::new()),
            Profile::Table { radii, masses } => {
                let mut prev = 0.0;
                let mut atom = 0.0;
                let mut out = Vec::new();
                for (r, m) in radii.iter().zip(masses) {
                    if *r > cut {
                        break;
                    }
                    let jump = m - prev;
                    prev = *m;
                    if *r == 0.0 {
                        atom = jump;
                    } else if jump > 0.0 {
                        out.push((*r, jump));
                    }
                }
                (atom, None, out)
            }
        }
    }

    /// μ(B(x,t)) for an arbitrary x, from the fraction of every centered sphere inside the ball.
    pub fn ball_mass(&self, x: &[f64], t: f64) -> f64 {
        let rho = point::dist(x, self.center.coords());
        if rho <= BOUNDARY_RTOL * t.max(f64::MIN_POSITIVE) {
            return self.mass_within(t);
        }
        let n = self.center.dim();
        let (atom, cont, discrete) = self.shells();
        let mut total = if within(rho, t) { atom } else { 0.0 };
        for (s, m) in discrete {
            total += m * sphere_fraction_in_ball(n, s, rho, t);
        }
        if let Some((c, m, cut)) = cont {
            // shells fully inside: s ≤ t − ρ
            let full = (t - rho).min(cut);
            if full > 0.0 {
                total += c * full.powf(m);
            }
            let a = (t - rho).abs().min(cut);
            let b = (rho + t).min(cut);
            if b > a {
                let gl = gl32();
                let mid = 0.5 * (a + b);
                for (lo, hi) in [(a, mid), (mid, b)] {
                    total += gl.integrate(lo, hi, |s| {
                        c * m * s.powf(m - 1.0) * sphere_fraction_in_ball(n, s, rho, t)
                    });
                }
            }
        }
        total
    }
}

fn gl32() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(32))
}

/// Fraction of 𝕊^{n−1} with cos θ ≥ κ.
pub fn cap_fraction(n: usize, kappa: f64) -> f64 {
    if kappa >= 1.0 {
        return 0.0;
    }
    if kappa <= -1.0 {
        return 1.0;
    }
    match n {
        2 => return kappa.acos() / std::f64::consts::PI,
        3 => return 0.5 * (1.0 - kappa),
        _ => cap_fraction_beta(n, kappa),
    }
}

fn cap_fraction_beta(n: usize, kappa: f64) -> f64 {
    let half = 0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, 1.0 - kappa * kappa);
    if kappa >= 0.0 { half } else { 1.0 - half }
}

/// Fraction of the sphere of radius s about the origin lying in the closed ball B(x,t),
/// |x| = ρ > 0.
pub fn sphere_fraction_in_ball(n: usize, s: f64, rho: f64, t: f64) -> f64 {
    if within(s + rho, t) {
        return 1.0;
    }
    if s - rho > t || rho - s > t {
        return 0.0;
    }
    cap_fraction(n, (s * s + rho * rho - t * t) / (2.0 * s * rho))
}

/// Piecewise-constant density over the cells of a grid, treated as point masses at the
/// cell centers for ball-mass queries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMeasure {
    grid: EvaluationGrid,
    density: Vec<f64>,
}

impl GridMeasure {
    pub fn new(grid: EvaluationGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.cell_count() {
            return invalid(format!(
                "density has {} entries, grid has {} cells",
                density.len(),
                grid.cell_count()
            ));
        }
        for d in &density {
            check_mass(*d, "cell density")?;
        }
        Ok(GridMeasure { grid, density })
    }

    /// Constant `value` on cells whose centers satisfy `inside`.
    pub fn uniform_where(grid: EvaluationGrid, value: f64, inside: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let density = (0..grid.cell_count())
            .map(|c| if inside(&grid.cell_center(c)) { value } else { 0.0 })
            .collect();
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &EvaluationGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// (cell center, cell mass) for cells carrying mass.
    pub fn cell_masses(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        let v = self.grid.cell_volume();
        self.density
            .iter()
            .enumerate()
            .filter(|(_, d)| **d > 0.0)
            .map(move |(i, d)| (self.grid.cell_center(i), d * v))
    }

    pub fn ball_mass(&self, x: &[f64], t: f64) -> f64 {
        self.cell_masses().filter(|(c, _)| within(point::dist(c, x), t)).map(|(_, m)| m).sum()
    }
}

/// A nonnegative finite measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Measure {
    Atomic(AtomicMeasure),
    Radial(RadialProfileMeasure),
    Grid(GridMeasure),
    Sum { parts: Vec<Measure> },
}

impl Measure {
    pub fn zero(n: usize) -> Self {
        Measure::Atomic(AtomicMeasure { n, atoms: Vec::new() })
    }

    pub fn atom(point: Point, mass: f64) -> Result<Self> {
        Ok(Measure::Atomic(AtomicMeasure::single(point, mass)?))
    }

    pub fn sum(parts: Vec<Measure>) -> Result<Self> {
        if let Some(first) = parts.first() {
            let n = first.dim();
            if parts.iter().any(|p| p.dim() != n) {
                return invalid("summed measures must share a dimension");
            }
        } else {
            return invalid("a sum needs at least one part");
        }
        Ok(Measure::Sum { parts })
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Atomic(a) => a.n,
            Measure::Radial(r) => r.center.dim(),
            Measure::Grid(g) => g.grid.dim(),
            Measure::Sum { parts } => parts[0].dim(),
        }
    }

    /// μ(B(x,t)) for the closed ball.
    pub fn ball_mass(&self, x: &Point, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return invalid(format!("ball radius must be positive and finite, got {t}"));
        }
        x.check_dim(self.dim())?;
        Ok(self.ball_mass_unchecked(x.coords(), t))
    }

    pub(crate) fn ball_mass_unchecked(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Measure::Atomic(a) => a
                .atoms
                .iter()
                .filter(|at| within(point::dist(at.point.coords(), x), t))
                .map(|at| at.mass)
                .sum(),
            Measure::Radial(r) => r.ball_mass(x, t),
            Measure::Grid(g) => g.ball_mass(x, t),
            Measure::Sum { parts } => parts.iter().map(|p| p.ball_mass_unchecked(x, t)).sum(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Atomic(a) => a.atoms.iter().map(|at| at.mass).sum(),
            Measure::Radial(r) => r.total_mass(),
            Measure::Grid(g) => g.total_mass(),
            Measure::Sum { parts } => parts.iter().map(|p| p.total_mass()).sum(),
        }
    }

    /// The measure restricted to the closed ball B(center, radius).
    pub fn restrict(&self, center: &Point, radius: f64) -> Result<Measure> {
        if !(radius > 0.0) {
            return invalid("restriction radius must be positive");
        }
        center.check_dim(self.dim())?;
        Ok(match self {
            Measure::Atomic(a) => Measure::Atomic(AtomicMeasure {
                n: a.n,
                atoms: a
                    .atoms
                    .iter()
                    .filter(|at| within(at.point.dist(center), radius))
                    .cloned()
                    .collect(),
            }),
            Measure::Radial(r) => {
                if r.center.dist(center) > BOUNDARY_RTOL * radius {
                    return Err(Error::RepresentationLimit(
                        "a radial profile can only be restricted to a ball about its center".into(),
                    ));
                }
                let cut = r.radius.map_or(radius, |c| c.min(radius));
                Measure::Radial(RadialProfileMeasure {
                    center: r.center.clone(),
                    profile: r.profile.clone(),
                    radius: Some(cut),
                })
            }
            Measure::Grid(g) => {
                let density = g
                    .density
                    .iter()
                    .enumerate()
                    .map(|(i, d)| {
                        if within(point::dist(&g.grid.cell_center(i), center.coords()), radius) {
                            *d
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Measure::Grid(GridMeasure { grid: g.grid.clone(), density })
            }
            Measure::Sum { parts } => Measure::Sum {
                parts: parts.iter().map(|p| p.restrict(center, radius)).collect::<Result<_>>()?,
            },
        })
    }

    /// Mass sitting exactly at x.
    pub fn point_mass(&self, x: &[f64]) -> f64 {
        match self {
            Measure::Atomic(a) => a
                .atoms
                .iter()
                .filter(|at| point::dist(at.point.coords(), x) == 0.0)
                .map(|at| at.mass)
                .sum(),
            Measure::Radial(r) => {
                if point::dist(r.center.coords(), x) == 0.0 { r.shells().0 } else { 0.0 }
            }
            Measure::Grid(_) => 0.0,
            Measure::Sum { parts } => parts.iter().map(|p| p.point_mass(x)).sum(),
        }
    }

    /// Multiplies every mass by `c ≥ 0`.
    pub fn scaled_mass(&self, c: f64) -> Result<Measure> {
        check_mass(c, "scale factor")?;
        Ok(match self {
            Measure::Atomic(a) => Measure::Atomic(AtomicMeasure {
                n: a.n,
                atoms: a.atoms.iter().map(|at| Atom { point: at.point.clone(), mass: at.mass * c }).collect(),
            }),
            Measure::Radial(r) => {
                let profile = match &r.profile {
                    Profile::Power { c: k, m } => Profile::Power { c: k * c, m: *m },
                    Profile::AtomPlusPower { a, c: k, m } => Profile::AtomPlusPower { a: a * c, c: k * c, m: *m },
                    Profile::Table { radii, masses } => Profile::Table {
                        radii: radii.clone(),
                        masses: masses.iter().map(|m| m * c).collect(),
                    },
                };
                Measure::Radial(RadialProfileMeasure { profile, ..r.clone() })
            }
            Measure::Grid(g) => Measure::Grid(GridMeasure {
                grid: g.grid.clone(),
                density: g.density.iter().map(|d| d * c).collect(),
            }),
            Measure::Sum { parts } => Measure::Sum {
                parts: parts.iter().map(|p| p.scaled_mass(c)).collect::<Result<_>>()?,
            },
        })
    }

    /// The ball-mass function t ↦ μ(B(x,t)) at a fixed point.
    pub fn mass_function(&self, x: &Point) -> Result<MassFunction> {
        x.check_dim(self.dim())?;
        let mut f = MassFunction { x: x.coords().to_vec(), ..Default::default() };
        self.collect_mass_function(x.coords(), &mut f);
        f.finish();
        Ok(f)
    }

    fn collect_mass_function(&self, x: &[f64], f: &mut MassFunction) {
        match self {
            Measure::Atomic(a) => {
                for at in &a.atoms {
                    if at.mass > 0.0 {
                        f.steps.push((point::dist(at.point.coords(), x), at.mass));
                    }
                }
            }
            Measure::Grid(g) => {
                let floor = g.grid.pitch() / 2.0;
                for (c, m) in g.cell_masses() {
                    f.steps.push((point::dist(&c, x).max(floor), m));
                }
            }
            Measure::Radial(r) => {
                let rho = point::dist(r.center.coords(), x);
                if rho == 0.0 {
                    let (atom, cont, discrete) = r.shells();
                    if atom > 0.0 {
                        f.steps.push((0.0, atom));
                    }
                    for (s, m) in discrete {
                        f.steps.push((s, m));
                    }
                    if let Some((c, m, cut)) = cont {
                        if c > 0.0 {
                            f.powers.push(CenteredPower { c, m, cut });
                        }
                    }
                } else {
                    f.off_center.push(r.clone());
                }
            }
            Measure::Sum { parts } => {
                for p in parts {
                    p.collect_mass_function(x, f);
                }
            }
        }
    }
}

/// `c·t^m` for t ≤ cut, constant `c·cut^m` beyond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenteredPower {
    pub c: f64,
    pub m: f64,
    pub cut: f64,
}

impl CenteredPower {
    pub fn eval(&self, t: f64) -> f64 {
        self.c * t.min(self.cut).powf(self.m)
    }
}

/// t ↦ μ(B(x,t)) split into exactly known pieces: sorted point masses (step function),
/// power laws centered at x, and radial measures centered elsewhere.
#[derive(Clone, Debug, Default)]
pub struct MassFunction {
    /// (distance, mass), sorted by distance and merged.
    pub steps: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    pub powers: Vec<CenteredPower>,
    pub off_center: Vec<RadialProfileMeasure>,
    x: Vec<f64>,
}

impl MassFunction {
    fn finish(&mut self) {
        self.steps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(self.steps.len());
        for (d, m) in self.steps.drain(..) {
            match merged.last_mut() {
                Some(last) if last.0 == d => last.1 += m,
                _ => merged.push((d, m)),
            }
        }
        self.steps = merged;
        let mut acc = 0.0;
        self.cumulative = self.steps.iter().map(|(_, m)| { acc += m; acc }).collect();
    }

    /// Mass of the step part at distance ≤ t.
    pub fn step_mass(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|(d, _)| within(*d, t));
        if k == 0 { 0.0 } else { self.cumulative[k - 1] }
    }

    /// Mass located exactly at x.
    pub fn atom_at_zero(&self) -> f64 {
        match self.steps.first() {
            Some((d, m)) if *d == 0.0 => *m,
            _ => 0.0,
        }
    }

    pub fn has_off_center(&self) -> bool {
        !self.off_center.is_empty()
    }

    /// μ(B(x,t)).
    pub fn eval(&self, t: f64) -> f64 {
        let mut v = self.step_mass(t);
        for p in &self.powers {
            v += p.eval(t);
        }
        for r in &self.off_center {
            v += r.ball_mass(&self.x, t);
        }
        v
    }

    /// Radii where the function has kinks or jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.steps.iter().map(|s| s.0).filter(|d| *d > 0.0).collect();
        b.extend(self.powers.iter().map(|p| p.cut));
        for r in &self.off_center {
            let rho = point::dist(&self.x, r.center().coords());
            let s = r.support_radius();
            b.push(rho);
            if s.is_finite() {
                b.push((rho - s).abs());
                b.push(rho + s);
            }
            for (sh, _) in r.shells().2 {
                b.push((rho - sh).abs());
                b.push(rho + sh);
            }
        }
        b.retain(|v| *v > 0.0 && v.is_finite());
        b.sort_by(|a, b| a.total_cmp(b));
        b.dedup();
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;

    fn p3(c: [f64; 3]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn atom_ball_mass_examples() {
        let mu = Measure::atom(Point::origin(3), 3.0).unwrap();
        assert_eq!(mu.ball_mass(&Point::origin(3), 0.5).unwrap(), 3.0);
        assert_eq!(mu.ball_mass(&p3([1.0, 0.0, 0.0]), 0.5).unwrap(), 0.0);
        // closed ball: boundary atom counts
        assert_eq!(mu.ball_mass(&p3([1.0, 0.0, 0.0]), 1.0).unwrap(), 3.0);
        assert!(mu.ball_mass(&Point::origin(3), 0.0).is_err());
    }

    #[test]
    fn power_profile_at_center() {
        let mu = Measure::Radial(
            RadialProfileMeasure::new(Point::origin(3), Profile::Power { c: 2.0, m: 1.5 }, Some(10.0)).unwrap(),
        );
        assert!((mu.ball_mass(&Point::origin(3), 4.0).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn power_profiles_need_a_radius() {
        assert!(RadialProfileMeasure::new(Point::origin(3), Profile::Power { c: 1.0, m: 3.0 }, None).is_err());
    }

    #[test]
    fn total_mass_examples() {
        let mu = Measure::Atomic(
            AtomicMeasure::new(
                3,
                vec![
                    Atom { point: Point::origin(3), mass: 1.0 },
                    Atom { point: Point::on_axis(3, 0, 1.0), mass: 2.0 },
                ],
            )
            .unwrap(),
        );
        assert_eq!(mu.total_mass(), 3.0);
        assert_eq!(Measure::zero(3).total_mass(), 0.0);
        let g = EvaluationGrid::new(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 0.1).unwrap();
        let gm = GridMeasure::uniform_where(g, 1.0, |_| true).unwrap();
        assert!((gm.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restriction_examples() {
        let mu = Measure::Atomic(
            AtomicMeasure::new(
                3,
                vec![
                    Atom { point: Point::origin(3), mass: 1.0 },
                    Atom { point: Point::on_axis(3, 0, 3.0), mass: 2.0 },
                ],
            )
            .unwrap(),
        );
        let r = mu.restrict(&Point::origin(3), 1.0).unwrap();
        assert_eq!(r.total_mass(), 1.0);
        let rad = Measure::Radial(
            RadialProfileMeasure::new(Point::origin(3), Profile::Power { c: 1.0, m: 2.0 }, Some(2.0)).unwrap(),
        );
        let cut = rad.restrict(&Point::origin(3), 1.0).unwrap();
        assert!((cut.total_mass() - 1.0).abs() < 1e-12);
        assert!(matches!(
            rad.restrict(&Point::on_axis(3, 0, 0.5), 1.0),
            Err(Error::RepresentationLimit(_))
        ));
    }

    #[test]
    fn duplicate_atoms_rejected() {
        let a = Atom { point: Point::origin(2), mass: 1.0 };
        assert!(AtomicMeasure::new(2, vec![a.clone(), a]).is_err());
    }

    #[test]
    fn cap_fraction_matches_low_dimensional_forms() {
        for k in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            assert!((cap_fraction_beta(3, k) - (1.0 - k) / 2.0).abs() < 1e-12);
            assert!((cap_fraction_beta(2, k) - k.acos() / std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn off_center_uniform_ball_mass_is_exact_for_inner_balls() {
        // uniform unit density on B(0,1) in 3D: ball B(x,t) inside the support has mass |B_t|
        let c = 4.0 * std::f64::consts::PI / 3.0;
        let r = RadialProfileMeasure::new(Point::origin(3), Profile::Power { c, m: 3.0 }, Some(1.0)).unwrap();
        let x = [0.3, 0.1, -0.2];
        for t in [0.05, 0.2, 0.4] {
            let v = r.ball_mass(&x, t);
            assert!((v - c * t.powi(3)).abs() < 1e-9 * c, "t={t} v={v}");
        }
        assert!((r.ball_mass(&x, 3.0) - c).abs() < 1e-12);
    }
}
