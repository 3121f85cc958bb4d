//! Grid solutions of −Δ_p u = μ with Dirichlet data, the normalized fundamental
//! solution, the Wolff envelope and singular asymptotics of p-superharmonic functions.

use serde::{Deserialize, Serialize};

use crate::asymptotic::{AsymptoticReport, Correction, MIN_SAMPLES};
use crate::error::{invalid, Error, Result};
use crate::grid::{EvaluationGrid, Mirror};
use crate::measures::Measure;
use crate::penergy::{minimize, prolongate, GridProblem, SolverOptions};
use crate::point::{self, Point};
use crate::quadrature::{sphere_area, sphere_rule};
use crate::wolff::{superharmonic_limit_constant, wolff_potential, WolffParams};

/// Boundary values of a Dirichlet problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum BoundaryData {
    Constant { value: f64 },
    /// constant + ⟨gradient, x⟩
    Affine { constant: f64, gradient: Vec<f64> },
    /// m·G_p(x − center)
    Fundamental { center: Vec<f64>, m: f64, p: f64 },
    /// One value per grid node; only boundary entries are read.
    Nodal { values: Vec<f64> },
}

impl BoundaryData {
    fn validate(&self, grid: &EvaluationGrid) -> Result<()> {
        let n = grid.dim();
        let ok = match self {
            BoundaryData::Constant { value } => value.is_finite(),
            BoundaryData::Affine { constant, gradient } => {
                gradient.len() == n && constant.is_finite() && gradient.iter().all(|g| g.is_finite())
            }
            BoundaryData::Fundamental { center, m, p } => {
                center.len() == n && m.is_finite() && *p > 1.0 && *p <= n as f64
            }
            BoundaryData::Nodal { values } => values.len() == grid.node_count(),
        };
        if !ok {
            return invalid("boundary data do not match the grid");
        }
        Ok(())
    }

    fn value(&self, grid: &EvaluationGrid, idx: usize) -> f64 {
        let x = grid.node_coords(idx);
        match self {
            BoundaryData::Constant { value } => *value,
            BoundaryData::Affine { constant, gradient } => constant + point::dot(gradient, &x),
            BoundaryData::Fundamental { center, m, p } => {
                m * fundamental_profile(grid.dim(), *p, point::dist(&x, center))
            }
            BoundaryData::Nodal { values } => values[idx],
        }
    }
}

/// G_p at distance r: r^{−(n−p)/(p−1)} for p < n and −log r for p = n.
pub fn fundamental_profile(n: usize, p: f64, r: f64) -> f64 {
    let nf = n as f64;
    if p == nf {
        -r.ln()
    } else {
        r.powf(-(nf - p) / (p - 1.0))
    }
}

/// m·G_p(x − x₀) with m chosen so that −Δ_p u = mass·δ_{x₀}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalSolution {
    pub n: usize,
    pub p: f64,
    pub m: f64,
    pub center: Vec<f64>,
}

impl FundamentalSolution {
    pub fn new(center: &Point, p: f64, mass: f64) -> Result<Self> {
        let n = center.dim();
        if !(p > 1.0 && p <= n as f64) {
            return invalid(format!("p must lie in (1, {n}], got {p}"));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return invalid("mass must be finite and nonnegative");
        }
        Ok(FundamentalSolution { n, p, m: superharmonic_limit_constant(n, p, mass), center: center.coords().to_vec() })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.m * fundamental_profile(self.n, self.p, point::dist(x, &self.center))
    }

    /// Radial derivative d/dr of m·G_p.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        if self.p == nf {
            -self.m / r
        } else {
            let beta = (nf - self.p) / (self.p - 1.0);
            -self.m * beta * r.powf(-beta - 1.0)
        }
    }

    pub fn boundary_data(&self) -> BoundaryData {
        BoundaryData::Fundamental { center: self.center.clone(), m: self.m, p: self.p }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PSolveOptions {
    /// Stop once the relative functional change stays below this.
    pub energy_rtol: f64,
    /// Stop on the max-norm of the free gradient instead, when set.
    pub grad_tol: Option<f64>,
    pub max_iter: usize,
    /// Coarse-to-fine levels (used only while the cell counts stay even).
    pub levels: usize,
}

impl Default for PSolveOptions {
    fn default() -> Self {
        PSolveOptions { energy_rtol: 1e-8, grad_tol: None, max_iter: 100_000, levels: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PSolution {
    pub grid: EvaluationGrid,
    pub mirror: Mirror,
    pub p: f64,
    pub values: Vec<f64>,
    /// Max-norm of the discrete p-Laplace residual −Δ_p u − μ_h over free nodes, per unit volume.
    pub residual: f64,
    /// (1/p)∫|∇u|^p over the full (unmirrored) problem.
    pub energy: f64,
    /// energy − ∫u dμ_h.
    pub functional: f64,
    pub iterations: usize,
}

impl PSolution {
    /// Multilinear interpolant at x, reflected into the lattice across mirror planes.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        let y: Vec<f64> =
            x.iter().enumerate().map(|(d, v)| if self.mirror.axis(d) { v.abs() } else { *v }).collect();
        self.grid.interpolate(&self.values, &y)
    }

    /// Smallest node value at distance ≤ r from x (the mirror images included).
    pub fn inf_on_ball(&self, x: &[f64], r: f64) -> f64 {
        let y: Vec<f64> =
            x.iter().enumerate().map(|(d, v)| if self.mirror.axis(d) { v.abs() } else { *v }).collect();
        let mut best = f64::INFINITY;
        for i in 0..self.grid.node_count() {
            let z = self.grid.node_coords(i);
            if point::dist(&z, &y) <= r {
                best = best.min(self.values[i]);
            }
        }
        best
    }
}

/// Nodal load of μ on the lattice: atoms go to the corners of their containing cell,
/// grid measures by cell, radial measures shell by shell. With mirror planes, μ must be
/// symmetric; only its part on the lattice side of each plane is deposited.
pub fn project_measure(mu: &Measure, grid: &EvaluationGrid, mirror: &Mirror) -> Result<Vec<f64>> {
    let n = grid.dim();
    if mu.dim() != n {
        return invalid("measure and grid dimensions differ");
    }
    let mut load = vec![0.0; grid.node_count()];
    let h = grid.pitch();
    let dom = grid.domain();
    let place = |load: &mut Vec<f64>, x: &[f64], mass: f64, atom: bool| -> Result<()> {
        if mass == 0.0 {
            return Ok(());
        }
        let mirrored_out = (0..n).any(|d| mirror.axis(d) && x[d] < 0.0);
        if mirrored_out {
            return Ok(());
        }
        if !dom.contains(x) {
            return invalid(format!("measure mass at {x:?} lies outside the grid box"));
        }
        let on_face = (0..n).any(|d| {
            let tol = 1e-12 * h;
            ((x[d] - dom.lo[d]).abs() <= tol && !mirror.axis(d)) || (x[d] - dom.hi[d]).abs() <= tol
        });
        if on_face {
            if atom {
                return Err(Error::HypothesisViolated(format!("atom at {x:?} lies on the grid boundary")));
            }
            return Ok(());
        }
        // mass on k mirror planes is shared with its 2^k − 1 images
        let k = (0..n).filter(|&d| mirror.axis(d) && x[d].abs() <= 1e-12 * h).count();
        grid.deposit(load, x, mass / (1u64 << k) as f64);
        Ok(())
    };
    deposit_measure(mu, grid, &mut |x, mass, atom| place(&mut load, x, mass, atom))?;
    Ok(load)
}

fn deposit_measure(
    mu: &Measure,
    grid: &EvaluationGrid,
    put: &mut dyn FnMut(&[f64], f64, bool) -> Result<()>,
) -> Result<()> {
    let n = grid.dim();
    let h = grid.pitch();
    match mu {
        Measure::Atomic(a) => {
            for at in a.atoms() {
                put(at.point.coords(), at.mass, true)?;
            }
        }
        Measure::Grid(g) => {
            for (x, m) in g.cell_masses() {
                put(&x, m, false)?;
            }
        }
        Measure::Radial(r) => {
            let c = r.center().coords();
            let (atom, smooth, discrete) = r.shells();
            put(c, atom, true)?;
            let mut shells: Vec<(f64, f64)> = discrete;
            if let Some((coef, m, cut)) = smooth {
                let count = (cut / (0.5 * h)).ceil().max(1.0) as usize;
                let dt = cut / count as f64;
                for j in 0..count {
                    let (a, b) = (j as f64 * dt, (j + 1) as f64 * dt);
                    shells.push((0.5 * (a + b), coef * (b.powf(m) - a.powf(m))));
                }
            }
            let area = sphere_area(n);
            for (radius, mass) in shells {
                let k = ((2.0 * radius / h).ceil() as usize).max(4);
                for (v, w) in sphere_rule(n, k) {
                    let x: Vec<f64> = c.iter().zip(&v).map(|(ci, vi)| ci + radius * vi).collect();
                    put(&x, mass * w / area, false)?;
                }
            }
        }
        Measure::Sum { parts } => {
            for part in parts {
                deposit_measure(part, grid, put)?;
            }
        }
    }
    Ok(())
}

fn level_grids(grid: &EvaluationGrid, levels: usize) -> Vec<EvaluationGrid> {
    let mut out = vec![grid.clone()];
    while out.len() < levels.max(1) {
        let last = out.last().unwrap();
        if last.cells_per_axis().iter().any(|c| c % 2 != 0 || *c < 4) {
            break;
        }
        match EvaluationGrid::new(&last.domain(), 2.0 * last.pitch()) {
            Ok(g) => out.push(g),
            Err(_) => break,
        }
    }
    out.reverse();
    out
}

/// Minimizes (1/p)Σ|∇_h u|^p hⁿ − Σ u dμ_h over lattice functions equal to the boundary
/// data on the box faces (mirror planes excepted).
pub fn solve_p_dirichlet(
    grid: &EvaluationGrid,
    mirror: &Mirror,
    mu: &Measure,
    p: f64,
    boundary: &BoundaryData,
    opts: &PSolveOptions,
) -> Result<PSolution> {
    if !(p > 1.0) || !p.is_finite() {
        return invalid(format!("p must be finite and exceed 1, got {p}"));
    }
    mirror.validate(grid)?;
    boundary.validate(grid)?;
    if let BoundaryData::Nodal { .. } = boundary {
        if mirror.count() > 0 {
            return invalid("nodal boundary data cannot be combined with mirror planes");
        }
    }
    let grids = level_grids(grid, if matches!(boundary, BoundaryData::Nodal { .. }) { 1 } else { opts.levels });
    let mut prev: Option<(EvaluationGrid, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut finest = None;
    for (li, g) in grids.iter().enumerate() {
        let mut prob = GridProblem::new(g.clone(), mirror.clone(), p)?;
        prob.load = project_measure(mu, g, mirror)?;
        let nn = g.node_count();
        let mut u = match &prev {
            Some((pg, pv)) => prolongate(pg, pv, g),
            None => vec![0.0; nn],
        };
        let mut bsum = 0.0;
        let mut bcount = 0usize;
        for i in 0..nn {
            if g.on_boundary(i, mirror) {
                prob.fixed[i] = true;
                u[i] = boundary.value(g, i);
                bsum += u[i];
                bcount += 1;
            }
        }
        if prev.is_none() && bcount > 0 {
            let mean = bsum / bcount as f64;
            for i in 0..nn {
                if !prob.fixed[i] {
                    u[i] = mean;
                }
            }
        }
        let last = li + 1 == grids.len();
        let solver = SolverOptions {
            energy_rtol: if last { opts.energy_rtol } else { opts.energy_rtol.max(1e-6) },
            grad_tol: if last { opts.grad_tol } else { None },
            max_iter: opts.max_iter,
            ..SolverOptions::default()
        };
        let stats = minimize(&prob, &mut u, &solver)?;
        iterations += stats.iterations;
        if last {
            finest = Some((prob, u, stats));
        } else {
            prev = Some((g.clone(), u));
        }
    }
    let (prob, u, stats) = finest.expect("at least one level");
    let factor = mirror.energy_factor();
    let energy = prob.dirichlet_energy(&u) / p * factor;
    let functional = stats.functional * factor;
    let cell = grid.cell_volume();
    let residual = stats.grad_norm / cell;
    Ok(PSolution { grid: grid.clone(), mirror: mirror.clone(), p, values: u, residual, energy, functional, iterations })
}

/// Largest amount by which `lower` exceeds `upper` at any node (0 when ordered).
pub fn comparison_violation(lower: &PSolution, upper: &PSolution) -> f64 {
    lower.values.iter().zip(&upper.values).map(|(a, b)| a - b).fold(0.0, f64::max)
}

/// Flux ∫_{∂B_ρ}|∇u|^{p−2}∂_ν u of u = m·G_p with unit mass, the gradient taken by
/// central differences of step h at sphere quadrature nodes. Equals −1 up to O(h²/ρ²).
pub fn flux_normalization(p: f64, n: usize, rho: f64, h: f64) -> Result<f64> {
    if !(2..=12).contains(&n) {
        return invalid("flux check supports 2 <= n <= 12");
    }
    if !(rho > 0.0) || !(h > 0.0) || h >= rho {
        return invalid("need 0 < h < rho");
    }
    let fs = FundamentalSolution::new(&Point::origin(n), p, 1.0)?;
    let m = if n == 3 { 24 } else { 12 };
    let mut flux = 0.0;
    for (v, w) in sphere_rule(n, m) {
        let x: Vec<f64> = v.iter().map(|c| rho * c).collect();
        let mut grad = vec![0.0; n];
        for d in 0..n {
            let mut a = x.clone();
            let mut b = x.clone();
            a[d] += h;
            b[d] -= h;
            grad[d] = (fs.eval(&a) - fs.eval(&b)) / (2.0 * h);
        }
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        let normal = point::dot(&grad, &v);
        flux += w * rho.powi(n as i32 - 1) * g2.powf(0.5 * (p - 2.0)) * normal;
    }
    Ok(flux)
}

/// Empirical envelope ratios at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub x: Vec<f64>,
    pub r: f64,
    pub u: f64,
    pub wolff_r: f64,
    pub wolff_2r: f64,
    pub inf_u: f64,
    /// u(x)/W(x,r); absent when W(x,r) = 0.
    pub lower_ratio: Option<f64>,
    /// u(x)/(inf_{B(x,r)}u + W(x,2r)); absent when the denominator vanishes.
    pub upper_ratio: Option<f64>,
}

impl EnvelopeSample {
    pub fn from_values(x: Vec<f64>, r: f64, u: f64, inf_u: f64, wolff_r: f64, wolff_2r: f64) -> Self {
        let lower_ratio = (wolff_r > 0.0).then(|| u / wolff_r);
        let den = inf_u + wolff_2r;
        let upper_ratio = (den > 0.0).then(|| u / den);
        EnvelopeSample { x, r, u, wolff_r, wolff_2r, inf_u, lower_ratio, upper_ratio }
    }
}

/// Envelope ratios of a grid solution at x with radius r; B(x, 3r) must lie in the box.
pub fn envelope_check(solution: &PSolution, mu: &Measure, x: &Point, r: f64) -> Result<EnvelopeSample> {
    let n = solution.grid.dim();
    x.check_dim(n)?;
    let dom = solution.grid.domain();
    for d in 0..n {
        let (lo, hi) = if solution.mirror.axis(d) { (-dom.hi[d], dom.hi[d]) } else { (dom.lo[d], dom.hi[d]) };
        if x[d] - 3.0 * r < lo - 1e-12 || x[d] + 3.0 * r > hi + 1e-12 {
            return invalid("B(x, 3r) must lie inside the grid box");
        }
    }
    let u = solution.value_at(x.coords()).expect("x lies in the box");
    if solution.values.iter().any(|v| *v < -1e-9) {
        return Err(Error::HypothesisViolated("the envelope needs u >= 0".into()));
    }
    let inf_u = solution.inf_on_ball(x.coords(), r);
    let wr = wolff_potential(mu, &WolffParams::new(solution.p, r), x)?;
    let w2r = wolff_potential(mu, &WolffParams::new(solution.p, 2.0 * r), x)?;
    Ok(EnvelopeSample::from_values(x.coords().to_vec(), r, u, inf_u, wr, w2r))
}

/// Band of empirical envelope constants over a family of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBand {
    /// Smallest observed u/W(x,r).
    pub c1: f64,
    /// Largest observed u/(inf u + W(x,2r)).
    pub c2: f64,
    pub samples: usize,
    pub lower_vacuous: usize,
}

impl EnvelopeBand {
    pub fn from_samples(samples: &[EnvelopeSample]) -> Self {
        let c1 = samples.iter().filter_map(|s| s.lower_ratio).fold(f64::INFINITY, f64::min);
        let c2 = samples.iter().filter_map(|s| s.upper_ratio).fold(0.0, f64::max);
        let lower_vacuous = samples.iter().filter(|s| s.lower_ratio.is_none()).count();
        EnvelopeBand { c1, c2, samples: samples.len(), lower_vacuous }
    }
}

/// Ratios u/G_p against the predicted constant on a window of distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuperAsymptoticReport {
    pub n: usize,
    pub p: f64,
    pub mass: f64,
    /// Predicted limit m of u/G_p.
    pub expected: f64,
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Mean ratio over the window.
    pub window_mean: f64,
    /// max |ratio/m − 1| over the window.
    pub max_rel_deviation: f64,
    /// Extrapolation of the ratios to distance 0, when the window holds enough samples.
    /// Lattice solutions distort the innermost samples, so this is meaningful for
    /// analytic u only.
    pub extrapolated: Option<AsymptoticReport>,
    /// Smallest c₀ with u ≥ m·G_p − c₀ on the window.
    pub c0: f64,
}

/// Builds the report from sampled values of u at the given distances from x₀.
pub fn super_asymptotic_from_values(
    n: usize,
    p: f64,
    mass: f64,
    distances: Vec<f64>,
    values: Vec<f64>,
) -> Result<SuperAsymptoticReport> {
    if distances.len() != values.len() {
        return invalid("distance and value arrays differ in length");
    }
    if distances.is_empty() {
        return Err(Error::WindowEmpty("no samples".into()));
    }
    let expected = superharmonic_limit_constant(n, p, mass);
    let g: Vec<f64> = distances.iter().map(|r| fundamental_profile(n, p, *r)).collect();
    if g.iter().any(|v| !(*v > 0.0)) {
        return invalid("G_p must be positive on the window (radii below 1 when p = n)");
    }
    let ratios: Vec<f64> = values.iter().zip(&g).map(|(u, gv)| u / gv).collect();
    let window_mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_rel_deviation = ratios.iter().map(|q| (q / expected - 1.0).abs()).fold(0.0, f64::max);
    let c0 = values.iter().zip(&g).map(|(u, gv)| expected * gv - u).fold(0.0, f64::max);
    let correction = if p == n as f64 { Correction::Log } else { Correction::Power };
    let extrapolated = if distances.len() >= MIN_SAMPLES {
        Some(AsymptoticReport::from_samples(distances.clone(), values.clone(), ratios.clone(), correction)?)
    } else {
        None
    };
    Ok(SuperAsymptoticReport {
        n,
        p,
        mass,
        expected,
        distances,
        values,
        ratios,
        window_mean,
        max_rel_deviation,
        extrapolated,
        c0,
    })
}

/// Fewest lattice distances a grid window must hold.
pub const MIN_WINDOW: usize = 4;

/// u/G_p along the lattice axis through x₀ in direction +e₁, on the resolvable window
/// [4h, r/4].
pub fn super_asymptotic_report(solution: &PSolution, x0: &Point, mass: f64, r: f64) -> Result<SuperAsymptoticReport> {
    let n = solution.grid.dim();
    x0.check_dim(n)?;
    let h = solution.grid.pitch();
    let (lo, hi) = (4.0 * h, 0.25 * r);
    let first = 4usize;
    let last = (hi / h + 1e-9).floor() as usize;
    if last < first || last - first + 1 < MIN_WINDOW {
        return Err(Error::WindowEmpty(format!(
            "[{lo}, {hi}] holds fewer than {MIN_WINDOW} lattice distances at h = {h}"
        )));
    }
    let mut distances = Vec::new();
    let mut values = Vec::new();
    for k in (first..=last).rev() {
        let t = k as f64 * h;
        let x = x0.offset(&unit(n, 0), t);
        let v = solution
            .value_at(x.coords())
            .ok_or_else(|| Error::WindowEmpty("window leaves the grid box".into()))?;
        distances.push(t);
        values.push(v);
    }
    super_asymptotic_from_values(n, solution.p, mass, distances, values)
}

fn unit(n: usize, d: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[d] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxDomain;

    #[test]
    fn newtonian_flux() {
        let f = flux_normalization(2.0, 3, 0.5, 0.5 / 64.0).unwrap();
        assert!((f + 1.0).abs() < 1e-4, "{f}");
    }

    #[test]
    fn affine_data_reproduced() {
        let g = EvaluationGrid::new(&BoxDomain::cube(2, 1.0), 0.125).unwrap();
        let bd = BoundaryData::Affine { constant: 0.5, gradient: vec![1.0, -0.25] };
        for p in [1.5, 2.0] {
            let opts = PSolveOptions { grad_tol: Some(1e-13), ..Default::default() };
            let s = solve_p_dirichlet(&g, &Mirror::none(2), &Measure::zero(2), p, &bd, &opts).unwrap();
            for i in 0..g.node_count() {
                let x = g.node_coords(i);
                assert!((s.values[i] - (0.5 + x[0] - 0.25 * x[1])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn boundary_atoms_are_rejected() {
        let g = EvaluationGrid::new(&BoxDomain::cube(2, 1.0), 0.25).unwrap();
        let mu = Measure::atom(Point::new(vec![1.0, 0.0]).unwrap(), 1.0).unwrap();
        let r = project_measure(&mu, &g, &Mirror::none(2));
        assert!(matches!(r, Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn analytic_profile_has_constant_ratio() {
        let fs = FundamentalSolution::new(&Point::origin(3), 2.5, 2.0).unwrap();
        let d: Vec<f64> = (1..=12).map(|k| 2f64.powi(-k)).collect();
        let v: Vec<f64> = d.iter().map(|t| fs.eval(&[*t, 0.0, 0.0])).collect();
        let rep = super_asymptotic_from_values(3, 2.5, 2.0, d, v).unwrap();
        assert!(rep.max_rel_deviation < 1e-12);
        assert!(rep.c0 < 1e-9);
    }
}
