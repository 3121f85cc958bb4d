//! Wolff potentials `W(x,r) = ∫_0^r (μ(B(x,t))/t^{n−p})^{1/(p−1)} dt/t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{growth_exponent, ApproachPath, AsymptoticReport, Correction, MIN_SAMPLES};
use crate::error::{invalid, Error, Result};
use crate::capacity::CapacityKind;
use crate::measures::{Atom, AtomicMeasure, MassFunction, Measure};
use crate::point::{self, Point};
use crate::sets::ParametricSet;
use crate::thinness::{escaping_ray, thinness_report, ThinnessOptions, ThinnessReport};
use crate::quadrature::{sphere_area, GaussLegendre};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum WolffQuadrature {
    /// Closed-form integration of each power/constant piece; quadrature only where the
    /// ball-mass function has no closed-form piece.
    #[default]
    ExactPiecewise,
    /// Gauss–Legendre panels on a logarithmic t-grid.
    LogGrid { points_per_decade: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffParams {
    pub p: f64,
    pub r: f64,
    #[serde(default)]
    pub quadrature: WolffQuadrature,
}

impl WolffParams {
    pub fn new(p: f64, r: f64) -> Self {
        WolffParams { p, r, quadrature: WolffQuadrature::ExactPiecewise }
    }

    pub fn log_grid(mut self, points_per_decade: usize) -> Self {
        self.quadrature = WolffQuadrature::LogGrid { points_per_decade };
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.p > 1.0 && self.p <= n as f64) {
            return invalid(format!("p must lie in (1, {n}], got {}", self.p));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return invalid(format!("upper limit r must be positive, got {}", self.r));
        }
        if let WolffQuadrature::LogGrid { points_per_decade } = self.quadrature {
            if points_per_decade < 64 {
                return invalid("log-grid quadrature needs at least 64 points per decade");
            }
        }
        Ok(())
    }
}

/// Contribution of one t-interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffPiece {
    pub t0: f64,
    pub t1: f64,
    pub value: f64,
    pub closed_form: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffValue {
    pub value: f64,
    pub pieces: Vec<WolffPiece>,
}

struct Exponents {
    n: f64,
    p: f64,
    /// 1/(p−1)
    q: f64,
    /// (n−p)/(p−1)
    beta: f64,
}

impl Exponents {
    fn new(n: usize, p: f64) -> Self {
        let q = 1.0 / (p - 1.0);
        Exponents { n: n as f64, p, q, beta: (n as f64 - p) * q }
    }

    /// g(t) = (F/t^{n−p})^q / t.
    fn integrand(&self, mass: f64, t: f64) -> f64 {
        if mass <= 0.0 {
            return 0.0;
        }
        (mass / t.powf(self.n - self.p)).powf(self.q) / t
    }

    /// ∫_a^b M^q t^{−β−1} dt.
    fn constant_piece(&self, mass: f64, a: f64, b: f64) -> f64 {
        if mass <= 0.0 {
            return 0.0;
        }
        let mq = mass.powf(self.q);
        if self.beta == 0.0 {
            mq * (b / a).ln()
        } else {
            mq * (a.powf(-self.beta) - b.powf(-self.beta)) / self.beta
        }
    }

    /// ∫_a^b (c t^m)^q t^{−β−1} dt = c^q ∫ t^{γ−1}, γ = (m − n + p) q.
    fn power_piece(&self, c: f64, m: f64, a: f64, b: f64) -> f64 {
        let gamma = (m - self.n + self.p) * self.q;
        let cq = c.powf(self.q);
        if gamma == 0.0 {
            if a == 0.0 { f64::INFINITY } else { cq * (b / a).ln() }
        } else if a == 0.0 && gamma < 0.0 {
            f64::INFINITY
        } else {
            cq * (b.powf(gamma) - a.powf(gamma)) / gamma
        }
    }
}

fn gl8() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(8))
}

/// Log-spaced Gauss–Legendre over [a, b] with at least `ppd` nodes per decade.
fn log_quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, ppd: usize) -> f64 {
    let gl = gl8();
    let (la, lb) = (a.ln(), b.ln());
    let decades = (lb - la) / std::f64::consts::LN_10;
    let panels = ((decades * ppd as f64 / 8.0).ceil() as usize).max(1);
    let mut acc = 0.0;
    for k in 0..panels {
        let u0 = la + (lb - la) * k as f64 / panels as f64;
        let u1 = la + (lb - la) * (k + 1) as f64 / panels as f64;
        // substitute t = e^u: ∫ g(t) dt = ∫ g(e^u) e^u du
        acc += gl.integrate(u0, u1, |u| {
            let t = u.exp();
            f(t) * t
        });
    }
    acc
}

const QUAD_PPD: usize = 128;
/// Relative lower cutoff of the log grid; the omitted [0, t_lo] is added from a local
/// power fit.
const LOG_GRID_FLOOR: f64 = 1e-16;

fn integrate(f: &MassFunction, e: &Exponents, params: &WolffParams) -> WolffValue {
    let r = params.r;
    if f.atom_at_zero() > 0.0 {
        return WolffValue {
            value: f64::INFINITY,
            pieces: vec![WolffPiece { t0: 0.0, t1: r, value: f64::INFINITY, closed_form: true }],
        };
    }
    let mut edges = vec![0.0];
    edges.extend(f.breakpoints().into_iter().filter(|b| *b < r));
    edges.push(r);
    let forced = match params.quadrature {
        WolffQuadrature::LogGrid { points_per_decade } => Some(points_per_decade),
        WolffQuadrature::ExactPiecewise => None,
    };
    let t_lo = r * LOG_GRID_FLOOR;
    let mut pieces = Vec::with_capacity(edges.len());
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = if a == 0.0 { 0.5 * b } else { (a * b).sqrt() };
        let mut constant = f.step_mass(mid);
        let mut active: Vec<(f64, f64)> = Vec::new();
        for pw in &f.powers {
            if mid >= pw.cut {
                constant += pw.eval(pw.cut);
            } else {
                active.push((pw.c, pw.m));
            }
        }
        let closed = forced.is_none() && !f.has_off_center() && (active.is_empty() || (active.len() == 1 && constant == 0.0));
        let value = if closed {
            if active.is_empty() {
                if constant == 0.0 { 0.0 } else { e.constant_piece(constant, a, b) }
            } else {
                e.power_piece(active[0].0, active[0].1, a, b)
            }
        } else {
            let ppd = forced.unwrap_or(QUAD_PPD);
            let g = |t: f64| e.integrand(f.eval(t), t);
            if a == 0.0 {
                let lo = t_lo.min(0.5 * b);
                let head = log_quadrature(g, lo, b, ppd);
                // tail on [0, lo] from the local exponent of the mass function
                let f1 = f.eval(lo);
                let tail = if f1 > 0.0 {
                    let m_loc = (f.eval(2.0 * lo) / f1).log2();
                    let gamma = (m_loc - e.n + e.p) * e.q;
                    if gamma > 0.0 { g(lo) * lo / gamma } else { f64::INFINITY }
                } else {
                    0.0
                };
                head + tail
            } else {
                log_quadrature(g, a, b, ppd)
            }
        };
        pieces.push(WolffPiece { t0: a, t1: b, value, closed_form: closed });
    }
    let value = pieces.iter().map(|p| p.value).sum();
    WolffValue { value, pieces }
}

/// W^μ_{1,p}(x, r) with its per-piece breakdown.
pub fn wolff_breakdown(mu: &Measure, params: &WolffParams, x: &Point) -> Result<WolffValue> {
    let n = mu.dim();
    params.validate(n)?;
    let f = mu.mass_function(x)?;
    Ok(integrate(&f, &Exponents::new(n, params.p), params))
}

/// W^μ_{1,p}(x, r); +∞ when x carries mass.
pub fn wolff_potential(mu: &Measure, params: &WolffParams, x: &Point) -> Result<f64> {
    Ok(wolff_breakdown(mu, params, x)?.value)
}

/// Potentials at many points, evaluated in parallel with per-point deterministic order.
pub fn wolff_potentials(mu: &Measure, params: &WolffParams, xs: &[Point]) -> Result<Vec<f64>> {
    let n = mu.dim();
    params.validate(n)?;
    let e = Exponents::new(n, params.p);
    xs.par_iter()
        .map(|x| Ok(integrate(&mu.mass_function(x)?, &e, params).value))
        .collect()
}

/// Limit of the scaled Wolff potential at an atom of mass `a`:
/// ((p−1)/(n−p))·a^{1/(p−1)} for p < n and a^{1/(n−1)} for p = n.
pub fn wolff_limit_constant(n: usize, p: f64, a: f64) -> f64 {
    let nf = n as f64;
    if p == nf {
        a.powf(1.0 / (nf - 1.0))
    } else {
        (p - 1.0) / (nf - p) * a.powf(1.0 / (p - 1.0))
    }
}

/// Limit of u/G_p for a p-superharmonic u with −Δ_p u having an atom of mass `a`:
/// ((p−1)/(n−p))·(a/|𝕊^{n−1}|)^{1/(p−1)} for p < n and (a/|𝕊^{n−1}|)^{1/(n−1)} for p = n.
pub fn superharmonic_limit_constant(n: usize, p: f64, a: f64) -> f64 {
    wolff_limit_constant(n, p, a / sphere_area(n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffAsymptotics {
    /// |x−x₀|^{(n−p)/(p−1)}·W (p < n) or W/log(1/|x−x₀|) (p = n).
    pub report: AsymptoticReport,
    /// Atom mass implied by the fitted limit under the Wolff normalization.
    pub atom_estimate: f64,
    /// Atom mass implied when the limit is read with the |𝕊^{n−1}| normalization of
    /// p-superharmonic asymptotics.
    pub atom_estimate_sphere_normalized: f64,
}

pub fn wolff_asymptotic_report(
    mu: &Measure,
    params: &WolffParams,
    x0: &Point,
    path: &ApproachPath,
) -> Result<WolffAsymptotics> {
    let n = mu.dim();
    params.validate(n)?;
    path.require(MIN_SAMPLES)?;
    let xs = path.points(x0)?;
    let values = wolff_potentials(mu, params, &xs)?;
    let e = Exponents::new(n, params.p);
    let r = path.radii.clone();
    let is_log = params.p == n as f64;
    let ratios: Vec<f64> = values
        .iter()
        .zip(&r)
        .map(|(v, d)| if is_log { v / (1.0 / d).ln() } else { v * d.powf(e.beta) })
        .collect();
    let correction = if is_log { Correction::Log } else { Correction::Power };
    let report = AsymptoticReport::from_samples(r, values, ratios, correction)?;
    let l = report.limit().max(0.0);
    let atom_estimate = if is_log {
        l.powf(n as f64 - 1.0)
    } else {
        (l / ((params.p - 1.0) / (n as f64 - params.p))).powf(params.p - 1.0)
    };
    Ok(WolffAsymptotics {
        report,
        atom_estimate,
        atom_estimate_sphere_normalized: atom_estimate * sphere_area(n),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffDecayReport {
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    /// (n − p − m + ε)/(p − 1).
    pub bound_exponent: f64,
    /// Smallest C with W ≤ C·|x−x₀|^{−bound_exponent} on the path.
    pub constant: f64,
    pub slope: f64,
    pub within_bound: bool,
}

/// Checks W(x, r) ≤ C|x−x₀|^{−(n−p−m+ε)/(p−1)} along a path for a measure with
/// μ(B(x₀,t)) ≤ C_m t^m.
pub fn wolff_decay_check(
    mu: &Measure,
    params: &WolffParams,
    x0: &Point,
    growth_constant: f64,
    m: f64,
    epsilon: f64,
    path: &ApproachPath,
) -> Result<WolffDecayReport> {
    let n = mu.dim();
    params.validate(n)?;
    let nf = n as f64;
    let p = params.p;
    if !(2.0..nf).contains(&p) {
        return invalid(format!("decay check needs p in [2, n), got {p}"));
    }
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    if !(m > 0.0 && m < nf - p) {
        return Err(Error::HypothesisViolated(format!(
            "growth exponent m = {m} must lie in (0, n - p) = (0, {})",
            nf - p
        )));
    }
    // growth hypothesis on the path scales and a ladder up to 3r
    let mut scales = path.radii.clone();
    let mut t = 3.0 * params.r;
    while t > path.radii.last().copied().unwrap_or(t) {
        scales.push(t);
        t *= 0.5;
    }
    for t in scales {
        let mass = mu.ball_mass(x0, t)?;
        if mass > growth_constant * t.powf(m) * (1.0 + 1e-9) {
            return Err(Error::HypothesisViolated(format!(
                "mu(B(x0,{t:.3e})) = {mass:.6e} exceeds C t^m = {:.6e}",
                growth_constant * t.powf(m)
            )));
        }
    }
    let xs = path.points(x0)?;
    let values = wolff_potentials(mu, params, &xs)?;
    let bound_exponent = (nf - p - m + epsilon) / (p - 1.0);
    let constant = values
        .iter()
        .zip(&path.radii)
        .map(|(v, d)| v * d.powf(bound_exponent))
        .fold(0.0, f64::max);
    let slope = growth_exponent(&path.radii, &values);
    Ok(WolffDecayReport {
        distances: path.radii.clone(),
        values,
        bound_exponent,
        constant,
        slope,
        within_bound: slope <= bound_exponent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WitnessOptions {
    pub n: usize,
    /// Atoms sit at 2^{−i}e₁ for i = 1..=atoms.
    pub atoms: u32,
    /// The ball family starts at this index; the i = 1 ball touches x₀ = 0.
    pub first_ball: u32,
    /// Atom-center evaluations run over i = first_ball..=centers.
    pub centers: u32,
    /// The escaping ray is sampled at |x| = 2^{−k}, k = 1..=ray_depth.
    pub ray_depth: u32,
    pub ray_budget: usize,
    pub seed: u64,
    pub r: f64,
    pub thinness: ThinnessOptions,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            n: 3,
            atoms: 48,
            first_ball: 2,
            centers: 24,
            ray_depth: 40,
            ray_budget: 4096,
            seed: 0,
            r: 1.0,
            thinness: ThinnessOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    pub thinness: ThinnessReport,
    pub center_index: Vec<u32>,
    /// Offsets d_i = min(|x_i|², ρ_i) of the evaluation points x_i + d_i e₂ ∈ E.
    pub center_offsets: Vec<f64>,
    /// |x|^{(n−p)/(p−1)}·W at the evaluation points.
    pub center_values: Vec<f64>,
    /// The same quantity for the single nearest atom, in closed form.
    pub center_lower_bounds: Vec<f64>,
    /// min_i center_value_i / (((p−1)/(n−p))·i).
    pub linear_ratio_min: f64,
    /// Whether the center values increase over their trailing third.
    pub center_tail_increasing: bool,
    pub ray: Option<Vec<f64>>,
    pub ray_distances: Vec<f64>,
    pub ray_values: Vec<f64>,
    pub ray_decays: bool,
}

/// Canonical thin-set witness: μ = Σ a_i δ_{2^{−i}e₁} with a_i = 2^{−i(n−p)} i^{p−1}
/// against the ball family E_s = ∪ B(2^{−i}e₁, 2^{−i} i^{−s}). Returns the measure, the
/// set and the report on thinness, blow-up along E and decay along an escaping ray.
pub fn thin_witness_blowup(s: f64, p: f64, opts: &WitnessOptions) -> Result<(Measure, ParametricSet, WitnessReport)> {
    let n = opts.n;
    let nf = n as f64;
    if !(p > 2.0 && p < nf) {
        return invalid(format!("witness needs p in (2, n), got {p}"));
    }
    if !s.is_finite() || !(s * (nf - p) > 1.0) {
        return invalid(format!("s = {s} does not make the ball family thin: need s(n-p) > 1"));
    }
    if opts.centers > opts.atoms || opts.first_ball < 2 || opts.first_ball > opts.centers {
        return invalid("need 2 <= first_ball <= centers <= atoms");
    }
    let beta = (nf - p) / (p - 1.0);
    let k = (p - 1.0) / (nf - p);
    let origin = Point::origin(n);
    let masses: Vec<f64> = (1..=opts.atoms).map(|i| 2f64.powf(-(i as f64) * (nf - p)) * (i as f64).powf(p - 1.0)).collect();
    let atoms = (1..=opts.atoms)
        .zip(&masses)
        .map(|(i, a)| Atom { point: Point::on_axis(n, 0, 2f64.powi(-(i as i32))), mass: *a })
        .collect();
    let mu = Measure::Atomic(AtomicMeasure::new(n, atoms)?);
    let set = ParametricSet::ball_family(&origin, s, opts.first_ball, opts.atoms)?;
    let params = WolffParams::new(p, opts.r);

    let (_, thinness) =
        thinness_report(&set, &origin, CapacityKind::Variational { p }, &opts.thinness)?;

    let center_index: Vec<u32> = (opts.first_ball..=opts.centers).collect();
    let mut center_offsets = Vec::new();
    let mut pts = Vec::new();
    let mut center_lower_bounds = Vec::new();
    for &i in &center_index {
        let c = 2f64.powi(-(i as i32));
        let rho = c * (i as f64).powf(-s);
        let d = (c * c).min(rho);
        let mut x = vec![0.0; n];
        x[0] = c;
        x[1] = d;
        let xn = point::norm(&x);
        let a = masses[i as usize - 1];
        center_lower_bounds.push(xn.powf(beta) * k * a.powf(1.0 / (p - 1.0)) * (d.powf(-beta) - opts.r.powf(-beta)));
        center_offsets.push(d);
        pts.push(Point::new(x)?);
    }
    let raw = wolff_potentials(&mu, &params, &pts)?;
    let center_values: Vec<f64> = raw.iter().zip(&pts).map(|(w, x)| w * x.norm().powf(beta)).collect();
    let linear_ratio_min = center_values
        .iter()
        .zip(&center_index)
        .map(|(v, i)| v / (k * *i as f64))
        .fold(f64::INFINITY, f64::min);
    let center_tail_increasing = center_values[2 * center_values.len() / 3..].windows(2).all(|w| w[1] > w[0]);

    let ray = escaping_ray(&set, &origin, 1.0, opts.ray_budget, opts.seed);
    let (ray_distances, ray_values) = match &ray {
        Some(v) => {
            let ds: Vec<f64> = (1..=opts.ray_depth).map(|j| 2f64.powi(-(j as i32))).collect();
            let xs: Vec<Point> = ds.iter().map(|t| origin.offset(v, *t)).collect();
            let w = wolff_potentials(&mu, &params, &xs)?;
            let vals = w.iter().zip(&ds).map(|(w, t)| w * t.powf(beta)).collect();
            (ds, vals)
        }
        None => (Vec::new(), Vec::new()),
    };
    let ray_decays = !ray_values.is_empty() && {
        let max = ray_values.iter().cloned().fold(0.0, f64::max);
        let tail = &ray_values[2 * ray_values.len() / 3..];
        *ray_values.last().expect("nonempty") < 0.05 * max && tail.windows(2).all(|w| w[1] <= w[0])
    };
    let report = WitnessReport {
        n,
        p,
        s,
        total_mass: masses.iter().sum(),
        masses,
        thinness,
        center_index,
        center_offsets,
        center_values,
        center_lower_bounds,
        linear_ratio_min,
        center_tail_increasing,
        ray,
        ray_distances,
        ray_values,
        ray_decays,
    };
    Ok((mu, set, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Profile, RadialProfileMeasure};

    fn atom3(a: f64) -> Measure {
        Measure::atom(Point::origin(3), a).unwrap()
    }

    fn closed_atom(n: f64, p: f64, a: f64, rho: f64, r: f64) -> f64 {
        if p == n {
            a.powf(1.0 / (n - 1.0)) * (r / rho).ln()
        } else {
            let b = (n - p) / (p - 1.0);
            a.powf(1.0 / (p - 1.0)) * (p - 1.0) / (n - p) * (rho.powf(-b) - r.powf(-b))
        }
    }

    #[test]
    fn single_atom_closed_form_and_quadrature() {
        let x = Point::new(vec![0.1, 0.2, 0.05]).unwrap();
        let rho = x.norm();
        for p in [1.5, 2.0, 2.5, 3.0] {
            let exact = closed_atom(3.0, p, 2.0, rho, 1.0);
            let v = wolff_potential(&atom3(2.0), &WolffParams::new(p, 1.0), &x).unwrap();
            assert!((v - exact).abs() < 1e-12 * exact, "p={p}");
            let q = wolff_potential(&atom3(2.0), &WolffParams::new(p, 1.0).log_grid(64), &x).unwrap();
            assert!((q / exact - 1.0).abs() < 1e-6, "p={p} q={q} exact={exact}");
        }
    }

    #[test]
    fn zero_measure_and_atom_location() {
        let x = Point::on_axis(3, 0, 0.5);
        assert_eq!(wolff_potential(&Measure::zero(3), &WolffParams::new(2.0, 1.0), &x).unwrap(), 0.0);
        let v = wolff_potential(&atom3(1.0), &WolffParams::new(2.0, 1.0), &Point::origin(3)).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn invalid_params() {
        let x = Point::on_axis(3, 0, 0.5);
        assert!(wolff_potential(&atom3(1.0), &WolffParams::new(1.0, 1.0), &x).is_err());
        assert!(wolff_potential(&atom3(1.0), &WolffParams::new(3.5, 1.0), &x).is_err());
        assert!(wolff_potential(&atom3(1.0), &WolffParams::new(2.0, 0.0), &x).is_err());
    }

    #[test]
    fn centered_power_profile_closed_form() {
        // W = c^q (r^γ − 0)/γ with γ = (m − n + p)/(p − 1)
        let (c, m, p) = (2.0, 1.5, 2.5);
        let mu = Measure::Radial(
            RadialProfileMeasure::new(Point::origin(3), Profile::Power { c, m }, Some(10.0)).unwrap(),
        );
        let v = wolff_potential(&mu, &WolffParams::new(p, 0.7), &Point::origin(3)).unwrap();
        let gamma = (m - 3.0 + p) / (p - 1.0);
        let exact = c.powf(1.0 / (p - 1.0)) * 0.7f64.powf(gamma) / gamma;
        assert!((v - exact).abs() < 1e-12 * exact);
        let q = wolff_potential(&mu, &WolffParams::new(p, 0.7).log_grid(64), &Point::origin(3)).unwrap();
        assert!((q / exact - 1.0).abs() < 1e-6);
    }

    #[test]
    fn off_center_profile_quadrature_matches_atomic_table() {
        // a two-shell table measure seen off-center versus the same mass as a step profile
        let mu = Measure::Radial(
            RadialProfileMeasure::new(
                Point::origin(3),
                Profile::Table { radii: vec![0.0], masses: vec![1.5] },
                None,
            )
            .unwrap(),
        );
        let x = Point::on_axis(3, 2, 0.2);
        let v = wolff_potential(&mu, &WolffParams::new(2.5, 1.0), &x).unwrap();
        let exact = closed_atom(3.0, 2.5, 1.5, 0.2, 1.0);
        assert!((v / exact - 1.0).abs() < 1e-6, "{v} vs {exact}");
    }

    #[test]
    fn limit_constants() {
        assert!((wolff_limit_constant(3, 2.5, 2.0) - 3.0 * 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
        assert!((wolff_limit_constant(3, 3.0, 4.0) - 2.0).abs() < 1e-12);
        let m = superharmonic_limit_constant(3, 2.0, 1.0);
        assert!((m - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn decay_check_rejects_atoms_and_limit_exponent() {
        let x0 = Point::origin(3);
        let path = ApproachPath::geometric(vec![1.0, 0.0, 0.0], 2.0, 2, 12).unwrap();
        let params = WolffParams::new(2.0, 0.5);
        let e = wolff_decay_check(&atom3(1.0), &params, &x0, 1.0, 0.5, 0.1, &path);
        assert!(matches!(e, Err(Error::HypothesisViolated(_))));
        let mu = Measure::Radial(
            RadialProfileMeasure::new(x0.clone(), Profile::Power { c: 1.0, m: 1.0 }, Some(2.0)).unwrap(),
        );
        let e = wolff_decay_check(&mu, &params, &x0, 1.0, 1.0, 0.1, &path);
        assert!(matches!(e, Err(Error::HypothesisViolated(_))));
        let ok = wolff_decay_check(&mu, &params, &x0, 2.0, 0.5, 0.1, &path);
        assert!(ok.is_ok(), "{ok:?}");
    }
}
