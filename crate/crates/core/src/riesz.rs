//! Riesz potentials `∫ |x−y|^{α−n} dμ(y)` and `∫ log(D/|x−y|) dμ(y)` (α = n).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{growth_exponent, ApproachPath, AsymptoticReport, Correction, MIN_SAMPLES};
use crate::error::{invalid, Error, Result};
use crate::measures::{GridMeasure, Measure, RadialProfileMeasure};
use crate::point::{self, Point};
use crate::quadrature::{sphere_area, GaussLegendre};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszParams {
    pub alpha: f64,
    /// Domain diameter D, required when α = n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
}

impl RieszParams {
    pub fn new(alpha: f64, diameter: Option<f64>) -> Self {
        RieszParams { alpha, diameter }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let nf = n as f64;
        if !(self.alpha > 1.0 && self.alpha <= nf) {
            return invalid(format!("alpha must lie in (1, {n}], got {}", self.alpha));
        }
        if self.is_log(n) {
            match self.diameter {
                Some(d) if d > 0.0 && d.is_finite() => {}
                _ => return invalid("alpha = n needs a positive domain diameter D"),
            }
        }
        Ok(())
    }

    pub fn is_log(&self, n: usize) -> bool {
        self.alpha == n as f64
    }

    fn d(&self) -> f64 {
        self.diameter.unwrap_or(1.0)
    }
}

/// k_α(r); +∞ at r = 0.
pub fn kernel(n: usize, params: &RieszParams, r: f64) -> f64 {
    if r == 0.0 {
        return f64::INFINITY;
    }
    if params.is_log(n) {
        (params.d() / r).ln()
    } else {
        r.powf(params.alpha - n as f64)
    }
}

/// ∫_{B_ρ(0)} k_α(|y|) dy.
pub fn ball_integral(n: usize, params: &RieszParams, rho: f64) -> f64 {
    let s = sphere_area(n);
    let nf = n as f64;
    if params.is_log(n) {
        s * rho.powi(n as i32) / nf * ((params.d() / rho).ln() + 1.0 / nf)
    } else {
        s * rho.powf(params.alpha) / params.alpha
    }
}

/// Spherical mean of k_α(|x−y|) over |y| = s, with |x| = ρ.
pub fn shell_average(n: usize, params: &RieszParams, rho: f64, s: f64) -> f64 {
    if s == 0.0 {
        return kernel(n, params, rho);
    }
    if rho == 0.0 {
        return kernel(n, params, s);
    }
    if n == 3 {
        // (1/(2ρs)) ∫_{|ρ−s|}^{ρ+s} k(u) u du
        let lo = (rho - s).abs();
        let hi = rho + s;
        let anti = |u: f64| -> f64 {
            if u == 0.0 {
                return 0.0;
            }
            if params.is_log(3) {
                0.5 * u * u * (params.d() / u).ln() + 0.25 * u * u
            } else {
                let q = params.alpha - 1.0;
                u.powf(q) / q
            }
        };
        return (anti(hi) - anti(lo)) / (2.0 * rho * s);
    }
    // (|𝕊^{n−2}|/|𝕊^{n−1}|) ∫_0^π k(√(ρ²+s²−2ρs cos θ)) sin^{n−2}θ dθ
    let gl = GaussLegendre::new(48);
    let w = sphere_area(n - 1) / sphere_area(n);
    let f = |th: f64| {
        let u2 = (rho - s).powi(2) + 2.0 * rho * s * (1.0 - th.cos());
        kernel(n, params, u2.max(0.0).sqrt()) * th.sin().powi(n as i32 - 2)
    };
    let mut acc = 0.0;
    let edges = [0.0, 1e-3, 1e-2, 0.1, 0.5, std::f64::consts::PI];
    for e in edges.windows(2) {
        acc += gl.integrate(e[0], e[1], f);
    }
    w * acc
}

/// R^{α}_μ(x). Returns +∞ when x carries mass (or when the profile is too singular at x).
pub fn riesz_potential(mu: &Measure, params: &RieszParams, x: &Point) -> Result<f64> {
    let n = mu.dim();
    params.validate(n)?;
    x.check_dim(n)?;
    Ok(potential_unchecked(mu, params, x.coords()))
}

fn potential_unchecked(mu: &Measure, params: &RieszParams, x: &[f64]) -> f64 {
    let n = mu.dim();
    match mu {
        Measure::Atomic(a) => {
            let mut acc = 0.0;
            for at in a.atoms() {
                if at.mass > 0.0 {
                    acc += at.mass * kernel(n, params, point::dist(at.point.coords(), x));
                }
            }
            acc
        }
        Measure::Radial(r) => radial_potential(r, params, x),
        Measure::Grid(g) => grid_potential(g, params, x),
        Measure::Sum { parts } => parts.iter().map(|p| potential_unchecked(p, params, x)).sum(),
    }
}

fn radial_potential(r: &RadialProfileMeasure, params: &RieszParams, x: &[f64]) -> f64 {
    let n = r.center().dim();
    let nf = n as f64;
    let rho = point::dist(x, r.center().coords());
    let (atom, cont, discrete) = r.shells();
    let mut acc = 0.0;
    if atom > 0.0 {
        acc += atom * kernel(n, params, rho);
    }
    for (s, m) in discrete {
        acc += m * shell_average(n, params, rho, s);
    }
    if let Some((c, m, cut)) = cont {
        if c > 0.0 && cut > 0.0 {
            if rho == 0.0 {
                acc += if params.is_log(n) {
                    c * cut.powf(m) * ((params.d() / cut).ln() + 1.0 / m)
                } else {
                    let e = params.alpha - nf + m;
                    if e <= 0.0 { f64::INFINITY } else { c * m * cut.powf(e) / e }
                };
            } else {
                let gl = GaussLegendre::new(24);
                let f = |s: f64| c * m * s.powf(m - 1.0) * shell_average(n, params, rho, s);
                let mut edges = vec![0.0];
                if rho < cut {
                    for k in [0.5, 0.9, 0.99] {
                        edges.push(rho * k);
                    }
                    edges.push(rho);
                    for k in [1.01, 1.1, 1.5] {
                        if rho * k < cut {
                            edges.push(rho * k);
                        }
                    }
                }
                edges.push(cut);
                for e in edges.windows(2) {
                    acc += gl.integrate(e[0], e[1], f);
                }
            }
        }
    }
    acc
}

/// Midpoint rule over cells; the cell containing x is replaced by the integral of the kernel
/// over the ball of equal volume centered at x.
fn grid_potential(g: &GridMeasure, params: &RieszParams, x: &[f64]) -> f64 {
    let grid = g.grid();
    let n = grid.dim();
    let h = grid.pitch();
    let vol = grid.cell_volume();
    let rho_eq = crate::quadrature::equivalent_radius(n, vol);
    let self_term = ball_integral(n, params, rho_eq) / vol;
    let mut acc = 0.0;
    for (i, d) in g.density().iter().enumerate() {
        if *d == 0.0 {
            continue;
        }
        let c = grid.cell_center(i);
        let inside = c.iter().zip(x).all(|(a, b)| (a - b).abs() < 0.5 * h);
        acc += if inside {
            d * vol * self_term
        } else {
            d * vol * kernel(n, params, point::dist(&c, x))
        };
    }
    acc
}

/// Potentials at many points, evaluated in parallel; each value is computed with a fixed
/// summation order so results do not depend on the worker count.
pub fn riesz_potentials(mu: &Measure, params: &RieszParams, xs: &[Point]) -> Result<Vec<f64>> {
    params.validate(mu.dim())?;
    for x in xs {
        x.check_dim(mu.dim())?;
    }
    Ok(xs.par_iter().map(|x| potential_unchecked(mu, params, x.coords())).collect())
}

/// Ratio samples along a path approaching `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszAsymptotics {
    /// R/|x−p|^{α−n}, or R/log(1/|x−p|) when α = n.
    pub report: AsymptoticReport,
    /// R/log(D/|x−p|) when α = n.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_normalized: Option<AsymptoticReport>,
}

pub fn riesz_asymptotic_report(
    mu: &Measure,
    params: &RieszParams,
    p: &Point,
    path: &ApproachPath,
) -> Result<RieszAsymptotics> {
    let n = mu.dim();
    params.validate(n)?;
    path.require(MIN_SAMPLES)?;
    let xs = path.points(p)?;
    let values = riesz_potentials(mu, params, &xs)?;
    let r = path.radii.clone();
    if params.is_log(n) {
        let raw: Vec<f64> = values.iter().zip(&r).map(|(v, r)| v / (1.0 / r).ln()).collect();
        let dn: Vec<f64> =
            values.iter().zip(&r).map(|(v, r)| v / (params.d() / r).ln()).collect();
        Ok(RieszAsymptotics {
            report: AsymptoticReport::from_samples(r.clone(), values.clone(), raw, Correction::Log)?,
            d_normalized: Some(AsymptoticReport::from_samples(r, values, dn, Correction::Log)?),
        })
    } else {
        let e = params.alpha - n as f64;
        let ratios: Vec<f64> = values.iter().zip(&r).map(|(v, r)| v / r.powf(e)).collect();
        Ok(RieszAsymptotics {
            report: AsymptoticReport::from_samples(r, values, ratios, Correction::Power)?,
            d_normalized: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    /// Exponent n − α − d of the admissible bound.
    pub bound_exponent: f64,
    /// Smallest C' with R(x_k) ≤ C'·|x_k−p|^{−(n−α−d)} on the path.
    pub constant: f64,
    /// Measured growth exponent (negated log-log slope).
    pub slope: f64,
    pub within_bound: bool,
}

/// Checks growth of the potential near `p` for a measure with μ(B(p,t)) ≤ C t^d on the
/// sampled scales.
pub fn riesz_decay_check(
    mu: &Measure,
    params: &RieszParams,
    p: &Point,
    d: f64,
    growth_constant: f64,
    path: &ApproachPath,
    slope_tol: f64,
) -> Result<DecayReport> {
    let n = mu.dim();
    params.validate(n)?;
    let bound_exponent = n as f64 - params.alpha - d;
    if !(d >= 0.0) || bound_exponent <= 0.0 {
        return invalid(format!("d must lie in [0, n - alpha), got {d}"));
    }
    for t in &path.radii {
        let m = mu.ball_mass(p, *t)?;
        if m > growth_constant * t.powf(d) * (1.0 + 1e-12) {
            return Err(Error::HypothesisViolated(format!(
                "mu(B(p,{t:.3e})) = {m:.6e} exceeds C t^d = {:.6e}",
                growth_constant * t.powf(d)
            )));
        }
    }
    let xs = path.points(p)?;
    let values = riesz_potentials(mu, params, &xs)?;
    let constant = values
        .iter()
        .zip(&path.radii)
        .map(|(v, r)| v * r.powf(bound_exponent))
        .fold(0.0, f64::max);
    let slope = growth_exponent(&path.radii, &values);
    Ok(DecayReport {
        distances: path.radii.clone(),
        values,
        bound_exponent,
        constant,
        slope,
        within_bound: slope <= bound_exponent + slope_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxDomain, EvaluationGrid};
    use crate::measures::Profile;
    use std::f64::consts::PI;

    #[test]
    fn single_atom_closed_forms() {
        let mu = Measure::atom(Point::origin(3), 2.0).unwrap();
        let x = Point::new(vec![0.3, 0.4, 0.0]).unwrap();
        let v = riesz_potential(&mu, &RieszParams::new(2.0, None), &x).unwrap();
        assert!((v - 2.0 / 0.5).abs() < 1e-14);
        let v = riesz_potential(&mu, &RieszParams::new(3.0, Some(4.0)), &x).unwrap();
        assert!((v - 2.0 * (4.0f64 / 0.5).ln()).abs() < 1e-14);
        let at = riesz_potential(&mu, &RieszParams::new(2.0, None), &Point::origin(3)).unwrap();
        assert_eq!(at, f64::INFINITY);
    }

    #[test]
    fn rejects_alpha_outside_range() {
        let mu = Measure::zero(3);
        assert!(riesz_potential(&mu, &RieszParams::new(1.0, None), &Point::origin(3)).is_err());
        assert!(riesz_potential(&mu, &RieszParams::new(3.5, None), &Point::origin(3)).is_err());
        assert!(riesz_potential(&mu, &RieszParams::new(3.0, None), &Point::origin(3)).is_err());
    }

    #[test]
    fn uniform_ball_newtonian_potential_at_center() {
        let grid = EvaluationGrid::new(&BoxDomain::cube(3, 1.0), 1.0 / 16.0).unwrap();
        let mu = Measure::Grid(
            GridMeasure::uniform_where(grid, 1.0, |c| point::norm(c) <= 1.0).unwrap(),
        );
        let v = riesz_potential(&mu, &RieszParams::new(2.0, None), &Point::origin(3)).unwrap();
        assert!((v / (2.0 * PI) - 1.0).abs() < 0.02, "v = {v}");
    }

    #[test]
    fn radial_profile_matches_shell_oracle() {
        // uniform unit-density ball as a power profile; Newtonian potential 2π − (2π/3)|x|²
        let c = 4.0 * PI / 3.0;
        let mu = Measure::Radial(
            RadialProfileMeasure::new(Point::origin(3), Profile::Power { c, m: 3.0 }, Some(1.0)).unwrap(),
        );
        let params = RieszParams::new(2.0, None);
        for r in [0.0, 0.3, 0.8, 2.0] {
            let v = riesz_potential(&mu, &params, &Point::on_axis(3, 1, r)).unwrap();
            let exact = if r <= 1.0 { 2.0 * PI - 2.0 * PI / 3.0 * r * r } else { c / r };
            assert!((v - exact).abs() < 1e-8, "r={r} v={v} exact={exact}");
        }
    }

    #[test]
    fn shell_average_general_n_matches_n3_formula() {
        // n = 4 with α = 2 reduces to the Newtonian mean value 1/max(ρ,s)²
        let p4 = RieszParams::new(2.0, None);
        for (rho, s) in [(0.3, 0.7), (0.9, 0.2)] {
            let v = shell_average(4, &p4, rho, s);
            let exact = 1.0 / f64::max(rho, s).powi(2);
            assert!((v / exact - 1.0).abs() < 1e-6, "{v} vs {exact}");
        }
    }

    #[test]
    fn pure_atom_ratio_is_the_mass_everywhere() {
        let mu = Measure::atom(Point::origin(3), 1.5).unwrap();
        let path = ApproachPath::geometric(vec![1.0, 1.0, 0.0], 2.0, 1, 12).unwrap();
        let rep = riesz_asymptotic_report(&mu, &RieszParams::new(2.0, None), &Point::origin(3), &path).unwrap();
        for r in &rep.report.ratios {
            assert!((r - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn short_paths_rejected() {
        let mu = Measure::atom(Point::origin(3), 1.0).unwrap();
        let path = ApproachPath::geometric(vec![1.0, 0.0, 0.0], 2.0, 1, 5).unwrap();
        let e = riesz_asymptotic_report(&mu, &RieszParams::new(2.0, None), &Point::origin(3), &path);
        assert!(matches!(e, Err(Error::PathTooShort { .. })));
    }

    #[test]
    fn decay_check_atom_slope_is_exact() {
        let mu = Measure::atom(Point::origin(3), 2.0).unwrap();
        let path = ApproachPath::geometric(vec![0.0, 0.0, 1.0], 2.0, 1, 10).unwrap();
        let params = RieszParams::new(1.5, None);
        let rep = riesz_decay_check(&mu, &params, &Point::origin(3), 0.0, 2.0, &path, 1e-9).unwrap();
        assert!((rep.slope - 1.5).abs() < 1e-12);
        assert!(rep.within_bound);
        let off = Measure::atom(Point::on_axis(3, 0, 1.0), 1.0).unwrap();
        let rep = riesz_decay_check(&off, &params, &Point::origin(3), 0.0, 1.0, &path, 0.05).unwrap();
        assert!(rep.slope.abs() < 0.05);
        let bad = riesz_decay_check(&mu, &params, &Point::origin(3), 0.5, 1.0, &path, 0.05);
        assert!(matches!(bad, Err(Error::HypothesisViolated(_))));
    }
}
