//! Upper d-densities of measures on geometric radius ladders and box-counting
//! dimensions of parametric sets.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::log_log_slope;
use crate::error::{invalid, Error, Result};
use crate::measures::Measure;
use crate::point::Point;
use crate::sets::{ParametricSet, Primitive};

/// Decreasing radii r₀·q^k, k = 0..count.
pub fn geometric_ladder(r0: f64, ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(r0 > 0.0) || !(ratio > 0.0 && ratio < 1.0) {
        return invalid("ladder needs r0 > 0 and a ratio in (0, 1)");
    }
    Ok((0..count).map(|k| r0 * ratio.powi(k as i32)).collect())
}

/// Estimate of limsup_{r→0} r^{−d}μ(B_r(x)).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimate", rename_all = "kebab-case")]
pub enum Limsup {
    /// The trailing values grow like r^{−growth}.
    Infinite { growth: f64 },
    /// Largest value over the trailing window.
    Finite { value: f64 },
}

impl Limsup {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Limsup::Infinite { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub x: Vec<f64>,
    pub d: f64,
    /// (r, r^{−d}μ(B_r(x))) with r strictly decreasing.
    pub samples: Vec<(f64, f64)>,
    pub limsup: Limsup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityOptions {
    /// Smallest trailing growth exponent read as divergence.
    pub growth_tol: f64,
}

impl Default for DensityOptions {
    fn default() -> Self {
        DensityOptions { growth_tol: 0.05 }
    }
}

/// r^{−d}μ(B_r(x)) on a geometric ladder, with a power-law read of the trailing half.
pub fn upper_density(mu: &Measure, x: &Point, d: f64, ladder: &[f64], opts: &DensityOptions) -> Result<DensityProfile> {
    let n = mu.dim();
    if !(0.0..=n as f64).contains(&d) {
        return invalid(format!("d must lie in [0, {n}], got {d}"));
    }
    if ladder.len() < 10 {
        return invalid("the ladder needs at least 10 rungs");
    }
    if ladder.iter().any(|r| !(*r > 0.0)) || ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("ladder radii must be positive and strictly decreasing");
    }
    let q = ladder[1] / ladder[0];
    if ladder.windows(2).any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-9) {
        return invalid("ladder must be geometric");
    }
    let values: Vec<f64> =
        ladder.par_iter().map(|r| mu.ball_mass(x, *r).map(|m| m * r.powf(-d))).collect::<Result<_>>()?;
    let half = ladder.len() / 2;
    let (tr, tv) = (&ladder[half..], &values[half..]);
    let peak = tv.iter().cloned().fold(0.0, f64::max);
    let limsup = if tv.iter().all(|v| *v > 0.0) {
        let growth = -log_log_slope(tr, tv);
        if growth > opts.growth_tol && *tv.last().unwrap() >= peak {
            Limsup::Infinite { growth }
        } else {
            Limsup::Finite { value: peak }
        }
    } else {
        Limsup::Finite { value: peak }
    };
    Ok(DensityProfile {
        x: x.coords().to_vec(),
        d,
        samples: ladder.iter().cloned().zip(values).collect(),
        limsup,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountReport {
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of log N(ε) against log(1/ε).
    pub dimension: f64,
}

/// Box-counting dimension over the given scales.
pub fn box_counting_dimension(e: &ParametricSet, scales: &[f64]) -> Result<BoxCountReport> {
    if e.is_empty() {
        return Err(Error::Degenerate("box counting needs a nonempty set".into()));
    }
    if scales.len() < 2 || scales.iter().any(|s| !(*s > 0.0)) {
        return invalid("need at least two positive scales");
    }
    let counts: Vec<usize> = scales.par_iter().map(|s| e.box_count(*s)).collect();
    let c: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let dimension = -log_log_slope(scales, &c);
    Ok(BoxCountReport { scales: scales.to_vec(), counts, dimension })
}

/// Left endpoints of the depth-`depth` middle-thirds intervals of [0, 1] on the first axis.
pub fn cantor_points(n: usize, depth: u32) -> Result<ParametricSet> {
    if depth > 16 {
        return invalid("cantor depth is limited to 16");
    }
    let mut ends = vec![0.0f64];
    let mut len = 1.0;
    for _ in 0..depth {
        len /= 3.0;
        ends = ends.iter().flat_map(|a| [*a, a + 2.0 * len]).collect();
    }
    let prims = ends
        .into_iter()
        .map(|a| {
            let mut at = vec![0.0; n];
            at[0] = a;
            Primitive::Point { at }
        })
        .collect();
    ParametricSet::new(n, prims)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_density_diverges() {
        let mu = Measure::atom(Point::origin(3), 2.0).unwrap();
        let ladder = geometric_ladder(0.5, 0.5, 12).unwrap();
        let prof = upper_density(&mu, &Point::origin(3), 1.0, &ladder, &DensityOptions::default()).unwrap();
        assert!(prof.limsup.is_infinite());
        assert_eq!(prof.samples[3].1, 2.0 / ladder[3]);
    }

    #[test]
    fn cantor_dimension() {
        let e = cantor_points(3, 10).unwrap();
        let scales: Vec<f64> = (2..=8).map(|k| 3f64.powi(-k)).collect();
        let r = box_counting_dimension(&e, &scales).unwrap();
        assert!((r.dimension - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{}", r.dimension);
    }
}
