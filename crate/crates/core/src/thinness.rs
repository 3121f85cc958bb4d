//! Wiener-type dyadic-annulus series, their thin/not-thin classification, and escaping
//! rays.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    annulus_capacity, assemble_term, normalized_annulus, reference_capacity, AnnulusOptions, AnnulusTerm,
    CapacityKind,
};
use crate::error::{invalid, Result};
use crate::point::Point;
use crate::quadrature::halton_directions;
use crate::sets::ParametricSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Thin,
    NotThin,
    Inconclusive,
}

/// Decay model fitted to the trailing terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum TailModel {
    /// All trailing terms vanish.
    Zero,
    /// term ≈ coef·i^{−exponent}
    Power { coef: f64, exponent: f64, rms_log_residual: f64 },
    /// term ≈ coef·ratio^i
    Geometric { coef: f64, ratio: f64, rms_log_residual: f64 },
}

impl TailModel {
    fn residual(&self) -> f64 {
        match self {
            TailModel::Zero => 0.0,
            TailModel::Power { rms_log_residual, .. } | TailModel::Geometric { rms_log_residual, .. } => {
                *rms_log_residual
            }
        }
    }

    /// Estimate of Σ_{i>count} term_i; +∞ when the model is not summable.
    pub fn tail_bound(&self, count: usize) -> f64 {
        let i = count as f64;
        match *self {
            TailModel::Zero => 0.0,
            TailModel::Power { coef, exponent, .. } => {
                if exponent > 1.0 {
                    // midpoint-corrected integral of coef·t^{−q} over (I + 1/2, ∞)
                    coef * (i + 0.5).powf(1.0 - exponent) / (exponent - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            TailModel::Geometric { coef, ratio, .. } => {
                if ratio < 1.0 {
                    coef * ratio.powf(i + 1.0) / (1.0 - ratio)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn summable(&self) -> bool {
        match *self {
            TailModel::Zero => true,
            TailModel::Power { exponent, .. } => exponent > 1.0,
            TailModel::Geometric { ratio, .. } => ratio < 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyOptions {
    /// Largest admissible last-quarter increment, relative to the partial sum.
    pub cauchy_rtol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { cauchy_rtol: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinnessReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub partial_sum: f64,
    pub tail: TailModel,
    pub tail_bound: f64,
    /// Sum of the last ⌈I/4⌉ terms.
    pub last_quarter_increment: f64,
    /// Smallest term over the trailing half.
    pub trailing_min: f64,
    pub verdict: Verdict,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icept - slope * a).powi(2)).sum::<f64>() / m).sqrt();
    (icept, slope, rms)
}

fn fit_tail(index: &[f64], terms: &[f64]) -> TailModel {
    let pos: Vec<(f64, f64)> = index.iter().zip(terms).filter(|(_, t)| **t > 0.0).map(|(i, t)| (*i, t.ln())).collect();
    if pos.is_empty() {
        return TailModel::Zero;
    }
    if pos.len() == 1 {
        // a lone positive term: treat as the constant sequence it is consistent with
        return TailModel::Power { coef: pos[0].1.exp(), exponent: 0.0, rms_log_residual: 0.0 };
    }
    let ly: Vec<f64> = pos.iter().map(|p| p.1).collect();
    let li: Vec<f64> = pos.iter().map(|p| p.0.ln()).collect();
    let ii: Vec<f64> = pos.iter().map(|p| p.0).collect();
    let (a, b, rp) = least_squares(&li, &ly);
    let (c, d, rg) = least_squares(&ii, &ly);
    let power = TailModel::Power { coef: a.exp(), exponent: -b, rms_log_residual: rp };
    let geometric = TailModel::Geometric { coef: c.exp(), ratio: d.exp(), rms_log_residual: rg };
    // prefer the more conservative power law unless the geometric fit is clearly better
    if geometric.residual() < 0.5 * power.residual() { geometric } else { power }
}

/// Verdict protocol for a finite prefix of a nonnegative series: fit the trailing half,
/// call it thin when the fit is summable and the partial sums have settled, not-thin when
/// the trailing terms stay positive with a non-summable fit, and inconclusive otherwise.
pub fn classify_thin(terms: &[f64], opts: &ClassifyOptions) -> ThinnessReport {
    let count = terms.len();
    let mut partial_sums = Vec::with_capacity(count);
    let mut acc = 0.0;
    for t in terms {
        acc += t;
        partial_sums.push(acc);
    }
    let half = count / 2;
    let index: Vec<f64> = (half + 1..=count).map(|i| i as f64).collect();
    let tail = fit_tail(&index, &terms[half..]);
    let tail_bound = tail.tail_bound(count);
    let quarter = count.div_ceil(4);
    let last_quarter_increment: f64 = terms[count - quarter..].iter().sum();
    let trailing_min = terms[half..].iter().cloned().fold(f64::INFINITY, f64::min);

    let settled = last_quarter_increment <= opts.cauchy_rtol * acc || acc == 0.0;
    let verdict = if tail.summable() && tail_bound.is_finite() && settled {
        Verdict::Thin
    } else if !tail.summable() && trailing_min > 0.0 {
        Verdict::NotThin
    } else {
        Verdict::Inconclusive
    };
    ThinnessReport {
        terms: terms.to_vec(),
        partial_sums,
        partial_sum: acc,
        tail,
        tail_bound,
        last_quarter_increment,
        trailing_min,
        verdict,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThinnessOptions {
    /// Number of annuli I.
    pub count: u32,
    pub annulus: AnnulusOptions,
    pub classify: ClassifyOptions,
}

impl Default for ThinnessOptions {
    fn default() -> Self {
        ThinnessOptions { count: 10, annulus: AnnulusOptions::default(), classify: ClassifyOptions::default() }
    }
}

/// The first I Wiener-type terms of E at x₀. Annuli whose normalized pieces coincide
/// (scale-invariant stretches of E) are solved once; distinct ones run concurrently.
pub fn wiener_terms(
    e: &ParametricSet,
    x0: &Point,
    kind: CapacityKind,
    opts: &ThinnessOptions,
) -> Result<Vec<AnnulusTerm>> {
    if opts.count < 4 {
        return invalid("at least 4 annuli are needed");
    }
    let n = e.dim();
    let reference = reference_capacity(n, kind, &opts.annulus)?;
    let locals: Vec<ParametricSet> =
        (1..=opts.count).map(|i| normalized_annulus(e, x0, i, &opts.annulus)).collect::<Result<_>>()?;
    let keys: Vec<String> =
        locals.iter().map(|l| serde_json::to_string(l).expect("sets serialize")).collect();
    let mut unique: Vec<usize> = Vec::new();
    let mut slot = Vec::with_capacity(keys.len());
    for (k, key) in keys.iter().enumerate() {
        match unique.iter().position(|&u| keys[u] == *key) {
            Some(j) => slot.push(j),
            None => {
                slot.push(unique.len());
                unique.push(k);
            }
        }
    }
    let solved: Vec<_> = unique
        .par_iter()
        .map(|&k| annulus_capacity(&locals[k], kind, &opts.annulus))
        .collect::<Result<_>>()?;
    Ok((1..=opts.count)
        .zip(&slot)
        .map(|(i, &j)| {
            let (c, cf) = solved[j].clone();
            assemble_term(n, i, kind, c, cf, reference)
        })
        .collect())
}

/// Wiener terms of E at x₀ together with their classification.
pub fn thinness_report(
    e: &ParametricSet,
    x0: &Point,
    kind: CapacityKind,
    opts: &ThinnessOptions,
) -> Result<(Vec<AnnulusTerm>, ThinnessReport)> {
    let terms = wiener_terms(e, x0, kind, opts)?;
    let values: Vec<f64> = terms.iter().map(|t| t.term).collect();
    let report = classify_thin(&values, &opts.classify);
    Ok((terms, report))
}

/// A unit direction v such that {x₀ + t v : 0 < t ≤ δ} misses E, searched over a
/// low-discrepancy direction sequence; `None` once the budget is exhausted.
pub fn escaping_ray(e: &ParametricSet, x0: &Point, delta: f64, budget: usize, seed: u64) -> Option<Vec<f64>> {
    let n = e.dim();
    halton_directions(n, budget, seed).into_iter().find(|v| !e.hits_segment(x0.coords(), v, delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_series() {
        let r = classify_thin(&[0.0; 10], &ClassifyOptions::default());
        assert_eq!(r.verdict, Verdict::Thin);
        let r = classify_thin(&[0.7; 10], &ClassifyOptions::default());
        assert_eq!(r.verdict, Verdict::NotThin);
    }

    #[test]
    fn inverse_square_tail() {
        let terms: Vec<f64> = (1..=10).map(|i| 3.0 / (i * i) as f64).collect();
        let r = classify_thin(&terms, &ClassifyOptions::default());
        assert_eq!(r.verdict, Verdict::Thin);
        let exact: f64 = (11..200_000).map(|i| 3.0 / (i as f64 * i as f64)).sum();
        assert!((r.tail_bound / exact - 1.0).abs() < 0.01, "{} vs {exact}", r.tail_bound);
    }

    #[test]
    fn sphere_blocks_every_ray() {
        let e = ParametricSet::sphere(&Point::origin(3), 0.5).unwrap();
        assert!(escaping_ray(&e, &Point::origin(3), 1.0, 5000, 7).is_none());
        let b = ParametricSet::ball(&Point::new(vec![0.5, 0.0, 0.0]).unwrap(), 0.2).unwrap();
        let v = escaping_ray(&b, &Point::origin(3), 1.0, 100, 7).unwrap();
        assert!(!b.hits_segment(&[0.0; 3], &v, 1.0));
    }
}
