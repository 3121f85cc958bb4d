//! Approach paths, sampled ratios and limit extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::point::{self, Point};

/// Straight ray `x_k = p + r_k v` with `r_k` strictly decreasing to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproachPath {
    pub direction: Vec<f64>,
    pub radii: Vec<f64>,
}

impl ApproachPath {
    pub fn new(mut direction: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if !point::normalize(&mut direction) {
            return invalid("path direction must be nonzero");
        }
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return invalid("path radii must be positive and finite");
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("path radii must be strictly decreasing");
        }
        Ok(ApproachPath { direction, radii })
    }

    /// `r_k = base^{-k}` for `k = first..=last`.
    pub fn geometric(direction: Vec<f64>, base: f64, first: i32, last: i32) -> Result<Self> {
        if !(base > 1.0) || last < first {
            return invalid("geometric path needs base > 1 and first <= last");
        }
        Self::new(direction, (first..=last).map(|k| base.powi(-k)).collect())
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn points(&self, p: &Point) -> Result<Vec<Point>> {
        p.check_dim(self.direction.len())?;
        Ok(self.radii.iter().map(|r| p.offset(&self.direction, *r)).collect())
    }

    pub(crate) fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::PathTooShort { needed, got: self.len() });
        }
        Ok(())
    }
}

/// Minimum number of samples for an asymptotic report.
pub const MIN_SAMPLES: usize = 8;

/// How the correction variable ξ shrinks along the path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// ξ = r.
    Power,
    /// ξ = 1/log(1/r), for ratios normalized by a logarithm.
    Log,
}

/// Least-squares fit `ratio ≈ limit + coef·ξ^exponent` over the last third of the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub limit: f64,
    pub coef: f64,
    pub exponent: f64,
    /// Root-mean-square residual over the fitted window.
    pub rms_residual: f64,
    pub window: usize,
}

const EXPONENT_RANGE: (f64, f64) = (0.05, 4.0);

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    (a, b, (ss / m).sqrt())
}

/// Fits the limit of `ratios` as ξ → 0; the exponent is chosen by variable projection.
pub fn fit_limit(xi: &[f64], ratios: &[f64]) -> Result<LimitFit> {
    if xi.len() != ratios.len() {
        return invalid("sample arrays differ in length");
    }
    if ratios.iter().chain(xi).any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite samples cannot be extrapolated".into()));
    }
    let window = (xi.len() / 3).max(3).min(xi.len());
    if window < 3 {
        return Err(Error::PathTooShort { needed: 3, got: xi.len() });
    }
    let xs = &xi[xi.len() - window..];
    let ys = &ratios[ratios.len() - window..];
    let eval = |s: f64| {
        let t: Vec<f64> = xs.iter().map(|x| x.powf(s)).collect();
        linear_fit(&t, ys)
    };
    // coarse log-spaced scan, then golden-section refinement around the best cell
    let (lo, hi) = EXPONENT_RANGE;
    let steps = 64;
    let grid: Vec<f64> =
        (0..=steps).map(|k| lo * (hi / lo).powf(k as f64 / steps as f64)).collect();
    let mut best = 0;
    let mut best_res = f64::INFINITY;
    for (k, s) in grid.iter().enumerate() {
        let r = eval(*s).2;
        if r < best_res {
            best_res = r;
            best = k;
        }
    }
    let mut a = grid[best.saturating_sub(1)].ln();
    let mut b = grid[(best + 1).min(steps)].ln();
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eval(c.exp()).2 <= eval(d.exp()).2 {
            b = d;
        } else {
            a = c;
        }
    }
    let mut s = (0.5 * (a + b)).exp();
    let mut fit = eval(s);
    if fit.2 > best_res {
        s = grid[best];
        fit = eval(s);
    }
    Ok(LimitFit { limit: fit.0, coef: fit.1, exponent: s, rms_residual: fit.2, window })
}

/// Sampled ratios along an approach path with their extrapolated limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub distances: Vec<f64>,
    /// Raw function values at the path points.
    pub values: Vec<f64>,
    pub ratios: Vec<f64>,
    pub fit: LimitFit,
    /// `ratio − fitted model` at every sample.
    pub residuals: Vec<f64>,
}

impl AsymptoticReport {
    pub fn from_samples(
        distances: Vec<f64>,
        values: Vec<f64>,
        ratios: Vec<f64>,
        correction: Correction,
    ) -> Result<Self> {
        if distances.len() < MIN_SAMPLES {
            return Err(Error::PathTooShort { needed: MIN_SAMPLES, got: distances.len() });
        }
        let xi: Vec<f64> = distances
            .iter()
            .map(|r| match correction {
                Correction::Power => *r,
                Correction::Log => 1.0 / (1.0 / r).ln(),
            })
            .collect();
        if correction == Correction::Log && distances.iter().any(|r| *r >= 1.0) {
            return invalid("log-normalized ratios need path radii below 1");
        }
        let fit = fit_limit(&xi, &ratios)?;
        let residuals = xi
            .iter()
            .zip(&ratios)
            .map(|(x, y)| y - fit.limit - fit.coef * x.powf(fit.exponent))
            .collect();
        Ok(AsymptoticReport { distances, values, ratios, fit, residuals })
    }

    pub fn limit(&self) -> f64 {
        self.fit.limit
    }
}

/// Least-squares slope of log(values) against log(distances), negated, so that
/// `values ~ r^{-slope}` has positive slope.
pub fn growth_exponent(distances: &[f64], values: &[f64]) -> f64 {
    let x: Vec<f64> = distances.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    -linear_fit(&x, &y).1
}

/// Least-squares slope of log(values) against log(scales).
pub fn log_log_slope(scales: &[f64], values: &[f64]) -> f64 {
    -growth_exponent(scales, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_correction() {
        let r: Vec<f64> = (1..=20).map(|k| 2f64.powi(-k)).collect();
        let y: Vec<f64> = r.iter().map(|x| 3.0 + 5.0 * x.powf(0.7)).collect();
        let f = fit_limit(&r, &y).unwrap();
        assert!((f.limit - 3.0).abs() < 1e-6, "{f:?}");
        assert!((f.exponent - 0.7).abs() < 1e-3);
    }

    #[test]
    fn constant_ratios_fit_exactly() {
        let r: Vec<f64> = (1..=10).map(|k| 2f64.powi(-k)).collect();
        let f = fit_limit(&r, &vec![1.25; 10]).unwrap();
        assert!((f.limit - 1.25).abs() < 1e-12);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn report_rejects_short_paths() {
        let e = AsymptoticReport::from_samples(vec![0.5; 4], vec![1.0; 4], vec![1.0; 4], Correction::Power);
        assert_eq!(e.unwrap_err(), Error::PathTooShort { needed: 8, got: 4 });
    }

    #[test]
    fn path_validation() {
        assert!(ApproachPath::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(ApproachPath::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        let p = ApproachPath::geometric(vec![3.0, 4.0], 2.0, 1, 3).unwrap();
        assert_eq!(p.direction, vec![0.6, 0.8]);
        assert_eq!(p.radii, vec![0.5, 0.25, 0.125]);
    }

    #[test]
    fn slopes() {
        let r = [1.0, 0.5, 0.25, 0.125];
        let v: Vec<f64> = r.iter().map(|x: &f64| 2.0 * x.powf(-1.5)).collect();
        assert!((growth_exponent(&r, &v) - 1.5).abs() < 1e-12);
        assert!((log_log_slope(&r, &v) + 1.5).abs() < 1e-12);
    }
}
