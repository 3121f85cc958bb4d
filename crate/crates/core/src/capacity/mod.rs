//! Riesz capacity by a discretized linear program and variational p-capacity by grid
//! energy minimization, plus the dyadic-annulus ratios that feed thinness tests.

mod annulus;
mod riesz_lp;
mod variational;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::point;
use crate::quadrature::sphere_area;

pub use annulus::{
    annulus_capacity, annulus_term, assemble_term, normalized_annulus, reference_capacity, AnnulusOptions,
    AnnulusTerm, CapacityKind,
};
pub use riesz_lp::{riesz_capacity, RieszLpOptions};
pub use variational::{p_capacity, p_capacity_floor, VariationalOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMethod {
    LpDiscrete,
    GridVariational,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub method: CapacityMethod,
    pub h: f64,
    /// Dual-feasible value of the discrete problem.
    pub lower: Option<f64>,
    /// Primal-feasible value of the discrete problem.
    pub upper: Option<f64>,
    pub iterations: usize,
}

impl CapacityEstimate {
    pub(crate) fn zero(method: CapacityMethod, h: f64) -> Self {
        CapacityEstimate { value: 0.0, method, h, lower: Some(0.0), upper: Some(0.0), iterations: 0 }
    }
}

/// Open reference domain Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return invalid("domain box must satisfy lo < hi componentwise");
                }
            }
            Domain::Ball { radius, .. } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return invalid("domain ball radius must be positive");
                }
            }
            Domain::Annulus { r_in, r_out, .. } => {
                if !(*r_in >= 0.0) || !(r_out > r_in) || !r_out.is_finite() {
                    return invalid("domain annulus needs 0 <= r_in < r_out");
                }
            }
        }
        if self.dim() < 2 {
            return invalid("domains live in dimension n >= 2");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center.len(),
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
            Domain::Ball { center, radius: r } | Domain::Annulus { center, r_out: r, .. } => {
                (center.iter().map(|c| c - r).collect(), center.iter().map(|c| c + r).collect())
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Box { lo, hi } => point::dist(lo, hi),
            Domain::Ball { radius: r, .. } | Domain::Annulus { r_out: r, .. } => 2.0 * r,
        }
    }

    /// Distance from x to the complement of Ω (0 outside or on the boundary).
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
            Domain::Ball { center, radius } => (radius - point::dist(x, center)).max(0.0),
            Domain::Annulus { center, r_in, r_out } => {
                let d = point::dist(x, center);
                (d - r_in).min(r_out - d).max(0.0)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) > 0.0
    }

    /// Whether Ω is invariant under x_axis ↦ −x_axis.
    pub fn is_mirror_symmetric(&self, axis: usize) -> bool {
        match self {
            Domain::Box { lo, hi } => lo[axis] == -hi[axis],
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center[axis] == 0.0,
        }
    }

    /// Image under y ↦ c + λ(y − c).
    pub fn scaled(&self, c: &[f64], lambda: f64) -> Self {
        let map = |v: &[f64]| -> Vec<f64> { v.iter().zip(c).map(|(y, o)| o + lambda * (y - o)).collect() };
        match self {
            Domain::Box { lo, hi } => Domain::Box { lo: map(lo), hi: map(hi) },
            Domain::Ball { center, radius } => Domain::Ball { center: map(center), radius: radius * lambda },
            Domain::Annulus { center, r_in, r_out } => {
                Domain::Annulus { center: map(center), r_in: r_in * lambda, r_out: r_out * lambda }
            }
        }
    }
}

/// cap_p(B̄_r, B_R) for concentric balls in ℝⁿ.
pub fn condenser_capacity(n: usize, p: f64, r: f64, big_r: f64) -> f64 {
    let nf = n as f64;
    let s = sphere_area(n);
    if p == nf {
        return s * (big_r / r).ln().powf(1.0 - nf);
    }
    let beta = (nf - p) / (p - 1.0);
    s * ((nf - p).abs() / (p - 1.0)).powf(p - 1.0) * (r.powf(-beta) - big_r.powf(-beta)).abs().powf(1.0 - p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newtonian_condenser() {
        // p = 2, n = 3: 4π rR/(R − r)
        let c = condenser_capacity(3, 2.0, 0.5, 2.0);
        assert!((c - 4.0 * std::f64::consts::PI * 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn domain_depth() {
        let d = Domain::Annulus { center: vec![0.0; 3], r_in: 0.5, r_out: 4.0 };
        assert_eq!(d.depth(&[1.0, 0.0, 0.0]), 0.5);
        assert!(!d.contains(&[0.25, 0.0, 0.0]));
        let b = Domain::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        assert_eq!(b.depth(&[0.5, 0.0]), 0.5);
        assert!(b.is_mirror_symmetric(0));
    }
}
