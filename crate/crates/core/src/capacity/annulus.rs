use serde::{Deserialize, Serialize};

use super::riesz_lp::{riesz_capacity, RieszLpOptions};
use super::variational::{p_capacity, VariationalOptions};
use super::{condenser_capacity, CapacityEstimate, CapacityMethod, Domain};
use crate::error::{invalid, Result};
use crate::point::Point;
use crate::sets::{ParametricSet, Primitive};

/// Which capacity a Wiener-type term uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CapacityKind {
    Riesz { alpha: f64 },
    Variational { p: f64 },
}

impl CapacityKind {
    pub fn exponent(&self) -> f64 {
        match self {
            CapacityKind::Riesz { alpha } => *alpha,
            CapacityKind::Variational { p } => *p,
        }
    }

    /// Borderline case α = n or p = n, where the terms carry a weight in i.
    pub fn is_critical(&self, n: usize) -> bool {
        self.exponent() == n as f64
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let e = self.exponent();
        if !(e > 1.0 && e <= n as f64) {
            return invalid(format!("capacity exponent must lie in (1, {n}], got {e}"));
        }
        Ok(())
    }

    /// Weight multiplying the normalized-frame capacity in the critical case.
    pub fn critical_weight(&self, n: usize, i: u32) -> f64 {
        match self {
            CapacityKind::Riesz { .. } => i as f64,
            CapacityKind::Variational { .. } => (i as f64).powi(n as i32 - 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnulusOptions {
    /// Outer scale δ of the annuli ω_i = {2^{−i}δ ≤ |x − x₀| ≤ 2^{−i+1}δ}.
    pub delta: f64,
    /// Resolution in the frame where ω_i becomes {1 ≤ |y| ≤ 2}.
    pub h: f64,
    /// Balls of radius ≤ small_ball·h are bounded by the concentric condenser in closed
    /// form instead of being resolved on the lattice (variational kind only).
    pub small_ball: f64,
    pub riesz: RieszLpOptions,
    pub variational: VariationalOptions,
}

impl Default for AnnulusOptions {
    fn default() -> Self {
        AnnulusOptions {
            delta: 1.0,
            h: 0.125,
            small_ball: 2.0,
            riesz: RieszLpOptions::default(),
            variational: VariationalOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusTerm {
    pub i: u32,
    /// Capacity of E ∩ ω_i relative to Ω_i, measured in the normalized frame.
    pub capacity: CapacityEstimate,
    /// Part of `capacity` contributed by closed-form small-ball bounds.
    pub closed_form: f64,
    /// Capacity of the reference condenser (∂B₁, B₂) at the same resolution.
    pub reference: f64,
    pub ratio: f64,
    /// Series term: the ratio, or the i-weighted capacity in the critical case.
    pub term: f64,
}

/// Capacity of the reference condenser (∂B₁, B₂) in the normalized frame.
pub fn reference_capacity(n: usize, kind: CapacityKind, opts: &AnnulusOptions) -> Result<f64> {
    kind.validate(n)?;
    let sphere = ParametricSet::sphere(&Point::origin(n), 1.0)?;
    let omega = Domain::Ball { center: vec![0.0; n], radius: 2.0 };
    let c = match kind {
        CapacityKind::Riesz { alpha } => riesz_capacity(&sphere, &omega, alpha, opts.h, &opts.riesz)?,
        CapacityKind::Variational { p } => p_capacity(&sphere, &omega, p, opts.h, &opts.variational)?,
    };
    Ok(c.value)
}

/// E ∩ ω_i in the frame y = 2^i(x − x₀)/δ, where ω_i becomes ω₀ = {1 ≤ |y| ≤ 2}.
pub fn normalized_annulus(e: &ParametricSet, x0: &Point, i: u32, opts: &AnnulusOptions) -> Result<ParametricSet> {
    let n = e.dim();
    if x0.dim() != n {
        return invalid("center dimension differs from the set");
    }
    if i < 1 {
        return invalid("annulus index starts at 1");
    }
    if !(opts.delta > 0.0) || !(opts.h > 0.0) {
        return invalid("delta and h must be positive");
    }
    let lambda = 2f64.powi(i as i32) / opts.delta;
    let origin = vec![0.0; n];
    Ok(e.affine(x0.coords(), lambda, &origin).intersect_annulus(&origin, 1.0, 2.0))
}

/// Capacity of a normalized annulus piece relative to Ω₀ = {1/2 < |y| < 4}, with the
/// part contributed by closed-form small-ball bounds.
pub fn annulus_capacity(local: &ParametricSet, kind: CapacityKind, opts: &AnnulusOptions) -> Result<(CapacityEstimate, f64)> {
    let n = local.dim();
    kind.validate(n)?;
    let origin = vec![0.0; n];
    let omega = Domain::Annulus { center: origin.clone(), r_in: 0.5, r_out: 4.0 };
    let method = match kind {
        CapacityKind::Riesz { .. } => CapacityMethod::LpDiscrete,
        CapacityKind::Variational { .. } => CapacityMethod::GridVariational,
    };
    if local.is_empty() {
        return Ok((CapacityEstimate::zero(method, opts.h), 0.0));
    }
    match kind {
        CapacityKind::Riesz { alpha } => Ok((riesz_capacity(local, &omega, alpha, opts.h, &opts.riesz)?, 0.0)),
        CapacityKind::Variational { p } => {
            let local = local.without_polar(p);
            let mut closed_form = 0.0;
            let mut rest = Vec::new();
            for prim in local.primitives() {
                if let Primitive::Ball { center, radius } = prim {
                    let room = omega.depth(center);
                    if *radius <= opts.small_ball * opts.h && *radius < room {
                        closed_form += condenser_capacity(n, p, *radius, room);
                        continue;
                    }
                }
                rest.push(prim.clone());
            }
            let grid_part = if rest.is_empty() {
                CapacityEstimate::zero(method, opts.h)
            } else {
                let set = ParametricSet::new(n, rest)?.intersect_annulus(&origin, 1.0, 2.0);
                p_capacity(&set, &omega, p, opts.h, &opts.variational)?
            };
            let value = grid_part.value + closed_form;
            let method = if grid_part.value == 0.0 && closed_form > 0.0 { CapacityMethod::ClosedForm } else { method };
            let estimate = CapacityEstimate {
                value,
                method,
                h: opts.h,
                lower: None,
                upper: Some(value),
                iterations: grid_part.iterations,
            };
            Ok((estimate, closed_form))
        }
    }
}

/// Assembles the series term from a normalized-frame capacity.
pub fn assemble_term(
    n: usize,
    i: u32,
    kind: CapacityKind,
    capacity: CapacityEstimate,
    closed_form: f64,
    reference: f64,
) -> AnnulusTerm {
    let ratio = if reference > 0.0 { capacity.value / reference } else { 0.0 };
    let term = if kind.is_critical(n) { kind.critical_weight(n, i) * capacity.value } else { ratio };
    AnnulusTerm { i, capacity, closed_form, reference, ratio, term }
}

/// The i-th Wiener-type term of E at x₀. Scale invariance of both capacities lets every
/// annulus be computed in the frame y = 2^i(x − x₀)/δ, with ω₀ = {1 ≤ |y| ≤ 2} and
/// Ω₀ = {1/2 < |y| < 4}; `reference` is [`reference_capacity`] for the same kind.
pub fn annulus_term(
    e: &ParametricSet,
    x0: &Point,
    i: u32,
    kind: CapacityKind,
    reference: f64,
    opts: &AnnulusOptions,
) -> Result<AnnulusTerm> {
    kind.validate(e.dim())?;
    let local = normalized_annulus(e, x0, i, opts)?;
    let (capacity, closed_form) = annulus_capacity(&local, kind, opts)?;
    Ok(assemble_term(e.dim(), i, kind, capacity, closed_form, reference))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_annulus_gives_zero() {
        let e = ParametricSet::ball(&Point::new(vec![5.0, 0.0, 0.0]).unwrap(), 0.1).unwrap();
        let kind = CapacityKind::Variational { p: 2.5 };
        let t = annulus_term(&e, &Point::origin(3), 3, kind, 1.0, &AnnulusOptions::default()).unwrap();
        assert_eq!(t.term, 0.0);
    }

    #[test]
    fn small_balls_use_the_condenser_bound() {
        // B(2^{-6} e₁, 2^{-6}/64) maps to B(e₁, 1/64) in the normalized frame
        let r = 2f64.powi(-6);
        let e = ParametricSet::ball(&Point::new(vec![r, 0.0, 0.0]).unwrap(), r / 64.0).unwrap();
        let kind = CapacityKind::Variational { p: 2.5 };
        let t = annulus_term(&e, &Point::origin(3), 6, kind, 1.0, &AnnulusOptions::default()).unwrap();
        let expect = condenser_capacity(3, 2.5, 1.0 / 64.0, 0.5);
        assert!((t.capacity.value - expect).abs() < 1e-12 * expect);
        assert_eq!(t.capacity.method, CapacityMethod::ClosedForm);
    }
}
