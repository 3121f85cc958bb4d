//! Symmetric eigenvalue cones 𝒜^(p), ℛ^(r), Γ^k and user cones {F ≥ 0}, their inclusions,
//! and the index p_Γ = max{p : Γ ⊂ 𝒜^(p)}.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative slack for closed-cone membership.
pub const MEMBER_RTOL: f64 = 1e-12;

fn inf_norm(l: &[f64]) -> f64 {
    l.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// min_k (p−2)λ_k + Σλ.
pub fn a_value(lambda: &[f64], p: f64) -> f64 {
    let sum: f64 = lambda.iter().sum();
    let extreme = if p >= 2.0 {
        lambda.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };
    (p - 2.0) * extreme + sum
}

/// λ ∈ 𝒜^(p).
pub fn member_a(lambda: &[f64], p: f64) -> bool {
    a_value(lambda, p) >= -MEMBER_RTOL * (p - 2.0).abs().max(1.0) * lambda.len() as f64 * inf_norm(lambda)
}

/// (n−r)·Σ_{i≤r} λ_(i) + r·Σ_{i>r} λ_(i) with λ sorted ascending: the minimum over all
/// rearrangements since n − r ≥ r.
pub fn r_value(lambda: &[f64], r: usize) -> f64 {
    let n = lambda.len();
    let mut s = lambda.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let low: f64 = s[..r].iter().sum();
    let high: f64 = s[r..].iter().sum();
    (n - r) as f64 * low + r as f64 * high
}

/// λ ∈ ℛ^(r).
pub fn member_r(lambda: &[f64], r: usize) -> bool {
    let n = lambda.len();
    r_value(lambda, r) >= -MEMBER_RTOL * (2 * r * (n - r)) as f64 * inf_norm(lambda)
}

/// σ_0..σ_k of λ via the coefficients of Π(1 + λ_i x).
pub fn elementary_symmetric(lambda: &[f64], k: usize) -> Vec<f64> {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (i, &l) in lambda.iter().enumerate() {
        for j in (1..=k.min(i + 1)).rev() {
            e[j] += l * e[j - 1];
        }
    }
    e
}

/// λ ∈ Γ^k: σ_1..σ_k ≥ 0.
pub fn member_gamma(lambda: &[f64], k: usize) -> bool {
    let e = elementary_symmetric(lambda, k);
    let abs: Vec<f64> = lambda.iter().map(|v| v.abs()).collect();
    let scale = elementary_symmetric(&abs, k);
    (1..=k).all(|l| e[l] >= -MEMBER_RTOL * scale[l])
}

/// Homogeneous symmetric function with {F ≥ 0} the cone.
#[derive(Clone)]
pub struct CustomCone {
    pub name: String,
    pub degree: f64,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl CustomCone {
    /// Spot-checks symmetry and homogeneity of `f` on deterministic samples in ℝⁿ.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        degree: f64,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(degree > 0.0) {
            return invalid("homogeneity degree must be positive");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..8 {
            let l: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let base = f(&l);
            let mut rev = l.clone();
            rev.reverse();
            let mut rot = l.clone();
            rot.rotate_left(1);
            let tol = 1e-9 * (1.0 + base.abs());
            if (f(&rev) - base).abs() > tol || (f(&rot) - base).abs() > tol {
                return invalid("custom cone function is not symmetric under permutations");
            }
            let scaled: Vec<f64> = l.iter().map(|v| 2.0 * v).collect();
            if (f(&scaled) - 2f64.powf(degree) * base).abs() > 1e-9 * (1.0 + base.abs()) * 2f64.powf(degree) {
                return invalid("custom cone function does not have the declared homogeneity degree");
            }
        }
        Ok(CustomCone { name: name.into(), degree, f: Arc::new(f) })
    }

    pub fn eval(&self, lambda: &[f64]) -> f64 {
        (self.f)(lambda)
    }
}

impl fmt::Debug for CustomCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomCone({}, degree {})", self.name, self.degree)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConeSpec {
    A { p: f64 },
    R { r: usize },
    Gamma { k: usize },
    #[serde(skip)]
    Custom(CustomCone),
}

impl ConeSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ConeSpec::A { p } => {
                if !(*p > 1.0) || !p.is_finite() {
                    return invalid(format!("A(p) needs p in (1, inf), got {p}"));
                }
            }
            ConeSpec::R { r } => {
                if *r < 1 || 2 * r > n {
                    return invalid(format!("R(r) needs 1 <= r <= n/2, got r = {r}, n = {n}"));
                }
            }
            ConeSpec::Gamma { k } => {
                if *k < 1 || *k > n {
                    return invalid(format!("Gamma(k) needs 1 <= k <= n, got k = {k}, n = {n}"));
                }
            }
            ConeSpec::Custom(_) => {}
        }
        Ok(())
    }

    pub fn contains(&self, lambda: &[f64]) -> bool {
        match self {
            ConeSpec::A { p } => member_a(lambda, *p),
            ConeSpec::R { r } => member_r(lambda, *r),
            ConeSpec::Gamma { k } => member_gamma(lambda, *k),
            ConeSpec::Custom(c) => c.eval(lambda) >= -MEMBER_RTOL * inf_norm(lambda).powf(c.degree),
        }
    }

    /// A homogeneous symmetric function whose superlevel set {F ≥ 0} is the cone.
    pub fn defining_function(&self, lambda: &[f64]) -> f64 {
        match self {
            ConeSpec::A { p } => a_value(lambda, *p),
            ConeSpec::R { r } => r_value(lambda, *r),
            ConeSpec::Gamma { k } => {
                // min_l sign(σ_l)|σ_l|^{1/l}, homogeneous of degree 1
                let e = elementary_symmetric(lambda, *k);
                (1..=*k)
                    .map(|l| e[l].signum() * e[l].abs().powf(1.0 / l as f64))
                    .fold(f64::INFINITY, f64::min)
            }
            ConeSpec::Custom(c) => c.eval(lambda),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConeSpec::A { p } => format!("A({p})"),
            ConeSpec::R { r } => format!("R({r})"),
            ConeSpec::Gamma { k } => format!("Gamma({k})"),
            ConeSpec::Custom(c) => format!("custom({})", c.name),
        }
    }
}

/// The ray (−a, 1, …, 1).
pub fn boundary_ray(n: usize, a: f64) -> Vec<f64> {
    let mut v = vec![1.0; n];
    v[0] = -a;
    v
}

/// Largest a ∈ [0, n−1] with (−a, 1, …, 1) in the cone, by bisection on the sign of F.
fn boundary_parameter(cone: &ConeSpec, n: usize) -> Result<f64> {
    let g = |a: f64| cone.defining_function(&boundary_ray(n, a));
    if !(cone.defining_function(&vec![1.0; n]) > 0.0) {
        return Err(Error::DegenerateCone(format!("{} does not contain (1,...,1) in its interior", cone.label())));
    }
    if g(0.0) <= 0.0 {
        return Err(Error::DegenerateCone(format!(
            "{} has F(0,1,...,1) <= 0; p_Gamma would be infinite",
            cone.label()
        )));
    }
    let top = (n - 1) as f64;
    if g(top) > 0.0 {
        return Err(Error::NoSignChange(format!(
            "{}: F(-a,1,...,1) > 0 for all a <= n-1, so p_Gamma < 2",
            cone.label()
        )));
    }
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// p_Γ = 1 + (n−1)/a*, where (−a*, 1, …, 1) spans the boundary ray of the cone.
pub fn p_gamma(cone: &ConeSpec, n: usize) -> Result<f64> {
    cone.validate(n)?;
    let a = boundary_parameter(cone, n)?;
    Ok(1.0 + (n - 1) as f64 / a)
}

/// n(k−1)/(n−k) + 2.
pub fn p_gamma_k_formula(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    n * (k - 1.0) / (n - k) + 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub inner: String,
    pub outer: String,
    pub n: usize,
    pub seed: u64,
    /// Random unit vectors drawn.
    pub drawn: usize,
    /// Of those, the ones lying in the inner cone.
    pub tested: usize,
    pub boundary_rays: usize,
    /// Total failing vectors; only the first few are kept verbatim.
    pub failures: usize,
    pub counterexamples: Vec<Vec<f64>>,
}

impl InclusionReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Maximum number of counterexample vectors kept verbatim.
pub const MAX_COUNTEREXAMPLES: usize = 16;
const BOUNDARY_RAYS: usize = 2000;

/// Randomized falsification of inner ⊂ outer: `samples` uniform unit vectors lying in the
/// inner cone (rejection sampling) plus the rays (−a, 1, …, 1) of the inner cone.
pub fn inclusion_check(inner: &ConeSpec, outer: &ConeSpec, n: usize, samples: usize, seed: u64) -> Result<InclusionReport> {
    inner.validate(n)?;
    outer.validate(n)?;
    let mut counterexamples = Vec::new();
    let mut failures = 0usize;
    let mut record = |l: &[f64]| {
        failures += 1;
        if counterexamples.len() < MAX_COUNTEREXAMPLES {
            counterexamples.push(l.to_vec());
        }
    };
    // boundary rays up to the inner cone's own boundary (or n−1 when it has none there)
    let a_max = match boundary_parameter(inner, n) {
        Ok(a) => Some(a),
        Err(Error::NoSignChange(_)) => Some((n - 1) as f64),
        Err(_) => None,
    };
    let mut rays = 0;
    if let Some(a_max) = a_max {
        for j in 0..=BOUNDARY_RAYS {
            let l = boundary_ray(n, a_max * j as f64 / BOUNDARY_RAYS as f64);
            if inner.contains(&l) {
                rays += 1;
                if !outer.contains(&l) {
                    record(&l);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0usize;
    let mut tested = 0usize;
    let cap = samples.saturating_mul(1000).max(1000);
    let mut l = vec![0.0; n];
    while tested < samples && drawn < cap {
        for v in l.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        crate::point::normalize(&mut l);
        drawn += 1;
        if inner.contains(&l) {
            tested += 1;
            if !outer.contains(&l) {
                record(&l);
            }
        }
    }
    Ok(InclusionReport {
        inner: inner.label(),
        outer: outer.label(),
        n,
        seed,
        drawn,
        tested,
        boundary_rays: rays,
        failures,
        counterexamples,
    })
}

/// Eigenvalues of D²u for u(x) = |x|^γ at radius ρ: (γ(γ−1)ρ^{γ−2}, γρ^{γ−2} ×(n−1)).
/// `None` selects u = −log|x|: (ρ^{−2}, −ρ^{−2} ×(n−1)).
pub fn radial_hessian_eigenvalues(n: usize, gamma: Option<f64>, rho: f64) -> Vec<f64> {
    let (radial, tangential) = match gamma {
        Some(g) => (g * (g - 1.0) * rho.powf(g - 2.0), g * rho.powf(g - 2.0)),
        None => (rho.powi(-2), -rho.powi(-2)),
    };
    let mut v = vec![tangential; n];
    v[0] = radial;
    v
}

/// Predicted singular profile: |x|^{exponent} or −log|x|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum SingularProfile {
    Power { exponent: f64 },
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub cone: String,
    pub p_gamma: f64,
    pub profile: SingularProfile,
    pub samples_checked: usize,
}

/// Checks −λ(D²u) ∈ Γ on every sample and returns p_Γ with the profile G_{p_Γ}.
pub fn fully_nonlinear_bridge(hessian_eigenvalues: &[Vec<f64>], cone: &ConeSpec, n: usize) -> Result<BridgeReport> {
    cone.validate(n)?;
    let mut bad = Vec::new();
    for (i, l) in hessian_eigenvalues.iter().enumerate() {
        if l.len() != n {
            return invalid(format!("sample {i} has {} eigenvalues, expected {n}", l.len()));
        }
        let neg: Vec<f64> = l.iter().map(|v| -v).collect();
        if !cone.contains(&neg) {
            bad.push(i);
        }
    }
    if !bad.is_empty() {
        return Err(Error::SampleViolation(bad));
    }
    let p = match cone {
        ConeSpec::Gamma { k } if 2 * k == n => n as f64,
        ConeSpec::Gamma { k } if 2 * k < n => p_gamma_k_formula(n, *k),
        _ => p_gamma(cone, n)?,
    };
    let profile = if (p - n as f64).abs() < 1e-12 {
        SingularProfile::Log
    } else {
        SingularProfile::Power { exponent: -(n as f64 - p) / (p - 1.0) }
    };
    Ok(BridgeReport { cone: cone.label(), p_gamma: p, profile, samples_checked: hessian_eigenvalues.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_a_examples() {
        for n in [3, 4, 6] {
            for p in [1.5, 2.0, 3.0, 5.0] {
                assert!(member_a(&vec![1.0; n], p));
                let l = boundary_ray(n, (n - 1) as f64 / (p - 1.0));
                if p >= 2.0 {
                    assert!(a_value(&l, p).abs() < 1e-12);
                    assert!(member_a(&l, p));
                }
            }
            assert!(!member_a(&boundary_ray(n, n as f64), 2.0));
        }
    }

    #[test]
    fn member_r_equal_entries() {
        for c in [-1.0, 0.5] {
            let l = vec![c; 6];
            assert!((r_value(&l, 2) - 2.0 * 2.0 * 4.0 * c).abs() < 1e-12);
            assert_eq!(member_r(&l, 2), c >= 0.0);
        }
    }

    #[test]
    fn gamma_boundary_and_orthant() {
        for n in 2..=8 {
            for k in 1..n {
                let l = boundary_ray(n, (n - k) as f64 / k as f64);
                let e = elementary_symmetric(&l, k);
                assert!(e[k].abs() < 1e-12 * elementary_symmetric(&vec![1.0; n], k)[k]);
                assert!(member_gamma(&l, k));
            }
            assert!((1..=n).all(|k| member_gamma(&vec![0.3; n], k)));
        }
    }

    #[test]
    fn p_gamma_values() {
        assert!((p_gamma(&ConeSpec::Gamma { k: 2 }, 6).unwrap() - 3.5).abs() < 1e-9);
        assert!((p_gamma(&ConeSpec::Gamma { k: 1 }, 6).unwrap() - 2.0).abs() < 1e-9);
        assert!((p_gamma(&ConeSpec::Gamma { k: 3 }, 6).unwrap() - 6.0).abs() < 1e-9);
        assert!((p_gamma(&ConeSpec::A { p: 3.3 }, 5).unwrap() - 3.3).abs() < 1e-9);
    }

    #[test]
    fn p_gamma_errors() {
        // {Σλ + |λ| ≥ 0} contains (−(n−1), 1, …, 1): the boundary lies beyond the bisection range
        let wide = CustomCone::new("wide", 4, 1.0, |l: &[f64]| {
            l.iter().sum::<f64>() + crate::point::norm(l)
        })
        .unwrap();
        assert!(matches!(p_gamma(&ConeSpec::Custom(wide), 4), Err(Error::NoSignChange(_))));
        let c = CustomCone::new("negative", 3, 1.0, |l: &[f64]| -l.iter().sum::<f64>()).unwrap();
        assert!(matches!(p_gamma(&ConeSpec::Custom(c), 3), Err(Error::DegenerateCone(_))));
    }

    #[test]
    fn custom_cone_symmetry_check() {
        assert!(CustomCone::new("asym", 3, 1.0, |l: &[f64]| l[0]).is_err());
        assert!(CustomCone::new("trace", 3, 1.0, |l: &[f64]| l.iter().sum()).is_ok());
        assert!(CustomCone::new("wrong degree", 3, 2.0, |l: &[f64]| l.iter().sum()).is_err());
    }

    #[test]
    fn violation_found_below_range() {
        let rep = inclusion_check(&ConeSpec::A { p: 3.0 }, &ConeSpec::R { r: 1 }, 6, 1000, 7).unwrap();
        assert!(!rep.holds());
    }

    #[test]
    fn bridge_on_radial_profile() {
        let (n, k) = (8, 2);
        let gamma = 2.0 - n as f64 / k as f64;
        let samples: Vec<Vec<f64>> =
            [0.1, 0.5, 2.0].iter().map(|r| radial_hessian_eigenvalues(n, Some(gamma), *r)).collect();
        let rep = fully_nonlinear_bridge(&samples, &ConeSpec::Gamma { k }, n).unwrap();
        match rep.profile {
            SingularProfile::Power { exponent } => assert!((exponent - gamma).abs() < 1e-12),
            SingularProfile::Log => panic!("expected a power profile"),
        }
        let logs: Vec<Vec<f64>> = vec![radial_hessian_eigenvalues(8, None, 0.3)];
        let rep = fully_nonlinear_bridge(&logs, &ConeSpec::Gamma { k: 4 }, 8).unwrap();
        assert_eq!(rep.profile, SingularProfile::Log);
        let bad = vec![vec![1.0; 8]];
        assert!(matches!(
            fully_nonlinear_bridge(&bad, &ConeSpec::Gamma { k: 2 }, 8),
            Err(Error::SampleViolation(v)) if v == vec![0]
        ));
    }
}
