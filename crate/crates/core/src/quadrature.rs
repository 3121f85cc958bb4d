//! Quadrature rules, sphere constants and deterministic direction sequences.

use std::f64::consts::PI;

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

/// |𝕊ⁿ⁻¹|, the surface area of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in ℝⁿ.
pub fn ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Radius of the k-dimensional ball of k-volume `measure`.
pub fn equivalent_radius(k: usize, measure: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    (measure / ball_volume(k)).powf(1.0 / k as f64)
}

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..(m + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫ₐᵇ f.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + r * x))
            .sum::<f64>()
            * r
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + r * x, w * r))
    }
}

/// (P_m(x), P_m'(x)).
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product quadrature on 𝕊ⁿ⁻¹ in hyperspherical coordinates; weights sum to |𝕊ⁿ⁻¹|.
pub fn sphere_rule(n: usize, m: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 2);
    let gl = GaussLegendre::new(m);
    let n_phi = 2 * m;
    let mut out = vec![(Vec::new(), 1.0)];
    // polar angles θ_1..θ_{n-2}, weight sin^{n-1-j}
    for j in 1..=n.saturating_sub(2) {
        let power = (n - 1 - j) as i32;
        let mut next = Vec::with_capacity(out.len() * m);
        for (angles, w) in &out {
            for (t, wt) in gl.mapped(0.0, PI) {
                let mut a = angles.clone();
                a.push(t);
                next.push((a, w * wt * t.sin().powi(power)));
            }
        }
        out = next;
    }
    let mut pts = Vec::with_capacity(out.len() * n_phi);
    for (angles, w) in &out {
        for k in 0..n_phi {
            let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
            let mut x = Vec::with_capacity(n);
            let mut s = 1.0;
            for &t in angles {
                x.push(s * t.cos());
                s *= t.sin();
            }
            x.push(s * phi.cos());
            x.push(s * phi.sin());
            pts.push((x, w * 2.0 * PI / n_phi as f64));
        }
    }
    pts
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic low-discrepancy unit directions in ℝⁿ: a Halton sequence pushed
/// through the normal inverse CDF and normalized. `seed` shifts the sequence start.
pub fn halton_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n <= PRIMES.len(), "direction sequence supports n <= {}", PRIMES.len());
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut out = Vec::with_capacity(count);
    let mut i = 1 + seed % 1_000_003;
    while out.len() < count {
        let mut v: Vec<f64> = (0..n)
            .map(|d| {
                let u = radical_inverse(i, PRIMES[d]).clamp(1e-12, 1.0 - 1e-12);
                normal.inverse_cdf(u)
            })
            .collect();
        i += 1;
        if crate::point::normalize(&mut v) {
            out.push(v);
        }
    }
    out
}

/// Spherical Fibonacci points on 𝕊², quasi-uniform with equal weights.
pub fn fibonacci_sphere(count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (1.0 + 5f64.sqrt());
    (0..count)
        .map(|i| {
            let t = i as f64 + 0.5;
            let z = 1.0 - 2.0 * t / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * t;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}
