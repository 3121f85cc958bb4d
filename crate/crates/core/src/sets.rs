//! Compact sets given as finite unions of simple primitives.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::EvaluationGrid;
use crate::point::{self, Point};

/// One piece of a parametric set. Balls are solid and closed; boxes may be degenerate
/// along some axes (segments, plates, single points).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Primitive {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64 },
    Point { at: Vec<f64> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// `{apex + s·e_axis + y : 0 ≤ s ≤ length, y ⟂ e_axis, |y| ≤ coef·s^gamma}`.
    Cusp { apex: Vec<f64>, axis: usize, gamma: f64, coef: f64, length: f64 },
    /// Union of the closed cells of `grid` flagged in `mask`.
    Cells { grid: EvaluationGrid, mask: Vec<bool> },
}

fn clamp_dist2(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (a, b))| {
            let d = if v < a { a - v } else if v > b { v - b } else { 0.0 };
            d * d
        })
        .sum()
}

fn far_dist2(x: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (a, b))| {
            let d = (v - a).abs().max((v - b).abs());
            d * d
        })
        .sum()
}

/// Closest parameter in [0,1] of the segment a + τ(b − a) to x.
fn segment_param(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = b.iter().zip(a).map(|(u, v)| u - v).collect();
    let l2 = point::dot(&d, &d);
    if l2 == 0.0 {
        return 0.0;
    }
    let w: Vec<f64> = x.iter().zip(a).map(|(u, v)| u - v).collect();
    (point::dot(&w, &d) / l2).clamp(0.0, 1.0)
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect()
}

impl Primitive {
    fn dim(&self) -> usize {
        match self {
            Primitive::Ball { center, .. } | Primitive::Sphere { center, .. } => center.len(),
            Primitive::Box { lo, .. } => lo.len(),
            Primitive::Point { at } => at.len(),
            Primitive::Segment { a, .. } => a.len(),
            Primitive::Cusp { apex, .. } => apex.len(),
            Primitive::Cells { grid, .. } => grid.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|c| c.is_finite());
        match self {
            Primitive::Ball { center, radius } | Primitive::Sphere { center, radius } => {
                if !finite(center) || !(*radius > 0.0) || !radius.is_finite() {
                    return invalid("balls and spheres need a finite center and positive radius");
                }
            }
            Primitive::Box { lo, hi } => {
                if lo.len() != hi.len() || !finite(lo) || !finite(hi) || lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return invalid("box corners must satisfy lo <= hi componentwise");
                }
            }
            Primitive::Point { at } => {
                if !finite(at) {
                    return invalid("point coordinates must be finite");
                }
            }
            Primitive::Segment { a, b } => {
                if a.len() != b.len() || !finite(a) || !finite(b) {
                    return invalid("segment endpoints must be finite and share a dimension");
                }
            }
            Primitive::Cusp { apex, axis, gamma, coef, length } => {
                if !finite(apex) || *axis >= apex.len() || !(*gamma > 0.0) || !(*coef > 0.0) || !(*length > 0.0) {
                    return invalid("cusp needs a valid axis and positive gamma, coef and length");
                }
            }
            Primitive::Cells { grid, mask } => {
                if mask.len() != grid.cell_count() {
                    return invalid("cell mask length must equal the grid's cell count");
                }
            }
        }
        Ok(())
    }

    /// Mirror image across the plane x_axis = 0; `None` for cell masks.
    pub fn reflected(&self, axis: usize) -> Option<Primitive> {
        let f = |v: &[f64]| -> Vec<f64> {
            let mut w = v.to_vec();
            w[axis] = -w[axis];
            w
        };
        Some(match self {
            Primitive::Ball { center, radius } => Primitive::Ball { center: f(center), radius: *radius },
            Primitive::Sphere { center, radius } => Primitive::Sphere { center: f(center), radius: *radius },
            Primitive::Box { lo, hi } => {
                let (mut a, mut b) = (lo.clone(), hi.clone());
                a[axis] = -hi[axis];
                b[axis] = -lo[axis];
                Primitive::Box { lo: a, hi: b }
            }
            Primitive::Point { at } => Primitive::Point { at: f(at) },
            Primitive::Segment { a, b } => Primitive::Segment { a: f(a), b: f(b) },
            Primitive::Cusp { apex, axis: ax, gamma, coef, length } => {
                if *ax == axis {
                    return None;
                }
                Primitive::Cusp { apex: f(apex), axis: *ax, gamma: *gamma, coef: *coef, length: *length }
            }
            Primitive::Cells { .. } => return None,
        })
    }

    fn approx_eq(&self, other: &Primitive) -> bool {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-13 * (1.0 + x.abs()));
        match (self, other) {
            (Primitive::Ball { center: a, radius: r }, Primitive::Ball { center: b, radius: s })
            | (Primitive::Sphere { center: a, radius: r }, Primitive::Sphere { center: b, radius: s }) => {
                close(a, b) && close(&[*r], &[*s])
            }
            (Primitive::Box { lo: a, hi: b }, Primitive::Box { lo: c, hi: d }) => close(a, c) && close(b, d),
            (Primitive::Point { at: a }, Primitive::Point { at: b }) => close(a, b),
            (Primitive::Segment { a, b }, Primitive::Segment { a: c, b: d }) => {
                (close(a, c) && close(b, d)) || (close(a, d) && close(b, c))
            }
            (
                Primitive::Cusp { apex: a, axis: x, gamma: g, coef: c, length: l },
                Primitive::Cusp { apex: b, axis: y, gamma: h, coef: d, length: m },
            ) => close(a, b) && x == y && g == h && c == d && l == m,
            _ => false,
        }
    }

    /// Hausdorff dimension of the primitive (generic case).
    pub fn local_dim(&self) -> usize {
        match self {
            Primitive::Ball { center, .. } => center.len(),
            Primitive::Box { lo, hi } => lo.iter().zip(hi).filter(|(a, b)| b > a).count(),
            Primitive::Sphere { center, .. } => center.len() - 1,
            Primitive::Point { .. } => 0,
            Primitive::Segment { a, b } => usize::from(a != b),
            Primitive::Cusp { apex, .. } => apex.len(),
            Primitive::Cells { grid, mask } => {
                if mask.iter().any(|m| *m) { grid.dim() } else { 0 }
            }
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Primitive::Ball { center, radius } | Primitive::Sphere { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Primitive::Box { lo, hi } => (lo.clone(), hi.clone()),
            Primitive::Point { at } => (at.clone(), at.clone()),
            Primitive::Segment { a, b } => (
                a.iter().zip(b).map(|(u, v)| u.min(*v)).collect(),
                a.iter().zip(b).map(|(u, v)| u.max(*v)).collect(),
            ),
            Primitive::Cusp { apex, axis, gamma, coef, length } => {
                let w = coef * length.powf(*gamma);
                let mut lo: Vec<f64> = apex.iter().map(|c| c - w).collect();
                let mut hi: Vec<f64> = apex.iter().map(|c| c + w).collect();
                lo[*axis] = apex[*axis];
                hi[*axis] = apex[*axis] + length;
                (lo, hi)
            }
            Primitive::Cells { grid, mask } => {
                let n = grid.dim();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                let h = grid.pitch();
                for (i, m) in mask.iter().enumerate() {
                    if *m {
                        let c = grid.cell_center(i);
                        for d in 0..n {
                            lo[d] = lo[d].min(c[d] - h / 2.0);
                            hi[d] = hi[d].max(c[d] + h / 2.0);
                        }
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Euclidean distance from x to the primitive.
    pub fn dist(&self, x: &[f64]) -> f64 {
        match self {
            Primitive::Ball { center, radius } => (point::dist(x, center) - radius).max(0.0),
            Primitive::Sphere { center, radius } => (point::dist(x, center) - radius).abs(),
            Primitive::Box { lo, hi } => clamp_dist2(x, lo, hi).sqrt(),
            Primitive::Point { at } => point::dist(x, at),
            Primitive::Segment { a, b } => point::dist(x, &lerp(a, b, segment_param(x, a, b))),
            Primitive::Cusp { apex, axis, gamma, coef, length } => {
                let s = x[*axis] - apex[*axis];
                let y = x
                    .iter()
                    .zip(apex)
                    .enumerate()
                    .filter(|(d, _)| d != axis)
                    .map(|(_, (u, v))| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                cusp_dist(s, y, *gamma, *coef, *length)
            }
            Primitive::Cells { grid, mask } => {
                let h = grid.pitch();
                let mut best = f64::INFINITY;
                for (i, m) in mask.iter().enumerate() {
                    if *m {
                        let c = grid.cell_center(i);
                        let lo: Vec<f64> = c.iter().map(|v| v - h / 2.0).collect();
                        let hi: Vec<f64> = c.iter().map(|v| v + h / 2.0).collect();
                        best = best.min(clamp_dist2(x, &lo, &hi));
                    }
                }
                best.sqrt()
            }
        }
    }

    /// Smallest and largest distance from x over the primitive.
    pub fn dist_range(&self, x: &[f64]) -> (f64, f64) {
        match self {
            Primitive::Ball { center, radius } => {
                let d = point::dist(x, center);
                ((d - radius).max(0.0), d + radius)
            }
            Primitive::Sphere { center, radius } => {
                let d = point::dist(x, center);
                ((d - radius).abs(), d + radius)
            }
            Primitive::Box { lo, hi } => (clamp_dist2(x, lo, hi).sqrt(), far_dist2(x, lo, hi).sqrt()),
            Primitive::Point { at } => {
                let d = point::dist(x, at);
                (d, d)
            }
            Primitive::Segment { a, b } => (self.dist(x), point::dist(x, a).max(point::dist(x, b))),
            _ => {
                let (lo, hi) = self.bounds();
                (self.dist(x), far_dist2(x, &lo, &hi).sqrt())
            }
        }
    }

    /// Parameter interval (t₀, t₁) ⊂ ℝ where the line x₀ + t·v lies in a convex primitive;
    /// `None` when the line misses it. `v` must be a unit vector.
    fn line_interval(&self, x0: &[f64], v: &[f64]) -> Option<(f64, f64)> {
        match self {
            Primitive::Ball { center, radius } => {
                let w: Vec<f64> = x0.iter().zip(center).map(|(a, b)| a - b).collect();
                let b = point::dot(&w, v);
                let c = point::dot(&w, &w) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                Some((-b - s, -b + s))
            }
            Primitive::Box { lo, hi } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for d in 0..x0.len() {
                    if v[d] == 0.0 {
                        if x0[d] < lo[d] || x0[d] > hi[d] {
                            return None;
                        }
                    } else {
                        let a = (lo[d] - x0[d]) / v[d];
                        let b = (hi[d] - x0[d]) / v[d];
                        t0 = t0.max(a.min(b));
                        t1 = t1.min(a.max(b));
                    }
                }
                if t0 > t1 { None } else { Some((t0, t1)) }
            }
            _ => None,
        }
    }

    /// Whether the segment {x₀ + t·v : 0 < t ≤ len} meets the primitive.
    pub fn hits_segment(&self, x0: &[f64], v: &[f64], len: f64) -> bool {
        match self {
            Primitive::Ball { .. } | Primitive::Box { .. } => match self.line_interval(x0, v) {
                Some((t0, t1)) => t1 > 0.0 && t0 <= len,
                None => false,
            },
            Primitive::Sphere { center, radius } => {
                let w: Vec<f64> = x0.iter().zip(center).map(|(a, b)| a - b).collect();
                let b = point::dot(&w, v);
                let c = point::dot(&w, &w) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return false;
                }
                let s = disc.sqrt();
                [-b - s, -b + s].iter().any(|t| *t > 0.0 && *t <= len)
            }
            Primitive::Point { at } => {
                let w: Vec<f64> = at.iter().zip(x0).map(|(a, b)| a - b).collect();
                let t = point::dot(&w, v);
                if !(t > 0.0 && t <= len) {
                    return false;
                }
                let off: f64 = w.iter().zip(v).map(|(a, b)| (a - t * b).powi(2)).sum::<f64>().sqrt();
                off <= 1e-12 * point::norm(&w)
            }
            Primitive::Segment { a, b } => {
                let start: Vec<f64> = x0.iter().zip(v).map(|(p, d)| p + 1e-9 * len * d).collect();
                let end: Vec<f64> = x0.iter().zip(v).map(|(p, d)| p + len * d).collect();
                segment_distance(&start, &end, a, b) <= 1e-12 * (1.0 + len)
            }
            Primitive::Cusp { .. } => {
                // dense sampling against the exact distance function
                let m = 4096;
                (1..=m).any(|k| {
                    let t = len * k as f64 / m as f64;
                    let x: Vec<f64> = x0.iter().zip(v).map(|(p, d)| p + t * d).collect();
                    self.dist(&x) == 0.0
                })
            }
            Primitive::Cells { grid, mask } => {
                let h = grid.pitch();
                mask.iter().enumerate().any(|(i, m)| {
                    if !*m {
                        return false;
                    }
                    let c = grid.cell_center(i);
                    let lo: Vec<f64> = c.iter().map(|x| x - h / 2.0).collect();
                    let hi: Vec<f64> = c.iter().map(|x| x + h / 2.0).collect();
                    Primitive::Box { lo, hi }.hits_segment(x0, v, len)
                })
            }
        }
    }
}

/// Distance between segments [p0,p1] and [q0,q1].
fn segment_distance(p0: &[f64], p1: &[f64], q0: &[f64], q1: &[f64]) -> f64 {
    let d1: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| a - b).collect();
    let d2: Vec<f64> = q1.iter().zip(q0).map(|(a, b)| a - b).collect();
    let r: Vec<f64> = p0.iter().zip(q0).map(|(a, b)| a - b).collect();
    let a = point::dot(&d1, &d1);
    let e = point::dot(&d2, &d2);
    let f = point::dot(&d2, &r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return point::dist(p0, q0);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = point::dot(&d1, &r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = point::dot(&d1, &d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let x = lerp(p0, p1, s);
    let y = lerp(q0, q1, t);
    point::dist(&x, &y)
}

/// Distance in the (axial, radial) half-plane from (s, y) to {0 ≤ σ ≤ L, 0 ≤ η ≤ c σ^γ}.
fn cusp_dist(s: f64, y: f64, gamma: f64, coef: f64, length: f64) -> f64 {
    if (0.0..=length).contains(&s) && y <= coef * s.powf(gamma) {
        return 0.0;
    }
    let f = |sig: f64| {
        let top = coef * sig.powf(gamma);
        ((s - sig).powi(2) + (y - top).max(0.0).powi(2)).sqrt()
    };
    let m = 256;
    let mut best = (0.0, f64::INFINITY);
    for k in 0..=m {
        let sig = length * k as f64 / m as f64;
        let v = f(sig);
        if v < best.1 {
            best = (sig, v);
        }
    }
    // golden refinement around the best sample
    let step = length / m as f64;
    let (mut a, mut b) = ((best.0 - step).max(0.0), (best.0 + step).min(length));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) <= f(d) { b = d } else { a = c }
    }
    best.1.min(f(0.5 * (a + b)))
}

/// Closed dyadic-style annulus {r_in ≤ |x − center| ≤ r_out}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: Vec<f64>,
    pub r_in: f64,
    pub r_out: f64,
}

impl Annulus {
    pub fn dist(&self, x: &[f64]) -> f64 {
        let d = point::dist(x, &self.center);
        if d < self.r_in {
            self.r_in - d
        } else if d > self.r_out {
            d - self.r_out
        } else {
            0.0
        }
    }
}

/// A compact set: a finite union of primitives, optionally intersected with a closed annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParametricSet {
    n: usize,
    primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clip: Option<Annulus>,
}

impl ParametricSet {
    pub fn new(n: usize, primitives: Vec<Primitive>) -> Result<Self> {
        if n < 2 {
            return invalid("sets live in dimension n >= 2");
        }
        for p in &primitives {
            if p.dim() != n {
                return invalid(format!("primitive of dimension {} in a set of dimension {n}", p.dim()));
            }
            p.validate()?;
        }
        Ok(ParametricSet { n, primitives, clip: None })
    }

    pub fn empty(n: usize) -> Self {
        ParametricSet { n, primitives: Vec::new(), clip: None }
    }

    pub fn ball(center: &Point, radius: f64) -> Result<Self> {
        Self::new(center.dim(), vec![Primitive::Ball { center: center.coords().to_vec(), radius }])
    }

    pub fn sphere(center: &Point, radius: f64) -> Result<Self> {
        Self::new(center.dim(), vec![Primitive::Sphere { center: center.coords().to_vec(), radius }])
    }

    pub fn points(points: &[Point]) -> Result<Self> {
        let Some(first) = points.first() else { return invalid("point list must be nonempty") };
        Self::new(first.dim(), points.iter().map(|p| Primitive::Point { at: p.coords().to_vec() }).collect())
    }

    /// ∪_{i=first..=last} B(2^{−i}e₁, 2^{−i}·i^{−s}) about `x0`.
    pub fn ball_family(x0: &Point, s: f64, first: u32, last: u32) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return invalid("ball-family exponent s must be finite and nonnegative");
        }
        let n = x0.dim();
        let balls = (first.max(1)..=last)
            .map(|i| {
                let r = 2f64.powi(-(i as i32));
                let mut c = x0.coords().to_vec();
                c[0] += r;
                Primitive::Ball { center: c, radius: r * (i as f64).powf(-s) }
            })
            .collect();
        Self::new(n, balls)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn clip(&self) -> Option<&Annulus> {
        self.clip.as_ref()
    }

    pub fn union(&self, other: &ParametricSet) -> Result<Self> {
        if self.n != other.n || self.clip.is_some() || other.clip.is_some() {
            return invalid("only unclipped sets of one dimension can be joined");
        }
        let mut p = self.primitives.clone();
        p.extend(other.primitives.iter().cloned());
        Ok(ParametricSet { n: self.n, primitives: p, clip: None })
    }

    /// Image under y ↦ center + λ(y − center).
    pub fn scaled(&self, center: &[f64], lambda: f64) -> Self {
        self.affine(center, lambda, center)
    }

    /// Image under y ↦ target + λ(y − origin).
    pub fn affine(&self, origin: &[f64], lambda: f64, target: &[f64]) -> Self {
        let map = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(origin.iter().zip(target)).map(|(y, (o, t))| t + lambda * (y - o)).collect()
        };
        let primitives = self
            .primitives
            .iter()
            .map(|p| match p {
                Primitive::Ball { center: c, radius } => Primitive::Ball { center: map(c), radius: radius * lambda },
                Primitive::Sphere { center: c, radius } => Primitive::Sphere { center: map(c), radius: radius * lambda },
                Primitive::Box { lo, hi } => Primitive::Box { lo: map(lo), hi: map(hi) },
                Primitive::Point { at } => Primitive::Point { at: map(at) },
                Primitive::Segment { a, b } => Primitive::Segment { a: map(a), b: map(b) },
                Primitive::Cusp { apex, axis, gamma, coef, length } => Primitive::Cusp {
                    apex: map(apex),
                    axis: *axis,
                    gamma: *gamma,
                    // |y| ≤ c s^γ becomes |y| ≤ c λ^{1−γ} s^γ
                    coef: coef * lambda.powf(1.0 - gamma),
                    length: length * lambda,
                },
                Primitive::Cells { grid, mask } => {
                    let d = grid.domain();
                    let dom = crate::grid::BoxDomain { lo: map(&d.lo), hi: map(&d.hi) };
                    let g = EvaluationGrid::new(&dom, grid.pitch() * lambda).expect("scaled grid stays valid");
                    Primitive::Cells { grid: g, mask: mask.clone() }
                }
            })
            .collect();
        let clip = self.clip.as_ref().map(|a| Annulus { center: map(&a.center), r_in: a.r_in * lambda, r_out: a.r_out * lambda });
        ParametricSet { n: self.n, primitives, clip }
    }

    /// E ∩ {r_in ≤ |x − center| ≤ r_out}, keeping only primitives that can meet the annulus.
    pub fn intersect_annulus(&self, center: &[f64], r_in: f64, r_out: f64) -> Self {
        let primitives = self
            .primitives
            .iter()
            .filter(|p| {
                let (lo, hi) = p.dist_range(center);
                lo <= r_out && hi >= r_in
            })
            .cloned()
            .collect();
        let clip = Annulus { center: center.to_vec(), r_in, r_out };
        ParametricSet { n: self.n, primitives, clip: Some(clip) }
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    /// Largest local dimension among the primitives.
    pub fn local_dim(&self) -> usize {
        self.primitives.iter().map(|p| p.local_dim()).max().unwrap_or(0)
    }

    /// Distance to the union, ignoring the clip.
    pub fn dist_unclipped(&self, x: &[f64]) -> f64 {
        self.primitives.iter().map(|p| p.dist(x)).fold(f64::INFINITY, f64::min)
    }

    /// Distance to the set; for clipped sets this is max(dist to union, dist to annulus),
    /// a lower bound that is exact away from the annulus boundary.
    pub fn dist(&self, x: &[f64]) -> f64 {
        let d = self.dist_unclipped(x);
        match &self.clip {
            Some(a) => d.max(a.dist(x)),
            None => d,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.dist(x) == 0.0
    }

    /// Bounding box of the primitives (clipped to the annulus box when present).
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut it = self.primitives.iter().map(|p| p.bounds());
        let (mut lo, mut hi) = it.next()?;
        for (a, b) in it {
            for d in 0..self.n {
                lo[d] = lo[d].min(a[d]);
                hi[d] = hi[d].max(b[d]);
            }
        }
        if let Some(c) = &self.clip {
            for d in 0..self.n {
                lo[d] = lo[d].max(c.center[d] - c.r_out);
                hi[d] = hi[d].min(c.center[d] + c.r_out);
            }
        }
        Some((lo, hi))
    }

    /// Whether {x₀ + t v : 0 < t ≤ len} meets the set (clip ignored: conservative).
    pub fn hits_segment(&self, x0: &[f64], v: &[f64], len: f64) -> bool {
        self.primitives.iter().any(|p| p.hits_segment(x0, v, len))
    }

    /// Nodes of `grid` within distance `tol` of the set. Solid primitives use `h/2`;
    /// lower-dimensional ones, and solids too small to reach a node that way, use
    /// `h·√n/2` so that every primitive marks at least one node of the cells it meets.
    pub fn mark_nodes(&self, grid: &EvaluationGrid) -> Vec<bool> {
        let n = grid.dim();
        let h = grid.pitch();
        let wide = 0.5 * h * (n as f64).sqrt();
        let mut marked = vec![false; grid.node_count()];
        for p in &self.primitives {
            let tol = if p.local_dim() == n { 0.5 * h } else { wide };
            if self.mark_primitive(p, grid, tol, &mut marked) == 0 && tol < wide {
                self.mark_primitive(p, grid, wide, &mut marked);
            }
        }
        marked
    }

    fn mark_primitive(&self, p: &Primitive, grid: &EvaluationGrid, tol: f64, marked: &mut [bool]) -> usize {
        let n = grid.dim();
        let h = grid.pitch();
        let strides = grid.node_strides();
        let nodes = grid.nodes_per_axis();
        let (lo, hi) = p.bounds();
        let mut range = Vec::with_capacity(n);
        for d in 0..n {
            let a = ((lo[d] - tol - grid.lo()[d]) / h).floor();
            let b = ((hi[d] + tol - grid.lo()[d]) / h).ceil().min(nodes[d] as f64 - 1.0);
            if b < 0.0 || a > b {
                return 0;
            }
            range.push((a.max(0.0) as usize, b as usize));
        }
        let mut hits = 0;
        let mut idx: Vec<usize> = range.iter().map(|r| r.0).collect();
        loop {
            let lin: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            let x: Vec<f64> = idx.iter().zip(grid.lo()).map(|(i, o)| o + *i as f64 * h).collect();
            let inside_clip = self.clip.as_ref().is_none_or(|c| c.dist(&x) <= tol);
            if inside_clip && p.dist(&x) <= tol {
                marked[lin] = true;
                hits += 1;
            }
            let mut d = n;
            let mut done = true;
            while d > 0 {
                d -= 1;
                if idx[d] < range[d].1 {
                    idx[d] += 1;
                    done = false;
                    break;
                }
                idx[d] = range[d].0;
            }
            if done {
                break;
            }
        }
        hits
    }

    /// Whether the set is invariant under x_axis ↦ −x_axis (primitive lists compared
    /// up to reordering).
    pub fn is_mirror_symmetric(&self, axis: usize) -> bool {
        if let Some(c) = &self.clip {
            if c.center[axis] != 0.0 {
                return false;
            }
        }
        self.primitives.iter().all(|p| match p.reflected(axis) {
            Some(r) => self.primitives.iter().any(|q| q.approx_eq(&r)),
            None => false,
        })
    }

    /// The set without its p-polar primitives (local dimension k ≤ n − p).
    pub fn without_polar(&self, p: f64) -> Self {
        let n = self.n as f64;
        let mut out = self.clone();
        out.primitives.retain(|q| (q.local_dim() as f64) > n - p);
        out
    }

    /// Number of boxes [kε, (k+1)ε)ⁿ meeting the set.
    pub fn box_count(&self, eps: f64) -> usize {
        let mut boxes: HashSet<Vec<i64>> = HashSet::new();
        for p in &self.primitives {
            collect_boxes(p, eps, self.clip.as_ref(), &mut boxes);
        }
        boxes.len()
    }
}

fn axis_range(lo: f64, hi: f64, eps: f64) -> (i64, i64) {
    let a = (lo / eps).floor() as i64;
    let b = ((hi / eps - 1e-9).ceil() as i64 - 1).max(a);
    (a, b)
}

fn collect_boxes(p: &Primitive, eps: f64, clip: Option<&Annulus>, out: &mut HashSet<Vec<i64>>) {
    let (lo, hi) = p.bounds();
    let n = lo.len();
    let ranges: Vec<(i64, i64)> = (0..n).map(|d| axis_range(lo[d], hi[d], eps)).collect();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let half_diag = 0.5 * eps * (n as f64).sqrt();
    loop {
        let blo: Vec<f64> = idx.iter().map(|k| *k as f64 * eps).collect();
        let bhi: Vec<f64> = idx.iter().map(|k| (*k + 1) as f64 * eps).collect();
        let meets = match p {
            Primitive::Box { lo, hi } => (0..n).all(|d| {
                let (a, b) = axis_range(lo[d], hi[d], eps);
                idx[d] >= a && idx[d] <= b
            }),
            Primitive::Point { at } => (0..n).all(|d| (at[d] / eps).floor() as i64 == idx[d]),
            Primitive::Ball { center, radius } => clamp_dist2(center, &blo, &bhi) <= radius * radius,
            Primitive::Sphere { center, radius } => {
                clamp_dist2(center, &blo, &bhi) <= radius * radius && far_dist2(center, &blo, &bhi) >= radius * radius
            }
            _ => {
                let c: Vec<f64> = blo.iter().map(|v| v + 0.5 * eps).collect();
                p.dist(&c) <= half_diag
            }
        };
        let in_clip = clip.is_none_or(|a| {
            let c: Vec<f64> = blo.iter().map(|v| v + 0.5 * eps).collect();
            a.dist(&c) <= half_diag
        });
        if meets && in_clip {
            out.insert(idx.clone());
        }
        let mut d = n;
        let mut done = true;
        while d > 0 {
            d -= 1;
            if idx[d] < ranges[d].1 {
                idx[d] += 1;
                done = false;
                break;
            }
            idx[d] = ranges[d].0;
        }
        if done {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        let b = Primitive::Ball { center: vec![0.0, 0.0, 0.0], radius: 1.0 };
        assert_eq!(b.dist(&[2.0, 0.0, 0.0]), 1.0);
        assert_eq!(b.dist(&[0.5, 0.0, 0.0]), 0.0);
        let s = Primitive::Sphere { center: vec![0.0, 0.0, 0.0], radius: 1.0 };
        assert_eq!(s.dist(&[0.5, 0.0, 0.0]), 0.5);
        let x = Primitive::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 0.0] };
        assert_eq!(x.local_dim(), 1);
        assert!((x.dist(&[2.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
        let seg = Primitive::Segment { a: vec![0.0, 0.0], b: vec![2.0, 0.0] };
        assert_eq!(seg.dist(&[1.0, 0.5]), 0.5);
    }

    #[test]
    fn cusp_distance() {
        let c = Primitive::Cusp { apex: vec![0.0, 0.0], axis: 0, gamma: 2.0, coef: 1.0, length: 1.0 };
        assert_eq!(c.dist(&[0.5, 0.2]), 0.0);
        assert!((c.dist(&[-0.3, 0.0]) - 0.3).abs() < 1e-9);
        assert!((c.dist(&[1.5, 0.0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn segment_hits() {
        let b = Primitive::Ball { center: vec![1.0, 0.0], radius: 0.5 };
        assert!(b.hits_segment(&[0.0, 0.0], &[1.0, 0.0], 1.0));
        assert!(!b.hits_segment(&[0.0, 0.0], &[1.0, 0.0], 0.4));
        assert!(!b.hits_segment(&[0.0, 0.0], &[0.0, 1.0], 5.0));
        // a ball touching the origin is met only by rays pointing into it
        let t = Primitive::Ball { center: vec![0.5, 0.0], radius: 0.5 };
        assert!(!t.hits_segment(&[0.0, 0.0], &[-1.0, 0.0], 1.0));
        assert!(t.hits_segment(&[0.0, 0.0], &[0.6, 0.8], 1.0));
        let s = Primitive::Sphere { center: vec![0.0, 0.0], radius: 0.5 };
        assert!(s.hits_segment(&[0.0, 0.0], &[0.6, 0.8], 1.0));
        assert!(!s.hits_segment(&[0.0, 0.0], &[0.6, 0.8], 0.4));
    }

    #[test]
    fn annulus_intersection_filters() {
        let e = ParametricSet::ball_family(&Point::origin(3), 1.0, 1, 8).unwrap();
        let cut = e.intersect_annulus(&[0.0; 3], 1.0 / 32.0, 1.0 / 16.0);
        assert!(!cut.is_empty() && cut.primitives().len() <= 3);
        let far = e.intersect_annulus(&[0.0; 3], 2.0, 4.0);
        assert!(far.is_empty());
    }

    #[test]
    fn marks_cover_the_set() {
        let g = EvaluationGrid::new(&crate::grid::BoxDomain::cube(3, 1.0), 0.125).unwrap();
        let e = ParametricSet::sphere(&Point::origin(3), 0.5).unwrap();
        let m = e.mark_nodes(&g);
        for i in 0..g.node_count() {
            let x = g.node_coords(i);
            let d = (point::norm(&x) - 0.5).abs();
            if d <= 0.05 {
                assert!(m[i]);
            }
            if d > 0.125 {
                assert!(!m[i]);
            }
        }
    }

    #[test]
    fn box_counts() {
        let seg = ParametricSet::new(3, vec![Primitive::Box { lo: vec![0.0; 3], hi: vec![1.0, 0.0, 0.0] }]).unwrap();
        assert_eq!(seg.box_count(0.125), 8);
        let pts = ParametricSet::points(&[Point::origin(2), Point::on_axis(2, 0, 0.5)]).unwrap();
        assert_eq!(pts.box_count(0.01), 2);
    }
}
