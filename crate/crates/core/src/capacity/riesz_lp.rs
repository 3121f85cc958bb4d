use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CapacityEstimate, CapacityMethod, Domain};
use crate::error::{invalid, Error, Result};
use crate::point;
use crate::quadrature::{ball_volume, equivalent_radius, fibonacci_sphere, sphere_rule};
use crate::riesz::{kernel, RieszParams};
use crate::sets::{ParametricSet, Primitive};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RieszLpOptions {
    /// Constraint points per grid cell of pitch h met by E.
    pub constraints_per_cell: f64,
    /// Every primitive gets at least this many patches per characteristic length.
    pub min_resolution: f64,
    pub max_sites: usize,
    pub cg_rtol: f64,
    pub max_iter: usize,
}

impl Default for RieszLpOptions {
    fn default() -> Self {
        RieszLpOptions { constraints_per_cell: 4.0, min_resolution: 4.0, max_sites: 8000, cg_rtol: 1e-10, max_iter: 5000 }
    }
}

/// A piece of E carrying uniformly spread mass: center, k-volume and local dimension.
#[derive(Clone, Debug)]
struct Patch {
    x: Vec<f64>,
    weight: f64,
    k: usize,
}

fn grid_offsets(counts: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = counts.iter().product();
    (0..total)
        .map(|mut lin| {
            let mut idx = vec![0; counts.len()];
            for d in (0..counts.len()).rev() {
                idx[d] = lin % counts[d];
                lin /= counts[d];
            }
            idx
        })
        .collect()
}

/// Midpoint cells of pitch ≤ s over a box, keeping those whose centers pass `keep`.
fn solid_cells(lo: &[f64], hi: &[f64], s: f64, keep: impl Fn(&[f64]) -> bool) -> Vec<Patch> {
    let n = lo.len();
    let counts: Vec<usize> = (0..n).map(|d| ((hi[d] - lo[d]) / s).ceil().max(1.0) as usize).collect();
    let steps: Vec<f64> = (0..n).map(|d| (hi[d] - lo[d]) / counts[d] as f64).collect();
    let w: f64 = steps.iter().product();
    grid_offsets(&counts)
        .into_iter()
        .filter_map(|idx| {
            let x: Vec<f64> = (0..n).map(|d| lo[d] + (idx[d] as f64 + 0.5) * steps[d]).collect();
            keep(&x).then_some(Patch { x, weight: w, k: n })
        })
        .collect()
}

fn sphere_patches(center: &[f64], radius: f64, s: f64) -> Vec<Patch> {
    let n = center.len();
    let area = crate::quadrature::sphere_area(n) * radius.powi(n as i32 - 1);
    let target = (area / s.powi(n as i32 - 1)).ceil().max(8.0) as usize;
    let dirs: Vec<(Vec<f64>, f64)> = match n {
        3 => {
            let w = 1.0 / target as f64;
            fibonacci_sphere(target).into_iter().map(|v| (v.to_vec(), w)).collect()
        }
        2 => {
            let w = 1.0 / target as f64;
            (0..target)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / target as f64;
                    (vec![t.cos(), t.sin()], w)
                })
                .collect()
        }
        _ => {
            // product rule with m^{n-2}·2m nodes
            let m = ((target as f64 / 2.0).powf(1.0 / (n as f64 - 1.0))).ceil().max(2.0) as usize;
            let rule = sphere_rule(n, m);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            rule.into_iter().map(|(v, w)| (v, w / total)).collect()
        }
    };
    dirs.into_iter()
        .map(|(v, w)| Patch {
            x: center.iter().zip(&v).map(|(c, u)| c + radius * u).collect(),
            weight: w * area,
            k: n - 1,
        })
        .collect()
}

/// Bounds of `p` cut down to `window`; `None` when they miss each other.
fn windowed(p: &Primitive, window: Option<&(Vec<f64>, Vec<f64>)>) -> Option<(Vec<f64>, Vec<f64>)> {
    let (mut lo, mut hi) = p.bounds();
    if let Some((wl, wh)) = window {
        for d in 0..lo.len() {
            lo[d] = lo[d].max(wl[d]);
            hi[d] = hi[d].min(wh[d]);
            if lo[d] > hi[d] {
                return None;
            }
        }
    }
    Some((lo, hi))
}

fn primitive_patches(
    p: &Primitive,
    h: f64,
    opts: &RieszLpOptions,
    window: Option<&(Vec<f64>, Vec<f64>)>,
) -> Vec<Patch> {
    let spacing = |k: usize, size: f64| -> f64 {
        (h / opts.constraints_per_cell.powf(1.0 / k as f64)).min(size / opts.min_resolution)
    };
    match p {
        Primitive::Point { .. } => Vec::new(),
        Primitive::Sphere { center, radius } => {
            sphere_patches(center, *radius, spacing(center.len() - 1, *radius))
        }
        Primitive::Ball { center, radius } => {
            let n = center.len();
            let s = spacing(n, *radius);
            let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
            let mut cells = solid_cells(&lo, &hi, s, |x| point::dist(x, center) <= *radius);
            if cells.is_empty() {
                cells.push(Patch { x: center.clone(), weight: 0.0, k: n });
            }
            // match the ball's volume exactly
            let vol = ball_volume(n) * radius.powi(n as i32);
            let w = vol / cells.len() as f64;
            cells.iter_mut().for_each(|c| c.weight = w);
            cells
        }
        Primitive::Box { lo, hi } => {
            let k = p.local_dim();
            if k == 0 {
                return Vec::new();
            }
            let size = lo.iter().zip(hi).map(|(a, b)| b - a).filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min);
            let s = spacing(k, size);
            let n = lo.len();
            let counts: Vec<usize> =
                (0..n).map(|d| if hi[d] > lo[d] { ((hi[d] - lo[d]) / s).ceil().max(1.0) as usize } else { 1 }).collect();
            let steps: Vec<f64> = (0..n).map(|d| (hi[d] - lo[d]) / counts[d] as f64).collect();
            let w: f64 = steps.iter().filter(|v| **v > 0.0).product();
            let Some((wl, wh)) = windowed(p, window) else { return Vec::new() };
            // only the cells of the full grid that meet the window
            let first: Vec<usize> = (0..n)
                .map(|d| if steps[d] > 0.0 { ((wl[d] - lo[d]) / steps[d]).floor().max(0.0) as usize } else { 0 })
                .collect();
            let span: Vec<usize> = (0..n)
                .map(|d| {
                    if steps[d] > 0.0 {
                        let last = (((wh[d] - lo[d]) / steps[d]).ceil() as usize).min(counts[d]);
                        last.saturating_sub(first[d]).max(1).min(counts[d] - first[d])
                    } else {
                        1
                    }
                })
                .collect();
            grid_offsets(&span)
                .into_iter()
                .map(|idx| Patch {
                    x: (0..n).map(|d| lo[d] + ((first[d] + idx[d]) as f64 + 0.5) * steps[d]).collect(),
                    weight: w,
                    k,
                })
                .collect()
        }
        Primitive::Segment { a, b } => {
            let len = point::dist(a, b);
            if len == 0.0 {
                return Vec::new();
            }
            let m = (len / spacing(1, len)).ceil() as usize;
            (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) / m as f64;
                    Patch { x: a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect(), weight: len / m as f64, k: 1 }
                })
                .collect()
        }
        Primitive::Cusp { apex, coef, gamma, length, .. } => {
            let n = apex.len();
            let s = spacing(n, (coef * length.powf(*gamma)).min(*length));
            let Some((lo, hi)) = windowed(p, window) else { return Vec::new() };
            solid_cells(&lo, &hi, s, |x| p.dist(x) == 0.0)
        }
        Primitive::Cells { grid, mask } => {
            let n = grid.dim();
            let gh = grid.pitch();
            let m = (gh / spacing(n, gh)).ceil().max(1.0) as usize;
            let sub = gh / m as f64;
            let offsets = grid_offsets(&vec![m; n]);
            let mut out = Vec::new();
            for (c, on) in mask.iter().enumerate() {
                if !*on {
                    continue;
                }
                let center = grid.cell_center(c);
                for o in &offsets {
                    let x = (0..n).map(|d| center[d] - 0.5 * gh + (o[d] as f64 + 0.5) * sub).collect();
                    out.push(Patch { x, weight: sub.powi(n as i32), k: n });
                }
            }
            out
        }
    }
}

/// Mean of the kernel over a k-ball patch of k-volume `weight`, seen from its center.
fn self_term(n: usize, params: &RieszParams, patch: &Patch) -> f64 {
    let k = patch.k as f64;
    let rho = equivalent_radius(patch.k, patch.weight).max(f64::MIN_POSITIVE);
    if params.is_log(n) {
        (params.diameter.expect("validated") / rho).ln() + 1.0 / k
    } else {
        let e = params.alpha - n as f64;
        k * rho.powf(e) / (e + k)
    }
}

/// Whether k-dimensional pieces carry positive capacity for this kernel.
fn charged(n: usize, alpha: f64, k: usize) -> bool {
    k >= 1 && (alpha == n as f64 || k as f64 > n as f64 - alpha)
}

fn site_patches(e: &ParametricSet, alpha: f64, h: f64, opts: &RieszLpOptions) -> Vec<Patch> {
    let n = e.dim();
    let window = e.clip().map(|c| {
        (c.center.iter().map(|v| v - c.r_out).collect::<Vec<_>>(), c.center.iter().map(|v| v + c.r_out).collect())
    });
    let mut out = Vec::new();
    for p in e.primitives() {
        if !charged(n, alpha, p.local_dim()) {
            continue;
        }
        let mut ps = primitive_patches(p, h, opts, window.as_ref());
        if let Some(c) = e.clip() {
            ps.retain(|q| c.dist(&q.x) == 0.0);
        }
        out.extend(ps);
    }
    out
}

/// Jacobi-preconditioned conjugate gradients on the dense symmetric system.
fn pcg(a: &[f64], nn: usize, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let matvec = |x: &[f64], y: &mut [f64]| {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &a[i * nn..(i + 1) * nn];
            *yi = row.iter().zip(x).map(|(r, v)| r * v).sum();
        });
    };
    let diag: Vec<f64> = (0..nn).map(|i| a[i * nn + i]).collect();
    let mut x = vec![0.0; nn];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(v, d)| v / d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; nn];
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut rz: f64 = r.iter().zip(&z).map(|(u, v)| u * v).sum();
    for it in 0..max_iter {
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn <= rtol * b_norm {
            return Ok((x, it));
        }
        matvec(&p, &mut q);
        let pq: f64 = p.iter().zip(&q).map(|(u, v)| u * v).sum();
        if !(pq > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                detail: "kernel matrix is not positive definite at this resolution".into(),
            });
        }
        let step = rz / pq;
        for i in 0..nn {
            x[i] += step * p[i];
            r[i] -= step * q[i];
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(u, v)| u * v).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..nn {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::ResolutionTooCoarse(format!("collocation solve did not converge in {max_iter} iterations")))
}

/// Discrete Riesz capacity: min Σ m_j over masses on patches of E with potential ≥ 1 at
/// every patch center. The collocation system is solved on an active set of nonnegative
/// masses; `upper` rescales the masses to primal feasibility and `lower` to dual
/// feasibility of the same linear program.
pub fn riesz_capacity(
    e: &ParametricSet,
    omega: &Domain,
    alpha: f64,
    h: f64,
    opts: &RieszLpOptions,
) -> Result<CapacityEstimate> {
    let n = e.dim();
    omega.validate()?;
    if omega.dim() != n {
        return invalid("set and domain dimensions differ");
    }
    if !(h > 0.0) || !h.is_finite() {
        return invalid("resolution h must be positive");
    }
    let params = RieszParams { alpha, diameter: (alpha == n as f64).then(|| omega.diameter()) };
    params.validate(n)?;

    let patches = site_patches(e, alpha, h, opts);
    if patches.iter().any(|q| !omega.contains(&q.x)) {
        return invalid("E must lie inside the open domain");
    }
    if patches.is_empty() {
        return Ok(CapacityEstimate::zero(CapacityMethod::LpDiscrete, h));
    }
    let nn = patches.len();
    if nn > opts.max_sites {
        return invalid(format!("{nn} sites exceed max_sites = {}; use a coarser h", opts.max_sites));
    }

    let mut a = vec![0.0; nn * nn];
    a.par_chunks_mut(nn).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j {
                self_term(n, &params, &patches[i])
            } else {
                kernel(n, &params, point::dist(&patches[i].x, &patches[j].x))
            };
        }
    });

    let mut active: Vec<usize> = (0..nn).collect();
    let mut masses = vec![0.0; nn];
    let mut iterations = 0;
    for _ in 0..64 {
        let m = active.len();
        let mut sub = vec![0.0; m * m];
        for (r, &i) in active.iter().enumerate() {
            for (c, &j) in active.iter().enumerate() {
                sub[r * m + c] = a[i * nn + j];
            }
        }
        let (x, its) = pcg(&sub, m, &vec![1.0; m], opts.cg_rtol, opts.max_iter)?;
        iterations += its;
        masses.iter_mut().for_each(|v| *v = 0.0);
        for (r, &i) in active.iter().enumerate() {
            masses[i] = x[r];
        }
        if x.iter().all(|v| *v >= 0.0) {
            break;
        }
        active.retain(|&i| masses[i] > 0.0);
        if active.is_empty() {
            return Err(Error::ResolutionTooCoarse("active set collapsed".into()));
        }
    }
    masses.iter_mut().for_each(|v| *v = v.max(0.0));
    let pot: Vec<f64> = (0..nn)
        .into_par_iter()
        .map(|i| a[i * nn..(i + 1) * nn].iter().zip(&masses).map(|(k, m)| k * m).sum())
        .collect();
    let total: f64 = masses.iter().sum();
    let min_pot = pot.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_pot = pot.iter().cloned().fold(0.0f64, f64::max);
    let upper = total / min_pot;
    let lower = total / max_pot;
    Ok(CapacityEstimate {
        value: upper,
        method: CapacityMethod::LpDiscrete,
        h,
        lower: Some(lower),
        upper: Some(upper),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;

    #[test]
    fn newtonian_sphere() {
        // α = 2, n = 3: uniform mass R on the sphere of radius R has potential 1 on it
        let e = ParametricSet::sphere(&Point::origin(3), 0.5).unwrap();
        let om = Domain::Ball { center: vec![0.0; 3], radius: 1.0 };
        let c = riesz_capacity(&e, &om, 2.0, 1.0 / 16.0, &RieszLpOptions::default()).unwrap();
        assert!((c.value - 0.5).abs() < 0.02, "{c:?}");
        assert!(c.lower.unwrap() <= c.value + 1e-12);
    }

    #[test]
    fn points_are_polar() {
        let e = ParametricSet::points(&[Point::origin(3)]).unwrap();
        let om = Domain::Ball { center: vec![0.0; 3], radius: 1.0 };
        let c = riesz_capacity(&e, &om, 1.5, 0.1, &RieszLpOptions::default()).unwrap();
        assert_eq!(c.value, 0.0);
    }
}
