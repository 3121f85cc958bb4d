//! Discrete p-Dirichlet energy on node lattices and its minimization.
//!
//! Each cell contributes `hⁿ/2ⁿ · Σ_corners |g_c|^p`, where the corner gradient `g_c`
//! takes, along every axis, the forward difference over the cell edge through that
//! corner. Affine functions have the same gradient at every corner, the energy is
//! convex for every p > 1, and at p = 2 it reduces to the standard (2n+1)-point
//! Laplacian.

use crate::error::{Error, Result};
use crate::grid::{EvaluationGrid, Mirror};

#[derive(Clone, Copy, Debug)]
enum PowKind {
    Two,
    Three,
    Four,
    FiveHalves,
    ThreeHalves,
    General(f64),
}

impl PowKind {
    fn new(p: f64) -> Self {
        match p {
            _ if p == 2.0 => PowKind::Two,
            _ if p == 3.0 => PowKind::Three,
            _ if p == 4.0 => PowKind::Four,
            _ if p == 2.5 => PowKind::FiveHalves,
            _ if p == 1.5 => PowKind::ThreeHalves,
            _ => PowKind::General(p),
        }
    }

    /// (|g|^p, |g|^{p-2}) from |g|²; the second entry is 0 at g = 0.
    #[inline(always)]
    fn eval(self, g2: f64) -> (f64, f64) {
        match self {
            PowKind::Two => (g2, 1.0),
            PowKind::Three => {
                let s = g2.sqrt();
                (g2 * s, s)
            }
            PowKind::Four => (g2 * g2, g2),
            PowKind::FiveHalves => {
                let s = g2.sqrt().sqrt();
                (g2 * s, s)
            }
            PowKind::ThreeHalves => {
                if g2 == 0.0 {
                    (0.0, 0.0)
                } else {
                    let s = g2.sqrt().sqrt();
                    (g2 / s, 1.0 / s)
                }
            }
            PowKind::General(p) => {
                if g2 == 0.0 {
                    (0.0, 0.0)
                } else {
                    let t = g2.powf(0.5 * (p - 2.0));
                    (g2 * t, t)
                }
            }
        }
    }
}

/// Minimize `(1/p)·D(u) − ⟨load, u⟩` over node values with `fixed` nodes held.
#[derive(Clone, Debug)]
pub struct GridProblem {
    pub grid: EvaluationGrid,
    pub mirror: Mirror,
    pub p: f64,
    pub fixed: Vec<bool>,
    pub load: Vec<f64>,
}

impl GridProblem {
    pub fn new(grid: EvaluationGrid, mirror: Mirror, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!("p must lie in (1, inf), got {p}")));
        }
        mirror.validate(&grid)?;
        let nn = grid.node_count();
        Ok(GridProblem { grid, mirror, p, fixed: vec![false; nn], load: vec![0.0; nn] })
    }

    pub fn free_count(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// D(u) on this lattice (without the mirror factor).
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        self.sweep(u, None)
    }

    /// Functional value; fills `grad` (zero at fixed nodes).
    pub fn functional(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.sweep(u, Some(grad));
        let mut lin = 0.0;
        for i in 0..u.len() {
            if self.load[i] != 0.0 {
                lin += self.load[i] * u[i];
                grad[i] -= self.load[i];
            }
            if self.fixed[i] {
                grad[i] = 0.0;
            }
        }
        d / self.p - lin
    }

    fn sweep(&self, u: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        let g = &self.grid;
        let n = g.dim();
        let h = g.pitch();
        let inv_h = 1.0 / h;
        let w = h.powi(n as i32) / (1u32 << n) as f64;
        let pk = PowKind::new(self.p);
        let strides = g.node_strides();
        let corners = 1usize << n;
        let offs: Vec<usize> = (0..corners)
            .map(|k| (0..n).filter(|d| k >> d & 1 == 1).map(|d| strides[d]).sum())
            .collect();
        let cells = g.cells_per_axis().to_vec();
        let mut idx = vec![0usize; n];
        let mut vals = [0.0f64; 16];
        let mut gl = [0.0f64; 16];
        let mut total = 0.0;
        let ncell = g.cell_count();
        let mut base = 0usize;
        for _ in 0..ncell {
            for k in 0..corners {
                vals[k] = u[base + offs[k]];
            }
            if grad.is_some() {
                gl[..corners].iter_mut().for_each(|v| *v = 0.0);
            }
            let mut cell_e = 0.0;
            for k in 0..corners {
                let mut gv = [0.0f64; 4];
                let mut g2 = 0.0;
                for d in 0..n {
                    let bit = 1 << d;
                    let diff = (vals[k | bit] - vals[k & !bit]) * inv_h;
                    gv[d] = diff;
                    g2 += diff * diff;
                }
                let (e, t) = pk.eval(g2);
                cell_e += e;
                if grad.is_some() && t != 0.0 {
                    let c = w * t * inv_h;
                    for d in 0..n {
                        let bit = 1 << d;
                        let f = c * gv[d];
                        gl[k | bit] += f;
                        gl[k & !bit] -= f;
                    }
                }
            }
            total += w * cell_e;
            if let Some(gr) = grad.as_deref_mut() {
                for k in 0..corners {
                    gr[base + offs[k]] += gl[k];
                }
            }
            // advance the cell multi-index and its base node
            let mut d = n - 1;
            loop {
                idx[d] += 1;
                base += strides[d];
                if idx[d] < cells[d] {
                    break;
                }
                base -= idx[d] * strides[d];
                idx[d] = 0;
                if d == 0 {
                    break;
                }
                d -= 1;
            }
        }
        total
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Stop once the relative energy decrease stays below this for `window` iterations.
    pub energy_rtol: f64,
    pub window: usize,
    /// When set, stop on the max-norm of the free gradient instead.
    pub grad_tol: Option<f64>,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { energy_rtol: 1e-8, window: 5, grad_tol: None, max_iter: 20_000, memory: 10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub functional: f64,
    pub grad_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// L-BFGS with monotone backtracking on a convex grid functional. `u` holds the initial
/// guess including the fixed values and is overwritten with the minimizer.
pub fn minimize(problem: &GridProblem, u: &mut [f64], opts: &SolverOptions) -> Result<SolveStats> {
    let nn = u.len();
    let mut g = vec![0.0; nn];
    let mut f = problem.functional(u, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut d = vec![0.0; nn];
    let mut trial = vec![0.0; nn];
    let mut g_new = vec![0.0; nn];
    let mut quiet = 0usize;
    let eps = f64::EPSILON;

    for it in 0..opts.max_iter {
        let gn = inf_norm(&g);
        if let Some(tol) = opts.grad_tol {
            if gn <= tol {
                return Ok(SolveStats { iterations: it, functional: f, grad_norm: gn });
            }
        }
        if gn == 0.0 {
            return Ok(SolveStats { iterations: it, functional: f, grad_norm: 0.0 });
        }

        // two-loop recursion
        d.copy_from_slice(&g);
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = rho[i] * dot(&s_hist[i], &d);
            for (dv, yv) in d.iter_mut().zip(&y_hist[i]) {
                *dv -= alpha[i] * yv;
            }
        }
        let gamma = if m > 0 {
            dot(&s_hist[m - 1], &y_hist[m - 1]) / dot(&y_hist[m - 1], &y_hist[m - 1])
        } else {
            1.0 / gn.max(1e-300) * 1e-2
        };
        d.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..m {
            let beta = rho[i] * dot(&y_hist[i], &d);
            for (dv, sv) in d.iter_mut().zip(&s_hist[i]) {
                *dv += (alpha[i] - beta) * sv;
            }
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            for (dv, gv) in d.iter_mut().zip(&g) {
                *dv = -gv * 1e-2 / gn;
            }
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for i in 0..nn {
                trial[i] = u[i] + step * d[i];
            }
            let ft = problem.functional(&trial, &mut g_new);
            let armijo = ft <= f + 1e-4 * step * slope;
            let flat = (ft - f).abs() <= 8.0 * eps * f.abs().max(1e-300)
                && inf_norm(&g_new) < gn;
            if ft.is_finite() && (armijo || flat) {
                accepted = Some(ft);
                break;
            }
            step *= 0.5;
        }
        let Some(ft) = accepted else {
            if m == 0 {
                // steepest descent cannot progress: the iterate is optimal to roundoff
                return Ok(SolveStats { iterations: it, functional: f, grad_norm: gn });
            }
            s_hist.clear();
            y_hist.clear();
            rho.clear();
            continue;
        };

        let mut s = vec![0.0; nn];
        let mut y = vec![0.0; nn];
        for i in 0..nn {
            s[i] = trial[i] - u[i];
            y[i] = g_new[i] - g[i];
        }
        let sy = dot(&s, &y);
        u.copy_from_slice(&trial);
        std::mem::swap(&mut g, &mut g_new);
        let rel = (f - ft) / ft.abs().max(f.abs()).max(1e-300);
        f = ft;
        if sy > 1e-300 {
            if s_hist.len() == opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
                rho.remove(0);
            }
            rho.push(1.0 / sy);
            s_hist.push(s);
            y_hist.push(y);
        }
        if opts.grad_tol.is_none() {
            quiet = if rel < opts.energy_rtol { quiet + 1 } else { 0 };
            if quiet >= opts.window {
                return Ok(SolveStats { iterations: it + 1, functional: f, grad_norm: inf_norm(&g) });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        detail: format!("functional {f:.6e}, gradient {:.3e}", inf_norm(&g)),
    })
}

/// Multilinear prolongation of node values from `coarse` onto `fine`.
pub fn prolongate(coarse: &EvaluationGrid, values: &[f64], fine: &EvaluationGrid) -> Vec<f64> {
    (0..fine.node_count())
        .map(|i| coarse.interpolate(values, &fine.node_coords(i)).unwrap_or(0.0))
        .collect()
}
