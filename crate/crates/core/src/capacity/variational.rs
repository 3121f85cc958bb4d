use serde::{Deserialize, Serialize};

use super::{CapacityEstimate, CapacityMethod, Domain};
use crate::error::{invalid, Result};
use crate::grid::{BoxDomain, EvaluationGrid, Mirror};
use crate::penergy::{minimize, prolongate, GridProblem, SolverOptions};
use crate::sets::{ParametricSet, Primitive};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VariationalOptions {
    /// Number of grid levels; the coarsest has pitch h·2^(levels−1).
    pub levels: usize,
    /// Solve on a half/quarter/... lattice when Ω and K are mirror symmetric.
    pub use_symmetry: bool,
    /// Drop primitives of zero p-capacity (local dimension ≤ n − p) before solving.
    pub drop_polar: bool,
    pub energy_rtol: f64,
    pub coarse_rtol: f64,
    pub max_iter: usize,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        VariationalOptions {
            levels: 3,
            use_symmetry: true,
            drop_polar: true,
            energy_rtol: 1e-8,
            coarse_rtol: 1e-6,
            max_iter: 50_000,
        }
    }
}

fn is_multiple(x: f64, h: f64) -> bool {
    let q = x / h;
    (q - q.round()).abs() <= 1e-9 * q.abs().max(1.0)
}

/// Lattice box for Ω at coarsest pitch `coarse`; `None` when a box domain is not
/// commensurate with it.
fn lattice_box(omega: &Domain, mirror: &Mirror, coarse: f64) -> Option<BoxDomain> {
    let (lo, hi) = omega.bounds();
    let n = lo.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for d in 0..n {
        match omega {
            Domain::Box { .. } => {
                if mirror.axis(d) {
                    a[d] = 0.0;
                } else {
                    if !is_multiple(hi[d] - lo[d], coarse) {
                        return None;
                    }
                    a[d] = lo[d];
                }
                if !is_multiple(hi[d] - a[d], coarse) {
                    return None;
                }
                b[d] = hi[d];
            }
            _ => {
                a[d] = if mirror.axis(d) { 0.0 } else { (lo[d] / coarse).floor() * coarse };
                b[d] = (hi[d] / coarse).ceil() * coarse;
            }
        }
    }
    BoxDomain::new(a, b).ok()
}

fn has_cells(k: &ParametricSet) -> bool {
    k.primitives().iter().any(|p| matches!(p, Primitive::Cells { .. }))
}

/// Fixed-node layout for one level: nodes off the open domain are held at 0, marked
/// nodes at 1.
fn level_problem(
    k: &ParametricSet,
    omega: &Domain,
    grid: EvaluationGrid,
    mirror: &Mirror,
    p: f64,
) -> Result<(GridProblem, Vec<bool>)> {
    let mut prob = GridProblem::new(grid, mirror.clone(), p)?;
    let marks = k.mark_nodes(&prob.grid);
    for i in 0..prob.grid.node_count() {
        let x = prob.grid.node_coords(i);
        let outside = prob.grid.on_boundary(i, mirror) || !omega.contains(&x);
        if marks[i] && outside {
            return invalid("K must lie inside the open domain Ω at this resolution");
        }
        prob.fixed[i] = outside || marks[i];
    }
    Ok((prob, marks))
}

/// Variational p-capacity cap_p(K, Ω): the minimal discrete p-Dirichlet energy over
/// lattice functions equal to 1 on nodes marking K and 0 off Ω. Solved coarse-to-fine.
pub fn p_capacity(
    k: &ParametricSet,
    omega: &Domain,
    p: f64,
    h: f64,
    opts: &VariationalOptions,
) -> Result<CapacityEstimate> {
    omega.validate()?;
    let n = k.dim();
    if omega.dim() != n {
        return invalid("set and domain dimensions differ");
    }
    if !(p > 1.0) || !p.is_finite() {
        return invalid(format!("p must lie in (1, inf), got {p}"));
    }
    if !(h > 0.0) || !h.is_finite() {
        return invalid("resolution h must be positive");
    }
    let k = if opts.drop_polar { k.without_polar(p) } else { k.clone() };
    if k.is_empty() {
        return Ok(CapacityEstimate::zero(CapacityMethod::GridVariational, h));
    }
    let mirror = Mirror(
        (0..n)
            .map(|d| opts.use_symmetry && omega.is_mirror_symmetric(d) && k.is_mirror_symmetric(d))
            .collect(),
    );

    let mut levels = opts.levels.max(1);
    let dom = loop {
        let coarse = h * (1u64 << (levels - 1)) as f64;
        if let Some(b) = lattice_box(omega, &mirror, coarse) {
            break b;
        }
        if levels == 1 {
            return invalid("box domain sides must be multiples of h");
        }
        levels -= 1;
    };

    let mut iterations = 0;
    let mut prev: Option<(EvaluationGrid, Vec<f64>)> = None;
    let mut energy = 0.0;
    for level in (0..levels).rev() {
        let pitch = h * (1u64 << level) as f64;
        let grid = EvaluationGrid::new(&dom, pitch)?;
        let (prob, marks) = level_problem(&k, omega, grid, &mirror, p)?;
        let nn = prob.grid.node_count();
        let mut u: Vec<f64> = match &prev {
            Some((g, v)) => prolongate(g, v, &prob.grid),
            None if has_cells(&k) => vec![0.0; nn],
            None => (0..nn)
                .map(|i| {
                    let x = prob.grid.node_coords(i);
                    let a = omega.depth(&x);
                    let b = k.dist_unclipped(&x);
                    if a + b > 0.0 { a / (a + b) } else { 0.0 }
                })
                .collect(),
        };
        for i in 0..nn {
            if prob.fixed[i] {
                u[i] = if marks[i] { 1.0 } else { 0.0 };
            }
        }
        let solver = SolverOptions {
            energy_rtol: if level == 0 { opts.energy_rtol } else { opts.coarse_rtol },
            max_iter: opts.max_iter,
            ..SolverOptions::default()
        };
        let stats = minimize(&prob, &mut u, &solver)?;
        iterations += stats.iterations;
        energy = prob.dirichlet_energy(&u) * mirror.energy_factor();
        prev = Some((prob.grid.clone(), u));
    }
    Ok(CapacityEstimate {
        value: energy,
        method: CapacityMethod::GridVariational,
        h,
        lower: None,
        upper: Some(energy),
        iterations,
    })
}

/// Discrete capacity of a single interior node at pitch h: the smallest nonzero value the
/// lattice can report for any set.
pub fn p_capacity_floor(n: usize, p: f64, h: f64) -> Result<f64> {
    let half = 8.0;
    let k = ParametricSet::new(n, vec![Primitive::Point { at: vec![0.0; n] }])?;
    let omega = Domain::Box { lo: vec![-half; n], hi: vec![half; n] };
    let opts = VariationalOptions { levels: 1, drop_polar: false, ..VariationalOptions::default() };
    let unit = p_capacity(&k, &omega, p, 1.0, &opts)?.value;
    Ok(unit * h.powf(n as f64 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::condenser_capacity;
    use crate::point::Point;

    #[test]
    fn planar_condenser_is_close() {
        let k = ParametricSet::ball(&Point::origin(2), 0.25).unwrap();
        let om = Domain::Ball { center: vec![0.0; 2], radius: 1.0 };
        let c = p_capacity(&k, &om, 2.0, 1.0 / 64.0, &VariationalOptions::default()).unwrap();
        let exact = condenser_capacity(2, 2.0, 0.25, 1.0);
        assert!((c.value / exact - 1.0).abs() < 0.05, "{} vs {exact}", c.value);
    }

    #[test]
    fn polar_sets_vanish() {
        let k = ParametricSet::points(&[Point::origin(3)]).unwrap();
        let om = Domain::Ball { center: vec![0.0; 3], radius: 1.0 };
        let c = p_capacity(&k, &om, 2.5, 0.125, &VariationalOptions::default()).unwrap();
        assert_eq!(c.value, 0.0);
        let floor = p_capacity_floor(3, 2.5, 0.125).unwrap();
        assert!(floor > 0.0 && floor < 1.0);
    }
}
