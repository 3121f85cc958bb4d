//! Uniform node lattices over axis-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() < 2 {
            return invalid("box corners must share a dimension n >= 2");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return invalid("box must satisfy lo < hi componentwise");
        }
        Ok(BoxDomain { lo, hi })
    }

    pub fn cube(n: usize, half: f64) -> Self {
        BoxDomain { lo: vec![-half; n], hi: vec![half; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn diameter(&self) -> f64 {
        crate::point::dist(&self.lo, &self.hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Node lattice with pitch `h` over a box; cells are the `2ⁿ`-node hypercubes.
///
/// Nodes are indexed row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    lo: Vec<f64>,
    h: f64,
    cells: Vec<usize>,
}

impl EvaluationGrid {
    /// Grid over `domain` with pitch `h`; `h` must divide every side length.
    pub fn new(domain: &BoxDomain, h: f64) -> Result<Self> {
        let n = domain.dim();
        if !(2..=4).contains(&n) {
            return invalid(format!("grids support n in {{2,3,4}}, got {n}"));
        }
        if !(h > 0.0) {
            return invalid("grid pitch must be positive");
        }
        let mut cells = Vec::with_capacity(n);
        for d in 0..n {
            let len = domain.hi[d] - domain.lo[d];
            let c = (len / h).round();
            if c < 1.0 || ((c * h - len).abs() > 1e-9 * len.max(1.0)) {
                return invalid(format!("pitch {h} does not divide side {len} on axis {d}"));
            }
            cells.push(c as usize);
        }
        Ok(EvaluationGrid { lo: domain.lo.clone(), h, cells })
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn pitch(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn domain(&self) -> BoxDomain {
        let hi = self.lo.iter().zip(&self.cells).map(|(a, c)| a + *c as f64 * self.h).collect();
        BoxDomain { lo: self.lo.clone(), hi }
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells
    }

    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.cells.iter().map(|c| c + 1).product()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Linear-index strides for the node array.
    pub fn node_strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut s = vec![1; n];
        for d in (0..n - 1).rev() {
            s[d] = s[d + 1] * (self.cells[d + 1] + 1);
        }
        s
    }

    pub fn node_multi_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.dim();
        let mut m = vec![0; n];
        for d in (0..n).rev() {
            let k = self.cells[d] + 1;
            m[d] = idx % k;
            idx /= k;
        }
        m
    }

    pub fn node_coords(&self, idx: usize) -> Vec<f64> {
        self.node_multi_index(idx)
            .iter()
            .zip(&self.lo)
            .map(|(i, a)| a + *i as f64 * self.h)
            .collect()
    }

    pub fn cell_multi_index(&self, mut idx: usize) -> Vec<usize> {
        let n = self.dim();
        let mut m = vec![0; n];
        for d in (0..n).rev() {
            m[d] = idx % self.cells[d];
            idx /= self.cells[d];
        }
        m
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        self.cell_multi_index(idx)
            .iter()
            .zip(&self.lo)
            .map(|(i, a)| a + (*i as f64 + 0.5) * self.h)
            .collect()
    }

    /// Node index of the cell's lower corner.
    pub fn cell_base_node(&self, cell: usize) -> usize {
        let strides = self.node_strides();
        self.cell_multi_index(cell).iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    /// Cell containing `x` (points on shared faces go to the upper cell, clamped at the box edge).
    pub fn locate_cell(&self, x: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        let n = self.dim();
        let mut idx = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for d in 0..n {
            let t = (x[d] - self.lo[d]) / self.h;
            if t < -1e-9 || t > self.cells[d] as f64 + 1e-9 {
                return None;
            }
            let i = (t.floor().max(0.0) as usize).min(self.cells[d] - 1);
            idx.push(i);
            frac.push((t - i as f64).clamp(0.0, 1.0));
        }
        Some((idx, frac))
    }

    /// Multilinear interpolation of node `values` at `x`; `None` outside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        let (idx, frac) = self.locate_cell(x)?;
        let strides = self.node_strides();
        let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let n = self.dim();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for d in 0..n {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    off += strides[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * values[base + off];
            }
        }
        Some(acc)
    }

    /// Spreads a point mass onto the corner nodes of its cell with multilinear weights,
    /// so that Σ load·u equals the mass times the interpolant of u at `x`.
    pub fn deposit(&self, load: &mut [f64], x: &[f64], mass: f64) -> bool {
        let Some((idx, frac)) = self.locate_cell(x) else { return false };
        let strides = self.node_strides();
        let base: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        let n = self.dim();
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut off = 0;
            for d in 0..n {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    off += strides[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            load[base + off] += w * mass;
        }
        true
    }

    /// The same box refined by a factor of two.
    pub fn refined(&self) -> Self {
        EvaluationGrid {
            lo: self.lo.clone(),
            h: self.h / 2.0,
            cells: self.cells.iter().map(|c| 2 * c).collect(),
        }
    }

    /// True for nodes on the faces of the box, except faces listed as mirror planes.
    pub fn on_boundary(&self, idx: usize, mirror: &Mirror) -> bool {
        self.node_multi_index(idx).iter().enumerate().any(|(d, &i)| {
            (i == 0 && !mirror.axis(d)) || i == self.cells[d]
        })
    }
}

/// Reflection symmetry of a grid problem about the coordinate planes through `lo`.
///
/// A mirrored axis must start at 0; the lattice then covers one half of a problem that is
/// even in that coordinate and the planes carry natural (reflecting) conditions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mirror(pub Vec<bool>);

impl Mirror {
    pub fn none(n: usize) -> Self {
        Mirror(vec![false; n])
    }

    pub fn all(n: usize) -> Self {
        Mirror(vec![true; n])
    }

    pub fn axis(&self, d: usize) -> bool {
        self.0.get(d).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    /// Factor converting a half-lattice energy into the full-problem energy.
    pub fn energy_factor(&self) -> f64 {
        (1u64 << self.count()) as f64
    }

    /// Share of a full-problem nodal load that the half lattice keeps at a node: 2^{-k}
    /// with k the number of mirror planes the node lies on.
    pub fn load_weight(&self, grid: &EvaluationGrid, idx: usize) -> f64 {
        let m = grid.node_multi_index(idx);
        let k = (0..m.len()).filter(|&d| self.axis(d) && m[d] == 0).count();
        1.0 / (1u64 << k) as f64
    }

    pub fn validate(&self, grid: &EvaluationGrid) -> Result<()> {
        if self.0.len() != grid.dim() {
            return invalid("mirror mask dimension mismatch");
        }
        for d in 0..grid.dim() {
            if self.axis(d) && grid.lo()[d].abs() > 1e-12 {
                return invalid(format!("mirrored axis {d} must start at 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid() -> EvaluationGrid {
        EvaluationGrid::new(&BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn pitch_must_divide_box() {
        let b = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(EvaluationGrid::new(&b, 0.3).is_err());
        assert!(EvaluationGrid::new(&b, 0.25).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let g = unit_grid();
        assert_eq!(g.node_count(), 5 * 9);
        for idx in 0..g.node_count() {
            let m = g.node_multi_index(idx);
            let back: usize = m.iter().zip(g.node_strides()).map(|(i, s)| i * s).sum();
            assert_eq!(back, idx);
        }
        assert_eq!(g.node_coords(g.node_count() - 1), vec![1.0, 2.0]);
        assert_eq!(g.cell_center(0), vec![0.125, 0.125]);
    }

    #[test]
    fn interpolation_reproduces_affine_functions() {
        let g = unit_grid();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - 0.5 * x[1];
        let vals: Vec<f64> = (0..g.node_count()).map(|i| f(&g.node_coords(i))).collect();
        for x in [[0.1, 0.3], [0.99, 1.7], [1.0, 2.0], [0.0, 0.0]] {
            assert!((g.interpolate(&vals, &x).unwrap() - f(&x)).abs() < 1e-12);
        }
        assert!(g.interpolate(&vals, &[1.5, 0.0]).is_none());
    }

    #[test]
    fn deposit_conserves_mass() {
        let g = unit_grid();
        let mut load = vec![0.0; g.node_count()];
        g.deposit(&mut load, &[0.3, 1.1], 2.0);
        assert!((load.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mirror_weights() {
        let g = unit_grid();
        let m = Mirror::all(2);
        assert_eq!(m.load_weight(&g, 0), 0.25);
        assert_eq!(m.load_weight(&g, 1), 0.5);
        assert!(!g.on_boundary(0, &m));
        assert!(g.on_boundary(0, &Mirror::none(2)));
    }
}
