use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of ℝⁿ, n ≥ 2, with finite coordinates.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return invalid(format!("points need n >= 2 coordinates, got {}", coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("point coordinates must be finite");
        }
        Ok(Point(coords))
    }

    pub fn origin(n: usize) -> Self {
        assert!(n >= 2, "dimension must be at least 2");
        Point(vec![0.0; n])
    }

    /// `scale · e_axis`.
    pub fn on_axis(n: usize, axis: usize, scale: f64) -> Self {
        let mut p = Self::origin(n);
        p.0[axis] = scale;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `self + t · v`.
    pub fn offset(&self, v: &[f64], t: f64) -> Point {
        Point(self.0.iter().zip(v).map(|(a, b)| a + t * b).collect())
    }

    pub fn scaled(&self, lambda: f64) -> Point {
        Point(self.0.iter().map(|c| c * lambda).collect())
    }

    pub fn sub(&self, other: &Point) -> Vec<f64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, expected {n}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalizes `v` in place; returns false when `v` is (numerically) zero.
pub fn normalize(v: &mut [f64]) -> bool {
    let r = norm(v);
    if r <= f64::MIN_POSITIVE {
        return false;
    }
    v.iter_mut().for_each(|c| *c /= r);
    true
}
