//! Numerical potential theory: Riesz and Wolff potentials, Riesz and p-capacities,
//! dyadic-annuli thinness diagnostics, p-Laplace singular solutions and the eigenvalue
//! cones that feed fully nonlinear singular asymptotics.

pub mod asymptotic;
pub mod capacity;
pub mod cones;
pub mod density;
pub mod error;
pub mod grid;
pub mod measures;
pub mod penergy;
pub mod plaplace;
pub mod point;
pub mod quadrature;
pub mod riesz;
pub mod sets;
pub mod thinness;
pub mod wolff;

pub use error::{Error, Result};
pub use grid::{BoxDomain, EvaluationGrid, Mirror};
pub use point::Point;
