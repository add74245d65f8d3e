//! Optimized Riemannian metrics for discrete-time dynamical systems.
//!
//! Metrics of the form P(x) = e^{r_a(x)} p are parameterized by a point
//! (a, p) of the Hadamard manifold ℝᴺ × SPD(n). A projected inexact
//! subgradient method on that manifold minimizes singular value functions of
//! the system's derivative, which yields certified upper bounds on the
//! Lyapunov dimension and the restoration entropy of a trapping region.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod objective;
pub mod poly;
pub mod product;
pub mod random;
pub mod solver;
pub mod spd;
pub mod system;

pub use error::{Error, Result};
