//! Adaptive quadrature, Gauss–Legendre rules, power-law fits and convergence
//! studies.
//!
//! One-dimensional integrals use an adaptive Gauss–Kronrod (7, 15) pair with
//! the QUADPACK error heuristic. Integrals in two to four dimensions use the
//! degree-7/degree-5 Genz–Malik embedded cubature pair with largest-error-first
//! bisection along the axis of largest fourth difference. All refinement is
//! sequential and ties in the priority queue are broken by insertion order, so
//! results are bitwise reproducible.

mod convergence;
mod cubature;
mod fit;
mod gk;
mod legendre;

pub use convergence::{analyze_sequence, convergence_study, ConvergenceReport};
pub use cubature::genz_malik;
pub use fit::{loglog_fit, FitResult};
pub use gk::{integrate_1d, Kronrod15};
pub use legendre::{gauss_legendre, gauss_legendre_on};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Integration request: a box domain, tolerances and an evaluation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Lower corner of the box.
    pub lower: Vec<f64>,
    /// Upper corner of the box.
    pub upper: Vec<f64>,
    /// Relative tolerance on the total.
    pub rel_tol: f64,
    /// Absolute tolerance on the total.
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
}

impl QuadSpec {
    /// Box spec with default tolerances (relative 1e-8, absolute 1e-14) and a
    /// budget of 10⁶ evaluations.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        QuadSpec {
            lower,
            upper,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_evals: 1_000_000,
        }
    }

    /// Replace the tolerances.
    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    /// Replace the evaluation budget.
    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    /// Number of dimensions.
    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    /// Check the spec invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.lower.len();
        if !(1..=4).contains(&n) || self.upper.len() != n {
            return Err(invalid(format!(
                "quadrature dimension must be 1..=4 with matching bounds, got {} and {}",
                n,
                self.upper.len()
            )));
        }
        for (a, b) in self.lower.iter().zip(&self.upper) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(invalid(format!("invalid integration interval [{a}, {b}]")));
            }
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(invalid("quadrature tolerances must be positive"));
        }
        if self.max_evals < 1000 {
            return Err(invalid("max_evals must be at least 1000"));
        }
        Ok(())
    }
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    /// Integral estimate.
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    /// Integrand evaluations spent.
    pub evals: usize,
    /// Whether the tolerance was met within the budget.
    pub converged: bool,
}

/// Integrate `f` over the box in `spec`.
///
/// If the budget runs out the best estimate is returned with
/// `converged = false`.
pub fn integrate<F: Fn(&[f64]) -> f64>(f: F, spec: &QuadSpec) -> Result<QuadResult> {
    spec.validate()?;
    if spec.dimension() == 1 {
        let g = |x: f64| f(&[x]);
        Ok(integrate_1d(
            &g,
            spec.lower[0],
            spec.upper[0],
            &[],
            spec.rel_tol,
            spec.abs_tol,
            spec.max_evals,
        ))
    } else {
        Ok(genz_malik(&f, spec))
    }
}

/// Heap key ordering cells by error, ties broken by insertion order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Priority {
    pub error: f64,
    pub id: u64,
}

impl PartialEq for Priority {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Priority {}
impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Priority {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum
    }
}
