//! Gaussian states of the truncated S ⊕ P mode basis.
//!
//! A phase-space vector is a concatenation of channel blocks, each laid out
//! as [q_1..q_n, p_1..p_n]. The symplectic form acts blockwise as
//! Ω(q, p) = (p, −q), so a Hamiltonian ½rᵀAr + bᵀr generates
//! ṙ = ΩAr + Ωb. Vacuum covariance is ½I.
//!
//! Two state representations are provided. [`GaussianState`] stores a dense
//! covariance and is exact for any sequence of operations on small bases.
//! [`ExcitedVacuum`] stores the covariance as ½I plus a short list of rank-one
//! terms, which is what a displacement and one measurement on the vacuum
//! produce; evolving it costs a few matrix-vector products per step, so the
//! oracle can use thousands of modes.

mod dense;
mod propagate;
mod structured;

pub use dense::{
    expect_linear, expect_quadratic, measure_linear, symplectic_matrix, symplectic_residual, GaussianState,
    LinearObservable, MeasurementRecord, QuadraticGenerator, Readout,
};
pub use propagate::{bessel_j_sequence, ChebyshevPropagator, FreeRotation, Propagator, QuadraticOperator};
pub use structured::ExcitedVacuum;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Block layout of the joint phase space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSpace {
    /// Number of modes in each channel block.
    pub blocks: Vec<usize>,
}

impl PhaseSpace {
    /// Layout with the given modes per channel.
    pub fn new(blocks: Vec<usize>) -> Self {
        PhaseSpace { blocks }
    }

    /// Two channels with `n_s` and `n_p` modes.
    pub fn two_channel(n_s: usize, n_p: usize) -> Self {
        PhaseSpace { blocks: vec![n_s, n_p] }
    }

    /// Total phase-space dimension.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| 2 * n).sum()
    }

    /// Offset of channel block `b`.
    pub fn offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|n| 2 * n).sum()
    }

    /// Embed a block-local vector (length 2n) into a full zero vector.
    pub fn embed(&self, block: usize, local: &[f64]) -> DVector<f64> {
        assert_eq!(local.len(), 2 * self.blocks[block]);
        let mut v = DVector::zeros(self.dim());
        let o = self.offset(block);
        v.rows_mut(o, local.len()).copy_from_slice(local);
        v
    }

    /// Ω applied to every column of `x`.
    pub fn omega_apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        let mut o = 0;
        for &n in &self.blocks {
            for c in 0..x.ncols() {
                for i in 0..n {
                    out[(o + i, c)] = x[(o + n + i, c)];
                    out[(o + n + i, c)] = -x[(o + i, c)];
                }
            }
            o += 2 * n;
        }
        out
    }

    /// Ω applied to a vector.
    pub fn omega_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.omega_apply(&DMatrix::from_column_slice(x.len(), 1, x.as_slice()));
        DVector::from_column_slice(m.as_slice())
    }

    /// Dense Ω.
    pub fn omega_matrix(&self) -> DMatrix<f64> {
        self.omega_apply(&DMatrix::identity(self.dim(), self.dim()))
    }
}
