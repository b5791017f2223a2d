//! Dense Gaussian states and the exact operations on them.

use super::PhaseSpace;
use crate::error::{ensure_positive, invalid, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

/// Mean vector and covariance matrix over a [`PhaseSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    /// Block layout.
    pub space: PhaseSpace,
    /// Quadrature means.
    pub mean: DVector<f64>,
    /// Symmetrized covariance ½⟨{Δr, Δr}⟩.
    pub cov: DMatrix<f64>,
}

/// Hamiltonian ½rᵀAr + bᵀr.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGenerator {
    /// Symmetric matrix A.
    pub matrix: DMatrix<f64>,
    /// Linear coefficients b.
    pub linear: DVector<f64>,
}

/// Observable c·r + offset.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObservable {
    /// Coefficients over quadratures.
    pub coeffs: DVector<f64>,
    /// Constant offset.
    pub offset: f64,
}

impl LinearObservable {
    /// Observable without offset.
    pub fn new(coeffs: DVector<f64>) -> Self {
        LinearObservable { coeffs, offset: 0.0 }
    }
}

/// How a measurement obtains its outcome.
pub enum Readout<'a> {
    /// Draw the outcome from p(v).
    Sample(&'a mut dyn RngCore),
    /// Condition on this outcome.
    Fixed(f64),
}

/// Outcome of a noisy linear measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord<S> {
    /// Outcome v.
    pub outcome: f64,
    /// p(v) at the outcome.
    pub density: f64,
    /// Mean of p.
    pub outcome_mean: f64,
    /// Variance of p: Var(obs) + noise variance.
    pub outcome_variance: f64,
    /// Conditional post-measurement state.
    pub post_state: S,
}

impl QuadraticGenerator {
    /// Generator without linear terms.
    pub fn quadratic(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        QuadraticGenerator { matrix, linear: DVector::zeros(n) }
    }

    /// Error unless A is square, symmetric and matches b.
    pub fn validate(&self) -> Result<()> {
        let a = &self.matrix;
        if a.nrows() != a.ncols() || a.nrows() != self.linear.len() {
            return Err(invalid("generator matrix must be square and match the linear part"));
        }
        let scale = a.amax().max(1e-300);
        if (a - a.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("generator matrix is not symmetric"));
        }
        Ok(())
    }
}

impl GaussianState {
    /// Vacuum: zero mean, covariance ½I.
    pub fn vacuum(space: PhaseSpace) -> Self {
        let d = space.dim();
        GaussianState {
            space,
            mean: DVector::zeros(d),
            cov: DMatrix::identity(d, d) * 0.5,
        }
    }

    /// Vacuum of two channel bases.
    pub fn vacuum_of(n_s: usize, n_p: usize) -> Self {
        Self::vacuum(PhaseSpace::two_channel(n_s, n_p))
    }

    /// Smallest eigenvalue of cov + iΩ/2 (≥ 0 for a physical state).
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        // the Hermitian matrix X + iY is PSD iff [[X, −Y], [Y, X]] is
        let d = self.space.dim();
        let y = self.space.omega_matrix() * 0.5;
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.cov);
        m.view_mut((d, d), (d, d)).copy_from(&self.cov);
        m.view_mut((0, d), (d, d)).copy_from(&(-&y));
        m.view_mut((d, 0), (d, d)).copy_from(&y);
        SymmetricEigen::new(m).eigenvalues.min()
    }

    /// Error unless the covariance is symmetric and satisfies the
    /// uncertainty relation to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if (&self.cov - self.cov.transpose()).amax() > 1e-10 * self.cov.amax().max(1.0) {
            return Err(invalid("covariance is not symmetric"));
        }
        let e = self.uncertainty_min_eigenvalue();
        if e < -tol {
            return Err(invalid(format!("uncertainty relation violated: min eigenvalue {e}")));
        }
        Ok(())
    }

    /// mean += d.
    pub fn displace(&self, d: &DVector<f64>) -> Self {
        GaussianState { mean: &self.mean + d, ..self.clone() }
    }

    /// Exact evolution for `time` under `gen`.
    pub fn evolve(&self, gen: &QuadraticGenerator, time: f64) -> Result<Self> {
        let (s, shift) = symplectic_matrix(&self.space, gen, time)?;
        Ok(GaussianState {
            space: self.space.clone(),
            mean: &s * &self.mean + shift,
            cov: &s * &self.cov * s.transpose(),
        })
    }

    /// ⟨∫f ϱ⟩-style two-point contraction rowᵀ·cov·row.
    pub fn variance_of(&self, coeffs: &DVector<f64>) -> f64 {
        (coeffs.transpose() * &self.cov * coeffs)[(0, 0)]
    }
}

/// S = exp(tΩA) and the shift generated by the linear term.
pub fn symplectic_matrix(space: &PhaseSpace, gen: &QuadraticGenerator, time: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    gen.validate()?;
    let d = space.dim();
    if gen.matrix.nrows() != d {
        return Err(invalid("generator dimension does not match the phase space"));
    }
    let omega = space.omega_matrix();
    let mut aug = DMatrix::zeros(d + 1, d + 1);
    aug.view_mut((0, 0), (d, d)).copy_from(&(&omega * &gen.matrix * time));
    aug.view_mut((0, d), (d, 1)).copy_from(&(&omega * &gen.linear * time));
    let e = aug.exp();
    let s = e.view((0, 0), (d, d)).into_owned();
    let shift = e.view((0, d), (d, 1)).column(0).into_owned();
    Ok((s, shift))
}

/// max |SᵀΩS − Ω|.
pub fn symplectic_residual(space: &PhaseSpace, s: &DMatrix<f64>) -> f64 {
    let omega = space.omega_matrix();
    (s.transpose() * &omega * s - omega).amax()
}

/// Normal-ordered energy ½Tr[A(cov − ½I)] + ½mᵀAm + bᵀm.
pub fn expect_quadratic(state: &GaussianState, gen: &QuadraticGenerator) -> f64 {
    let d = state.space.dim();
    let excess = &state.cov - DMatrix::identity(d, d) * 0.5;
    0.5 * (&gen.matrix * excess).trace()
        + 0.5 * (state.mean.transpose() * &gen.matrix * &state.mean)[(0, 0)]
        + gen.linear.dot(&state.mean)
}

/// c·mean + offset.
pub fn expect_linear(state: &GaussianState, obs: &LinearObservable) -> f64 {
    obs.coeffs.dot(&state.mean) + obs.offset
}

/// Apply the Gaussian Kraus operator M_v ∝ exp(−(v − O)²/(4σ²)) with
/// σ² = `noise_var`.
///
/// The outcome density is normal with mean ⟨O⟩ and variance Var(O) + σ². The
/// conditional state is the noisy-readout update of mean and covariance
/// followed by the back-action kick (Ωc)(Ωc)ᵀ/(4σ²) along the conjugate
/// direction, which is what M_v acting on both sides of ρ produces.
pub fn measure_linear(
    state: &GaussianState,
    obs: &LinearObservable,
    noise_var: f64,
    readout: Readout<'_>,
) -> Result<MeasurementRecord<GaussianState>> {
    ensure_positive("detector noise variance", noise_var)?;
    let c = &obs.coeffs;
    let sc = &state.cov * c;
    let var_o = c.dot(&sc);
    let mean_o = expect_linear(state, obs);
    let s2 = var_o + noise_var;
    let v = match readout {
        Readout::Fixed(v) => v,
        Readout::Sample(rng) => mean_o + s2.sqrt() * rng.sample::<f64, _>(StandardNormal),
    };
    let density = gaussian_density(v, mean_o, s2);
    let oc = state.space.omega_vec(c);
    let mean = &state.mean + &sc * ((v - mean_o) / s2);
    let cov = &state.cov - &sc * sc.transpose() / s2 + &oc * oc.transpose() / (4.0 * noise_var);
    Ok(MeasurementRecord {
        outcome: v,
        density,
        outcome_mean: mean_o,
        outcome_variance: s2,
        post_state: GaussianState { space: state.space.clone(), mean, cov },
    })
}

pub(crate) fn gaussian_density(v: f64, mean: f64, var: f64) -> f64 {
    (-(v - mean) * (v - mean) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}
