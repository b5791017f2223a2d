//! Propagation of phase-space vectors under large quadratic Hamiltonians.
//!
//! For H = ½rᵀAr with A positive definite, exp(tΩA) is applied through the
//! Chebyshev–Bessel expansion
//!
//! ```text
//! exp(τB) = J₀(τ) + 2 Σ_{k≥1} J_k(τ) U_k,   U_{k+1} = 2B U_k + U_{k−1},
//! ```
//!
//! with B = ΩA/ω, τ = ωt and ω at least the largest normal-mode frequency.
//! Each term costs one application of A, so the cost is about ωt products.

use super::PhaseSpace;
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;

/// Symmetric operator A of a quadratic Hamiltonian, applied column-wise.
pub trait QuadraticOperator: Sync {
    /// Phase-space layout the operator acts on.
    fn space(&self) -> &PhaseSpace;
    /// A·x for every column of x.
    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// Upper bound on the normal-mode frequencies of ΩA.
    fn frequency_bound(&self) -> f64;
}

/// A linear flow on phase space.
pub trait Propagator {
    /// Apply the flow for `time` to every column of `x`.
    fn propagate(&self, x: &DMatrix<f64>, time: f64) -> Result<DMatrix<f64>>;
    /// Whether the flow is orthogonal, so that ½I is invariant.
    fn preserves_vacuum(&self) -> bool;
}

/// Exact free evolution: each mode rotates at its own frequency.
#[derive(Debug, Clone)]
pub struct FreeRotation {
    space: PhaseSpace,
    /// Frequencies per block, one vector per channel.
    freqs: Vec<Vec<f64>>,
}

impl FreeRotation {
    /// Rotation with frequencies `freqs[b][i]` for mode i of block b.
    pub fn new(space: PhaseSpace, freqs: Vec<Vec<f64>>) -> Result<Self> {
        if freqs.len() != space.blocks.len() || freqs.iter().zip(&space.blocks).any(|(f, n)| f.len() != *n) {
            return Err(invalid("frequency table does not match the phase-space layout"));
        }
        Ok(FreeRotation { space, freqs })
    }
}

impl Propagator for FreeRotation {
    fn propagate(&self, x: &DMatrix<f64>, time: f64) -> Result<DMatrix<f64>> {
        let mut out = x.clone();
        for (b, f) in self.freqs.iter().enumerate() {
            let o = self.space.offset(b);
            let n = f.len();
            for (i, w) in f.iter().enumerate() {
                let (s, c) = (w * time).sin_cos();
                for col in 0..x.ncols() {
                    let q = x[(o + i, col)];
                    let p = x[(o + n + i, col)];
                    out[(o + i, col)] = q * c + p * s;
                    out[(o + n + i, col)] = p * c - q * s;
                }
            }
        }
        Ok(out)
    }

    fn preserves_vacuum(&self) -> bool {
        true
    }
}

/// exp(tΩA) by Chebyshev–Bessel expansion.
pub struct ChebyshevPropagator<'a, G: QuadraticOperator + ?Sized> {
    generator: &'a G,
    omega: f64,
}

impl<'a, G: QuadraticOperator + ?Sized> ChebyshevPropagator<'a, G> {
    /// Propagator using the generator's own frequency bound.
    pub fn new(generator: &'a G) -> Result<Self> {
        let omega = generator.frequency_bound();
        if !(omega.is_finite() && omega > 0.0) {
            return Err(invalid("frequency bound must be positive"));
        }
        Ok(ChebyshevPropagator { generator, omega })
    }

    /// Frequency scale ω of the expansion.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Number of expansion terms used for `time`.
    pub fn terms_for(&self, time: f64) -> usize {
        bessel_j_sequence(self.omega * time.abs()).len()
    }

    fn apply_b(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.generator.space().omega_apply(&self.generator.apply(x)) / self.omega
    }
}

impl<G: QuadraticOperator + ?Sized> Propagator for ChebyshevPropagator<'_, G> {
    fn propagate(&self, x: &DMatrix<f64>, time: f64) -> Result<DMatrix<f64>> {
        if time == 0.0 {
            return Ok(x.clone());
        }
        if time < 0.0 {
            return Err(invalid("Chebyshev propagation is implemented for forward time only"));
        }
        let j = bessel_j_sequence(self.omega * time);
        let mut prev = x.clone();
        let mut cur = self.apply_b(x);
        let mut acc = x * j[0];
        if j.len() > 1 {
            acc += &cur * (2.0 * j[1]);
        }
        let scale = x.amax().max(f64::MIN_POSITIVE);
        for jk in j.iter().skip(2) {
            let mut next = self.apply_b(&cur) * 2.0;
            next += &prev;
            acc += &next * (2.0 * jk);
            prev = cur;
            cur = next;
            if !cur.amax().is_finite() || cur.amax() > 1e8 * scale {
                return Err(Error::Numerical(
                    "Chebyshev recurrence is unstable: the frequency bound is too small".into(),
                ));
            }
        }
        Ok(acc)
    }

    fn preserves_vacuum(&self) -> bool {
        false
    }
}

/// J_0(τ), J_1(τ), …, J_K(τ) by Miller's backward recurrence, truncated
/// where the sequence drops below 10⁻¹⁸.
pub fn bessel_j_sequence(tau: f64) -> Vec<f64> {
    if tau == 0.0 {
        return vec![1.0];
    }
    let start = (tau + 20.0 * tau.cbrt() + 60.0).ceil() as usize;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / tau * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // J₀ + 2ΣJ_{2m} = 1
    let norm: f64 = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for v in j.iter_mut() {
        *v /= norm;
    }
    let mut last = 0;
    for (k, v) in j.iter().enumerate() {
        if v.abs() > 1e-18 {
            last = k;
        }
    }
    j.truncate(last + 1);
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(100.0);
        assert!((j[0] - 0.019_985_850_304_223_12).abs() < 1e-14);
        assert!((j[100] - 0.096_366_673_295_861_55).abs() < 1e-14);
        let j = bessel_j_sequence(2000.0);
        let s: f64 = j[0] * j[0] + 2.0 * j.iter().skip(1).map(|v| v * v).sum::<f64>();
        assert!((s - 1.0).abs() < 1e-12);
    }

    struct Diag {
        space: PhaseSpace,
        k: Vec<f64>,
    }

    impl QuadraticOperator for Diag {
        fn space(&self) -> &PhaseSpace {
            &self.space
        }
        fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
            let n = self.k.len();
            DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| self.k[r % n] * x[(r, c)])
        }
        fn frequency_bound(&self) -> f64 {
            self.k.iter().cloned().fold(0.0, f64::max) * 1.01
        }
    }

    #[test]
    fn chebyshev_reproduces_free_rotation() {
        let k: Vec<f64> = (1..=16).map(|n| 0.7 * n as f64).collect();
        let space = PhaseSpace::new(vec![16]);
        let op = Diag { space: space.clone(), k: k.clone() };
        let cheb = ChebyshevPropagator::new(&op).unwrap();
        let rot = FreeRotation::new(space, vec![k]).unwrap();
        let x = DMatrix::from_fn(32, 2, |r, c| ((r * 3 + c) as f64).sin());
        for t in [0.0, 0.3, 5.0, 40.0] {
            let a = cheb.propagate(&x, t).unwrap();
            let b = rot.propagate(&x, t).unwrap();
            assert!((a - b).amax() < 1e-12, "t = {t}");
        }
    }
}
