//! Low-rank Gaussian states: vacuum plus a few rank-one covariance terms.

use super::dense::{gaussian_density, GaussianState, LinearObservable, MeasurementRecord, Readout};
use super::{PhaseSpace, Propagator};
use crate::error::{ensure_positive, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Gaussian state with covariance ½V + Σ c_i u_i u_iᵀ.
///
/// V is the identity until the state is evolved by a non-orthogonal flow;
/// after that V = SSᵀ is not tracked and only quantities relative to the
/// equally evolved vacuum ("excess" expectations) are available.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitedVacuum {
    /// Block layout.
    pub space: PhaseSpace,
    /// Quadrature means.
    pub mean: DVector<f64>,
    /// Rank-one covariance terms (c_i, u_i).
    pub excitations: Vec<(f64, DVector<f64>)>,
    vacuum_intact: bool,
}

impl ExcitedVacuum {
    /// The vacuum.
    pub fn vacuum(space: PhaseSpace) -> Self {
        let d = space.dim();
        ExcitedVacuum { space, mean: DVector::zeros(d), excitations: Vec::new(), vacuum_intact: true }
    }

    /// Whether the vacuum part is still exactly ½I.
    pub fn vacuum_intact(&self) -> bool {
        self.vacuum_intact
    }

    /// mean += d.
    pub fn displace(&self, d: &DVector<f64>) -> Self {
        ExcitedVacuum { mean: &self.mean + d, ..self.clone() }
    }

    /// Σ·c for the tracked covariance.
    fn cov_times(&self, c: &DVector<f64>) -> DVector<f64> {
        let mut out = c * 0.5;
        for (w, u) in &self.excitations {
            out += u * (w * u.dot(c));
        }
        out
    }

    /// Kraus measurement as in [`super::measure_linear`]. Requires an intact
    /// vacuum part so the covariance is fully known.
    pub fn measure_linear(
        &self,
        obs: &LinearObservable,
        noise_var: f64,
        readout: Readout<'_>,
    ) -> Result<MeasurementRecord<ExcitedVacuum>> {
        ensure_positive("detector noise variance", noise_var)?;
        if !self.vacuum_intact {
            return Err(Error::InvalidInput(
                "measurement on a low-rank state requires the untouched vacuum part".into(),
            ));
        }
        let c = &obs.coeffs;
        let sc = self.cov_times(c);
        let var_o = c.dot(&sc);
        let mean_o = c.dot(&self.mean) + obs.offset;
        let s2 = var_o + noise_var;
        let v = match readout {
            Readout::Fixed(v) => v,
            Readout::Sample(rng) => mean_o + s2.sqrt() * rng.sample::<f64, _>(StandardNormal),
        };
        let mut post = self.clone();
        post.mean += &sc * ((v - mean_o) / s2);
        post.excitations.push((-1.0 / s2, sc));
        post.excitations.push((1.0 / (4.0 * noise_var), self.space.omega_vec(c)));
        Ok(MeasurementRecord {
            outcome: v,
            density: gaussian_density(v, mean_o, s2),
            outcome_mean: mean_o,
            outcome_variance: s2,
            post_state: post,
        })
    }

    /// Evolve mean and excitation vectors with `prop`.
    pub fn evolve(&self, prop: &dyn Propagator, time: f64) -> Result<Self> {
        let d = self.space.dim();
        let m = 1 + self.excitations.len();
        let mut x = DMatrix::zeros(d, m);
        x.set_column(0, &self.mean);
        for (i, (_, u)) in self.excitations.iter().enumerate() {
            x.set_column(i + 1, u);
        }
        let y = prop.propagate(&x, time)?;
        Ok(ExcitedVacuum {
            space: self.space.clone(),
            mean: y.column(0).into_owned(),
            excitations: self
                .excitations
                .iter()
                .enumerate()
                .map(|(i, (w, _))| (*w, y.column(i + 1).into_owned()))
                .collect(),
            vacuum_intact: self.vacuum_intact && prop.preserves_vacuum(),
        })
    }

    /// Excess expectation of the quadratic form ½rᵀAr, given the bilinear
    /// form `b(x, y) = ½xᵀAy`: b(m, m) + Σ c_i b(u_i, u_i).
    pub fn excess_quadratic(&self, b: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64) -> f64 {
        b(&self.mean, &self.mean) + self.excitations.iter().map(|(w, u)| w * b(u, u)).sum::<f64>()
    }

    /// Dense equivalent when the vacuum part is intact.
    pub fn to_dense(&self) -> Result<GaussianState> {
        if !self.vacuum_intact {
            return Err(Error::InvalidInput("vacuum part is no longer ½I".into()));
        }
        let d = self.space.dim();
        let mut cov = DMatrix::identity(d, d) * 0.5;
        for (w, u) in &self.excitations {
            cov += u * u.transpose() * *w;
        }
        Ok(GaussianState { space: self.space.clone(), mean: self.mean.clone(), cov })
    }
}
