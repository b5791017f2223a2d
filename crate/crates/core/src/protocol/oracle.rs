//! Exact Gaussian-state simulation of the protocol in a truncated mode basis.
//!
//! Both channels are expanded in N modes of a periodic box. The coupled
//! Hamiltonian is H = H_S + H_B + η·H_int with
//! H_int = κ Σ_ij w_i w_j f(x_i, y_j) ϱ_S(x_i) ϱ_P(y_j) on Gauss–Legendre
//! nodes across region B.
//!
//! After the measurement with outcome v and the feedback with drive v_P, the
//! state has mean v·a_S + v_P·m_P and covariance
//! ½I − a u_wu_wᵀ + b u_uu_uᵀ, with a and b independent of v. The flow is
//! linear, so evolving the four vectors a_S, m_P, u_u and u_w once gives
//! every shot's energies as quadratic forms in (v, v_P). Expectations are
//! taken relative to the vacuum evolved under the same flow, which removes
//! the energy of switching the coupling on in the ground state of H_S + H_B.

use super::params::{OracleConfig, PhysicalParams};
use crate::detector::{block_energy_form, charge_observable};
use crate::error::{Error, Result};
use crate::feedback::unit_displacement;
use crate::field::{point_row, ModeBasis};
use crate::gaussian_engine::{
    ChebyshevPropagator, ExcitedVacuum, FreeRotation, LinearObservable, PhaseSpace, Propagator,
    QuadraticOperator, Readout,
};
use crate::quadrature::gauss_legendre_on;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// H_S + H_B + η·H_int on the two-channel mode space.
pub struct ModeHamiltonian {
    space: PhaseSpace,
    momenta: Vec<f64>,
    /// Rows ϱ_S(x_i), M × 2N.
    phi_s: DMatrix<f64>,
    /// Rows ϱ_P(y_j), M × 2N.
    phi_p: DMatrix<f64>,
    /// κ w_i w_j f(x_i, y_j).
    kernel: DMatrix<f64>,
    eta: f64,
    mu: f64,
}

impl ModeHamiltonian {
    /// Build the Hamiltonian for `params` in `basis` with coupling scale `eta`.
    pub fn new(params: &PhysicalParams, basis: &ModeBasis, b_points: usize, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(crate::error::invalid("coupling scale η must be finite and non-negative"));
        }
        let n = basis.n_modes;
        let space = PhaseSpace::two_channel(n, n);
        let coupling = params.coupling()?;
        basis.require_inside("region B", coupling.b_lo, coupling.b_hi)?;
        let (nodes, weights) = gauss_legendre_on(coupling.b_lo, coupling.b_hi, b_points);
        let s = params.channel_s()?;
        let p = params.channel_p()?;
        let m = nodes.len();
        let mut phi_s = DMatrix::zeros(m, 2 * n);
        let mut phi_p = DMatrix::zeros(m, 2 * n);
        for (i, &x) in nodes.iter().enumerate() {
            phi_s.row_mut(i).copy_from_slice(&point_row(basis, &s, x, false));
            phi_p.row_mut(i).copy_from_slice(&point_row(basis, &p, x, false));
        }
        let kappa = params.units()?.coulomb_coupling(params.eps_rel);
        let kernel = DMatrix::from_fn(m, m, |i, j| {
            let dx = nodes[i] - nodes[j];
            kappa * weights[i] * weights[j] / (dx * dx + coupling.d * coupling.d).sqrt()
        });
        let momenta = basis.momenta();
        let mu = coupling_radius(&phi_s, &phi_p, &kernel, &momenta);
        if eta * mu >= 1.0 {
            return Err(Error::Numerical(format!(
                "the coupled Hamiltonian is not positive definite: η·μ = {:.3} ≥ 1 (μ = {mu:.3})",
                eta * mu
            )));
        }
        Ok(ModeHamiltonian { space, momenta, phi_s, phi_p, kernel, eta, mu })
    }

    /// Spectral radius μ of A₀^{-1/2}A_int A₀^{-1/2}; the coupled Hamiltonian
    /// is positive definite iff η·μ < 1.
    pub fn coupling_radius(&self) -> f64 {
        self.mu
    }

    /// Coupling scale η.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Mode momenta k_n.
    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    /// ⟨H_int⟩ bilinear form ½xᵀA_int y (without η).
    pub fn interaction_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let n2 = 2 * self.momenta.len();
        let sx = &self.phi_s * x.rows(0, n2);
        let px = &self.phi_p * x.rows(n2, n2);
        let sy = &self.phi_s * y.rows(0, n2);
        let py = &self.phi_p * y.rows(n2, n2);
        0.5 * (sx.dot(&(&self.kernel * py)) + sy.dot(&(&self.kernel * px)))
    }
}

/// κ·σ_max(G_S^{1/2} F G_P^{1/2}) with G = Φ A₀⁻¹ Φᵀ, which equals the
/// largest singular value of the S–P block of A₀^{-1/2}A_int A₀^{-1/2}.
fn coupling_radius(phi_s: &DMatrix<f64>, phi_p: &DMatrix<f64>, kernel: &DMatrix<f64>, k: &[f64]) -> f64 {
    let n = k.len();
    let scaled = |phi: &DMatrix<f64>| {
        let mut x = phi.clone();
        for c in 0..2 * n {
            let f = 1.0 / k[c % n].sqrt();
            x.column_mut(c).scale_mut(f);
        }
        x
    };
    let xs = scaled(phi_s);
    let xp = scaled(phi_p);
    let root = |g: DMatrix<f64>| {
        let e = SymmetricEigen::new(g);
        let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| v.max(0.0).sqrt()));
        &e.eigenvectors * d * e.eigenvectors.transpose()
    };
    let gs = root(&xs * xs.transpose());
    let gp = root(&xp * xp.transpose());
    let c = gs * kernel * gp;
    c.singular_values().max()
}

impl QuadraticOperator for ModeHamiltonian {
    fn space(&self) -> &PhaseSpace {
        &self.space
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.momenta.len();
        let mut out = x.clone();
        for (i, k) in self.momenta.iter().enumerate() {
            for b in 0..4 {
                out.row_mut(b * n + i).scale_mut(*k);
            }
        }
        if self.eta != 0.0 {
            let xs = x.rows(0, 2 * n);
            let xp = x.rows(2 * n, 2 * n);
            let rs = &self.phi_s * xs;
            let rp = &self.phi_p * xp;
            let gs = (&self.kernel * rp) * self.eta;
            let gp = self.kernel.tr_mul(&rs) * self.eta;
            let mut top = out.rows_mut(0, 2 * n);
            top += self.phi_s.tr_mul(&gs);
            let mut bottom = out.rows_mut(2 * n, 2 * n);
            bottom += self.phi_p.tr_mul(&gp);
        }
        out
    }

    fn frequency_bound(&self) -> f64 {
        let kmax = self.momenta.last().copied().unwrap_or(0.0);
        kmax * (1.0 + self.eta * self.mu) * (1.0 + 1e-9)
    }
}

/// Energies per unit drive, from one evolution of the basis vectors.
///
/// With outcome v and packet drive v_P (natural voltage units) a shot has
/// E_A = v²·ea_vv + ea_const, E_1 = v_P²·e1_pp and
/// E_B = v²·x_aa + 2v·v_P·x_ap + v_P²·x_pp + x_cov.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotCoefficients {
    /// H_S(a_S, a_S) just after the measurement.
    pub ea_vv: f64,
    /// Covariance part of E_A.
    pub ea_const: f64,
    /// H_P(m_P, m_P).
    pub e1_pp: f64,
    /// Interaction-induced change of H_B, a_S–a_S.
    pub x_aa: f64,
    /// Interaction-induced change of H_B, a_S–m_P.
    pub x_ap: f64,
    /// Interaction-induced change of H_B, m_P–m_P.
    pub x_pp: f64,
    /// Interaction-induced change of H_B from the covariance terms.
    pub x_cov: f64,
    /// Variance σ_v² of the outcome, natural voltage².
    pub outcome_variance: f64,
}

impl ShotCoefficients {
    /// E_A for outcome v.
    pub fn e_a(&self, v: f64) -> f64 {
        v * v * self.ea_vv + self.ea_const
    }

    /// E_1 for drive v_P.
    pub fn e_1(&self, vp: f64) -> f64 {
        vp * vp * self.e1_pp
    }

    /// E_B for outcome v and drive v_P.
    pub fn e_b(&self, v: f64, vp: f64) -> f64 {
        v * v * self.x_aa + 2.0 * v * vp * self.x_ap + vp * vp * self.x_pp + self.x_cov
    }
}

/// Second moments of (v, v_P) over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveMoments {
    /// ⟨v²⟩.
    pub vv: f64,
    /// ⟨v·v_P⟩.
    pub vp: f64,
    /// ⟨v_P²⟩.
    pub pp: f64,
}

impl DriveMoments {
    /// QET arm: v_P = v + n with independent zero-mean noise of variance `noise_var`.
    pub fn qet(outcome_variance: f64, noise_var: f64) -> Self {
        DriveMoments { vv: outcome_variance, vp: outcome_variance, pp: outcome_variance + noise_var }
    }

    /// Control arm: v_P drawn independently with the same law as v.
    pub fn control(outcome_variance: f64, noise_var: f64) -> Self {
        DriveMoments { vv: outcome_variance, vp: 0.0, pp: outcome_variance + noise_var }
    }

    /// No feedback at all.
    pub fn measurement_only(outcome_variance: f64) -> Self {
        DriveMoments { vv: outcome_variance, vp: 0.0, pp: 0.0 }
    }
}

/// Energy bookkeeping of the whole evolution for one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationAudit {
    /// Change of excess ⟨H_S⟩ during the coupled evolution.
    pub delta_h_s: f64,
    /// Change of excess ⟨H_B⟩ during the coupled evolution.
    pub delta_h_b: f64,
    /// Change of excess η⟨H_int⟩ during the coupled evolution.
    pub delta_h_int: f64,
    /// |ΔH_S + ΔH_B + ηΔH_int| / (E_A + E_1).
    pub relative_residual: f64,
    /// Ensemble E_A.
    pub e_a: f64,
    /// Ensemble E_B.
    pub e_b: f64,
    /// Average excess ε_S over region B after transit.
    pub eps_s_region_total: f64,
    /// Part of that average caused by the interaction.
    pub eps_s_region_interaction: f64,
}

/// Evolved basis vectors and all quadratic forms the protocol needs.
pub struct OracleModel {
    /// Physical inputs.
    pub params: PhysicalParams,
    /// Basis sizes.
    pub config: OracleConfig,
    /// Coupling scale η.
    pub eta: f64,
    /// Mode basis.
    pub basis: ModeBasis,
    /// Per-shot coefficients.
    pub coefficients: ShotCoefficients,
    /// Coupling spectral radius μ.
    pub coupling_radius: f64,
    /// Number of Chebyshev terms used.
    pub chebyshev_terms: usize,
    /// Back-action weight 1/(4ΔV²) and conditioning weight 1/σ_v².
    weights: (f64, f64),
    /// Columns a_S, m_P, u_u, u_w at injection time T.
    start: DMatrix<f64>,
    /// Same columns after the coupled evolution.
    end: DMatrix<f64>,
    /// Same columns after free evolution.
    end_free: DMatrix<f64>,
    hamiltonian: ModeHamiltonian,
    eps_rows: DMatrix<f64>,
}

const COL_A: usize = 0;
const COL_P: usize = 1;
const COL_U: usize = 2;
const COL_W: usize = 3;

impl OracleModel {
    /// Run the measurement, the feedback and the coupled evolution.
    pub fn build(params: &PhysicalParams, config: &OracleConfig, eta: f64) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        let basis = ModeBasis::new(config.box_length, config.n_modes, params.uv_cutoff / params.length_unit)?;
        let n = basis.n_modes;
        let space = PhaseSpace::two_channel(n, n);
        let ch_s = params.channel_s()?;
        let ch_p = params.channel_p()?;
        let det = params.detector()?;
        let fb = params.feedback()?;
        let dv = det.delta_v_natural();
        let l = params.distance_natural();
        let t_inj = params.vgt_fraction * l;
        let w_ext = det.window.default_extent();
        basis.require_inside("detector window", w_ext.0, w_ext.1)?;

        // measurement at t = 0 with unit outcome: the mean shift is linear in v
        let local = charge_observable(&det, &basis, &ch_s)?;
        let obs = LinearObservable::new(space.embed(0, &local));
        let rec = ExcitedVacuum::vacuum(space.clone()).measure_linear(&obs, dv * dv, Readout::Fixed(1.0))?;
        let s2 = rec.outcome_variance;
        let post = rec.post_state;
        let (cw, w_vec) = post.excitations[0].clone();
        let (cu, u_vec) = post.excitations[1].clone();

        let freqs = vec![basis.momenta(), basis.momenta()];
        let free = FreeRotation::new(space.clone(), freqs)?;
        let mut cols = DMatrix::zeros(space.dim(), 4);
        cols.set_column(COL_A, &post.mean);
        cols.set_column(COL_U, &u_vec);
        cols.set_column(COL_W, &w_vec);
        let mut start = free.propagate(&cols, t_inj)?;
        // packet launched at T, already on [b₋ − L, b₊ − L]
        let m_p = space.embed(1, &unit_displacement(&fb, dv, &basis, &ch_p)?);
        start.set_column(COL_P, &m_p);

        let ks = basis.momenta();
        let h_s = block_energy_form(&space, 0, &ks);
        let h_p = block_energy_form(&space, 1, &ks);
        let col = |m: &DMatrix<f64>, i: usize| m.column(i).into_owned();
        let ea_vv = h_s(&col(&cols, COL_A), &col(&cols, COL_A));
        let ea_const = cu * h_s(&u_vec, &u_vec) + cw * h_s(&w_vec, &w_vec);
        let e1_pp = h_p(&m_p, &m_p);

        let traverse = 2.0 * l;
        let ham = ModeHamiltonian::new(params, &basis, config.b_points, eta)?;
        let cheb = ChebyshevPropagator::new(&ham)?;
        let chebyshev_terms = cheb.terms_for(traverse);
        let end = cheb.propagate(&start, traverse)?;
        let end_free = free.propagate(&start, traverse)?;

        let coupling = params.coupling()?;
        let (xs, ws) = gauss_legendre_on(coupling.b_lo, coupling.b_hi, 2 * config.b_points);
        let mut eps_rows = DMatrix::zeros(xs.len(), 2 * n);
        let pref = PI / params.nu_s / (coupling.b_hi - coupling.b_lo);
        for (i, &x) in xs.iter().enumerate() {
            let row = point_row(&basis, &ch_s, x, false);
            let f = (pref * ws[i]).sqrt();
            for (j, r) in row.iter().enumerate() {
                eps_rows[(i, j)] = f * r;
            }
        }

        let mut model = OracleModel {
            params: *params,
            config: *config,
            eta,
            basis,
            coefficients: ShotCoefficients {
                ea_vv,
                ea_const,
                e1_pp,
                x_aa: 0.0,
                x_ap: 0.0,
                x_pp: 0.0,
                x_cov: 0.0,
                outcome_variance: s2,
            },
            coupling_radius: ham.coupling_radius(),
            chebyshev_terms,
            weights: (cu, cw),
            start,
            end,
            end_free,
            hamiltonian: ham,
            eps_rows,
        };
        let hb = |x: &DVector<f64>, y: &DVector<f64>| h_p(x, y);
        let x = |i, j| model.interaction_change(&hb, i, j);
        let (x_aa, x_ap, x_pp) = (x(COL_A, COL_A), x(COL_A, COL_P), x(COL_P, COL_P));
        let x_cov = cu * x(COL_U, COL_U) + cw * x(COL_W, COL_W);
        model.coefficients.x_aa = x_aa;
        model.coefficients.x_ap = x_ap;
        model.coefficients.x_pp = x_pp;
        model.coefficients.x_cov = x_cov;
        Ok(model)
    }

    /// b(Sx_i, Sx_j) − b(S₀x_i, S₀x_j) for a bilinear form b, with S the
    /// coupled flow and S₀ the free one.
    fn interaction_change(&self, b: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64, i: usize, j: usize) -> f64 {
        let fi = self.end_free.column(i).into_owned();
        let fj = self.end_free.column(j).into_owned();
        let di = self.end.column(i) - &fi;
        let dj = self.end.column(j) - &fj;
        b(&fi, &dj) + b(&di, &fj) + b(&di, &dj)
    }

    /// Combine a pairwise quantity q(i, j) over the ensemble `m` of drives.
    fn ensemble(&self, m: &DriveMoments, q: &dyn Fn(usize, usize) -> f64) -> f64 {
        let (cu, cw) = self.weights;
        m.vv * q(COL_A, COL_A) + 2.0 * m.vp * q(COL_A, COL_P) + m.pp * q(COL_P, COL_P) + cu * q(COL_U, COL_U)
            + cw * q(COL_W, COL_W)
    }

    /// Ensemble E_A.
    pub fn ensemble_e_a(&self, m: &DriveMoments) -> f64 {
        m.vv * self.coefficients.ea_vv + self.coefficients.ea_const
    }

    /// Ensemble E_1.
    pub fn ensemble_e_1(&self, m: &DriveMoments) -> f64 {
        m.pp * self.coefficients.e1_pp
    }

    /// Ensemble E_B.
    pub fn ensemble_e_b(&self, m: &DriveMoments) -> f64 {
        let c = &self.coefficients;
        m.vv * c.x_aa + 2.0 * m.vp * c.x_ap + m.pp * c.x_pp + c.x_cov
    }

    /// Energy bookkeeping of the coupled evolution for ensemble `m`.
    pub fn conservation_audit(&self, m: &DriveMoments) -> ConservationAudit {
        let ks = self.basis.momenta();
        let space = PhaseSpace::two_channel(self.basis.n_modes, self.basis.n_modes);
        let h_s = block_energy_form(&space, 0, &ks);
        let h_p = block_energy_form(&space, 1, &ks);
        let h_i = |x: &DVector<f64>, y: &DVector<f64>| self.hamiltonian.interaction_form(x, y);
        let change = |b: &dyn Fn(&DVector<f64>, &DVector<f64>) -> f64| {
            // excess at the end minus excess at injection, both relative to
            // the vacuum evolved under the same flow
            let q = |i: usize, j: usize| {
                let e = b(&self.end.column(i).into_owned(), &self.end.column(j).into_owned());
                let s = b(&self.start.column(i).into_owned(), &self.start.column(j).into_owned());
                e - s
            };
            self.ensemble(m, &q)
        };
        let delta_h_s = change(&h_s);
        let delta_h_b = change(&h_p);
        let delta_h_int = self.eta * change(&h_i);
        let e_a = self.ensemble_e_a(m);
        let scale = e_a.abs() + self.ensemble_e_1(m).abs();
        let eps = |x: &DVector<f64>, y: &DVector<f64>| {
            let n2 = 2 * self.basis.n_modes;
            (&self.eps_rows * x.rows(0, n2)).dot(&(&self.eps_rows * y.rows(0, n2)))
        };
        let total = |i: usize, j: usize| eps(&self.end.column(i).into_owned(), &self.end.column(j).into_owned());
        let induced = |i: usize, j: usize| self.interaction_change(&eps, i, j);
        ConservationAudit {
            delta_h_s,
            delta_h_b,
            delta_h_int,
            relative_residual: (delta_h_s + delta_h_b + delta_h_int).abs() / scale,
            e_a,
            e_b: self.ensemble_e_b(m),
            eps_s_region_total: self.ensemble(m, &total),
            eps_s_region_interaction: self.ensemble(m, &induced),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::measure;
    use crate::feedback::displacement_from_outcome;

    fn small() -> (PhysicalParams, OracleConfig) {
        (PhysicalParams::default(), OracleConfig { box_length: 32.0, n_modes: 256, b_points: 48 })
    }

    #[test]
    fn shot_coefficients_match_a_direct_simulation() {
        let (p, cfg) = small();
        let eta = 0.3;
        let model = OracleModel::build(&p, &cfg, eta).unwrap();
        let units = p.units().unwrap();
        let (v, vp) = (0.7 * model.coefficients.outcome_variance.sqrt(), -1.3 * model.coefficients.outcome_variance.sqrt());

        let basis = model.basis;
        let n = basis.n_modes;
        let space = PhaseSpace::two_channel(n, n);
        let det = p.detector().unwrap();
        let fb = p.feedback().unwrap();
        let rec = measure(&det, &ExcitedVacuum::vacuum(space.clone()), &basis, &p.channel_s().unwrap(),
            Readout::Fixed(v * units.voltage_unit())).unwrap();
        assert!((rec.injected_energy - model.coefficients.e_a(v)).abs() < 1e-9 * rec.injected_energy);

        let free = FreeRotation::new(space.clone(), vec![basis.momenta(), basis.momenta()]).unwrap();
        let t_inj = p.vgt_fraction * p.distance_natural();
        let packet = displacement_from_outcome(vp, &fb, det.delta_v_natural(), &basis, &p.channel_p().unwrap()).unwrap();
        let launched = rec.record.post_state.evolve(&free, t_inj).unwrap().displace(&packet.embedded(&space, 1));
        let ham = ModeHamiltonian::new(&p, &basis, cfg.b_points, eta).unwrap();
        let cheb = ChebyshevPropagator::new(&ham).unwrap();
        let t = 2.0 * p.distance_natural();
        let coupled = launched.evolve(&cheb, t).unwrap();
        let uncoupled = launched.evolve(&free, t).unwrap();
        let ks = basis.momenta();
        let hb = block_energy_form(&space, 1, &ks);
        let e_b = coupled.excess_quadratic(&hb) - uncoupled.excess_quadratic(&hb);
        let e_1 = uncoupled.excess_quadratic(&hb);
        let c = model.coefficients;
        assert!((e_1 - c.e_1(vp)).abs() < 1e-9 * e_1);
        assert!((e_b - c.e_b(v, vp)).abs() < 1e-8 * e_b.abs().max(1e-6 * e_1), "{e_b} vs {}", c.e_b(v, vp));
    }

    #[test]
    fn zero_coupling_transfers_nothing() {
        let (p, cfg) = small();
        let ham = ModeHamiltonian::new(&p, &ModeBasis::new(cfg.box_length, cfg.n_modes, 1e-2).unwrap(), cfg.b_points, 0.0)
            .unwrap();
        assert!(ham.coupling_radius() > 0.0);
        let model = OracleModel::build(&p, &cfg, 1e-12).unwrap();
        let c = model.coefficients;
        assert!(c.x_ap.abs() < 1e-9 * c.e1_pp && c.x_pp.abs() < 1e-9 * c.e1_pp);
    }

    #[test]
    fn energy_is_conserved_and_arms_differ_only_by_correlation() {
        let (p, cfg) = small();
        let model = OracleModel::build(&p, &cfg, 0.05).unwrap();
        let s2 = model.coefficients.outcome_variance;
        let q = model.conservation_audit(&DriveMoments::qet(s2, 0.0));
        let c = model.conservation_audit(&DriveMoments::control(s2, 0.0));
        assert!(q.relative_residual < 1e-9 && c.relative_residual < 1e-9);
        assert_eq!(q.e_a, c.e_a);
        let diff = q.e_b - c.e_b;
        assert!((diff - 2.0 * s2 * model.coefficients.x_ap).abs() < 1e-12 * diff.abs());
    }

    #[test]
    fn strong_coupling_beyond_positivity_is_rejected() {
        let (p, cfg) = small();
        let basis = ModeBasis::new(cfg.box_length, cfg.n_modes, 1e-2).unwrap();
        let mu = ModeHamiltonian::new(&p, &basis, cfg.b_points, 0.0).unwrap().coupling_radius();
        assert!(matches!(ModeHamiltonian::new(&p, &basis, cfg.b_points, 1.01 / mu), Err(Error::Numerical(_))));
    }
}
