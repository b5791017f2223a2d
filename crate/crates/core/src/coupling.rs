//! Coulomb coupling at region B and the first-order energy transfer E_B.
//!
//! To first order in the interaction the energy gained by the packet is
//!
//! ```text
//! E_B = g_s·P·∫dx_A ∫du ∫_B dx ∫_B dy  f(x, y) w_A(x_A) λ_B(u) / D⁵,
//! D = x + y − x_A − u + L + v_gT,   P = 3κRν_S/(π²ΔV),
//! ```
//!
//! with f(x, y) = 1/√((x − y)² + d²) and κ = e²/(4πεħv_g). This collapsed
//! form needs D > 0 on the whole domain, which holds only when regions A
//! and B are far apart compared with the window tails. Integrating by parts
//! twice in x_A and three times in u moves the derivatives onto the
//! windows and leaves the kernel ½ln(D² + ε²)/24, which is integrable
//! through D = 0 and reduces to the collapsed form wherever D > 0. The
//! regularized form is what makes near-field geometries such as L = 2l
//! computable.

use crate::error::{ensure_positive, invalid, Error, Result};
use crate::field::WindowProfile;
use crate::quadrature::{genz_malik, integrate_1d, loglog_fit, FitResult, QuadSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::Cell;
use std::f64::consts::PI;

/// Geometry of region B and the coupling medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Channel separation d at B.
    pub d: f64,
    /// Left edge b₋ of region B.
    pub b_lo: f64,
    /// Right edge b₊ of region B.
    pub b_hi: f64,
    /// Relative permittivity of the host.
    pub eps_rel: f64,
    /// Interaction timing offset v_gT (natural length).
    pub vg_t: f64,
}

impl CouplingParams {
    /// Validated constructor.
    pub fn new(d: f64, b_lo: f64, b_hi: f64, eps_rel: f64, vg_t: f64) -> Result<Self> {
        ensure_positive("channel separation d", d)?;
        ensure_positive("relative permittivity", eps_rel)?;
        if !(b_hi > b_lo) {
            return Err(invalid("region B needs b₊ > b₋"));
        }
        if !(vg_t.is_finite() && vg_t >= 0.0) {
            return Err(invalid("v_gT must be finite and non-negative"));
        }
        Ok(CouplingParams { d, b_lo, b_hi, eps_rel, vg_t })
    }
}

/// f(x, y) = 1/√((x − y)² + d²).
pub fn coulomb_kernel(x: f64, y: f64, d: f64) -> Result<f64> {
    ensure_positive("channel separation d", d)?;
    Ok(1.0 / ((x - y) * (x - y) + d * d).sqrt())
}

/// Δ(x) = (ν/4π²)∫₀^∞ k e^{−ikx − kε} dk = (ν/4π²)/(ε + ix)².
pub fn delta_kernel(x: f64, filling: f64, uv_cutoff: f64) -> Result<Complex64> {
    ensure_positive("UV cutoff", uv_cutoff)?;
    let z = Complex64::new(uv_cutoff, x);
    Ok(filling / (4.0 * PI * PI) / (z * z))
}

/// Everything the first-order integral depends on, in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbInputs {
    /// w_A.
    pub detector_window: WindowProfile,
    /// λ_B on region B.
    pub lambda_window: WindowProfile,
    /// Distance L from gate to B.
    pub distance: f64,
    /// Region B and kernel parameters.
    pub coupling: CouplingParams,
    /// ν_S.
    pub filling_s: f64,
    /// R in units of ħ/e².
    pub resistance: f64,
    /// ΔV in natural voltage units.
    pub delta_v: f64,
    /// κ = e²/(4πεħv_g).
    pub kappa: f64,
    /// Feedback sign g_s.
    pub gain_sign: f64,
    /// ε in the logarithmic kernel of the regularized form.
    pub log_regulator: f64,
    /// Window tail truncation level.
    pub tail_tol: f64,
}

impl EbInputs {
    /// P = 3κRν_S/(π²ΔV).
    pub fn prefactor(&self) -> f64 {
        3.0 * self.kappa * self.resistance * self.filling_s / (PI * PI * self.delta_v)
    }

    /// Same inputs at another distance, keeping v_gT = `vgt_fraction`·L.
    pub fn at_distance(&self, distance: f64, vgt_fraction: f64) -> Self {
        let mut c = *self;
        c.distance = distance;
        c.coupling.vg_t = vgt_fraction * distance;
        c
    }

    /// Smallest D over the truncated collapsed-form domain.
    pub fn min_denominator(&self) -> f64 {
        let (_, a_hi) = self.detector_window.extent(self.tail_tol);
        let (_, u_hi) = self.lambda_window.extent(self.tail_tol);
        2.0 * self.coupling.b_lo - a_hi - u_hi + self.distance + self.coupling.vg_t
    }

    fn validate(&self) -> Result<()> {
        ensure_positive("distance", self.distance)?;
        ensure_positive("filling factor", self.filling_s)?;
        ensure_positive("resistance", self.resistance)?;
        ensure_positive("ΔV", self.delta_v)?;
        ensure_positive("coupling κ", self.kappa)?;
        ensure_positive("log regulator", self.log_regulator)?;
        ensure_positive("tail tolerance", self.tail_tol)?;
        Ok(())
    }
}

/// Which representation of the integral to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbForm {
    /// Collapsed when its denominator stays above [`AUTO_COLLAPSED_MARGIN`],
    /// regularized otherwise.
    Auto,
    /// ∫ f w λ / D⁵; rejected when D can vanish.
    Collapsed,
    /// ∫ f w″ λ‴ ½ln(D² + ε²)/24.
    Regularized,
}

/// Minimum denominator, in natural lengths, for [`EbForm::Auto`] to pick
/// the collapsed form.
pub const AUTO_COLLAPSED_MARGIN: f64 = 1.0;

/// Tolerances for [`eb_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbSettings {
    /// Integral representation.
    pub form: EbForm,
    /// Relative tolerance of the outer cubature.
    pub rel_tol: f64,
    /// Hard cap on integrand evaluations, inner ones included.
    pub max_evals: usize,
}

impl Default for EbSettings {
    fn default() -> Self {
        EbSettings { form: EbForm::Auto, rel_tol: 1e-4, max_evals: 10_000_000 }
    }
}

/// First-order E_B with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbResult {
    /// E_B in natural energy units.
    pub value: f64,
    /// Estimated absolute quadrature error, natural energy units.
    pub estimated_quadrature_error: f64,
    /// Integrand evaluations, inner ones included.
    pub evaluations: usize,
    /// Representation actually evaluated.
    pub form: EbForm,
    /// Whether both the outer and every inner integral met tolerance.
    pub converged: bool,
    /// Smallest collapsed-form denominator over the truncated domain.
    pub min_denominator: f64,
}

/// Evaluate E_B at first order.
pub fn eb_quadrature(inputs: &EbInputs, settings: &EbSettings) -> Result<EbResult> {
    inputs.validate()?;
    let dmin = inputs.min_denominator();
    let form = match settings.form {
        EbForm::Auto if dmin >= AUTO_COLLAPSED_MARGIN => EbForm::Collapsed,
        EbForm::Auto => EbForm::Regularized,
        EbForm::Collapsed if dmin <= 0.0 => {
            return Err(Error::Geometry(format!(
                "the collapsed integrand is singular: denominator reaches {dmin:.3} (regions A and B overlap \
                 within the window tails at L = {}); use the regularized form",
                inputs.distance
            )))
        }
        f => f,
    };
    let (value, error, evaluations, converged) = match form {
        EbForm::Regularized => regularized_integral(inputs, settings),
        _ => collapsed_integral(inputs, settings),
    };
    let pref = inputs.gain_sign * inputs.prefactor();
    let value = pref * value;
    let error = pref.abs() * error;
    Ok(EbResult {
        value,
        estimated_quadrature_error: error,
        evaluations,
        form,
        converged: converged && evaluations <= settings.max_evals && error <= 1e-3 * value.abs(),
        min_denominator: dmin,
    })
}

/// Integral of f over the anti-diagonal x + y = s of B × B,
/// g(s) = asinh(t_max(s)/d) with t_max the half-width of the chord.
fn chord_weight(s: f64, c: &CouplingParams) -> f64 {
    let tmax = (s - 2.0 * c.b_lo).min(2.0 * c.b_hi - s);
    if tmax <= 0.0 {
        0.0
    } else {
        (tmax / c.d).asinh()
    }
}

/// Regularized form, reduced to nested one-dimensional integrals.
///
/// With s = x + y and z = x_A + u the integrand factorizes as
/// g(s)·h(z)·½ln((s − z + L + v_gT)² + ε²)/24, where h = w_A″ ⋆ λ_B‴.
/// Returns (integral, absolute error, evaluations, converged).
fn regularized_integral(inputs: &EbInputs, settings: &EbSettings) -> (f64, f64, usize, bool) {
    let w = inputs.detector_window;
    let lam = inputs.lambda_window;
    let c = inputs.coupling;
    let shift = inputs.distance + c.vg_t;
    let eps2 = inputs.log_regulator * inputs.log_regulator;
    let (a_lo, a_hi) = w.extent(inputs.tail_tol);
    let (u_lo, u_hi) = lam.extent(inputs.tail_tol);
    let h_scale = (w.amplitude * lam.amplitude).abs() / (w.sigma.powi(2) * lam.sigma.powi(2));
    let (s_lo, s_mid, s_hi) = (2.0 * c.b_lo, c.b_lo + c.b_hi, 2.0 * c.b_hi);
    let g_scale = (0.5 * (c.b_hi - c.b_lo) / c.d).asinh() * (s_hi - s_lo);
    let inner_max = 100_000usize;
    let evals = Cell::new(0usize);
    let ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);

    let h = |z: f64| {
        let lo = a_lo.max(z - u_hi);
        let hi = a_hi.min(z - u_lo);
        if hi <= lo {
            return (0.0, 0.0);
        }
        let mut bps = w.breakpoints();
        bps.extend(lam.breakpoints().iter().map(|b| z - b));
        let f = |x: f64| w.jet(x)[2] * lam.jet(z - x)[3];
        let r = integrate_1d(&f, lo, hi, &bps, 1e-11, 1e-12 * h_scale, inner_max);
        evals.set(evals.get() + r.evals);
        ok.set(ok.get() && r.converged);
        (r.value, r.error)
    };
    let q = |z: f64| {
        let centre = z - shift;
        let f = |s: f64| {
            let dd = s - centre;
            chord_weight(s, &c) * 0.5 * (dd * dd + eps2).ln()
        };
        let r = integrate_1d(&f, s_lo, s_hi, &[s_mid, centre], 1e-11, 1e-15 * g_scale, inner_max);
        evals.set(evals.get() + r.evals);
        ok.set(ok.get() && r.converged);
        (r.value, r.error)
    };
    let outer = |z: f64| {
        let (hv, he) = h(z);
        if hv == 0.0 && he == 0.0 {
            return 0.0;
        }
        let (qv, qe) = q(z);
        inner_err.set(inner_err.get().max(hv.abs() * qe + qv.abs() * he));
        hv * qv / 24.0
    };
    let (z_lo, z_hi) = (a_lo + u_lo, a_hi + u_hi);
    let mut bps: Vec<f64> = [s_lo, s_mid, s_hi].iter().map(|s| s + shift).collect();
    for a in w.breakpoints() {
        for b in lam.breakpoints() {
            bps.push(a + b);
        }
    }
    let r = integrate_1d(&outer, z_lo, z_hi, &bps, settings.rel_tol, 1e-300, settings.max_evals / 400);
    let total = evals.get() + r.evals;
    let err = r.error + (z_hi - z_lo) * inner_err.get() / 24.0;
    (r.value, err, total, r.converged && ok.get())
}

/// Collapsed form as a direct cubature over (x_A, x, y) with an inner
/// integral over u.
fn collapsed_integral(inputs: &EbInputs, settings: &EbSettings) -> (f64, f64, usize, bool) {
    let w = inputs.detector_window;
    let lam = inputs.lambda_window;
    let c = inputs.coupling;
    let (a_lo, a_hi) = w.extent(inputs.tail_tol);
    let (u_lo, u_hi) = lam.extent(inputs.tail_tol);
    let shift = inputs.distance + c.vg_t;
    let evals = Cell::new(0usize);
    let ok = Cell::new(true);
    let inner_err = Cell::new(0.0f64);
    let bps = lam.breakpoints();
    let integrand = |p: &[f64]| -> f64 {
        let (xa, x, y) = (p[0], p[1], p[2]);
        let wa = w.eval(xa);
        if wa == 0.0 {
            return 0.0;
        }
        let fk = 1.0 / ((x - y) * (x - y) + c.d * c.d).sqrt();
        let cc = x + y - xa + shift;
        let g = |u: f64| lam.eval(u) / (cc - u).powi(5);
        let r = integrate_1d(&g, u_lo, u_hi, &bps, 1e-10, 1e-300, 100_000);
        evals.set(evals.get() + r.evals);
        ok.set(ok.get() && r.converged);
        inner_err.set(inner_err.get().max((fk * wa * r.error).abs()));
        fk * wa * r.value
    };
    let mut spec = QuadSpec::new(vec![a_lo, c.b_lo, c.b_lo], vec![a_hi, c.b_hi, c.b_hi]);
    spec.rel_tol = settings.rel_tol;
    spec.abs_tol = 1e-300;
    spec.max_evals = (settings.max_evals / 100).max(1000);
    let r = genz_malik(&integrand, &spec);
    let volume = (a_hi - a_lo) * (c.b_hi - c.b_lo).powi(2);
    let total = evals.get() + r.evals;
    (r.value, r.error + volume * inner_err.get(), total, r.converged && ok.get())
}

/// Order-of-magnitude estimate κ·λ·(R/ΔV)·(1/L)⁵ in natural units.
pub fn eb_order_estimate(kappa: f64, lambda_amplitude: f64, resistance: f64, delta_v: f64, distance: f64) -> Result<f64> {
    ensure_positive("ΔV", delta_v)?;
    ensure_positive("distance", distance)?;
    Ok(kappa * lambda_amplitude * resistance / delta_v * distance.powi(-5))
}

/// One row of a distance scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    /// L in natural lengths.
    pub distance: f64,
    /// Quadrature result.
    pub quadrature: EbResult,
    /// Order estimate.
    pub order_estimate: f64,
}

/// Result of [`scan_distance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    /// Rows in input order.
    pub rows: Vec<ScanRow>,
    /// Fit of the quadrature branch over the fit range, when it holds at
    /// least three positive points.
    pub fit: Option<FitResult>,
    /// Fit of the order-estimate branch over the same range.
    pub order_fit: Option<FitResult>,
    /// Fit range actually used.
    pub fit_range: (f64, f64),
    /// Whether the quadrature branch decreases monotonically.
    pub monotone_decreasing: bool,
}

/// Scan E_B over distances, keeping v_gT = `vgt_fraction`·L.
///
/// `fit_range` defaults to the largest decade [L_max/10, L_max].
pub fn scan_distance(
    base: &EbInputs,
    distances: &[f64],
    vgt_fraction: f64,
    settings: &EbSettings,
    fit_range: Option<(f64, f64)>,
) -> Result<ScanTable> {
    if distances.is_empty() {
        return Err(invalid("distance scan needs at least one distance"));
    }
    let rows: Vec<Result<ScanRow>> = distances
        .par_iter()
        .map(|&l| {
            let inputs = base.at_distance(l, vgt_fraction);
            Ok(ScanRow {
                distance: l,
                quadrature: eb_quadrature(&inputs, settings)?,
                order_estimate: eb_order_estimate(
                    base.kappa,
                    base.lambda_window.amplitude,
                    base.resistance,
                    base.delta_v,
                    l,
                )?,
            })
        })
        .collect();
    let rows: Vec<ScanRow> = rows.into_iter().collect::<Result<_>>()?;
    let lmax = distances.iter().cloned().fold(f64::MIN, f64::max);
    let range = fit_range.unwrap_or((lmax / 10.0, lmax));
    let pick = |f: &dyn Fn(&ScanRow) -> f64| -> Option<FitResult> {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.distance >= range.0 - 1e-12 && r.distance <= range.1 + 1e-12)
            .map(|r| (r.distance, f(r)))
            .collect();
        if pts.len() >= 3 {
            loglog_fit(&pts).ok()
        } else {
            None
        }
    };
    let fit = pick(&|r| r.quadrature.value.abs());
    let order_fit = pick(&|r| r.order_estimate);
    let mut sorted: Vec<&ScanRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let monotone_decreasing = sorted.windows(2).all(|w| w[1].quadrature.value < w[0].quadrature.value);
    Ok(ScanTable { rows, fit, order_fit, fit_range: range, monotone_decreasing })
}
