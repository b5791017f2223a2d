//! RC-circuit charge detector at region A.
//!
//! The detector reads the voltage shift O = R·Q̇_S(0). Integrating by parts
//! onto the window, O = −R∫ϱ_S ∂w_A dx in natural units. Its outcome density is
//! normal with variance ΔV² + Var_vac(O), and the Kraus operator
//! M_v ∝ exp(−(v − O)²/(4ΔV²)) injects the energy
//! E_A = (ν_S/4π)(R/2ΔV)²∫(∂²w_A)² into channel S.

use crate::error::{ensure_positive, invalid, Result};
use crate::field::{smeared_row_derivative, window_moment, ChiralChannel, ModeBasis, WindowKind, WindowProfile};
use crate::gaussian_engine::{ExcitedVacuum, LinearObservable, MeasurementRecord, PhaseSpace, Readout};
use crate::quadrature::integrate_1d;
use crate::units::{Dimension, UnitSystem, CODATA};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// √(ħ/(RC²)) in volts.
pub fn delta_v(resistance_ohm: f64, capacitance_f: f64) -> Result<f64> {
    ensure_positive("resistance", resistance_ohm)?;
    ensure_positive("capacitance", capacitance_f)?;
    Ok((CODATA.hbar / (resistance_ohm * capacitance_f * capacitance_f)).sqrt())
}

/// Detector circuit and window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// R in ohms.
    pub resistance_ohm: f64,
    /// C in farads.
    pub capacitance_f: f64,
    /// w_A in natural units.
    pub window: WindowProfile,
    /// Multiplier on √(ħ/(RC²)); 1 reproduces the order relation exactly.
    pub delta_v_prefactor: f64,
    /// Unit system for natural/SI conversion.
    pub units: UnitSystem,
}

impl DetectorParams {
    /// Validated constructor.
    pub fn new(
        resistance_ohm: f64,
        capacitance_f: f64,
        window: WindowProfile,
        delta_v_prefactor: f64,
        units: UnitSystem,
    ) -> Result<Self> {
        ensure_positive("resistance", resistance_ohm)?;
        ensure_positive("capacitance", capacitance_f)?;
        ensure_positive("ΔV prefactor", delta_v_prefactor)?;
        Ok(DetectorParams { resistance_ohm, capacitance_f, window, delta_v_prefactor, units })
    }

    /// v_g·RC/l; the fast-detector regime needs this well below 1.
    pub fn fast_detector_margin(&self) -> f64 {
        self.units.velocity_unit * self.resistance_ohm * self.capacitance_f / self.units.length_unit
    }

    /// Human-readable warnings about the detector regime.
    pub fn warnings(&self) -> Vec<String> {
        let m = self.fast_detector_margin();
        if m > 0.1 {
            vec![format!("fast-detector margin v_g·RC/l = {m:.3} exceeds 0.1")]
        } else {
            Vec::new()
        }
    }

    /// R in natural units of ħ/e².
    pub fn resistance_natural(&self) -> f64 {
        self.units.to_natural(self.resistance_ohm, Dimension::Resistance)
    }

    /// ΔV in volts.
    pub fn delta_v_volts(&self) -> f64 {
        self.delta_v_prefactor
            * (self.units.constants.hbar / (self.resistance_ohm * self.capacitance_f * self.capacitance_f)).sqrt()
    }

    /// ΔV in natural voltage units.
    pub fn delta_v_natural(&self) -> f64 {
        self.units.to_natural(self.delta_v_volts(), Dimension::Voltage)
    }
}

/// Coefficients of O = −R∫ϱ_S ∂w_A over the S block (length 2N).
pub fn charge_observable(params: &DetectorParams, basis: &ModeBasis, channel: &ChiralChannel) -> Result<Vec<f64>> {
    let (a, b) = params.window.default_extent();
    basis.require_inside("detector window", a, b)?;
    let r = params.resistance_natural();
    Ok(smeared_row_derivative(basis, channel, &params.window)
        .into_iter()
        .map(|c| -r * c)
        .collect())
}

/// Var_vac(O) = R²(ν/4π²)∫₀^∞ k|∫∂w e^{ikx}|² dk in the continuum.
pub fn vacuum_variance(params: &DetectorParams, filling: f64) -> Result<f64> {
    ensure_positive("filling factor", filling)?;
    let w = &params.window;
    let k_hi = match w.kind {
        WindowKind::SmoothedRect => 80.0 / (PI * w.sigma),
        WindowKind::CompactBump => 400.0 / w.sigma,
    };
    let f = |k: f64| {
        let z = w.fourier_derivative(&[k])[0];
        k * z.norm_sqr()
    };
    let scale = w.amplitude * w.amplitude / (w.sigma * w.sigma);
    let res = integrate_1d(&f, 0.0, k_hi, &[], 1e-10, 1e-14 * scale, 2_000_000);
    if !res.converged {
        return Err(crate::Error::Numerical("vacuum variance quadrature did not converge".into()));
    }
    let r = params.resistance_natural();
    Ok(r * r * filling / (4.0 * PI * PI) * res.value)
}

/// Gaussian outcome density p(v).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDensity {
    /// Mean in natural voltage units.
    pub mean: f64,
    /// Variance in natural voltage units squared.
    pub variance: f64,
    /// Natural voltage unit in volts.
    pub voltage_unit: f64,
}

impl OutcomeDensity {
    /// Mean in volts.
    pub fn mean_volts(&self) -> f64 {
        self.mean * self.voltage_unit
    }
    /// Variance in volts².
    pub fn variance_volts2(&self) -> f64 {
        self.variance * self.voltage_unit * self.voltage_unit
    }
    /// p(v) for v in volts, in 1/V.
    pub fn pdf_volts(&self, v: f64) -> f64 {
        let m = self.mean_volts();
        let s2 = self.variance_volts2();
        (-(v - m) * (v - m) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
    }
    /// ∫p dv over ±`n_sigma` standard deviations by adaptive quadrature.
    pub fn normalization(&self, n_sigma: f64) -> f64 {
        let s = self.variance_volts2().sqrt();
        let m = self.mean_volts();
        // integrate in units of σ to keep the quadrature well scaled
        let f = |t: f64| self.pdf_volts(m + s * t) * s;
        integrate_1d(&f, -n_sigma, n_sigma, &[0.0], 1e-13, 1e-16, 100_000).value
    }
}

/// p(v) from the continuum vacuum variance.
pub fn outcome_density(params: &DetectorParams, filling: f64) -> Result<OutcomeDensity> {
    let dv = params.delta_v_natural();
    Ok(OutcomeDensity {
        mean: 0.0,
        variance: dv * dv + vacuum_variance(params, filling)?,
        voltage_unit: params.units.voltage_unit(),
    })
}

/// E_A = (ν_S/4π)(R/2ΔV)²∫(∂²w_A)² in natural energy units.
pub fn injected_energy_ea(params: &DetectorParams, filling: f64) -> Result<f64> {
    ensure_positive("filling factor", filling)?;
    let r = params.resistance_natural();
    let dv = params.delta_v_natural();
    let m = window_moment(&params.window, 2, 2)?;
    Ok(filling / (4.0 * PI) * (r / (2.0 * dv)).powi(2) * m)
}

/// One detector shot.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorRecord {
    /// Outcome v in volts.
    pub outcome_volts: f64,
    /// p(v) in 1/V.
    pub density_per_volt: f64,
    /// Engine record with the conditional state (natural units).
    pub record: MeasurementRecord<ExcitedVacuum>,
    /// Increase of ⟨H_S⟩ caused by the measurement, natural energy.
    pub injected_energy: f64,
}

/// ½Σ_S k(x_q y_q + x_p y_p) over channel block `block`.
pub fn block_energy_form<'a>(space: &PhaseSpace, block: usize, momenta: &'a [f64]) -> impl Fn(&DVector<f64>, &DVector<f64>) -> f64 + 'a {
    let o = space.offset(block);
    let n = space.blocks[block];
    move |x: &DVector<f64>, y: &DVector<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            s += momenta[i] * (x[o + i] * y[o + i] + x[o + n + i] * y[o + n + i]);
        }
        0.5 * s
    }
}

/// Measure channel S (block 0 of the state's layout) with the RC detector.
pub fn measure(
    params: &DetectorParams,
    state: &ExcitedVacuum,
    basis: &ModeBasis,
    channel: &ChiralChannel,
    readout: Readout<'_>,
) -> Result<DetectorRecord> {
    if state.space.blocks.first() != Some(&basis.n_modes) {
        return Err(invalid("state layout does not start with the detector channel basis"));
    }
    let local = charge_observable(params, basis, channel)?;
    let obs = LinearObservable::new(state.space.embed(0, &local));
    let dv = params.delta_v_natural();
    let readout = match readout {
        Readout::Fixed(v_volts) => Readout::Fixed(v_volts / params.units.voltage_unit()),
        other => other,
    };
    let record = state.measure_linear(&obs, dv * dv, readout)?;
    let ks = basis.momenta();
    let h = block_energy_form(&state.space, 0, &ks);
    let injected_energy = record.post_state.excess_quadratic(&h) - state.excess_quadratic(&h);
    let vu = params.units.voltage_unit();
    Ok(DetectorRecord {
        outcome_volts: record.outcome * vu,
        density_per_volt: record.density / vu,
        record,
        injected_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Chirality;

    fn defaults() -> DetectorParams {
        let w = WindowProfile::smoothed_rect(-1.5, -0.5, 0.5, 1.0).unwrap();
        DetectorParams::new(1e4, 1e-14, w, 1.0, UnitSystem::default()).unwrap()
    }

    #[test]
    fn delta_v_scalings() {
        let a = delta_v(1e4, 1e-14).unwrap();
        assert!((a - 1.0269e-5).abs() < 1e-8, "{a}");
        assert!((delta_v(1e4, 2e-14).unwrap() - a / 2.0).abs() < 1e-18);
        assert!((delta_v(4e4, 1e-14).unwrap() - a / 2.0).abs() < 1e-18);
        assert!(delta_v(0.0, 1.0).is_err());
        assert!(delta_v(1.0, -1.0).is_err());
    }

    #[test]
    fn mode_variance_converges_to_continuum() {
        let p = defaults();
        let basis = ModeBasis::new(64.0, 2048, 0.01).unwrap();
        let s = ChiralChannel::new(3.0, Chirality::Left).unwrap();
        let o = charge_observable(&p, &basis, &s).unwrap();
        let modes: f64 = 0.5 * o.iter().map(|c| c * c).sum::<f64>();
        let cont = vacuum_variance(&p, 3.0).unwrap();
        assert!(((modes - cont) / cont).abs() < 1e-3, "{modes} vs {cont}");
    }

    #[test]
    fn energy_is_quadratic_in_window() {
        let p = defaults();
        let mut q = p;
        q.window = q.window.scaled(2.0);
        let r = injected_energy_ea(&q, 3.0).unwrap() / injected_energy_ea(&p, 3.0).unwrap();
        assert!((r - 4.0).abs() < 1e-9);
    }

    #[test]
    fn outcome_density_is_normalized() {
        let d = outcome_density(&defaults(), 3.0).unwrap();
        assert!((d.normalization(8.0) - 1.0).abs() < 1e-9);
        assert!(d.variance >= defaults().delta_v_natural().powi(2));
    }
}
