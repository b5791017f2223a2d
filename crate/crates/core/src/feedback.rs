//! Feedback at gate G: the outcome-conditioned displacement of channel P.
//!
//! The gate applies F_v(y, t) = g_s(πħ/ν_PΔV)·v·λ_B(y + L)·δ(t − t_o) in the
//! impulsive limit. A left-multiplied exp(iθG) with G = ∫λ_B(y + L)ϱ_P(y)dy
//! and θ = −g_s·πv/(ν_PΔV) displaces the quadratures by g_s(πv/ν_PΔV)·Ωg,
//! which launches the right-going waveform ⟨ϱ_P(y)⟩ = −g_s(v/2ΔV)∂λ_B(y + L).
//! With g_s = −1 this is the packet U_v = exp(iπv/(ν_PΔV)∫λ_Bϱ_P).

use crate::error::{ensure_positive, invalid, Result};
use crate::field::{smeared_row, window_moment, ChiralChannel, ModeBasis, WindowProfile};
use crate::gaussian_engine::PhaseSpace;
use crate::units::{Dimension, UnitSystem};
use nalgebra::DVector;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gate geometry and timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    /// λ_B positioned on region B (natural units).
    pub lambda_window: WindowProfile,
    /// Pulse width τ_m in seconds, used only for the gain report.
    pub tau_m_s: f64,
    /// Pulse centre t_o in seconds, used only for reporting.
    pub t_o_s: f64,
    /// Sign g_s of the feedback potential, ±1.
    pub gain_sign: f64,
    /// Distance L from G to B along P (natural units).
    pub distance: f64,
}

impl FeedbackParams {
    /// Validated constructor.
    pub fn new(lambda_window: WindowProfile, tau_m_s: f64, t_o_s: f64, gain_sign: f64, distance: f64) -> Result<Self> {
        ensure_positive("pulse width", tau_m_s)?;
        ensure_positive("distance", distance)?;
        if gain_sign != 1.0 && gain_sign != -1.0 {
            return Err(invalid("gain sign must be +1 or −1"));
        }
        if lambda_window.amplitude <= 0.0 {
            return Err(invalid("λ_B amplitude must be positive"));
        }
        Ok(FeedbackParams { lambda_window, tau_m_s, t_o_s, gain_sign, distance })
    }

    /// The gate profile on P at injection: λ_B(y + L).
    pub fn gate_window(&self) -> WindowProfile {
        self.lambda_window.shifted(-self.distance)
    }

    /// Warnings about the impulsive approximation.
    pub fn warnings(&self, units: &UnitSystem) -> Vec<String> {
        let ratio = self.tau_m_s / units.time_unit();
        if ratio > 0.1 {
            vec![format!(
                "pulse width τ_m = {:.3e} s is {:.1}× the transit time l/v_g; the impulsive limit is used regardless",
                self.tau_m_s, ratio
            )]
        } else {
            Vec::new()
        }
    }
}

/// Amplifier gain α = πħ·max λ_B/(ν_PΔVτ_m) and the potential scale αΔV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    /// α in coulombs (J per V).
    pub alpha: f64,
    /// αΔV/e in volts, the scale of F_v.
    pub potential_scale_volts: f64,
}

/// α and O(F_v) for ΔV in volts.
pub fn gain_alpha(params: &FeedbackParams, filling_p: f64, delta_v_volts: f64, units: &UnitSystem) -> Result<GainReport> {
    ensure_positive("filling factor", filling_p)?;
    ensure_positive("ΔV", delta_v_volts)?;
    let alpha = PI * units.constants.hbar / (filling_p * delta_v_volts * params.tau_m_s) * params.lambda_window.max_value();
    Ok(GainReport { alpha, potential_scale_volts: alpha * delta_v_volts / units.constants.e_charge })
}

/// A packet on channel P for one shot.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    /// Quadrature displacement over the P block (length 2N).
    pub displacement: Vec<f64>,
    /// Signal value v that set the amplitude (natural voltage units).
    pub outcome: f64,
}

impl PacketSpec {
    /// Displacement embedded in a joint phase space at block `block`.
    pub fn embedded(&self, space: &PhaseSpace, block: usize) -> DVector<f64> {
        space.embed(block, &self.displacement)
    }
}

/// Displacement per unit signal: g_s(π/ν_PΔV)·Ωg over the P block.
pub fn unit_displacement(
    params: &FeedbackParams,
    delta_v: f64,
    basis: &ModeBasis,
    channel: &ChiralChannel,
) -> Result<Vec<f64>> {
    ensure_positive("ΔV", delta_v)?;
    let gate = params.gate_window();
    let (a, b) = gate.default_extent();
    basis.require_inside("gate window λ_B(y + L)", a, b)?;
    let g = smeared_row(basis, channel, &gate.fourier(&basis.momenta()));
    let n = basis.n_modes;
    let c = params.gain_sign * PI / (channel.filling * delta_v);
    let mut d = vec![0.0; 2 * n];
    for i in 0..n {
        d[i] = c * g[n + i];
        d[n + i] = -c * g[i];
    }
    Ok(d)
}

/// Packet for signal `v` (natural voltage units).
pub fn displacement_from_outcome(
    v: f64,
    params: &FeedbackParams,
    delta_v: f64,
    basis: &ModeBasis,
    channel: &ChiralChannel,
) -> Result<PacketSpec> {
    let unit = unit_displacement(params, delta_v, basis, channel)?;
    Ok(PacketSpec { displacement: unit.into_iter().map(|d| d * v).collect(), outcome: v })
}

/// Control arm: the same packet family driven by an independent draw from
/// N(0, `outcome_variance`).
pub fn control_displacement(
    rng: &mut dyn RngCore,
    outcome_variance: f64,
    params: &FeedbackParams,
    delta_v: f64,
    basis: &ModeBasis,
    channel: &ChiralChannel,
) -> Result<PacketSpec> {
    ensure_positive("outcome variance", outcome_variance)?;
    let v = outcome_variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
    displacement_from_outcome(v, params, delta_v, basis, channel)
}

/// Analytic mean waveform ⟨ϱ_P(y)⟩ = −g_s(v/2ΔV)∂λ_B(y + L).
pub fn coherent_waveform(params: &FeedbackParams, y: f64, v: f64, delta_v: f64) -> f64 {
    -params.gain_sign * v / (2.0 * delta_v) * params.gate_window().derivative(y, 1)
}

/// Packet energy for signal v: (π/ν_P)(v/2ΔV)²∫(∂λ_B)².
pub fn packet_energy(params: &FeedbackParams, filling_p: f64, v: f64, delta_v: f64) -> Result<f64> {
    let m = window_moment(&params.lambda_window, 1, 2)?;
    Ok(PI / filling_p * (v / (2.0 * delta_v)).powi(2) * m)
}

/// E_1 = (π/ν_P)∫(∂λ_B)²·[⟨G_S²⟩ + ¼] with ⟨G_S²⟩ = Var_vac(O)/(4ΔV²).
pub fn packet_energy_e1(
    params: &FeedbackParams,
    filling_p: f64,
    vacuum_variance_o: f64,
    delta_v: f64,
) -> Result<f64> {
    ensure_positive("ΔV", delta_v)?;
    let m = window_moment(&params.lambda_window, 1, 2)?;
    Ok(PI / filling_p * m * (vacuum_variance_o / (4.0 * delta_v * delta_v) + 0.25))
}

/// ΔV in natural units from volts.
pub fn delta_v_natural(delta_v_volts: f64, units: &UnitSystem) -> f64 {
    units.to_natural(delta_v_volts, Dimension::Voltage)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{point_row, Chirality};

    fn params() -> FeedbackParams {
        let lam = WindowProfile::smoothed_rect(-0.5, 0.5, 0.5, 9.0).unwrap();
        FeedbackParams::new(lam, 1e-9, 0.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn waveform_matches_engine() {
        let p = params();
        let basis = ModeBasis::new(64.0, 2048, 0.01).unwrap();
        let ch = ChiralChannel::new(6.0, Chirality::Right).unwrap();
        let dv = 0.156;
        let pk = displacement_from_outcome(0.4, &p, dv, &basis, &ch).unwrap();
        let mut worst = 0.0f64;
        let peak = coherent_waveform(&p, -2.5, 0.4, dv).abs();
        for i in 0..80 {
            let y = -5.0 + 0.05 * i as f64;
            let row = point_row(&basis, &ch, y, false);
            let engine: f64 = row.iter().zip(&pk.displacement).map(|(a, b)| a * b).sum();
            worst = worst.max((engine - coherent_waveform(&p, y, 0.4, dv)).abs());
        }
        assert!(worst < 1e-6 * peak, "{worst} vs {peak}");
    }

    #[test]
    fn linear_in_signal_and_zero_at_zero() {
        let p = params();
        let basis = ModeBasis::new(32.0, 256, 0.01).unwrap();
        let ch = ChiralChannel::new(6.0, Chirality::Right).unwrap();
        let a = displacement_from_outcome(0.3, &p, 0.15, &basis, &ch).unwrap();
        let b = displacement_from_outcome(-0.1, &p, 0.15, &basis, &ch).unwrap();
        let c = displacement_from_outcome(0.2, &p, 0.15, &basis, &ch).unwrap();
        for i in 0..a.displacement.len() {
            assert!((a.displacement[i] + b.displacement[i] - c.displacement[i]).abs() < 1e-12);
        }
        let z = displacement_from_outcome(0.0, &p, 0.15, &basis, &ch).unwrap();
        assert!(z.displacement.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn gain_scalings() {
        let u = UnitSystem::default();
        let p = params();
        let a = gain_alpha(&p, 6.0, 1e-5, &u).unwrap().alpha;
        let mut q = p;
        q.lambda_window = q.lambda_window.scaled(2.0);
        assert!((gain_alpha(&q, 6.0, 1e-5, &u).unwrap().alpha / a - 2.0).abs() < 1e-12);
        q = p;
        q.tau_m_s *= 2.0;
        assert!((gain_alpha(&q, 6.0, 1e-5, &u).unwrap().alpha / a - 0.5).abs() < 1e-12);
    }
}
