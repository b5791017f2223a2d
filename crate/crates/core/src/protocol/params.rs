//! Physical parameter set in SI units and its natural-unit views.

use crate::coupling::{CouplingParams, EbInputs};
use crate::detector::DetectorParams;
use crate::error::{ensure_positive, invalid, Result};
use crate::feedback::FeedbackParams;
use crate::field::{ChiralChannel, Chirality, WindowKind, WindowProfile, DEFAULT_TAIL_TOL};
use crate::units::{UnitSystem, CODATA};
use serde::{Deserialize, Serialize};

/// Every physical input of the experiment, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Detector resistance R (Ω).
    pub resistance: f64,
    /// Detector capacitance C (F).
    pub capacitance: f64,
    /// Edge group velocity v_g (m/s).
    pub group_velocity: f64,
    /// Filling factor ν_S of the measured channel.
    pub nu_s: f64,
    /// Filling factor ν_P of the packet channel.
    pub nu_p: f64,
    /// Length unit l (m).
    pub length_unit: f64,
    /// Gate-to-B distance L (m).
    pub distance: f64,
    /// Channel separation d at B (m).
    pub separation: f64,
    /// Left edge b₋ of region B (m).
    pub b_lo: f64,
    /// Right edge b₊ of region B (m).
    pub b_hi: f64,
    /// Relative permittivity of the host.
    pub eps_rel: f64,
    /// Temperature (K); reported only.
    pub temperature: f64,
    /// λ_B amplitude (dimensionless).
    pub lambda_amplitude: f64,
    /// Profile family of both windows.
    pub window_kind: WindowKind,
    /// Left plateau edge of w_A (m).
    pub detector_lo: f64,
    /// Right plateau edge of w_A (m).
    pub detector_hi: f64,
    /// Edge smoothing σ_A of w_A (m).
    pub detector_smoothing: f64,
    /// Edge smoothing σ_B of λ_B (m).
    pub lambda_smoothing: f64,
    /// Feedback sign g_s (±1).
    pub gain_sign: f64,
    /// Feedback pulse width τ_m (s).
    pub pulse_width: f64,
    /// v_gT as a fraction of L.
    pub vgt_fraction: f64,
    /// Multiplier on √(ħ/(RC²)).
    pub delta_v_prefactor: f64,
    /// UV regulator ε (m) of the vacuum correlator and the log kernel.
    pub uv_cutoff: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            resistance: 1e4,
            capacitance: 1e-14,
            group_velocity: 1e6,
            nu_s: 3.0,
            nu_p: 6.0,
            length_unit: 1e-5,
            distance: 2e-5,
            separation: 5e-6,
            b_lo: -5e-6,
            b_hi: 5e-6,
            eps_rel: 10.0,
            temperature: 0.01,
            lambda_amplitude: 9.0,
            window_kind: WindowKind::SmoothedRect,
            detector_lo: -1.5e-5,
            detector_hi: -0.5e-5,
            detector_smoothing: 5e-6,
            lambda_smoothing: 5e-6,
            gain_sign: 1.0,
            pulse_width: 1e-9,
            vgt_fraction: 0.01,
            delta_v_prefactor: 1.0,
            uv_cutoff: 1e-7,
        }
    }
}

impl PhysicalParams {
    /// Check every documented domain.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("resistance", self.resistance),
            ("capacitance", self.capacitance),
            ("group velocity", self.group_velocity),
            ("ν_S", self.nu_s),
            ("ν_P", self.nu_p),
            ("length unit", self.length_unit),
            ("distance L", self.distance),
            ("separation d", self.separation),
            ("relative permittivity", self.eps_rel),
            ("λ_B amplitude", self.lambda_amplitude),
            ("detector smoothing", self.detector_smoothing),
            ("λ_B smoothing", self.lambda_smoothing),
            ("pulse width", self.pulse_width),
            ("ΔV prefactor", self.delta_v_prefactor),
            ("UV cutoff", self.uv_cutoff),
        ] {
            ensure_positive(name, v)?;
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(invalid("temperature must be finite and non-negative"));
        }
        if !(self.b_hi > self.b_lo) {
            return Err(invalid("region B needs b₊ > b₋"));
        }
        if !(self.detector_hi > self.detector_lo) {
            return Err(invalid("the detector window needs hi > lo"));
        }
        if self.gain_sign != 1.0 && self.gain_sign != -1.0 {
            return Err(invalid("gain sign must be +1 or −1"));
        }
        if !(self.vgt_fraction.is_finite() && self.vgt_fraction >= 0.0) {
            return Err(invalid("v_gT fraction must be finite and non-negative"));
        }
        Ok(())
    }

    /// Unit system of this parameter set.
    pub fn units(&self) -> Result<UnitSystem> {
        UnitSystem::new(self.length_unit, self.group_velocity)
    }

    fn nat(&self, metres: f64) -> f64 {
        metres / self.length_unit
    }

    /// L in units of l.
    pub fn distance_natural(&self) -> f64 {
        self.nat(self.distance)
    }

    /// Warnings about the regime of validity.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.distance_natural() < 2.0 {
            w.push(format!(
                "L = {:.3} l is below 2l; the first-order treatment of the Coulomb coupling is outside its validity range",
                self.distance_natural()
            ));
        }
        w
    }

    /// Channel S (left-moving).
    pub fn channel_s(&self) -> Result<ChiralChannel> {
        ChiralChannel::new(self.nu_s, Chirality::Left)
    }

    /// Channel P (right-moving).
    pub fn channel_p(&self) -> Result<ChiralChannel> {
        ChiralChannel::new(self.nu_p, Chirality::Right)
    }

    /// w_A in natural units.
    pub fn detector_window(&self) -> Result<WindowProfile> {
        WindowProfile::new(
            self.window_kind,
            self.nat(self.detector_lo),
            self.nat(self.detector_hi),
            self.nat(self.detector_smoothing),
            1.0,
        )
    }

    /// λ_B on region B in natural units.
    pub fn lambda_window(&self) -> Result<WindowProfile> {
        WindowProfile::new(
            self.window_kind,
            self.nat(self.b_lo),
            self.nat(self.b_hi),
            self.nat(self.lambda_smoothing),
            self.lambda_amplitude,
        )
    }

    /// Detector view.
    pub fn detector(&self) -> Result<DetectorParams> {
        self.validate()?;
        DetectorParams::new(
            self.resistance,
            self.capacitance,
            self.detector_window()?,
            self.delta_v_prefactor,
            self.units()?,
        )
    }

    /// Feedback view. The pulse is centred at t_o = 0, right after the
    /// measurement.
    pub fn feedback(&self) -> Result<FeedbackParams> {
        self.validate()?;
        FeedbackParams::new(self.lambda_window()?, self.pulse_width, 0.0, self.gain_sign, self.distance_natural())
    }

    /// Coupling view.
    pub fn coupling(&self) -> Result<CouplingParams> {
        CouplingParams::new(
            self.nat(self.separation),
            self.nat(self.b_lo),
            self.nat(self.b_hi),
            self.eps_rel,
            self.vgt_fraction * self.distance_natural(),
        )
    }

    /// Inputs of the first-order E_B integral.
    pub fn eb_inputs(&self) -> Result<EbInputs> {
        let det = self.detector()?;
        let units = self.units()?;
        Ok(EbInputs {
            detector_window: self.detector_window()?,
            lambda_window: self.lambda_window()?,
            distance: self.distance_natural(),
            coupling: self.coupling()?,
            filling_s: self.nu_s,
            resistance: det.resistance_natural(),
            delta_v: det.delta_v_natural(),
            kappa: units.coulomb_coupling(self.eps_rel),
            gain_sign: self.gain_sign,
            log_regulator: self.nat(self.uv_cutoff),
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    /// Thermal energy k_BT in natural units.
    pub fn thermal_energy_natural(&self) -> Result<f64> {
        Ok(CODATA.k_b * self.temperature / self.units()?.energy_unit())
    }

    /// Copy with another L (m).
    pub fn with_distance(&self, distance: f64) -> Self {
        PhysicalParams { distance, ..*self }
    }
}

/// Truncated mode basis and quadrature sizes of the Gaussian oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Box length Λ in units of l.
    pub box_length: f64,
    /// Modes per channel.
    pub n_modes: usize,
    /// Gauss–Legendre nodes across region B for the interaction.
    pub b_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { box_length: 64.0, n_modes: 2048, b_points: 160 }
    }
}

impl OracleConfig {
    /// Check sizes.
    pub fn validate(&self) -> Result<()> {
        ensure_positive("box length", self.box_length)?;
        if self.n_modes == 0 || self.b_points < 2 {
            return Err(invalid("oracle needs at least one mode and two B nodes"));
        }
        Ok(())
    }
}
