//! Mode basis, correlators, smeared-field rows and window moments.

use super::window::WindowProfile;
use crate::error::{ensure_positive, invalid, Result};
use crate::quadrature::integrate_1d;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Propagation direction of an edge channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chirality {
    /// Left-going, sign −1 (channel S).
    Left,
    /// Right-going, sign +1 (channel P).
    Right,
}

impl Chirality {
    /// −1 for left-going, +1 for right-going.
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Left => -1.0,
            Chirality::Right => 1.0,
        }
    }

    /// The other direction.
    pub fn flipped(self) -> Self {
        match self {
            Chirality::Left => Chirality::Right,
            Chirality::Right => Chirality::Left,
        }
    }
}

/// One edge channel: a filling factor and a direction. Velocity is 1 in
/// natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralChannel {
    /// Filling factor ν.
    pub filling: f64,
    /// Propagation direction.
    pub chirality: Chirality,
}

impl ChiralChannel {
    /// Validated constructor.
    pub fn new(filling: f64, chirality: Chirality) -> Result<Self> {
        ensure_positive("filling factor", filling)?;
        Ok(ChiralChannel { filling, chirality })
    }
}

/// Truncated ring basis shared by both channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    /// Ring circumference Λ.
    pub box_length: f64,
    /// Number of modes N.
    pub n_modes: usize,
    /// UV regulator length ε_uv applied to point fields.
    pub uv_cutoff: f64,
}

impl ModeBasis {
    /// Validated constructor. Positions are taken on [−Λ/2, Λ/2).
    pub fn new(box_length: f64, n_modes: usize, uv_cutoff: f64) -> Result<Self> {
        ensure_positive("box length", box_length)?;
        ensure_positive("UV cutoff", uv_cutoff)?;
        if n_modes == 0 {
            return Err(invalid("mode basis needs at least one mode"));
        }
        Ok(ModeBasis { box_length, n_modes, uv_cutoff })
    }

    /// k_n for n = 1..N.
    pub fn momenta(&self) -> Vec<f64> {
        (1..=self.n_modes).map(|n| 2.0 * PI * n as f64 / self.box_length).collect()
    }

    /// Largest momentum.
    pub fn k_max(&self) -> f64 {
        2.0 * PI * self.n_modes as f64 / self.box_length
    }

    /// s_n = √(ν k_n/(πΛ)).
    pub fn amplitudes(&self, filling: f64) -> Vec<f64> {
        self.momenta()
            .iter()
            .map(|k| (filling * k / (PI * self.box_length)).sqrt())
            .collect()
    }

    /// Soft-invariant report: returns a note for each recommended condition
    /// that does not hold (N ≥ 256, k_max·ε ≥ 5, Λ > 4·`max_extent`).
    pub fn diagnostics(&self, max_extent: f64) -> Vec<String> {
        let mut notes = Vec::new();
        if self.n_modes < 256 {
            notes.push(format!("n_modes = {} is below 256", self.n_modes));
        }
        if self.k_max() * self.uv_cutoff < 5.0 {
            notes.push(format!(
                "k_max·ε_uv = {:.3} < 5: the regulator does not suppress the top modes",
                self.k_max() * self.uv_cutoff
            ));
        }
        if self.box_length <= 4.0 * max_extent {
            notes.push(format!(
                "box length {} is not larger than 4 × {}",
                self.box_length, max_extent
            ));
        }
        notes
    }

    /// Error unless [a, b] lies inside the ring's coordinate interval.
    pub fn require_inside(&self, what: &str, a: f64, b: f64) -> Result<()> {
        let h = 0.5 * self.box_length;
        if a < -h || b > h {
            return Err(invalid(format!(
                "{what} extends over [{a:.3}, {b:.3}], outside the box [{:.3}, {:.3}]",
                -h, h
            )));
        }
        Ok(())
    }
}

/// Regularized vacuum correlator Re[−ν/(4π²(Δ − iε)²)] with Δ = x_a − x_b.
pub fn vacuum_correlator(x_a: f64, x_b: f64, filling: f64, uv_cutoff: f64) -> Result<f64> {
    ensure_positive("UV cutoff", uv_cutoff)?;
    let z = Complex64::new(x_a - x_b, -uv_cutoff);
    Ok((-filling / (4.0 * PI * PI) / (z * z)).re)
}

/// Σ_n (ν k_n/(2πΛ)) e^{−k_n ε} cos(k_n Δ): the ring two-point function.
pub fn mode_sum_correlator(basis: &ModeBasis, x_a: f64, x_b: f64, filling: f64) -> f64 {
    let d = x_a - x_b;
    basis
        .momenta()
        .iter()
        .map(|k| filling * k / (2.0 * PI * basis.box_length) * (-k * basis.uv_cutoff).exp() * (k * d).cos())
        .sum()
}

/// Coefficients (length 2N, q block then p block) of ∫ f ϱ given the
/// transforms F(k_n) = ∫ f e^{ik_n x}.
pub fn smeared_row(basis: &ModeBasis, channel: &ChiralChannel, transform: &[Complex64]) -> Vec<f64> {
    let n = basis.n_modes;
    assert_eq!(transform.len(), n);
    let s = basis.amplitudes(channel.filling);
    let chi = channel.chirality.sign();
    let mut row = vec![0.0; 2 * n];
    for i in 0..n {
        row[i] = s[i] * transform[i].re;
        row[n + i] = -chi * s[i] * transform[i].im;
    }
    row
}

/// Coefficients of ∫ ϱ(x) ∂w(x) dx.
pub fn smeared_row_derivative(basis: &ModeBasis, channel: &ChiralChannel, w: &WindowProfile) -> Vec<f64> {
    smeared_row(basis, channel, &w.fourier_derivative(&basis.momenta()))
}

/// Coefficients of ϱ(x) at a point. With `regulated` the UV factor
/// e^{−kε/2} is included.
pub fn point_row(basis: &ModeBasis, channel: &ChiralChannel, x: f64, regulated: bool) -> Vec<f64> {
    let n = basis.n_modes;
    let s = basis.amplitudes(channel.filling);
    let chi = channel.chirality.sign();
    let mut row = vec![0.0; 2 * n];
    for (i, k) in basis.momenta().iter().enumerate() {
        let damp = if regulated { (-0.5 * k * basis.uv_cutoff).exp() } else { 1.0 };
        row[i] = s[i] * damp * (k * x).cos();
        row[n + i] = -chi * s[i] * damp * (k * x).sin();
    }
    row
}

/// ∫ (∂^order w)^power dx by adaptive quadrature to relative 1e-10.
pub fn window_moment(w: &WindowProfile, order: usize, power: u32) -> Result<f64> {
    if order > 3 || !(1..=2).contains(&power) {
        return Err(invalid(format!(
            "window moment of order {order} and power {power} is not supported (order 0..=3, power 1..=2)"
        )));
    }
    let (a, b) = w.default_extent();
    let f = |x: f64| w.jet(x)[order].powi(power as i32);
    let scale = w.amplitude.abs().powi(power as i32) * w.sigma.powi(1 - (order as i32) * power as i32);
    let r = integrate_1d(&f, a, b, &w.breakpoints(), 1e-11, 1e-12 * scale, 2_000_000);
    if !r.converged {
        return Err(crate::Error::Numerical("window moment quadrature did not converge".into()));
    }
    Ok(r.value)
}

/// Comparison of a smeared mode-basis commutator with its continuum value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorCheck {
    /// Imaginary part of [ϱ(f), ϱ(g)] in the truncated basis.
    pub mode_value: f64,
    /// −chirality·(ν/2π)∫ f ∂g.
    pub continuum_value: f64,
    /// |mode − continuum| / |continuum| (absolute difference when the
    /// continuum value is zero).
    pub residual: f64,
}

/// Compare −i[ϱ(f), ϱ(g)] on the basis against the continuum commutator.
pub fn commutator_check(
    basis: &ModeBasis,
    channel: &ChiralChannel,
    f: &WindowProfile,
    g: &WindowProfile,
) -> Result<CommutatorCheck> {
    let ks = basis.momenta();
    let rf = smeared_row(basis, channel, &f.fourier(&ks));
    let rg = smeared_row(basis, channel, &g.fourier(&ks));
    let n = basis.n_modes;
    let mut mode_value = 0.0;
    for i in 0..n {
        mode_value += rf[i] * rg[n + i] - rf[n + i] * rg[i];
    }
    let (a1, b1) = f.default_extent();
    let (a2, b2) = g.default_extent();
    let (a, b) = (a1.max(a2), b1.min(b2));
    let overlap = if f == g {
        // ∫ f ∂f vanishes identically
        0.0
    } else if a < b {
        let mut bp = f.breakpoints();
        bp.extend(g.breakpoints());
        integrate_1d(&|x: f64| f.eval(x) * g.jet(x)[1], a, b, &bp, 1e-12, 1e-300, 1_000_000).value
    } else {
        0.0
    };
    let continuum_value = -channel.chirality.sign() * channel.filling / (2.0 * PI) * overlap;
    let diff = (mode_value - continuum_value).abs();
    let residual = if continuum_value == 0.0 { diff } else { diff / continuum_value.abs() };
    Ok(CommutatorCheck { mode_value, continuum_value, residual })
}
