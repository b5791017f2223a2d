//! Conversion between packet current and energy density on channel P.

use crate::error::{ensure_positive, invalid, Result};
use crate::units::CODATA;
use std::f64::consts::PI;

/// ε = πħj²/(ν_P e² v_g) for current j (A), in eV/µm.
pub fn current_energy_relation(current: f64, filling_p: f64, group_velocity: f64) -> Result<f64> {
    if !current.is_finite() {
        return Err(invalid("current must be finite"));
    }
    ensure_positive("filling factor", filling_p)?;
    ensure_positive("group velocity", group_velocity)?;
    let e = CODATA.e_charge;
    let joule_per_m = PI * CODATA.hbar * current * current / (filling_p * e * e * group_velocity);
    Ok(joule_per_m / e * 1e-6)
}

/// Non-negative current (A) carrying energy density `density` (eV/µm).
pub fn energy_current_relation(density: f64, filling_p: f64, group_velocity: f64) -> Result<f64> {
    if !(density.is_finite() && density >= 0.0) {
        return Err(invalid("energy density must be finite and non-negative"));
    }
    ensure_positive("filling factor", filling_p)?;
    ensure_positive("group velocity", group_velocity)?;
    let e = CODATA.e_charge;
    let joule_per_m = density * e * 1e6;
    Ok((joule_per_m * filling_p * e * e * group_velocity / (PI * CODATA.hbar)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_scaling() {
        let e = current_energy_relation(1e-8, 6.0, 1e6).unwrap();
        assert!((energy_current_relation(e, 6.0, 1e6).unwrap() - 1e-8).abs() < 1e-20);
        let e2 = current_energy_relation(2e-8, 6.0, 1e6).unwrap();
        assert!((e2 / e - 4.0).abs() < 1e-12);
        assert_eq!(current_energy_relation(0.0, 6.0, 1e6).unwrap(), 0.0);
        assert!(current_energy_relation(f64::NAN, 6.0, 1e6).is_err());
    }
}
