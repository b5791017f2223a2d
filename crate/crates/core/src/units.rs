//! Physical constants and the natural unit system.
//!
//! Internally every quantity is expressed with ħ = v_g = e = 1 and a length
//! unit `l` (10 µm by default). A natural energy is then ħ·v_g/l, a natural
//! time is l/v_g and a natural voltage is ħ·v_g/(e·l). The conversion factors
//! for every dimension the simulator handles come from [`UnitSystem::unit_of`].

use crate::error::{ensure_positive, Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// CODATA 2018 constants (exact SI definitions where applicable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
    /// Elementary charge, C.
    pub e_charge: f64,
    /// Vacuum permittivity, F/m.
    pub eps0: f64,
    /// Boltzmann constant, J/K.
    pub k_b: f64,
}

/// The constants used everywhere in the crate.
pub const CODATA: Constants = Constants {
    hbar: 1.054_571_817e-34,
    e_charge: 1.602_176_634e-19,
    eps0: 8.854_187_812_8e-12,
    k_b: 1.380_649e-23,
};

/// Physical dimensions understood by the conversion routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    /// Metres.
    Length,
    /// Seconds.
    Time,
    /// Joules.
    Energy,
    /// Volts.
    Voltage,
    /// Coulombs.
    Charge,
    /// Coulombs per metre.
    ChargeDensity,
    /// Ohms.
    Resistance,
    /// Farads.
    Capacitance,
    /// Amperes.
    Current,
    /// Metres per second.
    Velocity,
    /// Joules per metre.
    EnergyDensity,
    /// Kelvin, converted through k_B.
    Temperature,
    /// Pure number.
    Dimensionless,
}

impl Dimension {
    /// All supported dimensions, in a fixed order.
    pub const ALL: [Dimension; 13] = [
        Dimension::Length,
        Dimension::Time,
        Dimension::Energy,
        Dimension::Voltage,
        Dimension::Charge,
        Dimension::ChargeDensity,
        Dimension::Resistance,
        Dimension::Capacitance,
        Dimension::Current,
        Dimension::Velocity,
        Dimension::EnergyDensity,
        Dimension::Temperature,
        Dimension::Dimensionless,
    ];

    /// Tag used in config files and reports.
    pub fn tag(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Energy => "energy",
            Dimension::Voltage => "voltage",
            Dimension::Charge => "charge",
            Dimension::ChargeDensity => "charge-density",
            Dimension::Resistance => "resistance",
            Dimension::Capacitance => "capacitance",
            Dimension::Current => "current",
            Dimension::Velocity => "velocity",
            Dimension::EnergyDensity => "energy-density",
            Dimension::Temperature => "temperature",
            Dimension::Dimensionless => "dimensionless",
        }
    }

    /// SI unit symbol.
    pub fn si_symbol(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::Energy => "J",
            Dimension::Voltage => "V",
            Dimension::Charge => "C",
            Dimension::ChargeDensity => "C/m",
            Dimension::Resistance => "ohm",
            Dimension::Capacitance => "F",
            Dimension::Current => "A",
            Dimension::Velocity => "m/s",
            Dimension::EnergyDensity => "J/m",
            Dimension::Temperature => "K",
            Dimension::Dimensionless => "1",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .iter()
            .copied()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::UnknownDimension(s.to_string()))
    }
}

/// Natural unit system with ħ = v_g = e = 1 and a chosen length unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Length unit l in metres.
    pub length_unit: f64,
    /// Velocity unit v_g in m/s.
    pub velocity_unit: f64,
    /// Constants the conversions are built from.
    pub constants: Constants,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem {
            length_unit: 1e-5,
            velocity_unit: 1e6,
            constants: CODATA,
        }
    }
}

impl UnitSystem {
    /// Unit system with CODATA constants.
    pub fn new(length_unit: f64, velocity_unit: f64) -> Result<Self> {
        ensure_positive("length unit", length_unit)?;
        ensure_positive("velocity unit", velocity_unit)?;
        Ok(UnitSystem {
            length_unit,
            velocity_unit,
            constants: CODATA,
        })
    }

    /// ħ·v_g/l in joules.
    pub fn energy_unit(&self) -> f64 {
        self.constants.hbar * self.velocity_unit / self.length_unit
    }

    /// l/v_g in seconds.
    pub fn time_unit(&self) -> f64 {
        self.length_unit / self.velocity_unit
    }

    /// Charge unit e in coulombs.
    pub fn charge_unit(&self) -> f64 {
        self.constants.e_charge
    }

    /// ħ·v_g/(e·l) in volts.
    pub fn voltage_unit(&self) -> f64 {
        self.energy_unit() / self.constants.e_charge
    }

    /// Size in SI of one natural unit of `dim`.
    pub fn unit_of(&self, dim: Dimension) -> f64 {
        let c = &self.constants;
        let l = self.length_unit;
        let v = self.velocity_unit;
        match dim {
            Dimension::Length => l,
            Dimension::Time => l / v,
            Dimension::Energy => self.energy_unit(),
            Dimension::Voltage => self.voltage_unit(),
            Dimension::Charge => c.e_charge,
            Dimension::ChargeDensity => c.e_charge / l,
            Dimension::Resistance => c.hbar / (c.e_charge * c.e_charge),
            Dimension::Capacitance => c.e_charge * c.e_charge * l / (c.hbar * v),
            Dimension::Current => c.e_charge * v / l,
            Dimension::Velocity => v,
            Dimension::EnergyDensity => self.energy_unit() / l,
            Dimension::Temperature => self.energy_unit() / c.k_b,
            Dimension::Dimensionless => 1.0,
        }
    }

    /// Convert an SI value of dimension `dim` to natural units.
    pub fn to_natural(&self, value: f64, dim: Dimension) -> f64 {
        value / self.unit_of(dim)
    }

    /// Convert a natural value of dimension `dim` to SI.
    pub fn from_natural(&self, value: f64, dim: Dimension) -> f64 {
        value * self.unit_of(dim)
    }

    /// Tag-based variant of [`UnitSystem::to_natural`].
    pub fn to_natural_tagged(&self, value: f64, tag: &str) -> Result<f64> {
        Ok(self.to_natural(value, tag.parse()?))
    }

    /// Tag-based variant of [`UnitSystem::from_natural`].
    pub fn from_natural_tagged(&self, value: f64, tag: &str) -> Result<f64> {
        Ok(self.from_natural(value, tag.parse()?))
    }

    /// Natural energy expressed in electron-volts.
    pub fn energy_ev(&self, natural: f64) -> f64 {
        self.from_natural(natural, Dimension::Energy) / self.constants.e_charge
    }

    /// Coulomb coupling strength e²/(4π ε_r ε₀ ħ v_g), dimensionless.
    pub fn coulomb_coupling(&self, eps_rel: f64) -> f64 {
        let c = &self.constants;
        c.e_charge * c.e_charge
            / (4.0 * std::f64::consts::PI * eps_rel * c.eps0 * c.hbar * self.velocity_unit)
    }
}

/// k_B·T in µeV.
pub fn thermal_energy_uev(temperature_k: f64) -> f64 {
    CODATA.k_b * temperature_k / CODATA.e_charge * 1e6
}

/// A parsed SI quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    /// Value in base SI units (eV-valued input is converted to joules).
    pub si: f64,
    /// Dimension of the quantity.
    pub dimension: Dimension,
}

const BASE_UNITS: [(&str, Dimension, f64); 12] = [
    ("ohm", Dimension::Resistance, 1.0),
    ("Ohm", Dimension::Resistance, 1.0),
    ("Ω", Dimension::Resistance, 1.0),
    ("eV", Dimension::Energy, 1.602_176_634e-19),
    ("m", Dimension::Length, 1.0),
    ("s", Dimension::Time, 1.0),
    ("J", Dimension::Energy, 1.0),
    ("V", Dimension::Voltage, 1.0),
    ("C", Dimension::Charge, 1.0),
    ("F", Dimension::Capacitance, 1.0),
    ("A", Dimension::Current, 1.0),
    ("K", Dimension::Temperature, 1.0),
];

fn prefix_factor(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        _ => return None,
    })
}

fn parse_simple_unit(u: &str) -> Option<(Dimension, f64)> {
    for (sym, dim, base) in BASE_UNITS {
        if let Some(prefix) = u.strip_suffix(sym) {
            if let Some(f) = prefix_factor(prefix) {
                return Some((dim, f * base));
            }
        }
    }
    None
}

fn parse_unit(u: &str) -> Option<(Dimension, f64)> {
    if let Some((num, den)) = u.split_once('/') {
        let (dn, fn_) = parse_simple_unit(num)?;
        let (dd, fd) = parse_simple_unit(den)?;
        let dim = match (dn, dd) {
            (Dimension::Length, Dimension::Time) => Dimension::Velocity,
            (Dimension::Energy, Dimension::Length) => Dimension::EnergyDensity,
            (Dimension::Charge, Dimension::Length) => Dimension::ChargeDensity,
            _ => return None,
        };
        Some((dim, fn_ / fd))
    } else {
        parse_simple_unit(u)
    }
}

/// Parse a quantity such as `"10 kohm"`, `"10fF"` or `"1e6 m/s"`.
///
/// A bare number is accepted as dimensionless.
pub fn parse_quantity(text: &str) -> Result<Quantity> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|(i, c)| {
            !(c.is_ascii_digit()
                || *c == '.'
                || *c == '+'
                || *c == '-'
                || ((*c == 'e' || *c == 'E')
                    && t[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+')))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse number in quantity `{text}`")))?;
    if !value.is_finite() {
        return Err(Error::Config(format!("non-finite quantity `{text}`")));
    }
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(Quantity {
            si: value,
            dimension: Dimension::Dimensionless,
        });
    }
    let (dimension, factor) =
        parse_unit(unit).ok_or_else(|| Error::Config(format!("unknown unit `{unit}` in `{text}`")))?;
    Ok(Quantity {
        si: value * factor,
        dimension,
    })
}

/// Parse a quantity and require a specific dimension.
pub fn parse_quantity_as(text: &str, dim: Dimension) -> Result<f64> {
    let q = parse_quantity(text)?;
    if q.dimension != dim {
        return Err(Error::Config(format!(
            "`{text}` has dimension {}, expected {}",
            q.dimension, dim
        )));
    }
    Ok(q.si)
}

/// Format an SI value with its unit symbol, for reports and config echoes.
pub fn format_quantity(si: f64, dim: Dimension) -> String {
    format!("{si:e} {}", dim.si_symbol())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_length_and_time() {
        let u = UnitSystem::default();
        assert_eq!(u.to_natural(1e-5, Dimension::Length), 1.0);
        assert!((u.to_natural(1e-11, Dimension::Time) - 1.0).abs() < 1e-15);
        assert_eq!(u.from_natural(2.0, Dimension::Length), 2e-5);
        assert_eq!(u.from_natural(0.0, Dimension::Energy), 0.0);
    }

    #[test]
    fn energy_unit_matches_direct_formula() {
        let u = UnitSystem::default();
        let ev = 1.054_571_817e-34 * 1e6 / 1e-5 / 1.602_176_634e-19;
        assert!((u.energy_ev(1.0) - ev).abs() < 1e-18);
        assert!((u.energy_ev(1.0) * 1e6 - 65.82).abs() < 0.01);
    }

    #[test]
    fn unknown_tag_rejected() {
        let u = UnitSystem::default();
        assert!(matches!(
            u.to_natural_tagged(1.0, "luminosity"),
            Err(Error::UnknownDimension(_))
        ));
        assert_eq!(u.to_natural_tagged(1e-5, "length").unwrap(), 1.0);
    }

    #[test]
    fn thermal_comparison() {
        let t = thermal_energy_uev(0.01);
        assert!((0.5..=1.5).contains(&t), "{t}");
    }

    #[test]
    fn quantity_parsing() {
        let q = parse_quantity("10 kohm").unwrap();
        assert_eq!(q.dimension, Dimension::Resistance);
        assert!((q.si - 1e4).abs() < 1e-9);
        assert!((parse_quantity_as("10fF", Dimension::Capacitance).unwrap() - 1e-14).abs() < 1e-28);
        assert!((parse_quantity_as("1e6 m/s", Dimension::Velocity).unwrap() - 1e6).abs() < 1e-6);
        assert!((parse_quantity_as("10 mK", Dimension::Temperature).unwrap() - 0.01).abs() < 1e-15);
        assert!((parse_quantity_as("-10 um", Dimension::Length).unwrap() + 1e-5).abs() < 1e-18);
        assert!((parse_quantity_as("65.8 ueV", Dimension::Energy).unwrap() - 65.8e-6 * 1.602_176_634e-19).abs() < 1e-30);
        assert!(parse_quantity("10 furlongs").is_err());
        assert!(parse_quantity_as("10 m", Dimension::Time).is_err());
        assert_eq!(parse_quantity("3").unwrap().dimension, Dimension::Dimensionless);
    }
}
