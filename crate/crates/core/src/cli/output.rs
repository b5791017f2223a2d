//! Report envelopes, CSV tables and atomic file writes.

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::units::{Dimension, UnitSystem};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Conversion factors between natural and SI units for a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitConventions {
    /// Statement of the natural unit system.
    pub natural_units: &'static str,
    /// l in metres.
    pub length_unit_m: f64,
    /// v_g in m/s.
    pub velocity_unit_m_per_s: f64,
    /// Natural time unit l/v_g in seconds.
    pub time_unit_s: f64,
    /// Natural energy unit ħv_g/l in joules.
    pub energy_unit_j: f64,
    /// Natural energy unit in eV.
    pub energy_unit_ev: f64,
    /// Natural voltage unit ħv_g/(el) in volts.
    pub voltage_unit_v: f64,
    /// Natural resistance unit ħ/e² in ohms.
    pub resistance_unit_ohm: f64,
}

impl UnitConventions {
    /// Conventions of `units`.
    pub fn of(units: &UnitSystem) -> Self {
        UnitConventions {
            natural_units: "hbar = v_g = e = 1; lengths in units of l",
            length_unit_m: units.length_unit,
            velocity_unit_m_per_s: units.velocity_unit,
            time_unit_s: units.time_unit(),
            energy_unit_j: units.energy_unit(),
            energy_unit_ev: units.energy_ev(1.0),
            voltage_unit_v: units.voltage_unit(),
            resistance_unit_ohm: units.unit_of(Dimension::Resistance),
        }
    }
}

/// The wrapper written around every JSON result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    /// Program name.
    pub tool: &'static str,
    /// Program version.
    pub version: &'static str,
    /// Subcommand that produced the file.
    pub command: &'a str,
    /// Seed of the Monte-Carlo streams.
    pub seed: u64,
    /// Unit conventions.
    pub units: UnitConventions,
    /// Structured resolved configuration.
    pub resolved_config: &'a RunConfig,
    /// The same configuration as a run file that reproduces this output.
    pub resolved_config_toml: String,
    /// Regime warnings.
    pub warnings: Vec<String>,
    /// Command payload.
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    /// Envelope for `config` around `result`.
    pub fn new(command: &'a str, config: &'a RunConfig, warnings: Vec<String>, result: T) -> Result<Self> {
        Ok(Envelope {
            tool: "qet",
            version: crate::VERSION,
            command,
            seed: config.experiment.seed,
            units: UnitConventions::of(&config.physical.units()?),
            resolved_config: config,
            resolved_config_toml: config.to_toml(),
            warnings,
            result,
        })
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create `{}`: {e}", dir.display())))?;
    let name = path.file_name().ok_or_else(|| Error::Io(format!("`{}` is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::Io(format!("cannot write `{}`: {e}", path.display())));
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    v.push(b'\n');
    Ok(v)
}

/// RFC 4180 CSV: CRLF records, quoting only where needed.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Shortest decimal that parses back to the same f64.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}
