//! Run configuration files.
//!
//! A run file is TOML. Every dimensioned value carries its unit in a string
//! (`R = "10 kohm"`, `L = "20 um"`), dimensionless values are plain numbers,
//! unknown keys are rejected and missing keys take the documented defaults.
//!
//! ```toml
//! [physical]
//! R = "10 kohm"
//! C = "10 fF"
//! L = "40 um"
//!
//! [experiment]
//! arm = "control"
//! shots = 20000
//! ```
//!
//! [`RunConfig::to_toml`] writes the fully resolved file back in base SI
//! units with shortest round-trip number formatting, so parsing the echo
//! reproduces the configuration bit for bit.

use crate::coupling::{EbForm, EbSettings};
use crate::error::{Error, Result};
use crate::field::WindowKind;
use crate::protocol::{Arm, Engine, ExperimentConfig, OracleConfig, PhysicalParams};
use crate::units::{parse_quantity_as, Dimension};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Experiment block of a resolved run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    /// Feedback arm.
    pub arm: Arm,
    /// Monte-Carlo shots.
    pub shots: usize,
    /// Seed of the per-shot streams.
    pub seed: u64,
    /// Engine selection.
    pub engine: Engine,
    /// Coupling scale η.
    pub eta: f64,
    /// Classical noise on the communicated signal (V).
    pub signal_noise: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            arm: Arm::Qet,
            shots: 10_000,
            seed: 0,
            engine: Engine::Analytic,
            eta: 1.0,
            signal_noise: 0.0,
        }
    }
}

/// Distance-scan block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSection {
    /// Distances L/l to evaluate.
    pub distances: Vec<f64>,
    /// Inclusive L/l range of the power-law fit.
    pub fit_range: (f64, f64),
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { distances: (2..=10).map(f64::from).collect(), fit_range: (3.0, 10.0) }
    }
}

/// Output block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    /// Directory receiving the report files.
    pub dir: PathBuf,
    /// Write per-shot records of `mc` as CSV.
    pub per_shot_csv: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("qet-out"), per_shot_csv: false }
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunConfig {
    /// Physical inputs in SI units.
    pub physical: PhysicalParams,
    /// Experiment block.
    pub experiment: ExperimentSection,
    /// Oracle basis.
    pub oracle: OracleConfig,
    /// E_B quadrature tolerances.
    pub quadrature: EbSettings,
    /// Distance scan.
    pub scan: ScanSection,
    /// Output files.
    pub output: OutputSection,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFile {
    physical: Option<RawPhysical>,
    experiment: Option<RawExperiment>,
    oracle: Option<RawOracle>,
    quadrature: Option<RawQuadrature>,
    scan: Option<RawScan>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawPhysical {
    #[serde(rename = "R")]
    resistance: Option<String>,
    #[serde(rename = "C")]
    capacitance: Option<String>,
    v_g: Option<String>,
    #[serde(rename = "nu_S")]
    nu_s: Option<f64>,
    #[serde(rename = "nu_P")]
    nu_p: Option<f64>,
    l: Option<String>,
    #[serde(rename = "L")]
    distance: Option<String>,
    d: Option<String>,
    b_lo: Option<String>,
    b_hi: Option<String>,
    eps_r: Option<f64>,
    #[serde(rename = "T")]
    temperature: Option<String>,
    lambda_amplitude: Option<f64>,
    window_kind: Option<WindowKind>,
    a_lo: Option<String>,
    a_hi: Option<String>,
    sigma_A: Option<String>,
    sigma_B: Option<String>,
    g_s: Option<f64>,
    tau_m: Option<String>,
    vgT_fraction: Option<f64>,
    delta_v_prefactor: Option<f64>,
    eps_uv: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    arm: Option<Arm>,
    shots: Option<usize>,
    seed: Option<u64>,
    engine: Option<Engine>,
    eta: Option<f64>,
    signal_noise: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    box_length_l: Option<f64>,
    n_modes: Option<usize>,
    b_points: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQuadrature {
    form: Option<EbForm>,
    rel_tol: Option<f64>,
    max_evals: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawScan {
    distances_l: Option<Vec<f64>>,
    fit_range_l: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    per_shot_csv: Option<bool>,
}

fn quantity(slot: &mut f64, text: &Option<String>, key: &str, dim: Dimension) -> Result<()> {
    if let Some(t) = text {
        *slot = parse_quantity_as(t, dim).map_err(|e| Error::Config(format!("key `{key}`: {e}")))?;
    }
    Ok(())
}

fn plain<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunConfig {
    /// Parse a run file, filling missing keys from the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        if let Some(p) = raw.physical {
            let c = &mut cfg.physical;
            quantity(&mut c.resistance, &p.resistance, "R", Dimension::Resistance)?;
            quantity(&mut c.capacitance, &p.capacitance, "C", Dimension::Capacitance)?;
            quantity(&mut c.group_velocity, &p.v_g, "v_g", Dimension::Velocity)?;
            plain(&mut c.nu_s, p.nu_s);
            plain(&mut c.nu_p, p.nu_p);
            quantity(&mut c.length_unit, &p.l, "l", Dimension::Length)?;
            quantity(&mut c.distance, &p.distance, "L", Dimension::Length)?;
            quantity(&mut c.separation, &p.d, "d", Dimension::Length)?;
            quantity(&mut c.b_lo, &p.b_lo, "b_lo", Dimension::Length)?;
            quantity(&mut c.b_hi, &p.b_hi, "b_hi", Dimension::Length)?;
            plain(&mut c.eps_rel, p.eps_r);
            quantity(&mut c.temperature, &p.temperature, "T", Dimension::Temperature)?;
            plain(&mut c.lambda_amplitude, p.lambda_amplitude);
            plain(&mut c.window_kind, p.window_kind);
            quantity(&mut c.detector_lo, &p.a_lo, "a_lo", Dimension::Length)?;
            quantity(&mut c.detector_hi, &p.a_hi, "a_hi", Dimension::Length)?;
            quantity(&mut c.detector_smoothing, &p.sigma_A, "sigma_A", Dimension::Length)?;
            quantity(&mut c.lambda_smoothing, &p.sigma_B, "sigma_B", Dimension::Length)?;
            plain(&mut c.gain_sign, p.g_s);
            quantity(&mut c.pulse_width, &p.tau_m, "tau_m", Dimension::Time)?;
            plain(&mut c.vgt_fraction, p.vgT_fraction);
            plain(&mut c.delta_v_prefactor, p.delta_v_prefactor);
            quantity(&mut c.uv_cutoff, &p.eps_uv, "eps_uv", Dimension::Length)?;
        }
        if let Some(e) = raw.experiment {
            let c = &mut cfg.experiment;
            plain(&mut c.arm, e.arm);
            plain(&mut c.shots, e.shots);
            plain(&mut c.seed, e.seed);
            plain(&mut c.engine, e.engine);
            plain(&mut c.eta, e.eta);
            quantity(&mut c.signal_noise, &e.signal_noise, "signal_noise", Dimension::Voltage)?;
        }
        if let Some(o) = raw.oracle {
            plain(&mut cfg.oracle.box_length, o.box_length_l);
            plain(&mut cfg.oracle.n_modes, o.n_modes);
            plain(&mut cfg.oracle.b_points, o.b_points);
        }
        if let Some(q) = raw.quadrature {
            plain(&mut cfg.quadrature.form, q.form);
            plain(&mut cfg.quadrature.rel_tol, q.rel_tol);
            plain(&mut cfg.quadrature.max_evals, q.max_evals);
        }
        if let Some(s) = raw.scan {
            if let Some(d) = s.distances_l {
                cfg.scan.distances = d;
            }
            if let Some([a, b]) = s.fit_range_l {
                cfg.scan.fit_range = (a, b);
            }
        }
        if let Some(o) = raw.output {
            if let Some(d) = o.dir {
                cfg.output.dir = d;
            }
            plain(&mut cfg.output.per_shot_csv, o.per_shot_csv);
        }
        Ok(cfg)
    }

    /// Read and parse a run file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Check every domain; failures are configuration errors.
    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        };
        self.experiment_config().validate().map_err(as_config)?;
        if !(self.quadrature.rel_tol > 0.0 && self.quadrature.rel_tol < 1.0) || self.quadrature.max_evals == 0 {
            return Err(Error::Config("quadrature needs 0 < rel_tol < 1 and a positive evaluation budget".into()));
        }
        if self.scan.distances.is_empty() || self.scan.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Config("scan distances must be a non-empty list of positive numbers".into()));
        }
        let (a, b) = self.scan.fit_range;
        if !(a.is_finite() && b.is_finite() && 0.0 < a && a < b) {
            return Err(Error::Config(format!("fit range [{a}, {b}] must satisfy 0 < lo < hi")));
        }
        Ok(())
    }

    /// Library view of the experiment.
    pub fn experiment_config(&self) -> ExperimentConfig {
        let e = &self.experiment;
        ExperimentConfig {
            params: self.physical,
            arm: e.arm,
            n_shots: e.shots,
            seed: e.seed,
            engine: e.engine,
            eta: e.eta,
            oracle: self.oracle,
            signal_noise: e.signal_noise,
            quadrature: self.quadrature,
            keep_shots: self.output.per_shot_csv,
        }
    }

    /// The resolved configuration as a run file in base SI units.
    pub fn to_toml(&self) -> String {
        let p = &self.physical;
        let mut s = String::new();
        let q = |s: &mut String, key: &str, v: f64, unit: &str| {
            let _ = writeln!(s, "{key} = \"{v:e} {unit}\"");
        };
        let n = |s: &mut String, key: &str, v: f64| {
            let _ = writeln!(s, "{key} = {}", toml_float(v));
        };
        s.push_str("[physical]\n");
        q(&mut s, "R", p.resistance, "ohm");
        q(&mut s, "C", p.capacitance, "F");
        q(&mut s, "v_g", p.group_velocity, "m/s");
        n(&mut s, "nu_S", p.nu_s);
        n(&mut s, "nu_P", p.nu_p);
        q(&mut s, "l", p.length_unit, "m");
        q(&mut s, "L", p.distance, "m");
        q(&mut s, "d", p.separation, "m");
        q(&mut s, "b_lo", p.b_lo, "m");
        q(&mut s, "b_hi", p.b_hi, "m");
        n(&mut s, "eps_r", p.eps_rel);
        q(&mut s, "T", p.temperature, "K");
        n(&mut s, "lambda_amplitude", p.lambda_amplitude);
        let kind = match p.window_kind {
            WindowKind::SmoothedRect => "smoothed_rect",
            WindowKind::CompactBump => "compact_bump",
        };
        let _ = writeln!(s, "window_kind = \"{kind}\"");
        q(&mut s, "a_lo", p.detector_lo, "m");
        q(&mut s, "a_hi", p.detector_hi, "m");
        q(&mut s, "sigma_A", p.detector_smoothing, "m");
        q(&mut s, "sigma_B", p.lambda_smoothing, "m");
        n(&mut s, "g_s", p.gain_sign);
        q(&mut s, "tau_m", p.pulse_width, "s");
        n(&mut s, "vgT_fraction", p.vgt_fraction);
        n(&mut s, "delta_v_prefactor", p.delta_v_prefactor);
        q(&mut s, "eps_uv", p.uv_cutoff, "m");
        let e = &self.experiment;
        s.push_str("\n[experiment]\n");
        let _ = writeln!(s, "arm = \"{}\"", e.arm.label());
        let _ = writeln!(s, "shots = {}", e.shots);
        let _ = writeln!(s, "seed = {}", e.seed);
        let _ = writeln!(s, "engine = \"{}\"", e.engine.label());
        n(&mut s, "eta", e.eta);
        q(&mut s, "signal_noise", e.signal_noise, "V");
        s.push_str("\n[oracle]\n");
        n(&mut s, "box_length_l", self.oracle.box_length);
        let _ = writeln!(s, "n_modes = {}", self.oracle.n_modes);
        let _ = writeln!(s, "b_points = {}", self.oracle.b_points);
        s.push_str("\n[quadrature]\n");
        let form = match self.quadrature.form {
            EbForm::Auto => "auto",
            EbForm::Collapsed => "collapsed",
            EbForm::Regularized => "regularized",
        };
        let _ = writeln!(s, "form = \"{form}\"");
        n(&mut s, "rel_tol", self.quadrature.rel_tol);
        let _ = writeln!(s, "max_evals = {}", self.quadrature.max_evals);
        s.push_str("\n[scan]\n");
        let list: Vec<String> = self.scan.distances.iter().map(|d| toml_float(*d)).collect();
        let _ = writeln!(s, "distances_l = [{}]", list.join(", "));
        let _ = writeln!(
            s,
            "fit_range_l = [{}, {}]",
            toml_float(self.scan.fit_range.0),
            toml_float(self.scan.fit_range.1)
        );
        s.push_str("\n[output]\n");
        let _ = writeln!(s, "dir = {}", toml_string(&self.output.dir.to_string_lossy()));
        let _ = writeln!(s, "per_shot_csv = {}", self.output.per_shot_csv);
        s
    }
}

/// A float TOML parses back as a float: shortest round-trip digits, with an
/// exponent so integral values are not read as integers.
fn toml_float(v: f64) -> String {
    format!("{v:e}")
}

fn toml_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn units_are_parsed() {
        let c = RunConfig::from_toml_str("[physical]\nR = \"20 kohm\"\nC = \"5fF\"\nL = \"40 um\"\nT = \"50 mK\"\n").unwrap();
        assert_eq!(c.physical.resistance, 2e4);
        assert!((c.physical.capacitance - 5e-15).abs() < 1e-30);
        assert!((c.physical.distance - 4e-5).abs() < 1e-20);
        assert!((c.physical.temperature - 0.05).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_and_bare_quantities_are_rejected() {
        assert!(matches!(RunConfig::from_toml_str("[physical]\nRR = \"1 ohm\"\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[bogus]\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[physical]\nR = \"10\"\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml_str("[physical]\nR = \"10 fF\"\n"), Err(Error::Config(_))));
    }

    #[test]
    fn echo_round_trips_exactly() {
        let mut c = RunConfig::default();
        c.physical.distance = 3.3e-5;
        c.experiment.eta = 5e-4;
        c.experiment.arm = Arm::Control;
        c.scan.distances = vec![2.0, 2.5];
        let back = RunConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }
}
