//! The `estimate`, `scan` and `mc` subcommands.

use super::config::RunConfig;
use super::output::{num, to_csv, to_json, write_atomic, Envelope};
use crate::coupling::{eb_order_estimate, eb_quadrature, scan_distance, EbResult, ScanTable};
use crate::detector::{injected_energy_ea, outcome_density, vacuum_variance};
use crate::error::Result;
use crate::feedback::{gain_alpha, packet_energy_e1};
use crate::protocol::{run_experiment, EnergyReport, ExperimentOutcome, ShotRecord};
use crate::units::{Dimension, UnitSystem};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// One closed-form quantity in both unit systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    /// Value in natural units, absent for quantities defined only in SI.
    pub natural: Option<f64>,
    /// Value in SI units.
    pub si: f64,
    /// SI unit symbol.
    pub si_unit: &'static str,
    /// Value in eV for energies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ev: Option<f64>,
    /// Formula the value comes from.
    pub formula: &'static str,
}

fn natural_quantity(units: &UnitSystem, natural: f64, dim: Dimension, formula: &'static str) -> Quantity {
    Quantity {
        natural: Some(natural),
        si: units.from_natural(natural, dim),
        si_unit: dim.si_symbol(),
        ev: (dim == Dimension::Energy).then(|| units.energy_ev(natural)),
        formula,
    }
}

/// Payload of `estimate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    /// Closed-form quantities by name.
    pub quantities: BTreeMap<&'static str, Quantity>,
    /// Full record of the first-order E_B quadrature.
    pub e_b_quadrature: EbResult,
}

/// Payload of `scan`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    /// Name of the CSV table next to this file.
    pub csv: String,
    /// Energy unit used to convert the table to eV.
    pub energy_unit_ev: f64,
    /// The scan itself, natural units.
    pub table: ScanTable,
}

/// Payload of `mc`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    /// Engine reports; per-shot records are moved to the CSV files.
    pub reports: ExperimentOutcome,
    /// Names of per-shot CSV files written next to this file.
    pub shot_files: Vec<String>,
}

/// Files a command wrote.
pub type Written = Vec<PathBuf>;

fn config_warnings(config: &RunConfig) -> Result<Vec<String>> {
    let p = &config.physical;
    let mut w = p.warnings();
    w.extend(p.detector()?.warnings());
    w.extend(p.feedback()?.warnings(&p.units()?));
    Ok(w)
}

/// Every closed-form quantity of the protocol at the configured parameters.
pub fn estimate_result(config: &RunConfig) -> Result<EstimateResult> {
    let p = &config.physical;
    let units = p.units()?;
    let det = p.detector()?;
    let fb = p.feedback()?;
    let dv = det.delta_v_natural();
    let var_o = vacuum_variance(&det, p.nu_s)?;
    let density = outcome_density(&det, p.nu_s)?;
    let gain = gain_alpha(&fb, p.nu_p, det.delta_v_volts(), &units)?;
    let inputs = p.eb_inputs()?;
    let eb = eb_quadrature(&inputs, &config.quadrature)?;
    let order = eb_order_estimate(inputs.kappa, p.lambda_amplitude, inputs.resistance, dv, p.distance_natural())?;
    let e = Dimension::Energy;
    let v = Dimension::Voltage;
    let mut q = BTreeMap::new();
    q.insert("delta_v", natural_quantity(&units, dv, v, "ΔV = prefactor·√(ħ/(R·C²))"));
    q.insert(
        "vacuum_rms_o",
        natural_quantity(&units, var_o.sqrt(), v, "√Var_vac(R·Q̇_S), Var = R²(ν_S/4π²)∫₀^∞ k|∫∂w_A e^{ikx}dx|² dk"),
    );
    q.insert("outcome_std", natural_quantity(&units, density.variance.sqrt(), v, "σ_v = √(ΔV² + Var_vac(O))"));
    q.insert(
        "fast_detector_margin",
        Quantity { natural: None, si: det.fast_detector_margin(), si_unit: "1", ev: None, formula: "v_g·R·C/l" },
    );
    q.insert("e_a", natural_quantity(&units, injected_energy_ea(&det, p.nu_s)?, e, "E_A = (ν_S/4π)(R/2ΔV)²∫(∂²w_A)²dx"));
    q.insert(
        "alpha",
        Quantity { natural: None, si: gain.alpha, si_unit: "C", ev: None, formula: "α = πħ·max λ_B/(ν_P·ΔV·τ_m)" },
    );
    q.insert(
        "potential_scale",
        Quantity {
            natural: None,
            si: gain.potential_scale_volts,
            si_unit: "V",
            ev: None,
            formula: "O(F_v) = α·ΔV/e",
        },
    );
    q.insert(
        "e_1",
        natural_quantity(
            &units,
            packet_energy_e1(&fb, p.nu_p, var_o, dv)?,
            e,
            "E_1 = (π/ν_P)∫(∂λ_B)²dy·[Var_vac(O)/(4ΔV²) + 1/4]",
        ),
    );
    q.insert(
        "e_b_quadrature",
        natural_quantity(&units, eb.value, e, "first-order E_B: four-dimensional integral of f·w_A·λ_B over the coupled time window"),
    );
    q.insert(
        "e_b_quadrature_error",
        natural_quantity(&units, eb.estimated_quadrature_error, e, "estimated absolute quadrature error of e_b_quadrature"),
    );
    q.insert("e_b_order", natural_quantity(&units, order, e, "E_B ~ κ·λ_B·R/ΔV·(l/L)⁵"));
    q.insert(
        "kappa",
        Quantity {
            natural: Some(inputs.kappa),
            si: inputs.kappa,
            si_unit: "1",
            ev: None,
            formula: "κ = e²/(4π·ε_r·ε₀·ħ·v_g)",
        },
    );
    q.insert("thermal_energy", natural_quantity(&units, p.thermal_energy_natural()?, e, "k_B·T"));
    Ok(EstimateResult { quantities: q, e_b_quadrature: eb })
}

/// `estimate`: write `estimate.json`.
pub fn cmd_estimate(config: &RunConfig) -> Result<Written> {
    let result = estimate_result(config)?;
    let mut warnings = config_warnings(config)?;
    if !result.e_b_quadrature.converged {
        warnings.push("E_B quadrature did not meet its tolerance".into());
    }
    let path = config.output.dir.join("estimate.json");
    write_atomic(&path, &to_json(&Envelope::new("estimate", config, warnings, result)?)?)?;
    Ok(vec![path])
}

/// Header of the scan table.
pub const SCAN_HEADER: [&str; 6] =
    ["L_over_l", "E_B_quadrature_eV", "E_B_quadrature_err_eV", "E_B_order_eV", "evals", "status"];

/// Scan rows plus the footer. The footer's first field is `fit_slope`; it
/// then holds the fitted slope, its standard error, the slope of the order
/// estimate, the number of fitted points and the fit range.
pub fn scan_csv(table: &ScanTable, energy_unit_ev: f64) -> Result<Vec<u8>> {
    let mut rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.distance.to_string(),
                num(r.quadrature.value * energy_unit_ev),
                num(r.quadrature.estimated_quadrature_error * energy_unit_ev),
                num(r.order_estimate * energy_unit_ev),
                r.quadrature.evaluations.to_string(),
                if r.quadrature.converged { "ok" } else { "unconverged" }.to_string(),
            ]
        })
        .collect();
    if let (Some(fit), Some(order)) = (&table.fit, &table.order_fit) {
        let (a, b) = table.fit_range;
        let n = table.rows.iter().filter(|r| r.distance >= a && r.distance <= b && r.quadrature.value > 0.0).count();
        rows.push(vec![
            "fit_slope".into(),
            num(fit.slope),
            num(fit.slope_stderr),
            num(order.slope),
            n.to_string(),
            format!("L/l in [{a}, {b}]"),
        ]);
    }
    to_csv(&SCAN_HEADER, &rows)
}

/// `scan`: write `scan.csv` and its `scan.json` sidecar.
pub fn cmd_scan(config: &RunConfig) -> Result<Written> {
    let p = &config.physical;
    let units = p.units()?;
    let table = scan_distance(
        &p.eb_inputs()?,
        &config.scan.distances,
        p.vgt_fraction,
        &config.quadrature,
        Some(config.scan.fit_range),
    )?;
    let ev = units.energy_ev(1.0);
    let mut warnings = config_warnings(config)?;
    warnings.retain(|w| !w.starts_with("L = "));
    for r in &table.rows {
        if !r.quadrature.converged {
            warnings.push(format!("quadrature at L/l = {} did not meet its tolerance", r.distance));
        }
        if r.distance < 2.0 {
            warnings.push(format!("L/l = {} is below 2; first-order coupling is outside its validity range", r.distance));
        }
    }
    let csv_path = config.output.dir.join("scan.csv");
    let json_path = config.output.dir.join("scan.json");
    write_atomic(&csv_path, &scan_csv(&table, ev)?)?;
    let result = ScanResult { csv: "scan.csv".into(), energy_unit_ev: ev, table };
    write_atomic(&json_path, &to_json(&Envelope::new("scan", config, warnings, result)?)?)?;
    Ok(vec![csv_path, json_path])
}

/// Header of the per-shot tables.
pub const SHOT_HEADER: [&str; 7] =
    ["index", "outcome_V", "drive_V", "E_A_eV", "E_1_eV", "E_2_eV", "E_B_eV"];

/// Per-shot records as CSV, energies in eV.
pub fn shots_csv(shots: &[ShotRecord], energy_unit_ev: f64) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = shots
        .iter()
        .map(|s| {
            vec![
                s.index.to_string(),
                num(s.outcome_volts),
                num(s.drive_volts),
                num(s.e_a * energy_unit_ev),
                num(s.e_1 * energy_unit_ev),
                num(s.e_2 * energy_unit_ev),
                num(s.e_b * energy_unit_ev),
            ]
        })
        .collect();
    to_csv(&SHOT_HEADER, &rows)
}

/// `mc`: write `mc.json` and, when requested, per-shot CSV files.
pub fn cmd_mc(config: &RunConfig) -> Result<Written> {
    let mut outcome = run_experiment(&config.experiment_config())?;
    let ev = config.physical.units()?.energy_ev(1.0);
    let mut written = Vec::new();
    let mut shot_files = Vec::new();
    let mut warnings = config_warnings(config)?;
    let mut take = |report: &mut Option<EnergyReport>| -> Result<()> {
        if let Some(r) = report.as_mut() {
            warnings.extend(r.warnings.iter().map(|w| format!("{}: {w}", r.engine.label())));
            if let Some(shots) = r.shots.take() {
                let name = format!("shots_{}.csv", r.engine.label());
                let path = config.output.dir.join(&name);
                write_atomic(&path, &shots_csv(&shots, ev)?)?;
                written.push(path);
                shot_files.push(name);
            }
        }
        Ok(())
    };
    take(&mut outcome.analytic)?;
    take(&mut outcome.oracle)?;
    warnings.sort();
    warnings.dedup();
    let path = config.output.dir.join("mc.json");
    let result = McResult { reports: outcome, shot_files };
    write_atomic(&path, &to_json(&Envelope::new("mc", config, warnings, result)?)?)?;
    written.push(path);
    Ok(written)
}
