//! Convergence studies over a sequence of resolutions.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Successive differences of a resolution sweep and what they imply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Resolution levels in the order evaluated.
    pub levels: Vec<f64>,
    /// Quantity at each level.
    pub values: Vec<f64>,
    /// values[i+1] − values[i].
    pub differences: Vec<f64>,
    /// |differences[i+1] / differences[i]|.
    pub ratios: Vec<f64>,
    /// Order p from the last two differences, taking the error ∝ h^p with
    /// h ∝ 1/level.
    pub estimated_order: Option<f64>,
    /// Whether every difference has the same sign.
    pub monotone: bool,
    /// Whether the last difference is within tolerance of the last value.
    pub converged: bool,
    /// Whether differences stopped shrinking.
    pub diverging: bool,
    /// Human-readable notes.
    pub warnings: Vec<String>,
}

/// Evaluate `f` at each level and analyse the sequence.
pub fn convergence_study<F: FnMut(f64) -> f64>(mut f: F, levels: &[f64], rel_tol: f64) -> Result<ConvergenceReport> {
    let values: Vec<f64> = levels.iter().map(|&l| f(l)).collect();
    analyze_sequence(levels, &values, rel_tol)
}

/// Analyse precomputed values on a level sequence.
pub fn analyze_sequence(levels: &[f64], values: &[f64], rel_tol: f64) -> Result<ConvergenceReport> {
    if levels.len() < 3 || levels.len() != values.len() {
        return Err(invalid("convergence study needs at least three levels with one value each"));
    }
    let differences: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = differences
        .windows(2)
        .map(|d| if d[0] == 0.0 { 0.0 } else { (d[1] / d[0]).abs() })
        .collect();
    let m = differences.len();
    let (d1, d2) = (differences[m - 2], differences[m - 1]);
    let refinement = levels[m] / levels[m - 1];
    let estimated_order = if d1 != 0.0 && d2 != 0.0 && refinement > 0.0 && refinement != 1.0 {
        Some((d1.abs() / d2.abs()).ln() / refinement.ln())
    } else {
        None
    };
    let scale = values.last().unwrap().abs().max(f64::MIN_POSITIVE);
    let converged = d2.abs() <= rel_tol * scale;
    let monotone = differences.iter().all(|d| *d >= 0.0) || differences.iter().all(|d| *d <= 0.0);
    let diverging = !converged && ratios.last().is_some_and(|r| *r >= 1.0);
    let mut warnings = Vec::new();
    if diverging {
        warnings.push(format!(
            "differences are not shrinking (last ratio {:.3})",
            ratios.last().unwrap()
        ));
    }
    if !monotone {
        warnings.push("sequence is not monotone".to_string());
    }
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        values: values.to_vec(),
        differences,
        ratios,
        estimated_order,
        monotone,
        converged,
        diverging,
        warnings,
    })
}
