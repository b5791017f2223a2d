//! Invariant suites run by `qet check`.
//!
//! Each suite is a list of named properties evaluated on small but
//! representative configurations. Every suite receives a [`CheckContext`]
//! whose constants feed the unit system, which lets a fault be injected
//! end to end as a negative control.

use crate::coupling::{eb_quadrature, scan_distance, EbSettings};
use crate::detector::{injected_energy_ea, outcome_density, vacuum_variance, DetectorParams};
use crate::error::Result;
use crate::feedback::{coherent_waveform, displacement_from_outcome, packet_energy_e1};
use crate::field::{
    commutator_check, mode_sum_correlator, point_row, vacuum_correlator, ChiralChannel, Chirality, ModeBasis,
    WindowProfile,
};
use crate::gaussian_engine::{
    measure_linear, symplectic_matrix, symplectic_residual, GaussianState, LinearObservable, PhaseSpace,
    QuadraticGenerator, Readout,
};
use crate::protocol::{
    current_energy_relation, run_experiment, Arm, DriveMoments, Engine, ExperimentConfig, OracleConfig,
    OracleModel, PhysicalParams,
};
use crate::units::{parse_quantity_as, Constants, Dimension, UnitSystem, CODATA};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

/// Faults that `check` can inject to prove that the suites detect them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// ħ scaled by 1.01.
    Constants,
}

impl Fault {
    /// Parse a fault name.
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "constants" => Some(Fault::Constants),
            _ => None,
        }
    }
}

/// Inputs shared by the suites.
#[derive(Debug, Clone, Copy)]
pub struct CheckContext {
    /// Constants behind every unit conversion in the suites.
    pub constants: Constants,
    /// Physical defaults.
    pub params: PhysicalParams,
}

impl CheckContext {
    /// Defaults, optionally with a fault applied.
    pub fn new(fault: Option<Fault>) -> Self {
        let mut constants = CODATA;
        if fault == Some(Fault::Constants) {
            constants.hbar *= 1.01;
        }
        CheckContext { constants, params: PhysicalParams::default() }
    }

    fn units(&self) -> UnitSystem {
        UnitSystem {
            length_unit: self.params.length_unit,
            velocity_unit: self.params.group_velocity,
            constants: self.constants,
        }
    }

    fn detector(&self) -> Result<DetectorParams> {
        let p = &self.params;
        DetectorParams::new(p.resistance, p.capacitance, p.detector_window()?, p.delta_v_prefactor, self.units())
    }
}

/// Outcome of one property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    /// `suite::property`.
    pub name: String,
    /// Whether the property held.
    pub passed: bool,
    /// Measured values.
    pub detail: String,
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    /// Suite name.
    pub suite: &'static str,
    /// Wall time in seconds.
    pub seconds: f64,
    /// Properties in evaluation order.
    pub properties: Vec<PropertyResult>,
}

impl SuiteResult {
    /// Whether every property held.
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }
}

struct Recorder {
    suite: &'static str,
    out: Vec<PropertyResult>,
}

impl Recorder {
    fn new(suite: &'static str) -> Self {
        Recorder { suite, out: Vec::new() }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.out.push(PropertyResult { name: format!("{}::{name}", self.suite), passed, detail });
    }

    /// Record a property whose evaluation may fail; an error counts as a failure.
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<(bool, String)>) {
        match f() {
            Ok((ok, detail)) => self.check(name, ok, detail),
            Err(e) => self.check(name, false, format!("error: {e}")),
        }
    }
}

type Suite = fn(&CheckContext, &mut Recorder);

const SUITES: [(&str, Suite); 8] = [
    ("units", units_suite),
    ("field", field_suite),
    ("gaussian_engine", gaussian_suite),
    ("detector", detector_suite),
    ("feedback", feedback_suite),
    ("coupling", coupling_suite),
    ("protocol", protocol_suite),
    ("relations", relations_suite),
];

/// Names of the suites in run order.
pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Run every suite.
pub fn run_suites(ctx: &CheckContext) -> Vec<SuiteResult> {
    SUITES
        .iter()
        .map(|(name, suite)| {
            let start = Instant::now();
            let mut r = Recorder::new(name);
            suite(ctx, &mut r);
            SuiteResult { suite: name, seconds: start.elapsed().as_secs_f64(), properties: r.out }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn units_suite(ctx: &CheckContext, r: &mut Recorder) {
    let u = ctx.units();
    r.run("delta_v_reference", || {
        let dv = ctx.detector()?.delta_v_volts();
        Ok(((dv - 1.0269e-5).abs() < 0.5e-9, format!("ΔV = {dv:.6e} V, reference 1.0269e-5 V")))
    });
    let ev = u.energy_ev(1.0);
    r.check(
        "energy_unit_reference",
        rel(ev, 6.582_119_569e-5) < 1e-9,
        format!("ħv_g/l = {ev:.10e} eV, reference 6.582119569e-5 eV"),
    );
    let rk = 2.0 * PI * u.unit_of(Dimension::Resistance);
    r.check(
        "von_klitzing_reference",
        rel(rk, 25_812.807_45) < 1e-9,
        format!("h/e² = {rk:.5} Ω, reference 25812.80745 Ω"),
    );
    let worst = Dimension::ALL
        .iter()
        .map(|d| rel(u.from_natural(u.to_natural(3.7, *d), *d), 3.7))
        .fold(0.0, f64::max);
    r.check("natural_round_trip", worst < 1e-14, format!("worst relative residual {worst:.2e}"));
    r.run("quantity_parsing", || {
        let ok = parse_quantity_as("10 kohm", Dimension::Resistance)? == 1e4
            && rel(parse_quantity_as("10 fF", Dimension::Capacitance)?, 1e-14) < 1e-15
            && parse_quantity_as("1e6 m/s", Dimension::Velocity)? == 1e6
            && parse_quantity_as("10 kohm", Dimension::Capacitance).is_err();
        Ok((ok, "10 kohm, 10 fF, 1e6 m/s and a dimension mismatch".into()))
    });
}

fn field_suite(_ctx: &CheckContext, r: &mut Recorder) {
    r.run("vacuum_correlator_reference", || {
        let c = vacuum_correlator(0.0, 1.0, 1.0, 1e-9)?;
        let reference = -1.0 / (4.0 * PI * PI);
        Ok((rel(c, reference) < 1e-12, format!("{c:.9} vs −1/(4π²) = {reference:.9}")))
    });
    r.run("mode_sum_matches_continuum", || {
        let basis = ModeBasis::new(64.0, 2048, 0.08)?;
        let mut worst = 0.0f64;
        for sep in [0.8, 1.0, 2.0, 3.5] {
            let m = mode_sum_correlator(&basis, 0.0, sep, 1.0);
            let c = vacuum_correlator(0.0, sep, 1.0, 0.08)?;
            worst = worst.max(rel(m, c));
        }
        Ok((worst < 0.01, format!("worst relative deviation {worst:.2e} on separations 0.8 to 3.5")))
    });
    r.run("commutator_matches_continuum", || {
        let basis = ModeBasis::new(64.0, 2048, 0.01)?;
        let ch = ChiralChannel::new(3.0, Chirality::Left)?;
        let f = WindowProfile::smoothed_rect(-1.5, -0.5, 0.5, 1.0)?;
        let g = WindowProfile::smoothed_rect(-1.0, 1.0, 0.5, 1.0)?;
        let c = commutator_check(&basis, &ch, &f, &g)?;
        Ok((c.residual < 1e-6, format!("mode {:.9e}, continuum {:.9e}", c.mode_value, c.continuum_value)))
    });
}

fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    // deterministic pseudo-random entries from a simple congruential walk
    let mut x = seed;
    let mut next = || {
        x = x.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let m = DMatrix::from_fn(n, n, |_, _| next());
    &m * m.transpose() + DMatrix::identity(n, n) * 0.5
}

fn gaussian_suite(_ctx: &CheckContext, r: &mut Recorder) {
    let space = PhaseSpace::two_channel(2, 2);
    let gen = QuadraticGenerator::quadratic(random_spd(space.dim(), 11));
    r.run("evolution_is_symplectic", || {
        let (s, _) = symplectic_matrix(&space, &gen, 1.7)?;
        let res = symplectic_residual(&space, &s);
        Ok((res < 1e-10, format!("‖SᵀΩS − Ω‖_max = {res:.2e}")))
    });
    let vacuum = GaussianState::vacuum(space.clone());
    r.run("vacuum_is_physical", || {
        let e = vacuum.uncertainty_min_eigenvalue();
        Ok((e.abs() < 1e-12 && vacuum.mean.amax() == 0.0, format!("min eigenvalue of cov + iΩ/2 = {e:.2e}")))
    });
    r.run("measurement_and_evolution_stay_physical", || {
        let obs = LinearObservable::new(space.embed(0, &[0.3, -0.2, 0.5, 0.1]));
        let rec = measure_linear(&vacuum, &obs, 0.04, Readout::Fixed(0.7))?;
        let evolved = rec.post_state.evolve(&gen, 0.9)?;
        evolved.validate(1e-9)?;
        Ok((true, format!("min eigenvalue {:.2e}", evolved.uncertainty_min_eigenvalue())))
    });
}

fn detector_suite(ctx: &CheckContext, r: &mut Recorder) {
    r.run("povm_normalization", || {
        let d = outcome_density(&ctx.detector()?, ctx.params.nu_s)?;
        let n = d.normalization(8.0);
        Ok(((n - 1.0).abs() < 1e-9, format!("∫p dv over ±8σ = {n:.15}")))
    });
    r.run("delta_v_band", || {
        let dv = ctx.detector()?.delta_v_volts() * 1e6;
        Ok(((3.0..=30.0).contains(&dv), format!("ΔV = {dv:.3} µV, band [3, 30]")))
    });
    r.run("vacuum_rms_band", || {
        let det = ctx.detector()?;
        let rms = vacuum_variance(&det, ctx.params.nu_s)?.sqrt() * det.units.voltage_unit() * 1e6;
        Ok(((30.0..=300.0).contains(&rms), format!("rms = {rms:.2} µV, band [30, 300]")))
    });
    r.run("e_a_band", || {
        let det = ctx.detector()?;
        let ea = det.units.energy_ev(injected_energy_ea(&det, ctx.params.nu_s)?) * 1e3;
        Ok(((0.1..=10.0).contains(&ea), format!("E_A = {ea:.4} meV, band [0.1, 10]")))
    });
}

fn feedback_suite(ctx: &CheckContext, r: &mut Recorder) {
    r.run("waveform_matches_engine", || {
        let fb = ctx.params.feedback()?;
        let basis = ModeBasis::new(64.0, 2048, 0.01)?;
        let ch = ChiralChannel::new(ctx.params.nu_p, Chirality::Right)?;
        let dv = ctx.detector()?.delta_v_natural();
        let pk = displacement_from_outcome(0.4, &fb, dv, &basis, &ch)?;
        let peak = (0..200)
            .map(|i| coherent_waveform(&fb, -4.0 + 0.02 * i as f64, 0.4, dv).abs())
            .fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for i in 0..80 {
            let y = -5.0 + 0.05 * i as f64;
            let row = point_row(&basis, &ch, y, false);
            let engine: f64 = row.iter().zip(&pk.displacement).map(|(a, b)| a * b).sum();
            worst = worst.max((engine - coherent_waveform(&fb, y, 0.4, dv)).abs());
        }
        Ok((worst < 1e-6 * peak, format!("worst deviation {:.2e} of peak", worst / peak)))
    });
    r.run("e_1_band", || {
        let det = ctx.detector()?;
        let fb = ctx.params.feedback()?;
        let var = vacuum_variance(&det, ctx.params.nu_s)?;
        let e1 = det.units.energy_ev(packet_energy_e1(&fb, ctx.params.nu_p, var, det.delta_v_natural())?) * 1e3;
        Ok(((1.0..=100.0).contains(&e1), format!("E_1 = {e1:.3} meV, band [1, 100]")))
    });
}

fn coupling_suite(ctx: &CheckContext, r: &mut Recorder) {
    let settings = EbSettings::default();
    let units = ctx.units();
    for (l, lo, hi) in [(2.0, 10.0, 1000.0), (4.0, 0.1, 10.0)] {
        r.run(&format!("e_b_band_at_{l}l"), || {
            let p = ctx.params.with_distance(l * ctx.params.length_unit);
            let res = eb_quadrature(&p.eb_inputs()?, &settings)?;
            let uev = units.energy_ev(res.value) * 1e6;
            let err = res.estimated_quadrature_error / res.value.abs();
            let ok = (lo..=hi).contains(&uev) && err <= 1e-3 && res.converged;
            Ok((ok, format!("E_B = {uev:.5} µeV (band [{lo}, {hi}]), relative error {err:.1e}")))
        });
    }
    r.run("sign_flips_with_lambda", || {
        let inputs = ctx.params.with_distance(4.0 * ctx.params.length_unit).eb_inputs()?;
        let mut flipped = inputs;
        flipped.lambda_window = inputs.lambda_window.scaled(-1.0);
        let a = eb_quadrature(&inputs, &settings)?.value;
        let b = eb_quadrature(&flipped, &settings)?.value;
        Ok((a > 0.0 && rel(-b, a) < 1e-12, format!("E_B(λ) = {a:.6e}, E_B(−λ) = {b:.6e}")))
    });
    r.run("scaling_slope", || {
        let ls: Vec<f64> = (3..=10).map(f64::from).collect();
        let t = scan_distance(&ctx.params.eb_inputs()?, &ls, ctx.params.vgt_fraction, &settings, Some((3.0, 10.0)))?;
        let fit = t.fit.ok_or_else(|| crate::Error::Numerical("no fit".into()))?;
        Ok((
            (fit.slope + 5.0).abs() <= 0.3 && t.monotone_decreasing,
            format!("slope {:.4} ± {:.4} over L/l in [3, 10]", fit.slope, fit.slope_stderr),
        ))
    });
}

fn protocol_suite(ctx: &CheckContext, r: &mut Recorder) {
    let oracle = OracleConfig { box_length: 32.0, n_modes: 512, b_points: 96 };
    let eta = 5e-4;
    let model = match OracleModel::build(&ctx.params, &oracle, eta) {
        Ok(m) => m,
        Err(e) => {
            r.check("oracle_build", false, format!("error: {e}"));
            return;
        }
    };
    let s2 = model.coefficients.outcome_variance;
    let qet = DriveMoments::qet(s2, 0.0);
    let control = DriveMoments::control(s2, 0.0);
    let audit = model.conservation_audit(&qet);
    r.check(
        "energy_conservation",
        audit.relative_residual < 1e-6,
        format!("relative residual {:.2e}", audit.relative_residual),
    );
    let (eb_q, eb_c) = (model.ensemble_e_b(&qet), model.ensemble_e_b(&control));
    r.check("qet_arm_extracts_energy", eb_q > 0.0, format!("E_B = {eb_q:.4e} (natural)"));
    r.check("control_arm_extracts_nothing", eb_c <= 0.0, format!("E_B = {eb_c:.4e} (natural)"));
    r.check("e_a_exceeds_e_b", audit.e_a >= audit.e_b, format!("E_A = {:.4e}, E_B = {:.4e}", audit.e_a, audit.e_b));
    r.check(
        "negative_energy_density_at_b",
        audit.eps_s_region_interaction < 0.0,
        format!("interaction part of ⟨ε_S⟩ over B = {:.3e}", audit.eps_s_region_interaction),
    );
    r.check(
        "packet_without_feedback_costs_energy",
        model.ensemble_e_1(&control) > 0.0,
        format!("E_1 = {:.4e}", model.ensemble_e_1(&control)),
    );
    r.run("mc_is_deterministic", || {
        let mut cfg = ExperimentConfig::new(ctx.params);
        cfg.engine = Engine::Analytic;
        cfg.arm = Arm::Control;
        cfg.n_shots = 2000;
        cfg.seed = 17;
        let a = run_experiment(&cfg)?;
        let b = run_experiment(&cfg)?;
        Ok((a == b, "two analytic runs with seed 17".into()))
    });
}

fn relations_suite(_ctx: &CheckContext, r: &mut Recorder) {
    r.run("quadratic_current_scaling", || {
        let e1 = current_energy_relation(1e-8, 6.0, 1e6)?;
        let e2 = current_energy_relation(2e-8, 6.0, 1e6)?;
        Ok((rel(e2, 4.0 * e1) < 1e-14, format!("ε(j) = {:.4} µeV/µm, ε(2j)/ε(j) = {:.15}", e1 * 1e6, e2 / e1)))
    });
}
