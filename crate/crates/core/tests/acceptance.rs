//! Acceptance criteria. Each test prints one line
//! `ACCEPTANCE <n> PASS|FAIL <title>: <measured> [tolerance]` to the
//! terminal, bypassing the test harness's output capture, and then
//! asserts the criterion.
//!
//! The Gaussian oracle is evaluated at weak coupling η = 5·10⁻⁴ where the
//! protocol's first-order energetics apply; see the README for the strong
//! coupling regime.

use qet::coupling::{eb_quadrature, scan_distance, EbSettings};
use qet::detector::{injected_energy_ea, measure, outcome_density, vacuum_variance};
use qet::feedback::{packet_energy_e1, unit_displacement};
use qet::field::ModeBasis;
use qet::gaussian_engine::{ExcitedVacuum, PhaseSpace, QuadraticOperator, Readout};
use qet::protocol::{
    current_energy_relation, run_experiment, weak_coupling_limit, Arm, DriveMoments, Engine, EnergyReport,
    ExperimentConfig, ModeHamiltonian, OracleConfig, OracleModel, PhysicalParams,
};
use qet::units::UnitSystem;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

const ETA: f64 = 5e-4;
const SHOTS: usize = 10_000;

fn report(n: u32, title: &str, passed: bool, detail: String) {
    let line = format!("ACCEPTANCE {n:02} {} {title}: {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(passed, "criterion {n} failed: {detail}");
}

fn params() -> PhysicalParams {
    PhysicalParams::default()
}

fn at_l(l: f64) -> PhysicalParams {
    let p = params();
    p.with_distance(l * p.length_unit)
}

fn uev(natural: f64) -> f64 {
    UnitSystem::default().energy_ev(natural) * 1e6
}

/// Oracle at the defaults (L = 2l, N = 2048, Λ = 64l).
fn model() -> &'static OracleModel {
    static M: OnceLock<OracleModel> = OnceLock::new();
    M.get_or_init(|| OracleModel::build(&params(), &OracleConfig::default(), ETA).unwrap())
}

fn mc(arm: Arm) -> EnergyReport {
    let mut cfg = ExperimentConfig::new(params());
    cfg.engine = Engine::Oracle;
    cfg.arm = arm;
    cfg.eta = ETA;
    cfg.n_shots = SHOTS;
    cfg.seed = 20_240_601;
    run_experiment(&cfg).unwrap().oracle.unwrap()
}

fn mc_qet() -> &'static EnergyReport {
    static R: OnceLock<EnergyReport> = OnceLock::new();
    R.get_or_init(|| mc(Arm::Qet))
}

#[test]
fn criterion_01_delta_v() {
    let dv = params().detector().unwrap().delta_v_volts();
    let ok = (3e-6..=30e-6).contains(&dv) && (dv - 1.0269e-5).abs() < 0.5e-9;
    report(1, "ΔV = √(ħ/RC²)", ok, format!("{dv:.6e} V; band [3, 30] µV, 4 digits of 1.0269e-5 V"));
}

#[test]
fn criterion_02_vacuum_rms() {
    let p = params();
    let det = p.detector().unwrap();
    let vu = det.units.voltage_unit();
    let continuum = vacuum_variance(&det, p.nu_s).unwrap().sqrt() * vu * 1e6;
    // the same variance as cᵀ(½I)c on the truncated basis
    let basis = ModeBasis::new(64.0, 2048, 0.01).unwrap();
    let c = qet::detector::charge_observable(&det, &basis, &p.channel_s().unwrap()).unwrap();
    let modes = (0.5 * c.iter().map(|x| x * x).sum::<f64>()).sqrt() * vu * 1e6;
    let ok = (30.0..=300.0).contains(&continuum) && (modes / continuum - 1.0).abs() < 1e-3;
    report(
        2,
        "vacuum rms of R·Q̇_S",
        ok,
        format!("{continuum:.3} µV continuum, {modes:.3} µV mode basis; band [30, 300] µV, bases within 0.1%"),
    );
}

#[test]
fn criterion_03_e_a() {
    let p = params();
    let closed = uev(injected_energy_ea(&p.detector().unwrap(), p.nu_s).unwrap()) * 1e-3;
    let r = mc_qet();
    let sampled = r.e_a.mean_ev * 1e3;
    let d = (sampled / closed - 1.0).abs();
    let ok = (0.1..=10.0).contains(&closed) && d < 0.02;
    report(
        3,
        "E_A at ν_S = 3",
        ok,
        format!(
            "closed form {closed:.4} meV, oracle MC {sampled:.4} ± {:.1e} meV ({SHOTS} shots, N = 2048), \
             deviation {:.2}%; band [0.1, 10] meV, agreement 2%",
            r.e_a.stderr_ev * 1e3,
            100.0 * d
        ),
    );
}

#[test]
fn criterion_04_e_1() {
    let p = params();
    let det = p.detector().unwrap();
    let fb = p.feedback().unwrap();
    let var = vacuum_variance(&det, p.nu_s).unwrap();
    let closed = uev(packet_energy_e1(&fb, p.nu_p, var, det.delta_v_natural()).unwrap()) * 1e-3;
    let m = model();
    let s2 = m.coefficients.outcome_variance;
    let oracle = uev(m.ensemble_e_1(&DriveMoments::qet(s2, 0.0))) * 1e-3;
    let r = mc_qet();
    let d = (oracle / closed - 1.0).abs();
    let ok = (1.0..=100.0).contains(&closed) && d < 0.02;
    report(
        4,
        "E_1 at ν_S = 3, ν_P = 6",
        ok,
        format!(
            "closed form {closed:.4} meV, oracle ensemble {oracle:.4} meV (deviation {:.3}%), \
             oracle MC {:.3} ± {:.3} meV; band [1, 100] meV, agreement 2%",
            100.0 * d,
            r.e_1.mean_ev * 1e3,
            r.e_1.stderr_ev * 1e3
        ),
    );
}

#[test]
fn criterion_05_e_b_quadrature() {
    let s = EbSettings::default();
    let a = eb_quadrature(&at_l(2.0).eb_inputs().unwrap(), &s).unwrap();
    let b = eb_quadrature(&at_l(4.0).eb_inputs().unwrap(), &s).unwrap();
    let (ea, eb) = (a.estimated_quadrature_error / a.value, b.estimated_quadrature_error / b.value);
    let ok = (10.0..=1000.0).contains(&uev(a.value))
        && (0.1..=10.0).contains(&uev(b.value))
        && ea <= 1e-3
        && eb <= 1e-3
        && a.converged
        && b.converged;
    report(
        5,
        "E_B quadrature",
        ok,
        format!(
            "L = 2l: {:.5} µeV (rel. error {ea:.1e}); L = 4l: {:.5} µeV (rel. error {eb:.1e}); \
             bands [10, 1000] and [0.1, 10] µeV, error ≤ 0.1%",
            uev(a.value),
            uev(b.value)
        ),
    );
}

#[test]
fn criterion_06_scaling_law() {
    let p = params();
    let ls: Vec<f64> = (3..=10).map(f64::from).collect();
    let t = scan_distance(&p.eb_inputs().unwrap(), &ls, p.vgt_fraction, &EbSettings::default(), Some((3.0, 10.0)))
        .unwrap();
    let fit = t.fit.unwrap();
    let ok = (fit.slope + 5.0).abs() <= 0.3 && t.rows.iter().all(|r| r.quadrature.converged);
    report(
        6,
        "(l/L)⁵ scaling",
        ok,
        format!("log-log slope {:.4} ± {:.4} over L/l ∈ [3, 10]; tolerance −5 ± 0.3", fit.slope, fit.slope_stderr),
    );
}

#[test]
fn criterion_07_sign_structure() {
    let s = EbSettings::default();
    let mut worst = 0.0f64;
    let mut positive = true;
    for l in [2.0, 3.0, 4.0, 6.0, 10.0] {
        let inputs = at_l(l).eb_inputs().unwrap();
        let mut neg = inputs;
        neg.lambda_window = inputs.lambda_window.scaled(-1.0);
        let v = eb_quadrature(&inputs, &s).unwrap().value;
        let w = eb_quadrature(&neg, &s).unwrap().value;
        positive &= v > 0.0;
        worst = worst.max((v + w).abs() / v.abs());
    }
    let ok = positive && worst < 1e-12;
    report(
        7,
        "positivity and sign flip",
        ok,
        format!("E_B > 0 at L/l ∈ {{2, 3, 4, 6, 10}}: {positive}; |E_B(λ) + E_B(−λ)|/E_B ≤ {worst:.1e}"),
    );
}

#[test]
fn criterion_08_passivity() {
    // (a) displacements of the vacuum under the full coupled Hamiltonian
    let p = params();
    let basis = ModeBasis::new(32.0, 512, 0.01).unwrap();
    let h = ModeHamiltonian::new(&p, &basis, 96, 1.0).unwrap();
    let dim = h.space().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut x = DMatrix::from_fn(dim, 256, |_, _| rng.random::<f64>() - 0.5);
    let fb = p.feedback().unwrap();
    let dv = p.detector().unwrap().delta_v_natural();
    let packet = unit_displacement(&fb, dv, &basis, &p.channel_p().unwrap()).unwrap();
    let embedded = PhaseSpace::two_channel(512, 512).embed(1, &packet);
    x.set_column(0, &embedded);
    let ax = h.apply(&x);
    let min_gain = (0..x.ncols()).map(|c| 0.5 * x.column(c).dot(&ax.column(c))).fold(f64::INFINITY, f64::min);
    // (b), (c)
    let q = mc_qet();
    let c = mc(Arm::Control);
    let ok_a = min_gain > 0.0;
    let ok_b = c.e_b.mean <= 3.0 * c.e_b.stderr;
    let ok_c = q.e_b.mean > 3.0 * q.e_b.stderr;
    report(
        8,
        "passivity",
        ok_a && ok_b && ok_c,
        format!(
            "(a) min energy gain of 256 displacements {min_gain:.3e} > 0; \
             (b) control ⟨E_B⟩ = {:.3e} ± {:.1e} µeV ≤ 3σ; (c) QET ⟨E_B⟩ = {:.3e} ± {:.1e} µeV, {:.1}σ ≥ 3σ \
             (η = {ETA}, {SHOTS} shots)",
            c.e_b.mean_ev * 1e6,
            c.e_b.stderr_ev * 1e6,
            q.e_b.mean_ev * 1e6,
            q.e_b.stderr_ev * 1e6,
            q.e_b.mean / q.e_b.stderr
        ),
    );
}

#[test]
fn criterion_09_oracle_perturbation_equivalence() {
    let p = at_l(4.0);
    let quad = uev(eb_quadrature(&p.eb_inputs().unwrap(), &EbSettings::default()).unwrap().value);
    let oracle = OracleConfig { box_length: 32.0, n_modes: 512, b_points: 160 };
    let fit = weak_coupling_limit(&p, &oracle, &[4e-3, 2e-3, 1e-3]).unwrap();
    let limit = uev(fit.qet_limit);
    let d = (limit / quad - 1.0).abs();
    // reported, not asserted: at L = 2l the packet reaches B while the
    // measured field's light cone still overlaps it, which the first-order
    // formula with well-separated regions does not include
    let near = at_l(2.0);
    let near_quad = uev(eb_quadrature(&near.eb_inputs().unwrap(), &EbSettings::default()).unwrap().value);
    let near_limit = uev(weak_coupling_limit(&near, &oracle, &[4e-3, 2e-3, 1e-3]).unwrap().qet_limit);
    report(
        9,
        "oracle E_B(η)/η → first-order quadrature",
        d < 0.05,
        format!(
            "L = 4l: extrapolated {limit:.5} µeV (η ∈ {{4e-3, 2e-3, 1e-3}}), quadrature {quad:.5} µeV, \
             deviation {:.2}%; tolerance 5% (not asserted: L = 2l extrapolated {near_limit:.3} µeV vs \
             quadrature {near_quad:.3} µeV)",
            100.0 * d
        ),
    );
}

#[test]
fn criterion_10_conservation() {
    let mut rows = Vec::new();
    let mut ok = true;
    for l in [2.0, 3.0, 4.0] {
        let m = if l == 2.0 {
            model()
        } else {
            &*Box::leak(Box::new(OracleModel::build(&at_l(l), &OracleConfig::default(), ETA).unwrap()))
        };
        let a = m.conservation_audit(&DriveMoments::qet(m.coefficients.outcome_variance, 0.0));
        ok &= a.e_a >= a.e_b && a.relative_residual < 1e-6;
        rows.push(format!("L = {l}l: E_A = {:.1} µeV ≥ E_B = {:.3e} µeV", uev(a.e_a), uev(a.e_b)));
    }
    let a = model().conservation_audit(&DriveMoments::qet(model().coefficients.outcome_variance, 0.0));
    ok &= a.eps_s_region_interaction < 0.0;
    report(
        10,
        "E_A ≥ E_B and negative ε_S at B",
        ok,
        format!(
            "{}; QET ⟨ε_S⟩ over B after the interaction {:.3e} µeV/l (total {:.3e}); residual {:.1e}",
            rows.join(", "),
            uev(a.eps_s_region_interaction),
            uev(a.eps_s_region_total),
            a.relative_residual
        ),
    );
}

#[test]
fn criterion_11_povm() {
    let p = params();
    let det = p.detector().unwrap();
    let norm = outcome_density(&det, p.nu_s).unwrap().normalization(8.0);
    let basis = ModeBasis::new(32.0, 512, 0.01).unwrap();
    let ch = p.channel_s().unwrap();
    let vacuum = ExcitedVacuum::vacuum(PhaseSpace::two_channel(512, 512));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let v: Vec<f64> = (0..n)
        .map(|_| measure(&det, &vacuum, &basis, &ch, Readout::Sample(&mut rng)).unwrap().outcome_volts)
        .collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    let m = |k: i32| v.iter().map(|x| (x - mean).powi(k)).sum::<f64>() / n as f64;
    let skew = m(3) / m(2).powf(1.5);
    let kurt = m(4) / (m(2) * m(2)) - 3.0;
    let ok = (norm - 1.0).abs() < 1e-9 && skew.abs() <= 0.05 && kurt.abs() <= 0.1;
    report(
        11,
        "POVM normalization and Gaussian outcomes",
        ok,
        format!(
            "∫p dv − 1 = {:.1e} (≤ 1e-9); {n} engine samples: skewness {skew:.4} (≤ 0.05), \
             excess kurtosis {kurt:.4} (≤ 0.1)",
            norm - 1.0
        ),
    );
}

#[test]
fn criterion_12_energy_current_relation() {
    let e1 = current_energy_relation(10e-9, 6.0, 1e6).unwrap() * 1e6;
    let e2 = current_energy_relation(20e-9, 6.0, 1e6).unwrap() * 1e6;
    let ok = (1.0..=100.0).contains(&e1) && (e2 / e1 - 4.0).abs() < 1e-12;
    report(
        12,
        "ε–j relation",
        ok,
        format!("j = 10 nA, ν_P = 6: {e1:.4} µeV/µm (within a decade of 10); ε(2j)/ε(j) = {:.15}", e2 / e1),
    );
}

fn run_mc(dir: &Path, config: &Path, threads: Option<&str>, env: Option<&str>) -> (Vec<u8>, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qet"));
    cmd.args(["mc", "--config"]).arg(config).arg("--out").arg(dir);
    if let Some(t) = threads {
        cmd.args(["--threads", t]);
    }
    match env {
        Some(e) => cmd.env("QET_THREADS", e),
        None => cmd.env_remove("QET_THREADS"),
    };
    let status = cmd.status().unwrap();
    assert!(status.success());
    (std::fs::read(dir.join("mc.json")).unwrap(), std::fs::read(dir.join("shots_oracle.csv")).unwrap())
}

#[test]
fn criterion_13_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[experiment]\nengine = \"both\"\neta = 5e-4\nshots = 10000\nseed = 99\n\n[output]\nper_shot_csv = true\n",
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let first = run_mc(&dir, &config, Some("1"), None);
    let again = run_mc(&dir, &config, Some("1"), None);
    let wide = run_mc(&dir, &config, Some("4"), Some("2"));
    let env = run_mc(&dir, &config, None, Some("3"));
    let ok = first == again && first == wide && first == env;
    report(
        13,
        "determinism",
        ok,
        format!(
            "mc.json ({} bytes) and shots_oracle.csv ({} bytes) identical across reruns and 1, 3 and 4 threads",
            first.0.len(),
            first.1.len()
        ),
    );
}
