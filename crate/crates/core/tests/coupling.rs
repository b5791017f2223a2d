//! First-order E_B against an oracle written independently of the library's
//! reduction to nested one-dimensional integrals.
//!
//! The oracle integrates the 4-D integrand on a product Gauss–Legendre grid.
//! For the log-kernel form the inner u integral uses panels graded
//! geometrically towards the point where D vanishes. Window derivatives are
//! coded here from tanh identities rather than taken from the library.

use qet::coupling::{eb_quadrature, EbForm, EbInputs, EbSettings};
use qet::protocol::PhysicalParams;
use qet::quadrature::gauss_legendre;
use qet::units::UnitSystem;
use qet::Error;
use std::f64::consts::PI;

/// n-th derivative of tanh as a polynomial in t = tanh.
fn tanh_derivative(y: f64, n: usize) -> f64 {
    let t = y.tanh();
    let s = 1.0 - t * t;
    match n {
        0 => t,
        1 => s,
        2 => -2.0 * t * s,
        3 => s * (6.0 * t * t - 2.0),
        _ => unreachable!(),
    }
}

/// n-th derivative of ½A[tanh((x − a)/σ) − tanh((x − b)/σ)].
fn window(x: f64, a: f64, b: f64, sigma: f64, amp: f64, n: usize) -> f64 {
    0.5 * amp * sigma.powi(-(n as i32)) * (tanh_derivative((x - a) / sigma, n) - tanh_derivative((x - b) / sigma, n))
}

/// Composite Gauss–Legendre on the given panel edges.
fn panels(edges: &[f64], k: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let (t, w) = gauss_legendre(k);
    let mut s = 0.0;
    for e in edges.windows(2) {
        let (h, m) = (0.5 * (e[1] - e[0]), 0.5 * (e[0] + e[1]));
        if h <= 0.0 {
            continue;
        }
        for i in 0..k {
            s += h * w[i] * f(m + h * t[i]);
        }
    }
    s
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// Uniform edges plus edges at c ± ε·10⁻⁴·2^k.
fn graded(lo: f64, hi: f64, n: usize, c: f64, eps: f64) -> Vec<f64> {
    let mut e = uniform(lo, hi, n);
    let mut r = eps * 1e-4;
    while r < hi - lo {
        e.extend([c - r, c + r].into_iter().filter(|p| *p > lo && *p < hi));
        r *= 2.0;
    }
    if c > lo && c < hi {
        e.push(c);
    }
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

struct Geometry {
    distance: f64,
    vgt: f64,
    eps: f64,
    prefactor: f64,
}

impl Geometry {
    /// Defaults at L (natural), prefactor 3κRν_S/(π²ΔV) from its definition.
    fn at(distance: f64) -> Self {
        let p = PhysicalParams::default();
        let units = UnitSystem::default();
        let r = p.resistance / (units.constants.hbar / units.constants.e_charge.powi(2));
        let dv = (units.constants.hbar / (p.resistance * p.capacitance.powi(2))).sqrt() / units.voltage_unit();
        let kappa = units.constants.e_charge.powi(2)
            / (4.0 * PI * p.eps_rel * units.constants.eps0 * units.constants.hbar * p.group_velocity);
        Geometry { distance, vgt: 0.01 * distance, eps: 0.01, prefactor: 3.0 * kappa * r * p.nu_s / (PI * PI * dv) }
    }

    fn to_uev(&self, integral: f64) -> f64 {
        UnitSystem::default().energy_ev(self.prefactor * integral) * 1e6
    }
}

const B_NODES: usize = 6;

/// (1/24)∫ w_A″ λ_B‴ f ½ln(D² + ε²), in µeV.
fn oracle_log_form(g: &Geometry) -> f64 {
    let b_edges = uniform(-0.5, 0.5, 2);
    let xy = |f: &dyn Fn(f64, f64) -> f64| panels(&b_edges, B_NODES, &|x| panels(&b_edges, B_NODES, &|y| f(x, y)));
    let total = xy(&|x, y| {
        let fk = 1.0 / ((x - y) * (x - y) + 0.25).sqrt();
        let over_a = panels(&uniform(-7.5, 5.5, 26), 8, &|a| {
            let c = x + y - a + g.distance + g.vgt;
            let over_u = panels(&graded(-6.5, 6.5, 26, c, g.eps), 8, &|u| {
                let d = c - u;
                window(u, -0.5, 0.5, 0.5, 9.0, 3) * 0.5 * (d * d + g.eps * g.eps).ln()
            });
            window(a, -1.5, -0.5, 0.5, 1.0, 2) * over_u
        });
        fk * over_a
    });
    g.to_uev(total / 24.0)
}

/// ∫ w_A λ_B f / D⁵, in µeV; valid only when D stays positive.
fn oracle_collapsed_form(g: &Geometry) -> f64 {
    let b_edges = uniform(-0.5, 0.5, 2);
    let total = panels(&b_edges, B_NODES, &|x| {
        panels(&b_edges, B_NODES, &|y| {
            let fk = 1.0 / ((x - y) * (x - y) + 0.25).sqrt();
            fk * panels(&uniform(-7.5, 5.5, 26), 8, &|a| {
                let c = x + y - a + g.distance + g.vgt;
                window(a, -1.5, -0.5, 0.5, 1.0, 0)
                    * panels(&uniform(-6.5, 6.5, 26), 8, &|u| window(u, -0.5, 0.5, 0.5, 9.0, 0) / (c - u).powi(5))
            })
        })
    });
    g.to_uev(total)
}

fn inputs_at(l: f64) -> EbInputs {
    let p = PhysicalParams::default();
    p.with_distance(l * p.length_unit).eb_inputs().unwrap()
}

fn library_uev(inputs: &EbInputs, form: EbForm) -> (f64, f64, bool) {
    let r = eb_quadrature(inputs, &EbSettings { form, ..EbSettings::default() }).unwrap();
    let u = UnitSystem::default();
    (u.energy_ev(r.value) * 1e6, u.energy_ev(r.estimated_quadrature_error) * 1e6, r.converged)
}

// Frozen from the oracle above (µeV).
const EB_L2: f64 = 14.809_337;
const EB_L4: f64 = 1.744_033_1;
const EB_L20: f64 = 7.294_71e-4;

#[test]
fn oracle_reproduces_frozen_values() {
    for (l, frozen) in [(2.0, EB_L2), (4.0, EB_L4)] {
        let o = oracle_log_form(&Geometry::at(l));
        assert!((o / frozen - 1.0).abs() < 1e-6, "L = {l}: oracle {o} vs frozen {frozen}");
    }
    let o = oracle_collapsed_form(&Geometry::at(20.0));
    assert!((o / EB_L20 - 1.0).abs() < 1e-5, "L = 20: oracle {o} vs frozen {EB_L20}");
}

#[test]
fn regularized_form_matches_oracle_near_field() {
    for (l, frozen) in [(2.0, EB_L2), (4.0, EB_L4)] {
        let (v, err, converged) = library_uev(&inputs_at(l), EbForm::Regularized);
        assert!(converged);
        assert!((v / frozen - 1.0).abs() < 1e-5, "L = {l}: {v} vs {frozen}");
        assert!(err <= 1e-3 * v);
    }
}

#[test]
fn both_forms_agree_far_field() {
    let inputs = inputs_at(20.0);
    assert!(inputs.min_denominator() > 1.0);
    let (c, c_err, c_ok) = library_uev(&inputs, EbForm::Collapsed);
    let (r, _, _) = library_uev(&inputs, EbForm::Regularized);
    assert!(c_ok);
    assert!((c / EB_L20 - 1.0).abs() < 1e-4, "collapsed {c} vs {EB_L20}");
    assert!(c_err <= 1e-3 * c);
    assert!((r / c - 1.0).abs() < 1e-3, "regularized {r} vs collapsed {c}");
    let (auto, _, _) = library_uev(&inputs, EbForm::Auto);
    assert_eq!(auto, c);
}

#[test]
fn collapsed_form_is_rejected_when_the_denominator_vanishes() {
    let r = eb_quadrature(&inputs_at(2.0), &EbSettings { form: EbForm::Collapsed, ..EbSettings::default() });
    assert!(matches!(r, Err(Error::Geometry(_))));
}

#[test]
fn sign_follows_lambda_and_gain() {
    let base = inputs_at(3.0);
    let s = EbSettings::default();
    let v = eb_quadrature(&base, &s).unwrap().value;
    assert!(v > 0.0);
    let mut neg = base;
    neg.lambda_window = base.lambda_window.scaled(-1.0);
    assert_eq!(eb_quadrature(&neg, &s).unwrap().value, -v);
    let mut flipped = base;
    flipped.gain_sign = -1.0;
    assert_eq!(eb_quadrature(&flipped, &s).unwrap().value, -v);
}
