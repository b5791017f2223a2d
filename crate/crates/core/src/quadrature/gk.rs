//! Adaptive Gauss–Kronrod (7, 15) integration on finite intervals.

use super::{Kahan, Priority, QuadResult};
use std::collections::BinaryHeap;

/// Kronrod abscissae on [0, 1), symmetric about zero. Even indices from 1 are
/// also Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

/// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15-point Kronrod rule with its embedded 7-point Gauss rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kronrod15;

impl Kronrod15 {
    /// Apply the rule on [a, b]; returns (value, QUADPACK error estimate).
    pub fn apply<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut resk = WGK[7] * fc;
        let mut resg = WG[3] * fc;
        let mut resabs = resk.abs();
        let mut fv1 = [0.0; 7];
        let mut fv2 = [0.0; 7];
        for j in 0..7 {
            let dx = h * XGK[j];
            let f1 = f(c - dx);
            let f2 = f(c + dx);
            fv1[j] = f1;
            fv2[j] = f2;
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        }
        let result = resk * h;
        let resabs = resabs * h.abs();
        let resasc = resasc * h.abs();
        let mut err = ((resk - resg) * h).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        (result, err)
    }
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive integration of `f` over [a, b].
///
/// `breakpoints` inside (a, b) split the initial partition, which is how
/// callers place known kinks or integrable singularities on cell edges.
pub fn integrate_1d<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> QuadResult {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| *p > a && *p < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(b);

    let rule = Kronrod15;
    let mut cells: Vec<Interval> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    let mut next_id = 0u64;
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = rule.apply(f, w[0], w[1]);
        evals += 15;
        heap.push((Priority { error, id: next_id }, cells.len()));
        next_id += 1;
        cells.push(Interval {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let totals = |cells: &[Interval]| {
        let mut v = Kahan::default();
        let mut e = Kahan::default();
        for c in cells {
            v.add(c.value);
            e.add(c.error);
        }
        (v.value(), e.value())
    };
    let (mut value, mut error) = totals(&cells);
    let mut converged = error <= abs_tol.max(rel_tol * value.abs());
    let mut since_resum = 0;
    while !converged && evals + 30 <= max_evals {
        let Some((_, idx)) = heap.pop() else { break };
        let (ca, cb) = (cells[idx].a, cells[idx].b);
        let m = 0.5 * (ca + cb);
        if !(m > ca && m < cb) {
            break;
        }
        let (v1, e1) = rule.apply(f, ca, m);
        let (v2, e2) = rule.apply(f, m, cb);
        evals += 30;
        value += v1 + v2 - cells[idx].value;
        error += e1 + e2 - cells[idx].error;
        cells[idx] = Interval { a: ca, b: m, value: v1, error: e1 };
        heap.push((Priority { error: e1, id: next_id }, idx));
        next_id += 1;
        heap.push((Priority { error: e2, id: next_id }, cells.len()));
        next_id += 1;
        cells.push(Interval { a: m, b: cb, value: v2, error: e2 });
        since_resum += 1;
        if since_resum >= 64 {
            (value, error) = totals(&cells);
            since_resum = 0;
        }
        converged = error <= abs_tol.max(rel_tol * value.abs());
    }
    let (value, error) = totals(&cells);
    QuadResult {
        value,
        error,
        evals,
        converged: error <= abs_tol.max(rel_tol * value.abs()),
    }
}
