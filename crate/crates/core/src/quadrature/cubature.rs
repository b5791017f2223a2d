//! Genz–Malik degree-7 cubature with embedded degree-5 error estimate.

use super::{Kahan, Priority, QuadResult, QuadSpec};
use std::collections::BinaryHeap;

const LAMBDA2: f64 = 0.358_568_582_800_318_1; // sqrt(9/70)
const LAMBDA4: f64 = 0.948_683_298_050_513_8; // sqrt(9/10)
const LAMBDA5: f64 = 0.688_247_201_611_685_3; // sqrt(9/19)

struct Cell {
    center: [f64; 4],
    half: [f64; 4],
    value: f64,
    error: f64,
    split_axis: usize,
}

struct Weights {
    w: [f64; 5],
    we: [f64; 4],
}

fn weights(n: usize) -> Weights {
    let d = n as f64;
    Weights {
        w: [
            (12824.0 - 9120.0 * d + 400.0 * d * d) / 19683.0,
            980.0 / 6561.0,
            (1820.0 - 400.0 * d) / 19683.0,
            200.0 / 19683.0,
            6859.0 / 19683.0 / f64::powi(2.0, n as i32),
        ],
        we: [
            (729.0 - 950.0 * d + 50.0 * d * d) / 729.0,
            245.0 / 486.0,
            (265.0 - 100.0 * d) / 1458.0,
            25.0 / 729.0,
        ],
    }
}

fn rule<F: Fn(&[f64]) -> f64 + ?Sized>(
    f: &F,
    n: usize,
    wt: &Weights,
    center: [f64; 4],
    half: [f64; 4],
    evals: &mut usize,
) -> Cell {
    let mut p = center;
    let f0 = f(&center[..n]);
    let mut sum2 = 0.0;
    let mut sum3 = 0.0;
    let mut diff = [0.0f64; 4];
    for i in 0..n {
        p[i] = center[i] - LAMBDA2 * half[i];
        let a1 = f(&p[..n]);
        p[i] = center[i] + LAMBDA2 * half[i];
        let a2 = f(&p[..n]);
        p[i] = center[i] - LAMBDA4 * half[i];
        let b1 = f(&p[..n]);
        p[i] = center[i] + LAMBDA4 * half[i];
        let b2 = f(&p[..n]);
        p[i] = center[i];
        sum2 += a1 + a2;
        sum3 += b1 + b2;
        diff[i] = ((a1 + a2 - 2.0 * f0) - (b1 + b2 - 2.0 * f0) / 7.0).abs();
    }
    let mut sum4 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                p[i] = center[i] + si * LAMBDA4 * half[i];
                p[j] = center[j] + sj * LAMBDA4 * half[j];
                sum4 += f(&p[..n]);
            }
            p[i] = center[i];
            p[j] = center[j];
        }
    }
    let mut sum5 = 0.0;
    for mask in 0..(1usize << n) {
        for i in 0..n {
            let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            p[i] = center[i] + s * LAMBDA5 * half[i];
        }
        sum5 += f(&p[..n]);
    }
    *evals += 1 + 4 * n + 2 * n * (n - 1) + (1 << n);
    let vol: f64 = half[..n].iter().map(|h| 2.0 * h).product();
    let r7 = vol * (wt.w[0] * f0 + wt.w[1] * sum2 + wt.w[2] * sum3 + wt.w[3] * sum4 + wt.w[4] * sum5);
    let r5 = vol * (wt.we[0] * f0 + wt.we[1] * sum2 + wt.we[2] * sum3 + wt.we[3] * sum4);
    let mut axis = 0;
    for i in 1..n {
        let better = diff[i] > diff[axis] * (1.0 + 1e-10)
            || (diff[i] >= diff[axis] * (1.0 - 1e-10) && half[i] > half[axis]);
        if better {
            axis = i;
        }
    }
    Cell {
        center,
        half,
        value: r7,
        error: (r7 - r5).abs(),
        split_axis: axis,
    }
}

/// Adaptive Genz–Malik cubature over the box of `spec` (2 to 4 dimensions).
pub fn genz_malik<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, spec: &QuadSpec) -> QuadResult {
    let n = spec.dimension();
    assert!((2..=4).contains(&n), "Genz–Malik rule needs 2..=4 dimensions");
    let wt = weights(n);
    let mut center = [0.0; 4];
    let mut half = [0.0; 4];
    for i in 0..n {
        center[i] = 0.5 * (spec.lower[i] + spec.upper[i]);
        half[i] = 0.5 * (spec.upper[i] - spec.lower[i]);
    }
    let per_cell = 1 + 4 * n + 2 * n * (n - 1) + (1 << n);
    let mut evals = 0;
    let mut cells = vec![rule(f, n, &wt, center, half, &mut evals)];
    let mut heap = BinaryHeap::new();
    heap.push((Priority { error: cells[0].error, id: 0 }, 0usize));
    let mut next_id = 1u64;
    let totals = |cells: &[Cell]| {
        let mut v = Kahan::default();
        let mut e = Kahan::default();
        for c in cells {
            v.add(c.value);
            e.add(c.error);
        }
        (v.value(), e.value())
    };
    let (mut value, mut error) = totals(&cells);
    let mut since_resum = 0;
    while error > spec.abs_tol.max(spec.rel_tol * value.abs()) && evals + 2 * per_cell <= spec.max_evals {
        let Some((_, idx)) = heap.pop() else { break };
        let axis = cells[idx].split_axis;
        let mut h = cells[idx].half;
        h[axis] *= 0.5;
        let mut c1 = cells[idx].center;
        let mut c2 = c1;
        c1[axis] -= h[axis];
        c2[axis] += h[axis];
        let a = rule(f, n, &wt, c1, h, &mut evals);
        let b = rule(f, n, &wt, c2, h, &mut evals);
        value += a.value + b.value - cells[idx].value;
        error += a.error + b.error - cells[idx].error;
        heap.push((Priority { error: a.error, id: next_id }, idx));
        heap.push((Priority { error: b.error, id: next_id + 1 }, cells.len()));
        next_id += 2;
        cells[idx] = a;
        cells.push(b);
        since_resum += 1;
        if since_resum >= 64 {
            (value, error) = totals(&cells);
            since_resum = 0;
        }
    }
    let (value, error) = totals(&cells);
    QuadResult {
        value,
        error,
        evals,
        converged: error <= spec.abs_tol.max(spec.rel_tol * value.abs()),
    }
}
