//! Smooth window profiles with analytic derivatives up to third order.

use crate::error::{ensure_positive, invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Shape family of a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// ½a[tanh((x−lo)/σ) − tanh((x−hi)/σ)]: analytic, exponential tails.
    SmoothedRect,
    /// Exactly `amplitude` on [lo, hi], exactly zero outside [lo−σ, hi+σ],
    /// joined by the C^∞ transition ψ(t)/(ψ(t)+ψ(1−t)) with ψ(t) = e^{−1/t}.
    CompactBump,
}

/// A smooth window w(x) with plateau edges `lo`, `hi`, edge width `sigma`
/// and height `amplitude`, all in natural units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowProfile {
    /// Shape family.
    pub kind: WindowKind,
    /// Left plateau edge.
    pub lo: f64,
    /// Right plateau edge.
    pub hi: f64,
    /// Edge smoothing length.
    pub sigma: f64,
    /// Plateau height (may be negative to flip the window).
    pub amplitude: f64,
}

/// Tail level below which a window and its first three derivatives are
/// treated as zero, relative to |amplitude|·max(1, σ⁻³).
pub const DEFAULT_TAIL_TOL: f64 = 1e-13;

impl WindowProfile {
    /// Validated constructor.
    pub fn new(kind: WindowKind, lo: f64, hi: f64, sigma: f64, amplitude: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && amplitude.is_finite()) {
            return Err(invalid("window parameters must be finite"));
        }
        if hi < lo {
            return Err(invalid(format!("window plateau needs lo <= hi, got [{lo}, {hi}]")));
        }
        ensure_positive("window smoothing", sigma)?;
        Ok(WindowProfile { kind, lo, hi, sigma, amplitude })
    }

    /// Smoothed rectangle with the given plateau edges.
    pub fn smoothed_rect(lo: f64, hi: f64, sigma: f64, amplitude: f64) -> Result<Self> {
        Self::new(WindowKind::SmoothedRect, lo, hi, sigma, amplitude)
    }

    /// Compactly supported bump with the given plateau edges.
    pub fn compact_bump(lo: f64, hi: f64, sigma: f64, amplitude: f64) -> Result<Self> {
        Self::new(WindowKind::CompactBump, lo, hi, sigma, amplitude)
    }

    /// Same window translated by `dx`.
    pub fn shifted(&self, dx: f64) -> Self {
        WindowProfile { lo: self.lo + dx, hi: self.hi + dx, ..*self }
    }

    /// Same window with amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        WindowProfile { amplitude: self.amplitude * factor, ..*self }
    }

    /// Centre of the plateau.
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// w(x).
    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    /// ∂^order w at x for order 0..=3.
    pub fn derivative(&self, x: f64, order: usize) -> f64 {
        assert!(order <= 3, "window derivatives are available up to third order");
        self.jet(x)[order]
    }

    /// [w, w′, w″, w‴] at x.
    pub fn jet(&self, x: f64) -> [f64; 4] {
        match self.kind {
            WindowKind::SmoothedRect => {
                let a = tanh_edge(x - self.lo, self.sigma);
                let b = tanh_edge(x - self.hi, self.sigma);
                let h = 0.5 * self.amplitude;
                [h * (a[0] - b[0]), h * (a[1] - b[1]), h * (a[2] - b[2]), h * (a[3] - b[3])]
            }
            WindowKind::CompactBump => {
                let s = self.sigma;
                let left = smooth_step((x - self.lo + s) / s);
                let right = smooth_step((self.hi + s - x) / s);
                // chain rule: d/dx of S((x−lo+σ)/σ) carries σ⁻ⁿ, the right edge also (−1)ⁿ
                let l = [left[0], left[1] / s, left[2] / (s * s), left[3] / (s * s * s)];
                let r = [right[0], -right[1] / s, right[2] / (s * s), -right[3] / (s * s * s)];
                let a = self.amplitude;
                [
                    a * l[0] * r[0],
                    a * (l[1] * r[0] + l[0] * r[1]),
                    a * (l[2] * r[0] + 2.0 * l[1] * r[1] + l[0] * r[2]),
                    a * (l[3] * r[0] + 3.0 * l[2] * r[1] + 3.0 * l[1] * r[2] + l[0] * r[3]),
                ]
            }
        }
    }

    /// Largest value of w, attained at the plateau centre.
    pub fn max_value(&self) -> f64 {
        self.eval(self.center())
    }

    /// Interval outside of which w and its first three derivatives are below
    /// `tail_tol` relative to |amplitude|·max(1, σ⁻³).
    pub fn extent(&self, tail_tol: f64) -> (f64, f64) {
        match self.kind {
            WindowKind::SmoothedRect => {
                // every tail derivative is bounded by 16·σ⁻ⁿ·e^{−2z}
                let z = 0.5 * (32.0 / tail_tol).ln();
                (self.lo - z * self.sigma, self.hi + z * self.sigma)
            }
            WindowKind::CompactBump => (self.lo - self.sigma, self.hi + self.sigma),
        }
    }

    /// Interval outside of which the window is negligible at the default
    /// tail tolerance.
    pub fn default_extent(&self) -> (f64, f64) {
        self.extent(DEFAULT_TAIL_TOL)
    }

    /// Points where the integrand structure changes (plateau and support
    /// edges), for use as quadrature breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            WindowKind::SmoothedRect => vec![self.lo, self.hi],
            WindowKind::CompactBump => vec![self.lo - self.sigma, self.lo, self.hi, self.hi + self.sigma],
        }
    }

    /// ∫ w′(x) e^{ikx} dx for each k.
    pub fn fourier_derivative(&self, ks: &[f64]) -> Vec<Complex64> {
        match self.kind {
            WindowKind::SmoothedRect => ks
                .iter()
                .map(|&k| {
                    let z = 0.5 * std::f64::consts::PI * k * self.sigma;
                    let g = if z.abs() < 1e-8 {
                        1.0 - z * z / 6.0
                    } else if z.abs() > 700.0 {
                        0.0
                    } else {
                        z / z.sinh()
                    };
                    self.amplitude * g * (Complex64::from_polar(1.0, k * self.lo) - Complex64::from_polar(1.0, k * self.hi))
                })
                .collect(),
            WindowKind::CompactBump => {
                let (x, w) = self.edge_grid();
                let wd: Vec<f64> = x.iter().zip(&w).map(|(x, w)| w * self.jet(*x)[1]).collect();
                ks.iter()
                    .map(|&k| {
                        x.iter()
                            .zip(&wd)
                            .map(|(x, d)| Complex64::from_polar(*d, k * x))
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// ∫ w(x) e^{ikx} dx for each k.
    pub fn fourier(&self, ks: &[f64]) -> Vec<Complex64> {
        let d = self.fourier_derivative(ks);
        ks.iter()
            .zip(d)
            .map(|(&k, d)| {
                if k == 0.0 {
                    Complex64::new(self.integral(), 0.0)
                } else {
                    // ∫ w′ e^{ikx} = −ik ∫ w e^{ikx}
                    d / Complex64::new(0.0, -k)
                }
            })
            .collect()
    }

    /// ∫ w dx.
    pub fn integral(&self) -> f64 {
        match self.kind {
            WindowKind::SmoothedRect => self.amplitude * (self.hi - self.lo),
            WindowKind::CompactBump => self.amplitude * (self.hi - self.lo + self.sigma),
        }
    }

    /// Composite Gauss–Legendre grid over the two transition regions of a
    /// compact bump, where w′ is nonzero.
    fn edge_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let (t, wt) = crate::quadrature::gauss_legendre(16);
        let panels = 48;
        let mut xs = Vec::with_capacity(2 * panels * 16);
        let mut ws = Vec::with_capacity(2 * panels * 16);
        for (a, b) in [(self.lo - self.sigma, self.lo), (self.hi, self.hi + self.sigma)] {
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let c = a + (p as f64 + 0.5) * h;
                for (ti, wi) in t.iter().zip(&wt) {
                    xs.push(c + 0.5 * h * ti);
                    ws.push(0.5 * h * wi);
                }
            }
        }
        (xs, ws)
    }
}

/// [g, g′, g″, g‴] of g(z) = tanh(z/σ) with respect to z.
fn tanh_edge(z: f64, s: f64) -> [f64; 4] {
    let t = (z / s).tanh();
    let sech2 = 1.0 - t * t;
    [
        t,
        sech2 / s,
        -2.0 * t * sech2 / (s * s),
        sech2 * (6.0 * t * t - 2.0) / (s * s * s),
    ]
}

/// Third-order Taylor polynomial, coefficients c_k = f^(k)/k!.
#[derive(Debug, Clone, Copy)]
struct Jet([f64; 4]);

impl Jet {
    fn var(t: f64) -> Jet {
        Jet([t, 1.0, 0.0, 0.0])
    }
    fn konst(c: f64) -> Jet {
        Jet([c, 0.0, 0.0, 0.0])
    }
    fn add(self, o: Jet) -> Jet {
        Jet([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2], self.0[3] + o.0[3]])
    }
    fn neg(self) -> Jet {
        Jet([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
    fn div(self, b: Jet) -> Jet {
        let a = self.0;
        let b = b.0;
        let mut q = [0.0; 4];
        for k in 0..4 {
            let mut s = a[k];
            for j in 1..=k {
                s -= b[j] * q[k - j];
            }
            q[k] = s / b[0];
        }
        Jet(q)
    }
    fn exp(self) -> Jet {
        let a = self.0;
        let mut e = [a[0].exp(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet(e)
    }
    fn derivatives(self) -> [f64; 4] {
        [self.0[0], self.0[1], 2.0 * self.0[2], 6.0 * self.0[3]]
    }
}

/// ψ(t) = e^{−1/t} for t > 0, 0 otherwise, as a jet in t.
fn psi(t: Jet) -> Jet {
    if t.0[0] <= 0.0 {
        Jet::konst(0.0)
    } else {
        Jet::konst(-1.0).div(t).exp()
    }
}

/// [S, S′, S″, S‴] for the C^∞ step S(t) = ψ(t)/(ψ(t)+ψ(1−t)).
fn smooth_step(t: f64) -> [f64; 4] {
    if t <= 0.0 {
        return [0.0; 4];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let x = Jet::var(t);
    let a = psi(x);
    let b = psi(Jet::konst(1.0).add(x.neg()));
    a.div(a.add(b)).derivatives()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_fd(w: &WindowProfile, xs: &[f64]) {
        let h = 1e-4;
        for &x in xs {
            let j = w.jet(x);
            for order in 1..=3 {
                let g = |y: f64| w.jet(y)[order - 1];
                let fd = (8.0 * (g(x + h) - g(x - h)) - (g(x + 2.0 * h) - g(x - 2.0 * h))) / (12.0 * h);
                let scale = j[order].abs().max(1e-3 * w.amplitude.abs() / w.sigma.powi(order as i32));
                assert!((fd - j[order]).abs() <= 1e-6 * scale.max(1.0), "order {order} at {x}: {fd} vs {}", j[order]);
            }
        }
    }

    #[test]
    fn tanh_derivatives_match_finite_differences() {
        let w = WindowProfile::smoothed_rect(-0.5, 0.5, 0.5, 9.0).unwrap();
        check_fd(&w, &[-2.0, -0.6, -0.1, 0.3, 0.7, 1.9]);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let w = WindowProfile::compact_bump(-0.5, 0.5, 1.0, 2.0).unwrap();
        check_fd(&w, &[-1.3, -0.9, -0.6, 0.55, 1.0, 1.4]);
        assert_eq!(w.eval(0.0), 2.0);
        assert_eq!(w.eval(1.6), 0.0);
        assert_eq!(w.jet(-1.6), [0.0; 4]);
    }

    #[test]
    fn fourier_matches_direct_quadrature() {
        let ks = [0.3, 1.7, 6.0];
        for w in [
            WindowProfile::smoothed_rect(-1.5, -0.5, 0.5, 1.0).unwrap(),
            WindowProfile::compact_bump(-0.2, 0.4, 0.7, 3.0).unwrap(),
        ] {
            let f = w.fourier_derivative(&ks);
            let (a, b) = w.default_extent();
            for (i, &k) in ks.iter().enumerate() {
                let re = crate::quadrature::integrate_1d(&|x: f64| w.jet(x)[1] * (k * x).cos(), a, b, &w.breakpoints(), 1e-12, 1e-14, 200_000).value;
                let im = crate::quadrature::integrate_1d(&|x: f64| w.jet(x)[1] * (k * x).sin(), a, b, &w.breakpoints(), 1e-12, 1e-14, 200_000).value;
                assert!((f[i].re - re).abs() < 1e-9 && (f[i].im - im).abs() < 1e-9, "{:?} vs {re} {im}", f[i]);
            }
            let g = w.fourier(&[0.0, 2.0]);
            assert!((g[0].re - w.integral()).abs() < 1e-12);
            let (a, b) = w.default_extent();
            let re = crate::quadrature::integrate_1d(&|x: f64| w.eval(x) * (2.0 * x).cos(), a, b, &w.breakpoints(), 1e-12, 1e-14, 200_000).value;
            assert!((g[1].re - re).abs() < 1e-9);
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(WindowProfile::smoothed_rect(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(WindowProfile::smoothed_rect(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(WindowProfile::compact_bump(0.0, 1.0, 1.0, f64::NAN).is_err());
    }
}
