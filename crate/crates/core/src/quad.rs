//! One-dimensional quadrature: adaptive Gauss–Kronrod and Gauss–Hermite.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`]; the estimate is accepted when the error is
/// below `max(abs, rel * |value|)`.
#[derive(Clone, Copy, Debug)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tol {
    pub fn rel(rel: f64) -> Self {
        Tol {
            abs: 1e-300,
            rel,
            max_intervals: 4000,
        }
    }

    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        rk += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            rg += WG[i / 2] * (f1 + f2);
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("interval [{a}, {b}] is not finite")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {} subintervals (estimate {total}, error {total_err:e})",
                heap.len()
            )));
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::Quadrature(format!("interval collapsed near {m}")));
        }
        let (v1, e1) = kronrod(&f, worst.a, m);
        let (v2, e2) = kronrod(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece { a: worst.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, err: e2 });
        // resum occasionally to stop drift in the running totals
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
}

/// Integral over `[a, b]` split at the given interior breakpoints.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tol) -> Result<f64> {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    for w in pts.windows(2) {
        sum += integrate(&f, w[0], w[1], tol)?;
    }
    Ok(sum)
}

/// Physicists' Gauss–Hermite rule: `∫ e^{-x^2} f(x) dx ≈ Σ w_i f(x_i)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on the orthonormal recurrence, roots found pairwise
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn hermite64() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(64))
}

/// `E f(X)` for `X ~ N(mean, var)` by 64-node Gauss–Hermite. Accurate only for smooth `f`.
pub fn expect_normal<F: Fn(f64) -> f64>(mean: f64, var: f64, f: F) -> f64 {
    if var == 0.0 {
        return f(mean);
    }
    let (x, w) = hermite64();
    let s = (2.0 * var).sqrt();
    let sum: f64 = x.iter().zip(w).map(|(xi, wi)| wi * f(mean + s * xi)).sum();
    sum / std::f64::consts::PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_polynomials_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, Tol::rel(1e-14)).unwrap();
        assert_relative_eq!(v, 64.0 / 6.0 - 1.0 / 6.0 - 9.0, max_relative = 1e-13);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, Tol::rel(1e-11)).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-10);
        let v = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, Tol::rel(1e-9)).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn kink_with_breakpoint() {
        let v = integrate_split(|x: f64| x.abs(), -1.0, 3.0, &[0.0], Tol::rel(1e-14)).unwrap();
        assert_relative_eq!(v, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn nonconvergence_reported() {
        let tol = Tol {
            abs: 0.0,
            rel: 1e-15,
            max_intervals: 8,
        };
        let e = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, tol).unwrap_err();
        assert!(matches!(e, Error::Quadrature(_)));
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(64);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, std::f64::consts::PI.sqrt(), max_relative = 1e-13);
        assert!(x.windows(2).all(|p| p[0] > p[1]));
        assert_relative_eq!(expect_normal(0.0, 2.0, |x| x * x), 2.0, max_relative = 1e-12);
        assert_relative_eq!(expect_normal(1.0, 1.0, |x| x.powi(4)), 1.0 + 6.0 + 3.0, max_relative = 1e-12);
        assert_relative_eq!(expect_normal(0.0, 1.0, |x| x.cos()), (-0.5f64).exp(), max_relative = 1e-12);
    }
}
