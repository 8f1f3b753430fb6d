//! Gauss-Legendre, collapsed triangle and logarithmic quadrature rules.

use faer::{Mat, Side};
use std::f64::consts::PI;

use super::DiscretizationError;

/// Rule on [-1, 1] (Gauss-Legendre) or on [0, 1] after `to_unit`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Affine map of a [-1, 1] rule onto [0, 1].
    pub fn to_unit(&self) -> QuadratureRule {
        QuadratureRule {
            points: self.points.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: self.weights.iter().map(|w| 0.5 * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Rule on the reference triangle {x >= 0, y >= 0, x + y <= 1}.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl TriangleRule {
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p[0], p[1])).sum()
    }
}

/// Rule for integrals of the form int_0^1 f(x) ln(x) dx: the weights already
/// include the (negative) logarithm. `smooth` is a Gauss rule on [0, 1] with
/// the same number of points.
#[derive(Debug, Clone)]
pub struct LogQuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub smooth: QuadratureRule,
}

impl LogQuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// n-point Gauss-Legendre rule on [-1, 1], exact to degree 2n - 1.
pub fn gauss_rule(n: usize) -> Result<QuadratureRule, DiscretizationError> {
    if n == 0 || n > 64 {
        return Err(DiscretizationError::UnsupportedRule(format!("gauss n = {n}")));
    }
    Ok(gauss_unchecked(n))
}

pub(crate) fn gauss_unchecked(n: usize) -> QuadratureRule {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    QuadratureRule { points, weights }
}

/// Collapsed (Duffy) tensor rule on the reference triangle, exact for
/// polynomials of total degree <= `exactness`.
pub fn triangle_rule(exactness: usize) -> Result<TriangleRule, DiscretizationError> {
    if exactness > 30 {
        return Err(DiscretizationError::UnsupportedRule(format!("triangle degree {exactness}")));
    }
    Ok(triangle_unchecked(exactness))
}

pub(crate) fn triangle_unchecked(exactness: usize) -> TriangleRule {
    // x = u, y = v (1 - u), jacobian (1 - u); integrand degree in u is <= d + 1
    let nu = (exactness + 2).div_ceil(2).max(1);
    let nv = (exactness + 1).div_ceil(2).max(1);
    let gu = gauss_unchecked(nu).to_unit();
    let gv = gauss_unchecked(nv).to_unit();
    let mut points = Vec::with_capacity(nu * nv);
    let mut weights = Vec::with_capacity(nu * nv);
    for (&u, &wu) in gu.points.iter().zip(&gu.weights) {
        for (&v, &wv) in gv.points.iter().zip(&gv.weights) {
            points.push([u, v * (1.0 - u)]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    TriangleRule { points, weights, exactness }
}

/// n-point Gaussian rule for the weight -ln(x) on (0, 1), returned with
/// negated weights so that sum w_i f(x_i) approximates int_0^1 f ln x.
/// Exact for polynomials of degree <= 2n - 1.
pub fn log_rule(n: usize) -> Result<LogQuadratureRule, DiscretizationError> {
    if n == 0 || n > 40 {
        return Err(DiscretizationError::UnsupportedRule(format!("log n = {n}")));
    }
    Ok(log_unchecked(n))
}

pub(crate) fn log_unchecked(n: usize) -> LogQuadratureRule {
    // modified moments of -ln x against monic shifted Legendre polynomials
    let m = 2 * n;
    let mut nu = vec![0.0; m];
    let mut ratio = 1.0; // (l!)^2 / (2l)!
    for (l, v) in nu.iter_mut().enumerate() {
        if l > 0 {
            let lf = l as f64;
            ratio *= lf * lf / ((2.0 * lf - 1.0) * 2.0 * lf);
        }
        let raw = if l == 0 {
            1.0
        } else {
            let lf = l as f64;
            let s = if l % 2 == 0 { 1.0 } else { -1.0 };
            s / (lf * (lf + 1.0))
        };
        *v = raw * ratio;
    }
    let a = |_l: usize| 0.5;
    let b = |l: usize| {
        let lf = l as f64;
        if l == 0 {
            1.0
        } else {
            lf * lf / (4.0 * (4.0 * lf * lf - 1.0))
        }
    };
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut sig_prev = vec![0.0; m + 1];
    let mut sig = nu.clone();
    sig.push(0.0);
    alpha[0] = a(0) + nu[1] / nu[0];
    beta[0] = nu[0];
    for k in 1..n {
        let mut next = vec![0.0; m + 1];
        for l in k..(m - k) {
            next[l] = sig[l + 1] - (alpha[k - 1] - a(l)) * sig[l] - beta[k - 1] * sig_prev[l]
                + b(l) * sig[l - 1];
        }
        alpha[k] = a(k) + next[k + 1] / next[k] - sig[k] / sig[k - 1];
        beta[k] = next[k] / sig[k - 1];
        sig_prev = sig;
        sig = next;
    }
    let jac = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[j].sqrt()
        } else if j + 1 == i {
            beta[i].sqrt()
        } else {
            0.0
        }
    });
    let evd = jac.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigen");
    let s = evd.S();
    let u = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = u[(0, i)];
            (s[i], -beta[0] * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    LogQuadratureRule {
        points: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        smooth: gauss_unchecked(n).to_unit(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_monomials() {
        let g = gauss_rule(3).unwrap();
        assert!((g.integrate(|x| x.powi(4)) - 0.4).abs() < 1e-15);
        for n in [1, 5, 17, 40, 64] {
            let g = gauss_rule(n).unwrap();
            assert!(g.weights.iter().all(|&w| w > 0.0));
            for d in 0..(2 * n).min(30) {
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert!((g.integrate(|x| x.powi(d as i32)) - exact).abs() < 1e-13, "n {n} d {d}");
            }
        }
        assert!(gauss_rule(65).is_err());
    }

    #[test]
    fn triangle_monomials() {
        let r = triangle_rule(3).unwrap();
        assert!((r.integrate(|x, y| x * x * y) - 1.0 / 60.0).abs() < 1e-15);
        for d in 0..=20 {
            let r = triangle_rule(d).unwrap();
            assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-14);
            for i in 0..=d {
                let j = d - i;
                // int x^i y^j = i! j! / (i + j + 2)!
                let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
                let exact = fact(i) * fact(j) / fact(i + j + 2);
                let got = r.integrate(|x, y| x.powi(i as i32) * y.powi(j as i32));
                assert!((got - exact).abs() < 1e-14 * exact.max(1e-3), "{d} {i}");
            }
        }
    }

    #[test]
    fn log_monomials() {
        let r = log_rule(1).unwrap();
        assert!((r.integrate(|_| 1.0) + 1.0).abs() < 1e-15);
        let r = log_rule(8).unwrap();
        assert!((r.integrate(|x| x) + 0.25).abs() < 1e-15);
        assert!((r.integrate(|x| x.powi(5)) + 1.0 / 36.0).abs() < 1e-14);
        for n in [2, 6, 12, 20, 30, 40] {
            let r = log_rule(n).unwrap();
            assert!(r.points.iter().all(|&x| x > 0.0 && x < 1.0));
            for d in 0..(2 * n).min(40) {
                let exact = -1.0 / ((d as f64 + 1.0) * (d as f64 + 1.0));
                let got = r.integrate(|x| x.powi(d as i32));
                assert!((got - exact).abs() < 1e-13, "n {n} d {d}: {got} {exact}");
            }
        }
    }
}
