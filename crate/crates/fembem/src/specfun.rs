//! Bessel and Hankel functions of real positive argument, and the 2D
//! Helmholtz fundamental solution with its logarithmic split.
//!
//! Orders 0 and 1 use the ascending series for z < 6, Miller's backward
//! recurrence with Neumann-series Y for 6 <= z < 25, and the Hankel
//! asymptotic expansion beyond. Higher orders come from recurrences.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_PI, FRAC_1_SQRT_2, PI};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
pub const MAX_ORDER: u32 = 200;
pub const MAX_ARG: f64 = 1.0e4;

const SERIES_MAX: f64 = 6.0;
const ASYMPTOTIC_MIN: f64 = 25.0;
const RESCALE_AT: f64 = 1.0e250;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecFunError {
    #[error("argument out of range: order {order}, z = {z}")]
    Domain { order: u32, z: f64 },
    #[error("kernel evaluated at coincident points")]
    Singular,
    #[error("result not representable: order {order}, z = {z}")]
    Overflow { order: u32, z: f64 },
}

pub type Point = [f64; 2];

/// Value of G_k(x, y) and its gradient with respect to y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub value: Complex64,
    pub grad_y: [Complex64; 2],
}

fn check_args(order: u32, z: f64, allow_zero: bool) -> Result<(), SpecFunError> {
    let ok_z = z.is_finite() && z <= MAX_ARG && (z > 0.0 || (allow_zero && z == 0.0));
    if order > MAX_ORDER || !ok_z {
        return Err(SpecFunError::Domain { order, z });
    }
    Ok(())
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|j| (j as f64).ln()).sum()
}

/// Ascending series for J_n(z).
fn series_j(n: u32, z: f64) -> f64 {
    if z == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    let mut term = if n == 0 {
        1.0
    } else {
        (n as f64 * half.ln() - ln_factorial(n)).exp()
    };
    let t = half * half;
    let mut sum = term;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= -t / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || m > 200 {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// Series parts of Y0 and Y1 that accompany the logarithm.
/// Returns (S0, S1/(z/2)) with
/// S0 = sum_{m>=1} (-1)^{m+1} H_m t^m / (m!)^2 and
/// S1 = sum_{m>=0} (-1)^m (psi(m+1)+psi(m+2)) (z/2)^{2m+1} / (m!(m+1)!).
fn log_companion_series(z: f64) -> (f64, f64) {
    let t = 0.25 * z * z;
    // S0
    let mut s0 = 0.0;
    let mut pow = 1.0; // t^m/(m!)^2
    let mut harm = 0.0;
    for m in 1..200u32 {
        let mf = m as f64;
        pow *= t / (mf * mf);
        harm += 1.0 / mf;
        let term = if m % 2 == 1 { harm * pow } else { -harm * pow };
        s0 += term;
        if term.abs() <= 1e-18 * s0.abs().max(1e-300) {
            break;
        }
    }
    // S1/(z/2)
    let mut s1 = 0.0;
    let mut pow = 1.0; // t^m / (m!(m+1)!)
    let mut harm = 0.0; // H_m
    for m in 0..200u32 {
        let mf = m as f64;
        if m > 0 {
            pow *= t / (mf * (mf + 1.0));
            harm += 1.0 / mf;
        }
        let psi_sum = -2.0 * EULER_GAMMA + 2.0 * harm + 1.0 / (mf + 1.0);
        let term = if m % 2 == 0 { psi_sum * pow } else { -psi_sum * pow };
        s1 += term;
        if m > 0 && term.abs() <= 1e-18 * s1.abs().max(1e-300) {
            break;
        }
    }
    (s0, s1)
}

/// Miller backward recurrence, normalised by J0 + 2 sum J_{2k} = 1.
/// Returns J_0..=J_nmax.
fn miller(nmax: usize, z: f64) -> Vec<f64> {
    let base = (1.5 * z + 40.0).max(nmax as f64 + 20.0 + (40.0 * nmax as f64).sqrt());
    let mut start = base.ceil() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut f = vec![0.0f64; start + 2];
    f[start] = 1.0e-30;
    for k in (1..=start).rev() {
        let v = 2.0 * k as f64 / z * f[k] - f[k + 1];
        f[k - 1] = v;
        if v.abs() > RESCALE_AT {
            for x in f[k - 1..].iter_mut() {
                *x /= RESCALE_AT;
            }
        }
    }
    let mut norm = f[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * f[k];
        k += 2;
    }
    f.truncate(nmax + 1);
    for x in f.iter_mut() {
        *x /= norm;
    }
    f
}

fn asymptotic_01(z: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    let (sz, cz) = z.sin_cos();
    let amp = (2.0 / (PI * z)).sqrt();
    for nu in 0..2 {
        let mu = 4.0 * (nu * nu) as f64;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut a = 1.0f64;
        let mut last = f64::INFINITY;
        for k in 1..200usize {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * z);
            if a.abs() > last || a == 0.0 {
                break;
            }
            last = a.abs();
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                p += sign * a;
            } else {
                q += sign * a;
            }
            if a.abs() < 1e-18 {
                break;
            }
        }
        let (cchi, schi) = if nu == 0 {
            ((cz + sz) * FRAC_1_SQRT_2, (sz - cz) * FRAC_1_SQRT_2)
        } else {
            ((sz - cz) * FRAC_1_SQRT_2, (-sz - cz) * FRAC_1_SQRT_2)
        };
        out[nu] = amp * (p * cchi - q * schi);
        out[2 + nu] = amp * (p * schi + q * cchi);
    }
    out
}

/// [J0, J1, Y0, Y1] at z > 0, no range checks.
pub fn j01_y01(z: f64) -> [f64; 4] {
    if z < SERIES_MAX {
        let j0 = series_j(0, z);
        let j1 = series_j(1, z);
        let (s0, s1) = log_companion_series(z);
        let lg = (0.5 * z).ln();
        let y0 = 2.0 * FRAC_1_PI * ((lg + EULER_GAMMA) * j0 + s0);
        let y1 = -2.0 * FRAC_1_PI / z + 2.0 * FRAC_1_PI * lg * j1 - FRAC_1_PI * 0.5 * z * s1;
        [j0, j1, y0, y1]
    } else if z < ASYMPTOTIC_MIN {
        let base = (1.5 * z + 40.0).ceil() as usize;
        let jj = miller(base, z);
        let lg = (0.5 * z).ln() + EULER_GAMMA;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut k = 1usize;
        while 2 * k + 1 < jj.len() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s0 += sign * jj[2 * k] / k as f64;
            s1 += sign * (jj[2 * k - 1] - jj[2 * k + 1]) / k as f64;
            k += 1;
        }
        let y0 = 2.0 * FRAC_1_PI * lg * jj[0] - 4.0 * FRAC_1_PI * s0;
        let y1 = -2.0 * FRAC_1_PI * jj[0] / z + 2.0 * FRAC_1_PI * lg * jj[1] + 2.0 * FRAC_1_PI * s1;
        [jj[0], jj[1], y0, y1]
    } else {
        asymptotic_01(z)
    }
}

/// J_0..=J_nmax at z >= 0, no range checks.
pub fn bessel_j_seq(nmax: usize, z: f64) -> Vec<f64> {
    if z == 0.0 {
        let mut v = vec![0.0; nmax + 1];
        v[0] = 1.0;
        return v;
    }
    if nmax as f64 >= z {
        if z < SERIES_MAX {
            return (0..=nmax).map(|n| series_j(n as u32, z)).collect();
        }
        return miller(nmax, z);
    }
    let b = j01_y01(z);
    let mut v = Vec::with_capacity(nmax + 1);
    v.push(b[0]);
    if nmax >= 1 {
        v.push(b[1]);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / z * v[n] - v[n - 1];
        v.push(next);
    }
    v
}

/// Y_0..=Y_nmax at z > 0 by forward recurrence; entries may overflow to
/// infinity for large orders at small z.
pub fn bessel_y_seq(nmax: usize, z: f64) -> Vec<f64> {
    let b = j01_y01(z);
    let mut v = Vec::with_capacity(nmax + 1);
    v.push(b[2]);
    if nmax >= 1 {
        v.push(b[3]);
    }
    for n in 1..nmax {
        let next = 2.0 * n as f64 / z * v[n] - v[n - 1];
        v.push(next);
    }
    v
}

pub fn bessel_j(order: u32, z: f64) -> Result<f64, SpecFunError> {
    check_args(order, z, true)?;
    let v = if z < SERIES_MAX {
        series_j(order, z)
    } else if order <= 1 {
        j01_y01(z)[order as usize]
    } else if (order as f64) < z {
        bessel_j_seq(order as usize, z)[order as usize]
    } else {
        miller(order as usize, z)[order as usize]
    };
    Ok(v)
}

pub fn bessel_y(order: u32, z: f64) -> Result<f64, SpecFunError> {
    check_args(order, z, false)?;
    let v = bessel_y_seq(order as usize, z)[order as usize];
    if !v.is_finite() {
        return Err(SpecFunError::Overflow { order, z });
    }
    Ok(v)
}

pub fn hankel1(order: u32, z: f64) -> Result<Complex64, SpecFunError> {
    Ok(Complex64::new(bessel_j(order, z)?, bessel_y(order, z)?))
}

/// G_k(r), dG_k/dr and d^2G_k/dr^2 for r > 0. k = 0 gives the Laplace kernel.
pub fn radial_green(k: f64, r: f64) -> [Complex64; 3] {
    if k == 0.0 {
        return [
            Complex64::new(-0.5 * FRAC_1_PI * r.ln(), 0.0),
            Complex64::new(-0.5 * FRAC_1_PI / r, 0.0),
            Complex64::new(0.5 * FRAC_1_PI / (r * r), 0.0),
        ];
    }
    let z = k * r;
    let [j0, j1, y0, y1] = j01_y01(z);
    let h0 = Complex64::new(j0, y0);
    let h1 = Complex64::new(j1, y1);
    let i4 = Complex64::new(0.0, 0.25);
    let g = i4 * h0;
    let dg = -i4 * k * h1;
    let dh1 = h0 - h1 / z;
    let d2g = -i4 * k * k * dh1;
    [g, dg, d2g]
}

/// Log split of the radial kernels at r > 0:
/// G(r) = a0 ln r + b0 and G'(r)/r = a1 ln r + b1.
/// b0 is smooth up to r = 0; b1 contains the Laplace term -1/(2 pi r^2)
/// that is only ever used multiplied by a quantity of order r^2.
#[derive(Debug, Clone, Copy)]
pub struct RadialSplit {
    pub a0: Complex64,
    pub b0: Complex64,
    pub a1: Complex64,
    pub b1: Complex64,
}

pub fn radial_split(k: f64, r: f64) -> RadialSplit {
    let c = |re: f64| Complex64::new(re, 0.0);
    if k == 0.0 {
        return RadialSplit {
            a0: c(-0.5 * FRAC_1_PI),
            b0: c(0.0),
            a1: c(0.0),
            b1: c(-0.5 * FRAC_1_PI / (r * r)),
        };
    }
    let z = k * r;
    let lr = r.ln();
    if z < SERIES_MAX {
        let j0 = series_j(0, z);
        // J1(z)/z
        let mut j1z = 0.0;
        let t = 0.25 * z * z;
        let mut term = 0.5;
        for m in 0..100u32 {
            if m > 0 {
                term *= -t / (m as f64 * (m + 1) as f64);
            }
            j1z += term;
            if term.abs() < 1e-18 * j1z.abs() {
                break;
            }
        }
        let (s0, s1) = log_companion_series(z);
        let lk = (0.5 * k).ln();
        let a0 = c(-0.5 * FRAC_1_PI * j0);
        let b0 = Complex64::new(-0.5 * FRAC_1_PI * ((lk + EULER_GAMMA) * j0 + s0), 0.25 * j0);
        let j1_over_r = k * j1z;
        let a1 = c(0.5 * FRAC_1_PI * k * j1_over_r);
        // (k/(4 pi r)) S1 with S1 = (z/2) * s1
        let s1_term = 0.25 * FRAC_1_PI * k * (0.5 * k) * s1;
        let b1 = Complex64::new(
            -0.5 * FRAC_1_PI / (r * r) + 0.5 * FRAC_1_PI * k * j1_over_r * lk - s1_term,
            -0.25 * k * j1_over_r,
        );
        RadialSplit { a0, b0, a1, b1 }
    } else {
        let [g, dg, _] = radial_green(k, r);
        let [j0, j1, _, _] = j01_y01(z);
        let a0 = c(-0.5 * FRAC_1_PI * j0);
        let a1 = c(0.5 * FRAC_1_PI * k * j1 / r);
        RadialSplit {
            a0,
            b0: g - a0 * lr,
            a1,
            b1: dg / r - a1 * lr,
        }
    }
}

fn dist(x: Point, y: Point) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

/// G_k(x, y) and its y-gradient.
pub fn green_kernel(k: f64, x: Point, y: Point) -> Result<KernelEval, SpecFunError> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(SpecFunError::Domain { order: 0, z: k });
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(SpecFunError::Singular);
    }
    if k * r > MAX_ARG {
        return Err(SpecFunError::Domain { order: 0, z: k * r });
    }
    let [g, dg, _] = radial_green(k, r);
    let s = dg / r;
    Ok(KernelEval {
        value: g,
        grad_y: [s * (y[0] - x[0]), s * (y[1] - x[1])],
    })
}

/// (log_coeff, smooth_part) with log_coeff * ln|x-y| + smooth_part = G_k(x, y).
pub fn kernel_log_split(k: f64, x: Point, y: Point) -> Result<(Complex64, Complex64), SpecFunError> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(SpecFunError::Domain { order: 0, z: k });
    }
    let r = dist(x, y);
    if r == 0.0 {
        return Err(SpecFunError::Singular);
    }
    let s = radial_split(k, r);
    Ok((s.a0, s.b0))
}
