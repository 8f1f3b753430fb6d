//! Analytic solutions: the penetrable disk under plane-wave incidence,
//! plane-wave boundary data and manufactured solutions on a circle.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{PI, TAU};

use crate::geometry::{BoundaryCurve, Point, SubdomainPartition};
use crate::norms::ExactSolution;
use crate::specfun::{bessel_j_seq, bessel_y_seq};

type C = Complex64;
const I: C = C::new(0.0, 1.0);

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("singular matching system at mode {0}")]
    Singular(i64),
    #[error("series tail {0:.3e} above tolerance")]
    Tail(f64),
    #[error("the boundary is not a circle")]
    NotCircle,
}

/// J_n, J_n', Y_n, Y_n' for n = 0..=nmax.
fn bessel_table(nmax: usize, z: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let j = bessel_j_seq(nmax + 1, z);
    let y = if z > 0.0 { bessel_y_seq(nmax + 1, z) } else { vec![f64::NEG_INFINITY; nmax + 2] };
    let d = |v: &[f64], n: usize| if z > 0.0 { -v[n + 1] + n as f64 / z * v[n] } else if n == 1 { 0.5 } else { 0.0 };
    let jp = (0..=nmax).map(|n| if n == 0 { -j[1] } else { d(&j, n) }).collect();
    let yp = (0..=nmax).map(|n| if n == 0 { -y[1] } else { d(&y, n) }).collect();
    (j[..=nmax].to_vec(), jp, y[..=nmax].to_vec(), yp)
}

/// Z_n for signed n from the table of order |n|: Z_{-n} = (-1)^n Z_n.
fn signed(v: &[f64], n: i64) -> f64 {
    let s = if n < 0 && n % 2 != 0 { -1.0 } else { 1.0 };
    s * v[n.unsigned_abs() as usize]
}

/// Total field of a plane wave scattered by the disk |x - center| < a with
/// index n0 inside, 1 outside, and nu = 1.
#[derive(Debug, Clone)]
pub struct DiskTransmissionSolution {
    pub k: f64,
    pub radius: f64,
    pub center: Point,
    pub n0: f64,
    pub direction: Point,
    pub n_max: usize,
    /// interior coefficients c_n, index n + n_max
    pub c: Vec<C>,
    /// scattered coefficients d_n
    pub d: Vec<C>,
    /// incident coefficients i^n e^{-i n alpha}
    pub a: Vec<C>,
    /// max over modes of the 2x2 matching residual
    pub matching_residual: f64,
}

pub fn solve_disk_series(k: f64, radius: f64, n0: f64, direction: Point) -> Result<DiskTransmissionSolution, ReferenceError> {
    solve_disk_series_with(k, radius, [0.0, 0.0], n0, direction, None)
}

/// `n_max` defaults to ceil(k a max(1, n0)) + 20. The tail check compares
/// |c_N J_N(k n0 a)| + |d_N H_N(k a)| with the largest mode.
pub fn solve_disk_series_with(
    k: f64,
    radius: f64,
    center: Point,
    n0: f64,
    direction: Point,
    n_max: Option<usize>,
) -> Result<DiskTransmissionSolution, ReferenceError> {
    if !(k > 0.0 && radius > 0.0 && k * radius <= 60.0) || !(n0 > 0.0) {
        return Err(ReferenceError::Domain(format!("k = {k}, a = {radius}, n0 = {n0}")));
    }
    let dn = (direction[0].powi(2) + direction[1].powi(2)).sqrt();
    if !(dn > 0.0) {
        return Err(ReferenceError::Domain("zero direction".into()));
    }
    let direction = [direction[0] / dn, direction[1] / dn];
    let alpha = direction[1].atan2(direction[0]);
    let nm = n_max.unwrap_or((k * radius * n0.max(1.0)).ceil() as usize + 20);
    let (j, jp, y, yp) = bessel_table(nm, k * radius);
    let (ji, jip, _, _) = bessel_table(nm, k * n0 * radius);
    let mut out = DiskTransmissionSolution {
        k,
        radius,
        center,
        n0,
        direction,
        n_max: nm,
        c: vec![],
        d: vec![],
        a: vec![],
        matching_residual: 0.0,
    };
    for n in -(nm as i64)..=(nm as i64) {
        let an = I.powi(n.rem_euclid(4) as i32) * C::from_polar(1.0, -(n as f64) * alpha);
        let (jn, jpn) = (signed(&j, n), signed(&jp, n));
        let h = C::new(jn, signed(&y, n));
        let hp = C::new(jpn, signed(&yp, n));
        let (q, qp) = (signed(&ji, n), n0 * signed(&jip, n));
        // [q, -h; qp, -hp] (c, d) = an (jn, jpn)
        let det = -q * hp + h * qp;
        let scale = q.abs().max(qp.abs()) * h.norm().max(hp.norm());
        if det.norm() <= 1e-14 * scale {
            return Err(ReferenceError::Singular(n));
        }
        let (r0, r1) = (an * jn, an * jpn);
        let c = (-r0 * hp + h * r1) / det;
        let d = (q * r1 - qp * r0) / det;
        let res = (c * q - d * h - r0).norm() + (c * qp - d * hp - r1).norm();
        let rn = r0.norm() + r1.norm();
        if rn > 0.0 {
            out.matching_residual = out.matching_residual.max(res / rn);
        }
        out.a.push(an);
        out.c.push(c);
        out.d.push(d);
    }
    // coefficients normalized by their radial functions at r = a
    let size = |idx: usize| {
        let n = idx as i64 - nm as i64;
        (out.c[idx] * signed(&ji, n)).norm() + (out.d[idx] * C::new(signed(&j, n), signed(&y, n))).norm()
    };
    let cmax = (0..=2 * nm).map(size).fold(0.0, f64::max);
    let tail = size(0).max(size(2 * nm));
    if tail > 1e-13 * cmax {
        return Err(ReferenceError::Tail(tail / cmax));
    }
    Ok(out)
}

impl DiskTransmissionSolution {
    fn polar(&self, x: Point) -> (f64, f64) {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        ((dx * dx + dy * dy).sqrt(), dy.atan2(dx))
    }

    /// Radial profile sum f_n(r) e^{i n theta} and its r- and theta-derivatives.
    fn sum(&self, r: f64, th: f64, inside: bool) -> (C, C, C) {
        let nm = self.n_max;
        let (mut v, mut vr, mut vt) = (C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0));
        if inside {
            let kk = self.k * self.n0;
            let (j, jp, _, _) = bessel_table(nm, kk * r);
            for (idx, n) in (-(nm as i64)..=(nm as i64)).enumerate() {
                let e = C::from_polar(1.0, n as f64 * th);
                let c = self.c[idx] * e;
                v += c * signed(&j, n);
                vr += c * kk * signed(&jp, n);
                vt += c * I * n as f64 * signed(&j, n);
            }
        } else {
            let k = self.k;
            let (j, jp, y, yp) = bessel_table(nm, k * r);
            for (idx, n) in (-(nm as i64)..=(nm as i64)).enumerate() {
                let e = C::from_polar(1.0, n as f64 * th);
                let h = C::new(signed(&j, n), signed(&y, n));
                let hp = C::new(signed(&jp, n), signed(&yp, n));
                let f = self.d[idx] * h;
                let fp = self.d[idx] * hp;
                v += e * f;
                vr += e * k * fp;
                vt += e * I * n as f64 * f;
            }
            // incident part in closed form
            let x = [self.center[0] + r * th.cos(), self.center[1] + r * th.sin()];
            let (ui, gi) = self.incident(x);
            let (c, s) = (th.cos(), th.sin());
            v += ui;
            vr += gi[0] * c + gi[1] * s;
            vt += r * (-gi[0] * s + gi[1] * c);
        }
        (v, vr, vt)
    }

    /// Total field and gradient; the interior series is used for r <= a.
    pub fn eval(&self, x: Point) -> (C, [C; 2]) {
        let (r, th) = self.polar(x);
        let inside = r <= self.radius;
        if r < 1e-12 {
            // only |n| <= 1 contribute at the origin
            let kk = if inside { self.k * self.n0 } else { self.k };
            let idx = |n: i64| (n + self.n_max as i64) as usize;
            let coef = |n: i64| if inside { self.c[idx(n)] } else { self.a[idx(n)] + self.d[idx(n)] };
            let (c1, cm1) = (coef(1), coef(-1));
            let g = [0.5 * kk * (c1 - cm1), 0.5 * kk * I * (c1 + cm1)];
            return (coef(0), g);
        }
        let (v, vr, vt) = self.sum(r, th, inside);
        let (c, s) = (th.cos(), th.sin());
        (v, [vr * c - vt * s / r, vr * s + vt * c / r])
    }

    pub fn eval_interior(&self, x: Point) -> C {
        let (r, th) = self.polar(x);
        self.sum(r.max(1e-300), th, true).0
    }

    pub fn eval_exterior(&self, x: Point) -> C {
        let (r, th) = self.polar(x);
        self.sum(r, th, false).0
    }

    /// (u, d_r u) at r = a from the interior or the exterior series.
    pub fn boundary_cauchy(&self, theta: f64, inside: bool) -> (C, C) {
        let (v, vr, _) = self.sum(self.radius, theta, inside);
        (v, vr)
    }

    pub fn incident(&self, x: Point) -> (C, [C; 2]) {
        plane_wave(self.k, self.direction, x)
    }
}

impl ExactSolution for DiskTransmissionSolution {
    fn u(&self, x: Point) -> (C, [C; 2]) {
        self.eval(x)
    }
    fn m(&self, t: f64) -> C {
        let (v, vr) = self.boundary_cauchy(t, true);
        vr + I * self.k * v
    }
    fn ext(&self, t: f64) -> C {
        self.boundary_cauchy(t, true).0
    }
}

/// e^{i k d.x} and its gradient.
pub fn plane_wave(k: f64, d: Point, x: Point) -> (C, [C; 2]) {
    let v = C::from_polar(1.0, k * (d[0] * x[0] + d[1] * x[1]));
    (v, [I * k * d[0] * v, I * k * d[1] * v])
}

/// (g, h) = (u_inc, -(d_n u_inc + i k u_inc)) on the curve; with f = 0 the
/// three-field solution is the total field.
pub fn plane_wave_data(k: f64, direction: Point, curve: &BoundaryCurve) -> (impl Fn(f64) -> C + Sync + '_, impl Fn(f64) -> C + Sync + '_) {
    let g = move |t: f64| plane_wave(k, direction, curve.position(t)).0;
    let h = move |t: f64| {
        let (v, gr) = plane_wave(k, direction, curve.position(t));
        let n = curve.normal(t);
        -(gr[0] * n[0] + gr[1] * n[1] + I * k * v)
    };
    (g, h)
}

/// Circle symbols (V, K, K', W) of Fourier mode n at wavenumber k >= 0.
pub fn circle_symbols(k: f64, radius: f64, n: i64) -> [C; 4] {
    let m = n.unsigned_abs() as usize;
    if k == 0.0 {
        let v = if m == 0 { -radius * radius.ln() } else { radius / (2.0 * m as f64) };
        let kk = if m == 0 { -0.5 } else { 0.0 };
        let w = m as f64 / (2.0 * radius);
        return [C::new(v, 0.0), C::new(kk, 0.0), C::new(kk, 0.0), C::new(w, 0.0)];
    }
    let z = k * radius;
    let (j, jp, y, yp) = bessel_table(m, z);
    let (h, hp) = (C::new(j[m], y[m]), C::new(jp[m], yp[m]));
    let v = I * PI * radius / 2.0 * j[m] * h;
    let kk = 0.5 + I * PI * z / 2.0 * j[m] * hp;
    let w = -I * PI * k * k * radius / 2.0 * jp[m] * hp;
    [v, kk, kk, w]
}

/// A smooth field on R^2 with value, gradient and Hessian in closed form.
pub trait SmoothField: Sync {
    fn eval(&self, x: Point) -> (C, [C; 2], [[C; 2]; 2]);
}

/// e^{i k d.x} as a smooth field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub k: f64,
    pub direction: Point,
}

impl SmoothField for PlaneWave {
    fn eval(&self, x: Point) -> (C, [C; 2], [[C; 2]; 2]) {
        let (v, g) = plane_wave(self.k, self.direction, x);
        let (k, d) = (self.k, self.direction);
        let hs = [[-k * k * d[0] * d[0] * v, -k * k * d[0] * d[1] * v], [-k * k * d[1] * d[0] * v, -k * k * d[1] * d[1] * v]];
        (v, g, hs)
    }
}

/// f, g, h for a prescribed u with u_ext = u on a circle. g and h come from
/// the circle symbols applied to the Fourier modes of the exact traces.
pub struct ManufacturedSolution<'a> {
    pub k: f64,
    pub field: &'a dyn SmoothField,
    pub partition: &'a SubdomainPartition,
    pub curve: &'a BoundaryCurve,
    /// Fourier modes of g and h, index n + n_max
    pub g_modes: Vec<C>,
    pub h_modes: Vec<C>,
    pub n_max: usize,
}

/// Fourier coefficients (n = -n_max..=n_max) of a periodic function from
/// 2 (n_max + 1) equispaced samples.
fn fourier_modes(f: &dyn Fn(f64) -> C, n_max: usize) -> Vec<C> {
    let m = 4 * (n_max + 1);
    let mut buf: Vec<C> = (0..m).map(|j| f(TAU * j as f64 / m as f64)).collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    (-(n_max as i64)..=(n_max as i64)).map(|n| buf[n.rem_euclid(m as i64) as usize] / m as f64).collect()
}

fn synth(modes: &[C], t: f64) -> C {
    let nm = (modes.len() / 2) as i64;
    modes.iter().zip(-nm..=nm).map(|(z, n)| z * C::from_polar(1.0, n as f64 * t)).sum()
}

pub fn manufactured_solution<'a>(
    field: &'a dyn SmoothField,
    k: f64,
    partition: &'a SubdomainPartition,
    curve: &'a BoundaryCurve,
    n_max: usize,
) -> Result<ManufacturedSolution<'a>, ReferenceError> {
    let (radius, _) = curve.is_circle().ok_or(ReferenceError::NotCircle)?;
    if !(k > 0.0) {
        return Err(ReferenceError::Domain(format!("k = {k}")));
    }
    let mut s = ManufacturedSolution { k, field, partition, curve, g_modes: vec![], h_modes: vec![], n_max };
    let um = fourier_modes(&|t| s.ext(t), n_max);
    let dm = fourier_modes(&|t| s.conormal(t), n_max);
    for (idx, n) in (-(n_max as i64)..=(n_max as i64)).enumerate() {
        let [v, kk, kp, w] = circle_symbols(k, radius, n);
        let (u, d) = (um[idx], dm[idx]);
        s.g_modes.push((0.5 - kk) * u + v * d);
        let ap = 0.5 + kp + I * k * v;
        s.h_modes.push(-(w - I * k * (kk + kp) + k * k * v) * u - ap * (d + I * k * u));
    }
    Ok(s)
}

impl ManufacturedSolution<'_> {
    fn coef(&self, x: Point) -> &crate::geometry::Coefficients {
        &self.partition.coefficients[self.partition.classify(self.curve, x)]
    }

    /// nu grad u . n on the curve.
    pub fn conormal(&self, t: f64) -> C {
        let x = self.curve.position(t);
        let n = self.curve.normal(t);
        let (_, g, _) = self.field.eval(x);
        let nu = self.coef(x).nu;
        let q = [g[0] * nu[0][0] + g[1] * nu[0][1], g[0] * nu[1][0] + g[1] * nu[1][1]];
        q[0] * n[0] + q[1] * n[1]
    }

    /// -div(nu grad u) - (k n)^2 u for piecewise constant nu.
    pub fn f(&self, x: Point) -> C {
        let (u, _, hs) = self.field.eval(x);
        let c = self.coef(x);
        let nu = c.nu;
        let div = nu[0][0] * hs[0][0] + nu[0][1] * hs[1][0] + nu[1][0] * hs[0][1] + nu[1][1] * hs[1][1];
        -div - (self.k * c.n.eval(x)).powi(2) * u
    }

    pub fn g(&self, t: f64) -> C {
        synth(&self.g_modes, t)
    }

    pub fn h(&self, t: f64) -> C {
        synth(&self.h_modes, t)
    }
}

impl ExactSolution for ManufacturedSolution<'_> {
    fn u(&self, x: Point) -> (C, [C; 2]) {
        let (v, g, _) = self.field.eval(x);
        (v, g)
    }
    fn m(&self, t: f64) -> C {
        self.conormal(t) + I * self.k * self.field.eval(self.curve.position(t)).0
    }
    fn ext(&self, t: f64) -> C {
        self.field.eval(self.curve.position(t)).0
    }
}
