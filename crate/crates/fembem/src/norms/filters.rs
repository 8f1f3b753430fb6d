//! Frequency splittings with cutoff k / eta. On the boundary the split acts on
//! Fourier modes; in the volume it acts on the 2D FFT of a windowed extension.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{BoundaryFourier, NormError};
use crate::geometry::Point;

type C = num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    High,
    Low,
}

/// Both variants split at |n| < k / eta (mode 0 always low). `Plus` also
/// returns the harmonic extension of the low part into the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterVariant {
    Plus,
    Minus,
}

/// sum_n w_n (r / R)^{|n|} e^{i n theta}
#[derive(Debug, Clone)]
pub struct LowExtension {
    pub radius: f64,
    pub center: Point,
    pub modes: Vec<(i64, C)>,
}

impl LowExtension {
    pub fn eval(&self, x: Point) -> C {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r = (dx * dx + dy * dy).sqrt() / self.radius;
        let th = dy.atan2(dx);
        self.modes
            .iter()
            .map(|&(n, w)| w * r.powi(n.unsigned_abs() as i32) * C::from_polar(1.0, n as f64 * th))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct FilterResult {
    pub modes: Vec<C>,
    pub extension: Option<LowExtension>,
}

fn cutoff(eta: f64, k: f64) -> Result<f64, NormError> {
    if !(eta > 0.0 && eta.is_finite()) || !(k > 0.0) {
        return Err(NormError::Domain(format!("eta = {eta}, k = {k}")));
    }
    Ok(k / eta)
}

/// Applies the low- or high-pass filter to boundary Fourier modes.
pub fn filter(fourier: &BoundaryFourier, modes: &[C], kind: FilterKind, variant: FilterVariant, eta: f64, k: f64) -> Result<FilterResult, NormError> {
    let lam = cutoff(eta, k)?;
    if modes.len() != fourier.n_modes() {
        return Err(NormError::Domain(format!("{} modes, expected {}", modes.len(), fourier.n_modes())));
    }
    let low = |j: usize| (fourier.mode(j) as f64).abs() < lam || fourier.mode(j) == 0;
    let out: Vec<C> = modes
        .iter()
        .enumerate()
        .map(|(j, &z)| if low(j) == (kind == FilterKind::Low) { z } else { C::new(0.0, 0.0) })
        .collect();
    let extension = (variant == FilterVariant::Plus && kind == FilterKind::Low).then(|| LowExtension {
        radius: fourier.radius,
        center: [0.0, 0.0],
        modes: out.iter().enumerate().filter(|(j, _)| low(*j)).map(|(j, &z)| (fourier.mode(j), z)).collect(),
    });
    Ok(FilterResult { modes: out, extension })
}

/// sup over |n| >= k / eta of (k / eta)^{s - s'} (1 + n^2)^{(s' - s) / 2}, the
/// operator norm of the high-pass filter from H^s into H^{s'} scaled by
/// (eta / k)^{s - s'}.
pub fn high_pass_bound(eta: f64, k: f64, s: f64, s_prime: f64) -> Result<f64, NormError> {
    let lam = cutoff(eta, k)?;
    let n0 = lam.ceil().max(1.0);
    Ok(lam.powf(s - s_prime) * (1.0 + n0 * n0).powf(0.5 * (s_prime - s)))
}

#[derive(Debug, Clone)]
pub struct VolumeFilterResult {
    /// grid points inside the bounding box of the input region
    pub points: Vec<Point>,
    pub values: Vec<C>,
    pub low: Vec<C>,
    pub high: Vec<C>,
}

/// erf-type window: 1 on [a, b] up to exp(-(margin / width)^2), Gaussian spectral tails.
fn window(t: f64, a: f64, b: f64, margin: f64) -> f64 {
    let w = margin / 6.0;
    0.5 * (libm::erf((t - (a - margin)) / w) - libm::erf((t - (b + margin)) / w))
}

/// Splits a field given on the box [lo, hi] into low and high frequencies.
/// The field is windowed onto a box enlarged by `2 * margin` per side and
/// sampled on an n x n grid; low keeps |xi| < k / eta; high = v - low at the
/// grid points inside [lo, hi].
pub fn volume_filter(
    v: &(dyn Fn(Point) -> C + Sync),
    lo: Point,
    hi: Point,
    margin: f64,
    n: usize,
    eta: f64,
    k: f64,
) -> Result<VolumeFilterResult, NormError> {
    let lam = cutoff(eta, k)?;
    if !(margin > 0.0) || n < 8 || !(hi[0] > lo[0] && hi[1] > lo[1]) {
        return Err(NormError::Domain("bad box or grid".into()));
    }
    let ext = 2.0 * margin;
    let (x0, y0) = (lo[0] - ext, lo[1] - ext);
    let (lx, ly) = (hi[0] - lo[0] + 2.0 * ext, hi[1] - lo[1] + 2.0 * ext);
    let (dx, dy) = (lx / n as f64, ly / n as f64);
    let coord = |i: usize, j: usize| [x0 + i as f64 * dx, y0 + j as f64 * dy];
    let mut data = vec![C::new(0.0, 0.0); n * n];
    let mut raw = vec![C::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            let x = coord(i, j);
            let w = window(x[0], lo[0], hi[0], margin) * window(x[1], lo[1], hi[1], margin);
            raw[j * n + i] = v(x);
            data[j * n + i] = raw[j * n + i] * w;
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    fft2(&mut data, n, &*fwd);
    let freq = |m: usize, l: f64| {
        let m = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        2.0 * PI * m / l
    };
    for j in 0..n {
        for i in 0..n {
            let (xi, eta_) = (freq(i, lx), freq(j, ly));
            if (xi * xi + eta_ * eta_).sqrt() >= lam {
                data[j * n + i] = C::new(0.0, 0.0);
            }
        }
    }
    fft2(&mut data, n, &*inv);
    let scale = 1.0 / (n * n) as f64;
    let mut out = VolumeFilterResult { points: vec![], values: vec![], low: vec![], high: vec![] };
    for j in 0..n {
        for i in 0..n {
            let x = coord(i, j);
            if x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1] {
                let l = data[j * n + i] * scale;
                out.points.push(x);
                out.values.push(raw[j * n + i]);
                out.low.push(l);
                out.high.push(raw[j * n + i] - l);
            }
        }
    }
    Ok(out)
}

fn fft2(data: &mut [C], n: usize, fft: &dyn rustfft::Fft<f64>) {
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![C::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            col[j] = data[j * n + i];
        }
        fft.process(&mut col);
        for j in 0..n {
            data[j * n + i] = col[j];
        }
    }
}
