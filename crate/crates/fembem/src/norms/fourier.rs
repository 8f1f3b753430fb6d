//! Fourier analysis of boundary functions on a circle, by direct summation
//! over panel quadrature nodes.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use super::NormError;
use crate::bem::{TraceBasis, TraceSpace};
use crate::discretization::quadrature::gauss_unchecked;
use crate::geometry::BoundaryMesh;

type C = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct FourierNode {
    pub panel: usize,
    pub s: f64,
    pub theta: f64,
    /// quadrature weight in theta
    pub w: f64,
}

/// w(theta) = sum_n w_n e^{i n theta}, |n| <= n_max, with
/// w_n = (2 pi)^{-1} int w e^{-i n theta} d theta.
#[derive(Debug, Clone)]
pub struct BoundaryFourier {
    pub radius: f64,
    pub n_max: usize,
    pub basis: TraceBasis,
    pub nodes: Vec<FourierNode>,
    /// node ranges per panel
    panel_nodes: Vec<(usize, usize)>,
}

impl BoundaryFourier {
    /// `n_max` defaults to 6 p N_panels (capped at 4096).
    pub fn new(gamma: &BoundaryMesh, basis: TraceBasis, n_max: Option<usize>) -> Result<Self, NormError> {
        let (radius, _) = gamma.curve.is_circle().ok_or(NormError::NotCircle)?;
        let n_max = n_max.unwrap_or((6 * basis.p * gamma.len()).min(4096));
        let rule = gauss_unchecked(basis.p + 8).to_unit();
        let mut nodes = Vec::new();
        let mut panel_nodes = Vec::with_capacity(gamma.len());
        for (pi, panel) in gamma.panels.iter().enumerate() {
            let dt = panel.dtheta();
            // at most 4 radians of phase of the top mode per sub-interval
            let sub = ((n_max as f64 * dt.abs()) / 4.0).ceil().max(1.0) as usize;
            let start = nodes.len();
            for q in 0..sub {
                let (a, b) = (q as f64 / sub as f64, (q + 1) as f64 / sub as f64);
                for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                    let s = a + (b - a) * x;
                    nodes.push(FourierNode { panel: pi, s, theta: panel.theta(s), w: w * (b - a) * dt.abs() });
                }
            }
            panel_nodes.push((start, nodes.len()));
        }
        Ok(BoundaryFourier { radius, n_max, basis, nodes, panel_nodes })
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Mode number of index j.
    pub fn mode(&self, j: usize) -> i64 {
        j as i64 - self.n_max as i64
    }

    fn accumulate(&self, range: (usize, usize), f: &dyn Fn(&FourierNode) -> C, out: &mut [C]) {
        let nm = self.n_max;
        for node in &self.nodes[range.0..range.1] {
            let v = f(node) * (node.w / TAU);
            let step = C::from_polar(1.0, -node.theta);
            let mut z = C::new(1.0, 0.0);
            for n in 0..=nm {
                // z = e^{-i n theta}
                out[nm + n] += v * z;
                if n > 0 {
                    out[nm - n] += v * z.conj();
                }
                z *= step;
            }
        }
    }

    /// Coefficients of a function given at nodes (panel, s, theta).
    pub fn transform_fn(&self, f: &(dyn Fn(&FourierNode) -> C + Sync)) -> Vec<C> {
        let parts: Vec<Vec<C>> = self
            .panel_nodes
            .par_iter()
            .map(|&r| {
                let mut out = vec![C::new(0.0, 0.0); self.n_modes()];
                self.accumulate(r, f, &mut out);
                out
            })
            .collect();
        let mut out = vec![C::new(0.0, 0.0); self.n_modes()];
        for p in parts {
            out.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        out
    }

    /// Coefficients of a discrete trace-space function.
    pub fn transform(&self, space: TraceSpace, coeffs: &[C]) -> Vec<C> {
        let b = self.basis;
        self.transform_fn(&|nd: &FourierNode| crate::bem::eval_trace(&b, space, coeffs, nd.panel, nd.s))
    }

    /// (n_modes x dim) matrix whose column i holds the coefficients of basis function i.
    pub fn basis_matrix(&self, space: TraceSpace) -> Mat<C> {
        let b = self.basis;
        let dim = b.dim(space);
        let parts: Vec<(Vec<usize>, Vec<Vec<C>>)> = self
            .panel_nodes
            .par_iter()
            .enumerate()
            .map(|(pi, &r)| {
                let dofs = b.dofs(space, pi);
                let cols = (0..dofs.len())
                    .map(|a| {
                        let mut out = vec![C::new(0.0, 0.0); self.n_modes()];
                        self.accumulate(r, &|nd: &FourierNode| C::new(b.eval(space, nd.s).0[a], 0.0), &mut out);
                        out
                    })
                    .collect();
                (dofs, cols)
            })
            .collect();
        let mut f = Mat::<C>::zeros(self.n_modes(), dim);
        for (dofs, cols) in parts {
            for (d, col) in dofs.iter().zip(cols) {
                for (j, v) in col.into_iter().enumerate() {
                    f[(j, *d)] += v;
                }
            }
        }
        f
    }

    /// Fourier weight 2 pi R (1 + n^2)^s of mode index j.
    pub fn weight(&self, j: usize, s: f64) -> f64 {
        let n = self.mode(j) as f64;
        TAU * self.radius * (1.0 + n * n).powf(s)
    }

    /// ||w||_s^2 = 2 pi R sum (1 + n^2)^s |w_n|^2.
    pub fn norm_sq(&self, modes: &[C], s: f64) -> f64 {
        modes.iter().enumerate().map(|(j, z)| self.weight(j, s) * z.norm_sqr()).sum()
    }

    /// Gram matrix of the order-s norm on a trace space.
    pub fn gram(&self, space: TraceSpace, s: f64) -> Mat<f64> {
        let f = self.basis_matrix(space);
        let fd = Mat::<C>::from_fn(f.nrows(), f.ncols(), |j, i| f[(j, i)] * self.weight(j, s).sqrt());
        let g = fd.adjoint() * &fd;
        Mat::from_fn(g.nrows(), g.ncols(), |i, j| 0.5 * (g[(i, j)].re + g[(j, i)].re))
    }

    /// Right-hand side (f, psi_i)_s of the order-s Riesz projection.
    pub fn pairing_with_basis(&self, basis_matrix: &Mat<C>, modes: &[C], s: f64) -> Vec<C> {
        (0..basis_matrix.ncols())
            .map(|i| (0..modes.len()).map(|j| basis_matrix[(j, i)].conj() * modes[j] * self.weight(j, s)).sum())
            .collect()
    }

    /// sum_n w_n e^{i n theta}
    pub fn synthesize(&self, modes: &[C], theta: f64) -> C {
        modes.iter().enumerate().map(|(j, z)| z * C::from_polar(1.0, self.mode(j) as f64 * theta)).sum()
    }
}
