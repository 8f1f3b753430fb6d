//! Single and double layer potentials off Gamma, with adaptive panel
//! subdivision for points close to the curve.

use num_complex::Complex64;

use super::{eval_trace, BemError, TraceBasis, TraceSpace};
use crate::discretization::quadrature::{gauss_unchecked, QuadratureRule};
use crate::geometry::{dist, BoundaryMesh, Point};
use crate::specfun::radial_green;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    Single,
    Double,
}

#[derive(Debug, Clone)]
pub struct PotentialField<'a> {
    pub kind: PotentialKind,
    pub k: f64,
    pub gamma: &'a BoundaryMesh,
    pub basis: TraceBasis,
    pub space: TraceSpace,
    pub coeffs: Vec<C>,
}

impl PotentialField<'_> {
    fn min_distance(&self, x: Point) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.gamma.len() {
            for q in 0..=32 {
                d = d.min(dist(x, self.gamma.eval(i, q as f64 / 32.0).0));
            }
        }
        d
    }

    fn diameter(&self) -> f64 {
        self.gamma.curve.sampled_diameter(256)
    }

    fn accumulate(&self, x: Point, rule: &QuadratureRule, panel: usize, s0: f64, s1: f64, depth: usize, out: &mut (C, [C; 2])) {
        let a = self.gamma.eval(panel, s0).0;
        let b = self.gamma.eval(panel, s1).0;
        let m = self.gamma.eval(panel, 0.5 * (s0 + s1)).0;
        let len = dist(a, m) + dist(m, b);
        let d = dist(x, a).min(dist(x, b)).min(dist(x, m));
        if d <= len && depth < 48 {
            let mid = 0.5 * (s0 + s1);
            self.accumulate(x, rule, panel, s0, mid, depth + 1, out);
            self.accumulate(x, rule, panel, mid, s1, depth + 1, out);
            return;
        }
        for (&u, &w) in rule.points.iter().zip(&rule.weights) {
            let s = s0 + (s1 - s0) * u;
            let (y, n, jac) = self.gamma.eval(panel, s);
            let dens = eval_trace(&self.basis, self.space, &self.coeffs, panel, s);
            let e = [x[0] - y[0], x[1] - y[1]];
            let r = e[0].hypot(e[1]);
            let e = [e[0] / r, e[1] / r];
            let [g, g1, g2] = radial_green(self.k, r);
            let wt = dens * (w * (s1 - s0) * jac);
            match self.kind {
                PotentialKind::Single => {
                    out.0 += g * wt;
                    out.1[0] += g1 * e[0] * wt;
                    out.1[1] += g1 * e[1] * wt;
                }
                PotentialKind::Double => {
                    // d_{n_y} G = -G'(r) e.n_y
                    let en = e[0] * n[0] + e[1] * n[1];
                    out.0 += -g1 * en * wt;
                    for i in 0..2 {
                        out.1[i] += (-g2 * en * e[i] - g1 * (n[i] - en * e[i]) / r) * wt;
                    }
                }
            }
        }
    }

    /// Potential value and x-gradient.
    pub fn eval_with_gradient(&self, x: Point) -> Result<(C, [C; 2]), BemError> {
        let d = self.min_distance(x);
        if d < 1e-3 * self.diameter() {
            return Err(BemError::TooClose(d));
        }
        let rule = gauss_unchecked(12).to_unit();
        let mut out = (C::new(0.0, 0.0), [C::new(0.0, 0.0); 2]);
        for panel in 0..self.gamma.len() {
            self.accumulate(x, &rule, panel, 0.0, 1.0, 0, &mut out);
        }
        Ok(out)
    }
}

pub fn evaluate_potential(field: &PotentialField<'_>, points: &[Point]) -> Result<Vec<C>, BemError> {
    points.iter().map(|&x| field.eval_with_gradient(x).map(|v| v.0)).collect()
}

/// Errors of the four jump relations, relative to max |phi| over the sample
/// points. Jumps are interior minus exterior limits: [g0 SL] = 0,
/// [g1 SL] = phi, [g0 DL] = -phi, [g1 DL] = 0.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct JumpErrors {
    pub sl_value: f64,
    pub sl_normal: f64,
    pub dl_value: f64,
    pub dl_normal: f64,
}

impl JumpErrors {
    pub fn max(&self) -> f64 {
        self.sl_value.max(self.sl_normal).max(self.dl_value).max(self.dl_normal)
    }
}

/// One-sided limit at distance 0 from values at distances d, 2d, 3d, 4d.
fn extrapolate(v: &[C; 4]) -> C {
    4.0 * v[0] - 6.0 * v[1] + 4.0 * v[2] - v[3]
}

/// Measures the jump relations for the density `coeffs` at the midpoint of
/// every panel; traces are extrapolated along the normal from distances
/// j * offset * h_panel, j = 1..4.
pub fn jump_errors(
    k: f64,
    gamma: &BoundaryMesh,
    basis: TraceBasis,
    space: TraceSpace,
    coeffs: &[C],
    offset: f64,
) -> Result<JumpErrors, BemError> {
    let mk = |kind| PotentialField { kind, k, gamma, basis, space, coeffs: coeffs.to_vec() };
    let (sl, dl) = (mk(PotentialKind::Single), mk(PotentialKind::Double));
    let mut scale = 0.0f64;
    let mut err = JumpErrors::default();
    let mut raw = [0.0f64; 4];
    for pi in 0..gamma.len() {
        let (x, n, _) = gamma.eval(pi, 0.5);
        let phi = eval_trace(&basis, space, coeffs, pi, 0.5);
        scale = scale.max(phi.norm());
        let d = offset * gamma.length(pi);
        let mut lim = [[C::new(0.0, 0.0); 2]; 4];
        for (side, sgn) in [(0usize, -1.0), (1, 1.0)] {
            let mut vals = [[C::new(0.0, 0.0); 4]; 4];
            for j in 0..4 {
                let t = sgn * d * (j + 1) as f64;
                let y = [x[0] + t * n[0], x[1] + t * n[1]];
                let (sv, sg) = sl.eval_with_gradient(y)?;
                let (dv, dg) = dl.eval_with_gradient(y)?;
                vals[0][j] = sv;
                vals[1][j] = sg[0] * n[0] + sg[1] * n[1];
                vals[2][j] = dv;
                vals[3][j] = dg[0] * n[0] + dg[1] * n[1];
            }
            for q in 0..4 {
                lim[q][side] = extrapolate(&vals[q]);
            }
        }
        let want = [C::new(0.0, 0.0), phi, -phi, C::new(0.0, 0.0)];
        for q in 0..4 {
            raw[q] = raw[q].max((lim[q][0] - lim[q][1] - want[q]).norm());
        }
    }
    if scale > 0.0 {
        err = JumpErrors { sl_value: raw[0] / scale, sl_normal: raw[1] / scale, dl_value: raw[2] / scale, dl_normal: raw[3] / scale };
    }
    Ok(err)
}
