//! Hierarchic shape functions on the reference triangle and segment.
//!
//! Triangle ordering: the three vertex functions, then p - 1 functions per
//! local edge (edge e is opposite vertex e), then the interior bubbles.

use super::DiscretizationError;
use crate::geometry::Point;

pub const MAX_DEGREE: usize = 12;

/// Legendre values P_0..=P_n and derivatives at x.
pub fn legendre_all(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; n + 1];
    let mut dp = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for j in 2..=n {
        let jf = j as f64;
        p[j] = ((2.0 * jf - 1.0) * x * p[j - 1] - (jf - 1.0) * p[j - 2]) / jf;
        dp[j] = dp[j - 2] + (2.0 * jf - 1.0) * p[j - 1];
    }
    (p, dp)
}

fn check_degree(p: usize) -> Result<(), DiscretizationError> {
    if p == 0 || p > MAX_DEGREE {
        Err(DiscretizationError::UnsupportedDegree(p))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleBasis {
    pub p: usize,
}

const GRAD_LAMBDA: [Point; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

impl TriangleBasis {
    pub fn new(p: usize) -> Result<Self, DiscretizationError> {
        check_degree(p)?;
        Ok(TriangleBasis { p })
    }

    pub fn dim(&self) -> usize {
        (self.p + 1) * (self.p + 2) / 2
    }

    pub fn edge_dofs(&self) -> usize {
        self.p - 1
    }

    pub fn bubble_dofs(&self) -> usize {
        if self.p < 3 {
            0
        } else {
            (self.p - 2) * (self.p - 1) / 2
        }
    }

    /// Local index of the j-th function on local edge e.
    pub fn edge_index(&self, e: usize, j: usize) -> usize {
        3 + e * (self.p - 1) + j
    }

    /// Values and reference gradients of all basis functions at xi, with
    /// the local edge orientation (from vertex (e+1)%3 to (e+2)%3).
    pub fn eval(&self, xi: Point) -> (Vec<f64>, Vec<Point>) {
        let p = self.p;
        let lam = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
        let mut val = Vec::with_capacity(self.dim());
        let mut grad = Vec::with_capacity(self.dim());
        for i in 0..3 {
            val.push(lam[i]);
            grad.push(GRAD_LAMBDA[i]);
        }
        if p >= 2 {
            for e in 0..3 {
                let (a, b) = ((e + 1) % 3, (e + 2) % 3);
                let x = lam[b] - lam[a];
                let gx = [GRAD_LAMBDA[b][0] - GRAD_LAMBDA[a][0], GRAD_LAMBDA[b][1] - GRAD_LAMBDA[a][1]];
                let q = lam[a] * lam[b];
                let gq = [
                    lam[a] * GRAD_LAMBDA[b][0] + lam[b] * GRAD_LAMBDA[a][0],
                    lam[a] * GRAD_LAMBDA[b][1] + lam[b] * GRAD_LAMBDA[a][1],
                ];
                let (lp, dlp) = legendre_all(p - 2, x);
                for j in 0..p - 1 {
                    // scaled so that the edge functions have comparable size
                    let c = 4.0 * ((2 * j + 3) as f64).sqrt();
                    val.push(c * q * lp[j]);
                    grad.push([
                        c * (gq[0] * lp[j] + q * dlp[j] * gx[0]),
                        c * (gq[1] * lp[j] + q * dlp[j] * gx[1]),
                    ]);
                }
            }
        }
        if p >= 3 {
            let b = lam[0] * lam[1] * lam[2];
            let gb = [
                GRAD_LAMBDA[0][0] * lam[1] * lam[2] + lam[0] * GRAD_LAMBDA[1][0] * lam[2] + lam[0] * lam[1] * GRAD_LAMBDA[2][0],
                GRAD_LAMBDA[0][1] * lam[1] * lam[2] + lam[0] * GRAD_LAMBDA[1][1] * lam[2] + lam[0] * lam[1] * GRAD_LAMBDA[2][1],
            ];
            let u = lam[2] - lam[1];
            let gu = [GRAD_LAMBDA[2][0] - GRAD_LAMBDA[1][0], GRAD_LAMBDA[2][1] - GRAD_LAMBDA[1][1]];
            let w = 2.0 * lam[0] - 1.0;
            let gw = [2.0 * GRAD_LAMBDA[0][0], 2.0 * GRAD_LAMBDA[0][1]];
            let (pu, dpu) = legendre_all(p - 3, u);
            let (pw, dpw) = legendre_all(p - 3, w);
            for tot in 0..=p - 3 {
                for m in 0..=tot {
                    let n = tot - m;
                    let f = pu[m] * pw[n];
                    let gf = [
                        dpu[m] * gu[0] * pw[n] + pu[m] * dpw[n] * gw[0],
                        dpu[m] * gu[1] * pw[n] + pu[m] * dpw[n] * gw[1],
                    ];
                    let c = 27.0;
                    val.push(c * b * f);
                    grad.push([c * (gb[0] * f + b * gf[0]), c * (gb[1] * f + b * gf[1])]);
                }
            }
        }
        (val, grad)
    }
}

/// Sign of the j-th edge function when the local edge runs against the
/// global orientation.
pub fn edge_sign(j: usize, reversed: bool) -> f64 {
    if reversed && j % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Continuous hierarchic basis on [0, 1]: the two hats (1 - s, s), then
/// bubbles s (1 - s) P_j(2s - 1), j < p - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBasis {
    pub p: usize,
}

impl SegmentBasis {
    pub fn new(p: usize) -> Result<Self, DiscretizationError> {
        check_degree(p)?;
        Ok(SegmentBasis { p })
    }

    pub fn dim(&self) -> usize {
        self.p + 1
    }

    /// Values and d/ds.
    pub fn eval(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![1.0 - s, s];
        let mut d = vec![-1.0, 1.0];
        if self.p >= 2 {
            let (lp, dlp) = legendre_all(self.p - 2, 2.0 * s - 1.0);
            let q = s * (1.0 - s);
            let dq = 1.0 - 2.0 * s;
            for j in 0..self.p - 1 {
                let c = 4.0 * ((2 * j + 3) as f64).sqrt();
                v.push(c * q * lp[j]);
                d.push(c * (dq * lp[j] + 2.0 * q * dlp[j]));
            }
        }
        (v, d)
    }
}

/// Discontinuous Legendre basis P_0..P_{p-1}(2s - 1) on [0, 1] (degree p - 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendreSegment {
    pub p: usize,
}

impl LegendreSegment {
    pub fn new(p: usize) -> Result<Self, DiscretizationError> {
        check_degree(p)?;
        Ok(LegendreSegment { p })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn eval(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let (lp, dlp) = legendre_all(self.p - 1, 2.0 * s - 1.0);
        (lp, dlp.iter().map(|d| 2.0 * d).collect())
    }
}
