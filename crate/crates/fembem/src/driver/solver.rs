//! Direct solvers for the coupled block system.

use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{matvec, Coo, CoupledSystem, ThreeFieldVector};

type C = Complex64;

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("singular matrix ({0}); condition estimate {1:.3e}")]
    Singular(String, f64),
    #[error("residual {0:.3e} above tolerance")]
    Residual(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Sparse LU of the volume block and a dense Schur complement on (m, u_ext).
    #[default]
    Schur,
    /// Dense partial-pivoting LU of the whole matrix.
    Dense,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: ThreeFieldVector,
    /// ||A x - b|| / ||b|| (0 for b = 0)
    pub residual: f64,
}

fn rel_residual(sys: &CoupledSystem, x: &ThreeFieldVector, b: &ThreeFieldVector) -> f64 {
    let r = sys.apply(x).axpy(C::new(-1.0, 0.0), b);
    let nb = b.norm_l2();
    if nb == 0.0 {
        r.norm_l2()
    } else {
        r.norm_l2() / nb
    }
}

fn dense_cond_estimate(a: &Mat<C>) -> f64 {
    let s = a.singular_values().unwrap_or_default();
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// LU factorization of a sparse complex matrix.
pub struct SparseLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, C>,
    n: usize,
}

impl SparseLu {
    pub fn new(a: &Coo<C>) -> Result<Self, SolverError> {
        let sp: SparseColMat<usize, C> = a.to_faer();
        let lu = sp.sp_lu().map_err(|e| SolverError::Singular(format!("sparse LU: {e:?}"), f64::INFINITY))?;
        Ok(SparseLu { lu, n: a.nrows })
    }

    pub fn solve_mat(&self, b: &Mat<C>) -> Mat<C> {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &[C]) -> Vec<C> {
        let x = self.lu.solve(Mat::from_fn(self.n, 1, |i, _| b[i]));
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn solve_system(sys: &CoupledSystem, kind: SolverKind) -> Result<Solution, SolverError> {
    let b = &sys.rhs;
    let x = match kind {
        SolverKind::Dense => {
            let a = sys.to_dense();
            let lu = a.partial_piv_lu();
            let rhs = b.flat();
            let sol = lu.solve(Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]));
            let v: Vec<C> = (0..rhs.len()).map(|i| sol[(i, 0)]).collect();
            if v.iter().any(|z| !z.is_finite()) {
                return Err(SolverError::Singular("dense LU".into(), dense_cond_estimate(&a)));
            }
            ThreeFieldVector::from_flat(&v, sys.n_u, sys.n_m)
        }
        SolverKind::Schur => {
            let (nu, nm, ne) = (sys.n_u, sys.n_m, sys.n_e);
            let lu = SparseLu::new(&sys.uu)?;
            // Y = A_uu^{-1} A_um, y = A_uu^{-1} f_u
            let um = sys.um.to_dense();
            let y = lu.solve_mat(&um);
            let yf = lu.solve_vec(&b.u);
            let mu = sys.mu.to_dense();
            let corr = &mu * &y;
            let nb = nm + ne;
            let mut s = sys.bb.clone();
            for i in 0..nm {
                for j in 0..nm {
                    s[(i, j)] -= corr[(i, j)];
                }
            }
            let mu_yf = matvec(&sys.mu, &yf);
            let mut rb = b.m.clone();
            rb.iter_mut().zip(&mu_yf).for_each(|(a, c)| *a -= c);
            rb.extend_from_slice(&b.ext);
            let slu = s.partial_piv_lu();
            let xb = slu.solve(Mat::from_fn(nb, 1, |i, _| rb[i]));
            let xm: Vec<C> = (0..nm).map(|i| xb[(i, 0)]).collect();
            let xe: Vec<C> = (nm..nb).map(|i| xb[(i, 0)]).collect();
            if xm.iter().chain(&xe).any(|z| !z.is_finite()) {
                return Err(SolverError::Singular("Schur complement".into(), dense_cond_estimate(&s)));
            }
            let mut u = yf;
            for (i, ui) in u.iter_mut().enumerate() {
                for (j, xj) in xm.iter().enumerate() {
                    *ui -= y[(i, j)] * xj;
                }
            }
            debug_assert_eq!(u.len(), nu);
            ThreeFieldVector { u, m: xm, ext: xe }
        }
    };
    let residual = rel_residual(sys, &x, b);
    if !residual.is_finite() {
        return Err(SolverError::Residual(residual));
    }
    Ok(Solution { x, residual })
}
