//! Quadrature rules, hierarchic shape functions and the discrete spaces.

use faer::{Mat, Side};

pub mod quadrature;
pub mod shape;
pub mod spaces;

pub use spaces::{ElementDofs, SpaceTriple, VolumeKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscretizationError {
    #[error("unsupported quadrature rule: {0}")]
    UnsupportedRule(String),
    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),
    #[error("singular Riesz matrix")]
    SingularRiesz,
}

/// Inverse-inequality constant: the square root of the largest generalized
/// eigenvalue of `weighted_mass` (the Gram matrix of h^{1/2} p^{-1} lambda in
/// L^2) against `riesz` (the Gram matrix of the H^{-1/2} norm).
pub fn measure_inverse_inequality(weighted_mass: &Mat<f64>, riesz: &Mat<f64>) -> Result<f64, DiscretizationError> {
    let n = riesz.nrows();
    let llt = riesz.llt(Side::Lower).map_err(|_| DiscretizationError::SingularRiesz)?;
    let l = llt.L();
    // C = L^{-1} M L^{-T}
    let mut x = weighted_mass.to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, x.as_mut(), faer::Par::Seq);
    let mut y = x.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, y.as_mut(), faer::Par::Seq);
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (y[(i, j)] + y[(j, i)]));
    let ev = c.self_adjoint_eigenvalues(Side::Lower).map_err(|_| DiscretizationError::SingularRiesz)?;
    let top = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) || !top.is_finite() {
        return Err(DiscretizationError::SingularRiesz);
    }
    Ok(top.sqrt())
}
