//! Energy, dG and dG+ norms, discrete H^{+-1/2}(Gamma) realizations, errors
//! against exact solutions, best approximations and frequency filters.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub mod exact;
pub mod filters;
pub mod fourier;

pub use exact::{best_approximation_error, error_parts, BestApproximation, ErrorParts, ExactSolution, VolumeErrorParts};
pub use filters::{filter, high_pass_bound, volume_filter, FilterKind, FilterResult, FilterVariant, LowExtension, VolumeFilterResult};
pub use fourier::{BoundaryFourier, FourierNode};

use crate::assembly::{combine, AssemblyError, Coo, PenaltyParams, ThreeFieldVector, VolumeMatrices};
use crate::bem::{BemError, BemOperators, OperatorTag, TraceBasis, TraceSpace};
use crate::discretization::quadrature::gauss_unchecked;
use crate::geometry::BoundaryMesh;

type C = Complex64;

#[derive(Debug, thiserror::Error)]
pub enum NormError {
    #[error("the Fourier realization needs a circular boundary")]
    NotCircle,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("singular Gram matrix in the {0} projection")]
    Singular(&'static str),
    #[error("filter parameter out of range: {0}")]
    Domain(String),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Bem(#[from] BemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// ||nu^{1/2} grad u||^2 + k^2 ||w u||^2 + ||m||_{-1/2}^2 + ||u_ext||_{1/2}^2
    Energy,
    /// dG(Omega) volume part with the same boundary terms
    Dg,
    /// dG+(Omega) plus ||h^{1/2} p^{-1} m||_0^2
    DgPlus,
}

/// The volume L2 weight: k^2 ||u||^2 or ||k n u||^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MassWeight {
    Uniform,
    #[default]
    Index,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryRealization {
    #[default]
    Fourier,
    Riesz,
}

/// Facet matrices already scaled by their k weights.
#[derive(Debug, Clone)]
pub struct DgNormParts {
    pub jump: Coo<f64>,
    pub flux: Coo<f64>,
    pub bnd_flux: Coo<f64>,
    pub bnd_val: Coo<f64>,
    pub avg: Coo<f64>,
}

#[derive(Debug, Clone)]
pub struct EnergyNormContext {
    pub k: f64,
    pub p: usize,
    pub mass_weight: MassWeight,
    pub realization: BoundaryRealization,
    pub stiffness: Coo<f64>,
    /// k^2 M or k^2 M_{n^2}
    pub mass: Coo<f64>,
    pub penalties: Option<PenaltyParams>,
    pub dg: Option<DgNormParts>,
    /// H^{-1/2} Gram matrix on W_h
    pub gram_m: Mat<f64>,
    /// H^{1/2} Gram matrix on Z_h
    pub gram_ext: Mat<f64>,
    /// int h p^{-2} psi_i psi_j on W_h
    pub m_mesh_mass: Mat<f64>,
    pub basis: TraceBasis,
    pub fourier: Option<BoundaryFourier>,
    /// Fourier coefficients of the W_h and Z_h basis functions
    pub fourier_w: Option<Mat<C>>,
    pub fourier_z: Option<Mat<C>>,
}

/// Gram matrix of h^{1/2} p^{-1} lambda in L^2(Gamma) on W_h.
pub fn mesh_weighted_mass(gamma: &BoundaryMesh, basis: &TraceBasis) -> Mat<f64> {
    let n = basis.n_w();
    let p = basis.p as f64;
    let mut m = Mat::<f64>::zeros(n, n);
    let g = gauss_unchecked(basis.p + 4).to_unit();
    for (pi, panel) in gamma.panels.iter().enumerate() {
        let dofs = basis.dofs(TraceSpace::W, pi);
        for (&s, &w) in g.points.iter().zip(&g.weights) {
            let (v, _) = basis.eval(TraceSpace::W, s);
            let wq = w * gamma.eval(pi, s).2 * panel.h / (p * p);
            for a in 0..dofs.len() {
                for b in 0..dofs.len() {
                    m[(dofs[a], dofs[b])] += wq * v[a] * v[b];
                }
            }
        }
    }
    m
}

fn real_part(m: &Mat<C>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re))
}

fn quad_form_dense(m: &Mat<f64>, x: &[C]) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        if x[j] == C::new(0.0, 0.0) {
            continue;
        }
        for i in 0..m.nrows() {
            s += m[(i, j)] * (x[i].conj() * x[j]).re;
        }
    }
    s
}

impl EnergyNormContext {
    /// `ops0` (the k = 0 operators) is required for the Riesz realization.
    pub fn new(
        k: f64,
        vm: &VolumeMatrices,
        gamma: &BoundaryMesh,
        basis: TraceBasis,
        mass_weight: MassWeight,
        realization: BoundaryRealization,
        ops0: Option<&BemOperators>,
    ) -> Result<Self, NormError> {
        let mass = match mass_weight {
            MassWeight::Uniform => &vm.mass,
            MassWeight::Index => &vm.mass_n2,
        };
        let mass = Coo { nrows: mass.nrows, ncols: mass.ncols, entries: mass.entries.iter().map(|&(i, j, v)| (i, j, v * k * k)).collect() };
        let dg = vm.dg.as_ref().map(|d| {
            let sc = |a: &Coo<f64>, c: f64| Coo { nrows: a.nrows, ncols: a.ncols, entries: a.entries.iter().map(|&(i, j, v)| (i, j, c * v)).collect() };
            DgNormParts {
                jump: sc(&d.jump_alpha, k),
                flux: sc(&d.flux_beta, 1.0 / k),
                bnd_flux: sc(&d.bnd_dd, 1.0 / k),
                bnd_val: sc(&d.bnd_mass_1md, k),
                avg: sc(&d.avg_inv_alpha, 1.0 / k),
            }
        });
        let (fourier, fourier_w, fourier_z) = match gamma.curve.is_circle() {
            Some(_) => {
                let f = BoundaryFourier::new(gamma, basis, None)?;
                let fw = f.basis_matrix(TraceSpace::W);
                let fz = f.basis_matrix(TraceSpace::Z);
                (Some(f), Some(fw), Some(fz))
            }
            None => (None, None, None),
        };
        let (gram_m, gram_ext) = match realization {
            BoundaryRealization::Fourier => {
                let f = fourier.as_ref().ok_or(NormError::NotCircle)?;
                let g = |fm: &Mat<C>, s: f64| {
                    let fd = Mat::<C>::from_fn(fm.nrows(), fm.ncols(), |j, i| fm[(j, i)] * f.weight(j, s).sqrt());
                    real_part(&(fd.adjoint() * &fd))
                };
                (g(fourier_w.as_ref().expect("circle"), -0.5), g(fourier_z.as_ref().expect("circle"), 0.5))
            }
            BoundaryRealization::Riesz => {
                let ops0 = ops0.ok_or_else(|| NormError::Unsupported("Riesz realization needs the k = 0 operators".into()))?;
                riesz_grams(ops0)?
            }
        };
        Ok(EnergyNormContext {
            k,
            p: basis.p,
            mass_weight,
            realization,
            stiffness: vm.stiffness.clone(),
            mass,
            penalties: vm.dg.as_ref().map(|d| d.penalties),
            dg,
            gram_m,
            gram_ext,
            m_mesh_mass: mesh_weighted_mass(gamma, &basis),
            basis,
            fourier,
            fourier_w,
            fourier_z,
        })
    }

    fn dg_parts(&self) -> Result<&DgNormParts, NormError> {
        self.dg.as_ref().ok_or_else(|| NormError::Unsupported("dG norms need the facet matrices".into()))
    }

    pub fn volume_gram(&self, kind: NormKind) -> Result<Coo<f64>, NormError> {
        let one = C::new(1.0, 0.0);
        let mut parts = vec![(one, &self.stiffness), (one, &self.mass)];
        if kind != NormKind::Energy {
            let d = self.dg_parts()?;
            parts.extend([(one, &d.jump), (one, &d.flux), (one, &d.bnd_flux), (one, &d.bnd_val)]);
            if kind == NormKind::DgPlus {
                parts.push((one, &d.avg));
            }
        }
        let c = combine(&parts);
        Ok(Coo { nrows: c.nrows, ncols: c.ncols, entries: c.entries.into_iter().map(|(i, j, v)| (i, j, v.re)).collect() })
    }

    pub fn m_gram(&self, kind: NormKind) -> Mat<f64> {
        if kind == NormKind::DgPlus {
            &self.gram_m + &self.m_mesh_mass
        } else {
            self.gram_m.clone()
        }
    }

    /// Squared (volume, m, u_ext) contributions.
    pub fn norm_sq_parts(&self, v: &ThreeFieldVector, kind: NormKind) -> Result<[f64; 3], NormError> {
        let vol = self.volume_gram(kind)?.quad_form(&v.u);
        Ok([vol, quad_form_dense(&self.m_gram(kind), &v.m), quad_form_dense(&self.gram_ext, &v.ext)])
    }

    pub fn norm(&self, v: &ThreeFieldVector, kind: NormKind) -> Result<f64, NormError> {
        Ok(self.norm_sq_parts(v, kind)?.iter().sum::<f64>().max(0.0).sqrt())
    }

    /// Block-diagonal Gram matrix of the chosen norm on (u, m, u_ext).
    pub fn gram_dense(&self, kind: NormKind) -> Result<Mat<f64>, NormError> {
        let vg = self.volume_gram(kind)?.to_dense();
        let mg = self.m_gram(kind);
        let (nu, nm, ne) = (vg.nrows(), mg.nrows(), self.gram_ext.nrows());
        let mut g = Mat::<f64>::zeros(nu + nm + ne, nu + nm + ne);
        for j in 0..nu {
            for i in 0..nu {
                g[(i, j)] = vg[(i, j)];
            }
        }
        for j in 0..nm {
            for i in 0..nm {
                g[(nu + i, nu + j)] = mg[(i, j)];
            }
        }
        for j in 0..ne {
            for i in 0..ne {
                g[(nu + nm + i, nu + nm + j)] = self.gram_ext[(i, j)];
            }
        }
        Ok(g)
    }
}

/// <V_0 ., .> on W_h and <(W_0 + c c^T) ., .> on Z_h, c_i = int psi_i.
pub fn riesz_grams(ops0: &BemOperators) -> Result<(Mat<f64>, Mat<f64>), NormError> {
    if ops0.k != 0.0 {
        return Err(NormError::Unsupported("Riesz maps use the k = 0 operators".into()));
    }
    let v = real_part(&ops0.block(OperatorTag::V, TraceSpace::W, TraceSpace::W)?);
    let w = real_part(&ops0.block(OperatorTag::W, TraceSpace::Z, TraceSpace::Z)?);
    let c = crate::assembly::z_mean_vector(ops0);
    let wz = Mat::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] + c[i] * c[j]);
    Ok((v, wz))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FractionalMethod {
    Fourier,
    Riesz,
}

pub fn energy_norm(v: &ThreeFieldVector, ctx: &EnergyNormContext) -> Result<f64, NormError> {
    ctx.norm(v, NormKind::Energy)
}

pub fn dg_norm(v: &ThreeFieldVector, ctx: &EnergyNormContext, plus: bool) -> Result<f64, NormError> {
    ctx.norm(v, if plus { NormKind::DgPlus } else { NormKind::Dg })
}

/// ||w||_s of a discrete trace function. The Riesz method supports only
/// s = -1/2 on W_h and s = 1/2 on Z_h.
pub fn fractional_boundary_norm(
    fourier: Option<&BoundaryFourier>,
    ops0: Option<&BemOperators>,
    space: TraceSpace,
    coeffs: &[C],
    s: f64,
    method: FractionalMethod,
) -> Result<f64, NormError> {
    match method {
        FractionalMethod::Fourier => {
            let f = fourier.ok_or(NormError::NotCircle)?;
            if !(-1.5..=1.5).contains(&s) {
                return Err(NormError::Unsupported(format!("order {s}")));
            }
            Ok(f.norm_sq(&f.transform(space, coeffs), s).sqrt())
        }
        FractionalMethod::Riesz => {
            let ops0 = ops0.ok_or_else(|| NormError::Unsupported("missing k = 0 operators".into()))?;
            let (gm, ge) = riesz_grams(ops0)?;
            let g = match (space, s) {
                (TraceSpace::W, s) if s == -0.5 => gm,
                (TraceSpace::Z, s) if s == 0.5 => ge,
                _ => return Err(NormError::Unsupported(format!("Riesz realization of order {s} on {space:?}"))),
            };
            Ok(quad_form_dense(&g, coeffs).max(0.0).sqrt())
        }
    }
}

/// Solves the real SPD system G x = b for complex b.
pub(crate) fn spd_solve(g: &Mat<f64>, b: &[C], what: &'static str) -> Result<Vec<C>, NormError> {
    let n = g.nrows();
    let llt = g.llt(Side::Lower).map_err(|_| NormError::Singular(what))?;
    let re = llt.solve(Mat::from_fn(n, 1, |i, _| b[i].re));
    let im = llt.solve(Mat::from_fn(n, 1, |i, _| b[i].im));
    Ok((0..n).map(|i| C::new(re[(i, 0)], im[(i, 0)])).collect())
}
