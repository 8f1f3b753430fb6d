//! Volume forms, the coupled three-field systems T_C and T_DG, the lower
//! order correction Theta, the coercive proxy form T+, right-hand sides and
//! the discrete adjoint.
//!
//! Unknowns are ordered (u, m, u_ext); test rows are (v, lambda, v_ext) with
//! lambda in W_h and v_ext in Z_h. Entry (i, j) of every block is
//! T(phi_j, psi_i), so T(x, y) = y^H A x.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub mod sparse;
pub mod volume;

use crate::bem::{dump_matrix, BemError, BemOperators, OperatorTag, TraceSpace};
use crate::discretization::quadrature::{gauss_unchecked, triangle_unchecked};
use crate::discretization::{SpaceTriple, VolumeKind};
use crate::geometry::{BoundaryMesh, CurvedMesh, Point};
pub use sparse::{combine, matvec, Coo};
pub use volume::{assemble_volume_matrices, DgMatrices, PenaltyParams, VolumeMatrices};

type C = Complex64;

#[derive(Debug, thiserror::Error)]
pub enum AssemblyError {
    #[error("penalty validation failed: {0}")]
    Penalty(String),
    #[error("coefficient error: {0}")]
    Coefficients(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("wavenumber must be positive, got {0}")]
    Wavenumber(f64),
    #[error("space mismatch: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Bem(#[from] BemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeFieldVector {
    pub u: Vec<C>,
    pub m: Vec<C>,
    pub ext: Vec<C>,
}

impl ThreeFieldVector {
    pub fn zeros(nu: usize, nm: usize, ne: usize) -> Self {
        let z = C::new(0.0, 0.0);
        ThreeFieldVector { u: vec![z; nu], m: vec![z; nm], ext: vec![z; ne] }
    }

    pub fn from_flat(x: &[C], nu: usize, nm: usize) -> Self {
        ThreeFieldVector { u: x[..nu].to_vec(), m: x[nu..nu + nm].to_vec(), ext: x[nu + nm..].to_vec() }
    }

    pub fn flat(&self) -> Vec<C> {
        let mut v = self.u.clone();
        v.extend_from_slice(&self.m);
        v.extend_from_slice(&self.ext);
        v
    }

    pub fn len(&self) -> usize {
        self.u.len() + self.m.len() + self.ext.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn conj(&self) -> Self {
        let c = |v: &[C]| v.iter().map(|z| z.conj()).collect();
        ThreeFieldVector { u: c(&self.u), m: c(&self.m), ext: c(&self.ext) }
    }

    pub fn norm_l2(&self) -> f64 {
        self.u.iter().chain(&self.m).chain(&self.ext).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn axpy(&self, a: C, other: &Self) -> Self {
        let f = |x: &[C], y: &[C]| x.iter().zip(y).map(|(p, q)| p + a * q).collect();
        ThreeFieldVector { u: f(&self.u, &other.u), m: f(&self.m, &other.m), ext: f(&self.ext, &other.ext) }
    }

    /// Multiplies the m component by -1.
    pub fn flip_m(&self) -> Self {
        let mut out = self.clone();
        out.m.iter_mut().for_each(|z| *z = -*z);
        out
    }
}

/// Block operator
///   [ uu  um  0  ]
///   [ mu  bb      ]
///   [ 0           ]
/// with the (lambda, v_ext) x (m, u_ext) part stored densely in `bb`.
#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub kind: VolumeKind,
    pub k: f64,
    pub n_u: usize,
    pub n_m: usize,
    pub n_e: usize,
    pub uu: Coo<C>,
    /// rows v, columns m
    pub um: Coo<C>,
    /// rows lambda, columns u
    pub mu: Coo<C>,
    pub bb: Mat<C>,
    pub rhs: ThreeFieldVector,
}

impl CoupledSystem {
    pub fn dim(&self) -> usize {
        self.n_u + self.n_m + self.n_e
    }

    pub fn apply(&self, x: &ThreeFieldVector) -> ThreeFieldVector {
        let mut u = matvec(&self.uu, &x.u);
        let um = matvec(&self.um, &x.m);
        u.iter_mut().zip(&um).for_each(|(a, b)| *a += b);
        let nb = self.n_m + self.n_e;
        let mut xb = x.m.clone();
        xb.extend_from_slice(&x.ext);
        let mut yb: Vec<C> = (0..nb).map(|i| (0..nb).map(|j| self.bb[(i, j)] * xb[j]).sum()).collect();
        let mu = matvec(&self.mu, &x.u);
        yb.iter_mut().zip(&mu).for_each(|(a, b)| *a += b);
        ThreeFieldVector { u, m: yb[..self.n_m].to_vec(), ext: yb[self.n_m..].to_vec() }
    }

    /// T(x, y) = y^H A x.
    pub fn form(&self, x: &ThreeFieldVector, y: &ThreeFieldVector) -> C {
        let ax = self.apply(x);
        y.flat().iter().zip(ax.flat()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> Mat<C> {
        let n = self.dim();
        let nu = self.n_u;
        let mut a = Mat::<C>::zeros(n, n);
        for &(i, j, v) in &self.uu.entries {
            a[(i, j)] += v;
        }
        for &(i, j, v) in &self.um.entries {
            a[(i, nu + j)] += v;
        }
        for &(i, j, v) in &self.mu.entries {
            a[(nu + i, j)] += v;
        }
        let nb = self.n_m + self.n_e;
        for i in 0..nb {
            for j in 0..nb {
                a[(nu + i, nu + j)] += self.bb[(i, j)];
            }
        }
        a
    }

    /// Sum of two block operators of identical shape (the rhs of self is kept).
    pub fn plus(&self, other: &CoupledSystem) -> Result<CoupledSystem, AssemblyError> {
        if (self.n_u, self.n_m, self.n_e) != (other.n_u, other.n_m, other.n_e) {
            return Err(AssemblyError::Mismatch("block dimensions differ".into()));
        }
        let add = |a: &Coo<C>, b: &Coo<C>| {
            let mut t = a.entries.clone();
            t.extend_from_slice(&b.entries);
            Coo::from_triplets(a.nrows, a.ncols, t)
        };
        Ok(CoupledSystem {
            uu: add(&self.uu, &other.uu),
            um: add(&self.um, &other.um),
            mu: add(&self.mu, &other.mu),
            bb: &self.bb + &other.bb,
            ..self.clone()
        })
    }

    pub fn with_rhs(mut self, rhs: ThreeFieldVector) -> Self {
        self.rhs = rhs;
        self
    }

    /// Writes the dense matrix with a block index table in the sidecar.
    pub fn dump(&self, path: &Path) -> Result<(), AssemblyError> {
        let meta = serde_json::json!({
            "formulation": self.kind,
            "k": self.k,
            "blocks": {
                "u": [0, self.n_u],
                "m": [self.n_u, self.n_u + self.n_m],
                "u_ext": [self.n_u + self.n_m, self.dim()],
            }
        });
        dump_matrix(path, &self.to_dense(), meta)?;
        Ok(())
    }
}

fn cplx(m: &Mat<f64>) -> Mat<C> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| C::new(m[(i, j)], 0.0))
}

fn check_ops(ops: &BemOperators, spaces: &SpaceTriple) -> Result<(), AssemblyError> {
    if ops.basis.p != spaces.p || ops.basis.n_panels != spaces.n_panels {
        return Err(AssemblyError::Mismatch(format!(
            "operators on (p={}, {} panels), spaces on (p={}, {} panels)",
            ops.basis.p, ops.basis.n_panels, spaces.p, spaces.n_panels
        )));
    }
    Ok(())
}

/// The boundary rows shared by both formulations:
/// lambda: V m - (M/2 + K) u_ext - ik V u_ext,
/// v_ext: (M/2 + K' + ik V) m + (W - ik (K + K') + k^2 V) u_ext.
fn boundary_block(k: f64, ops: &BemOperators) -> Result<Mat<C>, AssemblyError> {
    let (w, z) = (TraceSpace::W, TraceSpace::Z);
    let ik = C::new(0.0, k);
    let nm = ops.basis.n_w();
    let ne = ops.basis.n_z();
    let mut bb = Mat::<C>::zeros(nm + ne, nm + ne);
    let v_ww = ops.block(OperatorTag::V, w, w)?;
    let v_wz = ops.block(OperatorTag::V, w, z)?;
    let k_wz = ops.block(OperatorTag::K, w, z)?;
    let m_wz = cplx(&ops.mass_block(w, z));
    let v_zw = ops.block(OperatorTag::V, z, w)?;
    let kp_zw = ops.block(OperatorTag::Kp, z, w)?;
    let m_zw = cplx(&ops.mass_block(z, w));
    let w_zz = ops.block(OperatorTag::W, z, z)?;
    let k_zz = ops.block(OperatorTag::K, z, z)?;
    let kp_zz = ops.block(OperatorTag::Kp, z, z)?;
    let v_zz = ops.block(OperatorTag::V, z, z)?;
    for i in 0..nm {
        for j in 0..nm {
            bb[(i, j)] = v_ww[(i, j)];
        }
        for j in 0..ne {
            bb[(i, nm + j)] = -(m_wz[(i, j)] * 0.5 + k_wz[(i, j)]) - ik * v_wz[(i, j)];
        }
    }
    for i in 0..ne {
        for j in 0..nm {
            bb[(nm + i, j)] = m_zw[(i, j)] * 0.5 + kp_zw[(i, j)] + ik * v_zw[(i, j)];
        }
        for j in 0..ne {
            bb[(nm + i, nm + j)] = w_zz[(i, j)] - ik * (k_zz[(i, j)] + kp_zz[(i, j)]) + v_zz[(i, j)] * (k * k);
        }
    }
    Ok(bb)
}

/// Volume rows of the conforming form: S - k^2 M_{n^2} + ik M_Gamma,
/// -(m, v)_Gamma and <u, lambda>.
pub fn conforming_volume_blocks(k: f64, vm: &VolumeMatrices) -> (Coo<C>, Coo<C>, Coo<C>) {
    let one = C::new(1.0, 0.0);
    let uu = combine(&[(one, &vm.stiffness), (C::new(-k * k, 0.0), &vm.mass_n2), (C::new(0.0, k), &vm.bnd_mass)]);
    let um = combine(&[(-one, &vm.trace_w)]);
    let mu = vm.trace_w.transpose().to_complex();
    (uu, um, mu)
}

/// Volume rows of the DG form: a_h + b_h, the m coupling
/// -(m, delta (ik)^{-1} d_nu v + (1 - delta) v) and the lambda row
/// <-delta (ik)^{-1} d_nu u + (1 - delta) u, lambda>.
pub fn dg_volume_blocks(k: f64, vm: &VolumeMatrices) -> Result<(Coo<C>, Coo<C>, Coo<C>), AssemblyError> {
    let dg = vm.dg.as_ref().ok_or_else(|| AssemblyError::Mismatch("DG matrices missing".into()))?;
    let one = C::new(1.0, 0.0);
    let ik = C::new(0.0, k);
    let inv_ik = one / ik;
    let vd_t = dg.bnd_vd.transpose();
    let uu = combine(&[
        (one, &vm.stiffness),
        (C::new(-k * k, 0.0), &vm.mass_n2),
        (one, &dg.consistency),
        (-inv_ik, &dg.flux_beta),
        (ik, &dg.jump_alpha),
        (-inv_ik, &dg.bnd_dd),
        (-one, &dg.bnd_vd),
        (-one, &vd_t),
        (ik, &dg.bnd_mass_1md),
    ]);
    // conj((ik)^{-1}) = -(ik)^{-1}: the test function sits in the second slot
    let um = combine(&[(inv_ik, &dg.trace_w_d), (-one, &dg.trace_w_1md)]);
    let mu = combine(&[(-inv_ik, &dg.trace_w_d.transpose()), (one, &dg.trace_w_1md.transpose())]);
    Ok((uu, um, mu))
}

/// T_C or T_DG at the wavenumber of `ops` (the volume matrices must match the
/// formulation of `spaces`). The right-hand side is zero.
pub fn assemble_coupled(
    spaces: &SpaceTriple,
    vm: &VolumeMatrices,
    ops: &BemOperators,
) -> Result<CoupledSystem, AssemblyError> {
    check_ops(ops, spaces)?;
    if vm.kind != spaces.kind || vm.n != spaces.n_volume {
        return Err(AssemblyError::Mismatch("volume matrices do not match the space".into()));
    }
    let k = ops.k;
    if !(k > 0.0) {
        return Err(AssemblyError::Wavenumber(k));
    }
    let mut bb = boundary_block(k, ops)?;
    let (uu, um, mu) = match spaces.kind {
        VolumeKind::Conforming => conforming_volume_blocks(k, vm),
        VolumeKind::Dg => {
            let blocks = dg_volume_blocks(k, vm)?;
            let dg = vm.dg.as_ref().expect("checked");
            let inv_ik = C::new(1.0, 0.0) / C::new(0.0, k);
            for &(i, j, v) in &dg.w_mass_delta.entries {
                bb[(i, j)] += inv_ik * v;
            }
            blocks
        }
    };
    Ok(CoupledSystem {
        kind: spaces.kind,
        k,
        n_u: spaces.n_volume,
        n_m: spaces.n_w,
        n_e: spaces.n_z,
        uu,
        um,
        mu,
        bb,
        rhs: ThreeFieldVector::zeros(spaces.n_volume, spaces.n_w, spaces.n_z),
    })
}

/// c_i = int_Gamma psi_i on Z_h.
pub fn z_mean_vector(ops: &BemOperators) -> Vec<f64> {
    let m = ops.mass_block(TraceSpace::Z, TraceSpace::Z);
    let hats = ops.basis.n_panels;
    (0..m.nrows()).map(|i| (0..hats).map(|j| m[(i, j)]).sum()).collect()
}

/// T+ with the Laplace operators of `ops0` (k = 0) on the conforming
/// volume form S + k^2 M_{n^2} + ik M_Gamma.
pub fn assemble_tplus(
    k: f64,
    spaces: &SpaceTriple,
    vm: &VolumeMatrices,
    ops0: &BemOperators,
) -> Result<CoupledSystem, AssemblyError> {
    check_ops(ops0, spaces)?;
    if ops0.k != 0.0 {
        return Err(AssemblyError::Mismatch("T+ needs the k = 0 operators".into()));
    }
    let (w, z) = (TraceSpace::W, TraceSpace::Z);
    let one = C::new(1.0, 0.0);
    let uu = combine(&[(one, &vm.stiffness), (C::new(k * k, 0.0), &vm.mass_n2), (C::new(0.0, k), &vm.bnd_mass)]);
    let um = combine(&[(-one, &vm.trace_w)]);
    let mu = vm.trace_w.transpose().to_complex();
    let nm = spaces.n_w;
    let ne = spaces.n_z;
    let mut bb = Mat::<C>::zeros(nm + ne, nm + ne);
    let v = ops0.block(OperatorTag::V, w, w)?;
    let kwz = ops0.block(OperatorTag::K, w, z)?;
    let mwz = ops0.mass_block(w, z);
    let kpzw = ops0.block(OperatorTag::Kp, z, w)?;
    let mzw = ops0.mass_block(z, w);
    let wzz = ops0.block(OperatorTag::W, z, z)?;
    let c = z_mean_vector(ops0);
    for i in 0..nm {
        for j in 0..nm {
            bb[(i, j)] = v[(i, j)];
        }
        for j in 0..ne {
            bb[(i, nm + j)] = -(kwz[(i, j)] + 0.5 * mwz[(i, j)]);
        }
    }
    for i in 0..ne {
        for j in 0..nm {
            bb[(nm + i, j)] = kpzw[(i, j)] + 0.5 * mzw[(i, j)];
        }
        for j in 0..ne {
            bb[(nm + i, nm + j)] = wzz[(i, j)] + c[i] * c[j];
        }
    }
    Ok(CoupledSystem {
        kind: VolumeKind::Conforming,
        k,
        n_u: spaces.n_volume,
        n_m: nm,
        n_e: ne,
        uu,
        um,
        mu,
        bb,
        rhs: ThreeFieldVector::zeros(spaces.n_volume, nm, ne),
    })
}

/// Theta = T+ - T_C on the conforming volume part; for DG the same matrix is
/// added to T_DG. Volume block 2 k^2 M_{n^2}, no coupling rows, boundary
/// block built from operator differences and the rank-one mean term.
pub fn assemble_theta(
    spaces: &SpaceTriple,
    vm: &VolumeMatrices,
    ops: &BemOperators,
    ops0: &BemOperators,
) -> Result<CoupledSystem, AssemblyError> {
    check_ops(ops, spaces)?;
    check_ops(ops0, spaces)?;
    if ops0.k != 0.0 {
        return Err(AssemblyError::Mismatch("Theta needs the k = 0 operators".into()));
    }
    let k = ops.k;
    let (w, z) = (TraceSpace::W, TraceSpace::Z);
    let ik = C::new(0.0, k);
    let nm = spaces.n_w;
    let ne = spaces.n_z;
    let uu = combine(&[(C::new(2.0 * k * k, 0.0), &vm.mass_n2)]);
    let d = |tag: OperatorTag, a: TraceSpace, b: TraceSpace| -> Result<Mat<C>, AssemblyError> {
        Ok(ops.block(tag, a, b)? - ops0.block(tag, a, b)?)
    };
    let dv_ww = d(OperatorTag::V, w, w)?;
    let dk_wz = d(OperatorTag::K, w, z)?;
    let v_wz = ops.block(OperatorTag::V, w, z)?;
    let dkp_zw = d(OperatorTag::Kp, z, w)?;
    let v_zw = ops.block(OperatorTag::V, z, w)?;
    let dw = d(OperatorTag::W, z, z)?;
    let kk = ops.block(OperatorTag::K, z, z)?;
    let kp = ops.block(OperatorTag::Kp, z, z)?;
    let v_zz = ops.block(OperatorTag::V, z, z)?;
    let c = z_mean_vector(ops0);
    let mut bb = Mat::<C>::zeros(nm + ne, nm + ne);
    for i in 0..nm {
        for j in 0..nm {
            bb[(i, j)] = -dv_ww[(i, j)];
        }
        for j in 0..ne {
            bb[(i, nm + j)] = dk_wz[(i, j)] + ik * v_wz[(i, j)];
        }
    }
    for i in 0..ne {
        for j in 0..nm {
            bb[(nm + i, j)] = -dkp_zw[(i, j)] - ik * v_zw[(i, j)];
        }
        for j in 0..ne {
            bb[(nm + i, nm + j)] =
                -dw[(i, j)] + ik * (kk[(i, j)] + kp[(i, j)]) - v_zz[(i, j)] * (k * k) + c[i] * c[j];
        }
    }
    let nu = spaces.n_volume;
    Ok(CoupledSystem {
        kind: spaces.kind,
        k,
        n_u: nu,
        n_m: nm,
        n_e: ne,
        uu,
        um: Coo::zeros(nu, nm),
        mu: Coo::zeros(nm, nu),
        bb,
        rhs: ThreeFieldVector::zeros(nu, nm, ne),
    })
}

/// Conjugate transpose of the block operator with the given right-hand side.
/// Its solution Psi satisfies T(Phi, Psi) = (Phi, r) + <m, R_m> + <u_ext, R_ext>
/// when `rhs` holds the load vectors of (r, R_m, R_ext).
pub fn assemble_adjoint(system: &CoupledSystem, rhs: ThreeFieldVector) -> CoupledSystem {
    CoupledSystem {
        uu: system.uu.conj_transpose(),
        um: system.mu.conj_transpose(),
        mu: system.um.conj_transpose(),
        bb: system.bb.adjoint().to_owned(),
        rhs,
        ..system.clone()
    }
}

/// Load vectors int f phi_i on V_h.
pub fn volume_load(mesh: &CurvedMesh, spaces: &SpaceTriple, f: &(dyn Fn(Point) -> C + Sync)) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); spaces.n_volume];
    for e in 0..mesh.element_count() {
        let rule = triangle_unchecked(spaces.volume_exactness(mesh.elements[e].curved.is_some()) + 2);
        let dofs = &spaces.volume[e].global;
        for (xi, w) in rule.points.iter().zip(&rule.weights) {
            let (pe, det) = volume::element_eval(mesh, spaces, e, *xi);
            let fv = f(pe.x) * (w * det);
            for (i, &g) in dofs.iter().enumerate() {
                out[g] += fv * pe.vals[i];
            }
        }
    }
    out
}

/// Load vector int_Gamma g psi_i on W_h or Z_h; g is a function of the
/// curve parameter.
pub fn trace_load(gamma: &BoundaryMesh, spaces: &SpaceTriple, space: TraceSpace, g: &dyn Fn(f64) -> C) -> Vec<C> {
    let n = match space {
        TraceSpace::W => spaces.n_w,
        TraceSpace::Z => spaces.n_z,
        TraceSpace::X => spaces.n_w + spaces.n_z,
    };
    let basis = crate::bem::TraceBasis::from_spaces(spaces);
    let rule = gauss_unchecked(spaces.p + 10).to_unit();
    let mut out = vec![C::new(0.0, 0.0); n];
    for (pi, panel) in gamma.panels.iter().enumerate() {
        let dofs = basis.dofs(space, pi);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let (v, _) = basis.eval(space, s);
            let jac = gamma.eval(pi, s).2;
            let gv = g(panel.theta(s)) * (w * jac);
            for (a, &d) in dofs.iter().enumerate() {
                out[d] += gv * v[a];
            }
        }
    }
    out
}

/// Right-hand side (f, v) + <g, lambda> - <h, v_ext>.
pub fn assemble_rhs(
    mesh: &CurvedMesh,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    f: &(dyn Fn(Point) -> C + Sync),
    g: &dyn Fn(f64) -> C,
    h: &dyn Fn(f64) -> C,
) -> ThreeFieldVector {
    let u = volume_load(mesh, spaces, f);
    let m = trace_load(gamma, spaces, TraceSpace::W, g);
    let ext = trace_load(gamma, spaces, TraceSpace::Z, h).into_iter().map(|z| -z).collect();
    ThreeFieldVector { u, m, ext }
}
