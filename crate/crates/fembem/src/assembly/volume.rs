//! Real Gram matrices of the volume space: stiffness, masses, boundary traces
//! and the interior-penalty facet terms. The complex forms are linear
//! combinations of these.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sparse::Coo;
use super::AssemblyError;
use crate::discretization::quadrature::{gauss_unchecked, triangle_unchecked};
use crate::discretization::{SpaceTriple, VolumeKind};
use crate::geometry::{edge_ref_point, BoundaryMesh, CurvedMesh, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        PenaltyParams { a: 10.0, b: 0.1, d: 0.01 }
    }
}

impl PenaltyParams {
    pub fn alpha(&self, k: f64, p: usize, h: f64, nu: f64) -> f64 {
        self.a * (p * p) as f64 * nu / (k * h)
    }

    pub fn beta(&self, k: f64, p: usize, h: f64, nu: f64) -> f64 {
        self.b * k * h / (p as f64 * nu)
    }

    pub fn delta(&self, k: f64, p: usize, h: f64) -> f64 {
        self.d * k * h / (p * p) as f64
    }

    pub fn validate(&self, k: f64, p: usize, gamma: &BoundaryMesh) -> Result<(), AssemblyError> {
        if !(self.a > 0.0 && self.b >= 0.0 && self.d > 0.0) {
            return Err(AssemblyError::Penalty(format!("invalid constants {self:?}")));
        }
        for panel in &gamma.panels {
            let d = self.delta(k, p, panel.h);
            if !(d > 0.0 && d < 0.5) {
                return Err(AssemblyError::Penalty(format!("delta = {d} outside (0, 1/2)")));
            }
        }
        Ok(())
    }
}

/// Facet and boundary matrices of the DG method (all real symmetric except
/// `bnd_vd`).
#[derive(Debug, Clone)]
pub struct DgMatrices {
    pub penalties: PenaltyParams,
    /// -int_F ([u].{nu grad v} + {nu grad u}.[v])
    pub consistency: Coo<f64>,
    /// int_F alpha [u].[v]
    pub jump_alpha: Coo<f64>,
    /// int_F beta [nu grad u][nu grad v]
    pub flux_beta: Coo<f64>,
    /// int_F alpha^{-1} {nu grad u}.{nu grad v}
    pub avg_inv_alpha: Coo<f64>,
    /// int_Gamma delta d_nu u d_nu v
    pub bnd_dd: Coo<f64>,
    /// (i, j) = int_Gamma delta phi_j d_nu phi_i
    pub bnd_vd: Coo<f64>,
    /// int_Gamma (1 - delta) u v
    pub bnd_mass_1md: Coo<f64>,
    /// (i, j) = int_Gamma delta psi_j d_nu phi_i, psi in W_h
    pub trace_w_d: Coo<f64>,
    /// (i, j) = int_Gamma (1 - delta) psi_j phi_i
    pub trace_w_1md: Coo<f64>,
    /// int_Gamma delta psi_j psi_i on W_h
    pub w_mass_delta: Coo<f64>,
}

#[derive(Debug, Clone)]
pub struct VolumeMatrices {
    pub kind: VolumeKind,
    pub n: usize,
    /// (nu grad u, grad v) elementwise
    pub stiffness: Coo<f64>,
    pub mass: Coo<f64>,
    /// (n^2 u, v)
    pub mass_n2: Coo<f64>,
    /// (u, v) on Gamma
    pub bnd_mass: Coo<f64>,
    /// (i, j) = int_Gamma psi_j phi_i, psi in W_h
    pub trace_w: Coo<f64>,
    /// (i, j) = int_Gamma psi_j phi_i, psi in Z_h
    pub trace_z: Coo<f64>,
    pub dg: Option<DgMatrices>,
}

pub struct PointEval {
    pub x: Point,
    pub vals: Vec<f64>,
    pub grads: Vec<Point>,
}

/// Signed basis values and physical gradients of element e at reference point xi.
pub fn element_eval(mesh: &CurvedMesh, spaces: &SpaceTriple, e: usize, xi: Point) -> (PointEval, f64) {
    let m = mesh.map(e, xi);
    let it = m.inv_t();
    let (v, g) = spaces.tri.eval(xi);
    let sign = &spaces.volume[e].sign;
    let vals = v.iter().zip(sign).map(|(a, s)| a * s).collect();
    let grads = g
        .iter()
        .zip(sign)
        .map(|(gr, s)| [s * (it[0][0] * gr[0] + it[0][1] * gr[1]), s * (it[1][0] * gr[0] + it[1][1] * gr[1])])
        .collect();
    (PointEval { x: m.x, vals, grads }, m.det())
}

pub(crate) fn mat_vec(a: &[[f64; 2]; 2], g: Point) -> Point {
    [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]]
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

type Trip = Vec<(usize, usize, f64)>;

fn volume_terms(mesh: &CurvedMesh, spaces: &SpaceTriple) -> Result<(Trip, Trip, Trip), AssemblyError> {
    let per: Vec<Result<(Trip, Trip, Trip), AssemblyError>> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            let el = &mesh.elements[e];
            let coef = &mesh.partition.coefficients[el.subdomain];
            let rule = triangle_unchecked(spaces.volume_exactness(el.curved.is_some()));
            let dofs = &spaces.volume[e].global;
            let nl = dofs.len();
            let mut ks = vec![0.0; nl * nl];
            let mut ms = vec![0.0; nl * nl];
            let mut mn = vec![0.0; nl * nl];
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let (pe, det) = element_eval(mesh, spaces, e, *xi);
                if det <= 0.0 {
                    return Err(AssemblyError::Geometry(format!("element {e} has det {det}")));
                }
                let wq = w * det;
                let n2 = coef.n.eval(pe.x).powi(2);
                let ng: Vec<Point> = pe.grads.iter().map(|g| mat_vec(&coef.nu, *g)).collect();
                for i in 0..nl {
                    for j in 0..nl {
                        let vv = wq * pe.vals[i] * pe.vals[j];
                        ks[i * nl + j] += wq * dot(ng[j], pe.grads[i]);
                        ms[i * nl + j] += vv;
                        mn[i * nl + j] += n2 * vv;
                    }
                }
            }
            let scatter = |loc: &[f64]| -> Trip {
                let mut t = Vec::with_capacity(nl * nl);
                for i in 0..nl {
                    for j in 0..nl {
                        t.push((dofs[i], dofs[j], loc[i * nl + j]));
                    }
                }
                t
            };
            Ok((scatter(&ks), scatter(&ms), scatter(&mn)))
        })
        .collect();
    let (mut k, mut m, mut n) = (vec![], vec![], vec![]);
    for r in per {
        let (a, b, c) = r?;
        k.extend(a);
        m.extend(b);
        n.extend(c);
    }
    Ok((k, m, n))
}

struct FacetTerms {
    consistency: Trip,
    jump_alpha: Trip,
    flux_beta: Trip,
    avg_inv_alpha: Trip,
}

fn interior_facet_terms(mesh: &CurvedMesh, spaces: &SpaceTriple, k: f64, pen: &PenaltyParams) -> FacetTerms {
    let p = spaces.p;
    let rule = gauss_unchecked(p + 4).to_unit();
    let per: Vec<FacetTerms> = mesh
        .interior_facets
        .par_iter()
        .map(|f| {
            let nus = f.elements.map(|e| mesh.partition.coefficients[mesh.elements[e].subdomain].nu);
            let nu_t = f.elements
                .map(|e| mesh.partition.coefficients[mesh.elements[e].subdomain].nu_norm())
                .iter()
                .cloned()
                .fold(0.0, f64::max);
            let alpha = pen.alpha(k, p, f.h, nu_t);
            let beta = pen.beta(k, p, f.h, nu_t);
            let dofs = f.elements.map(|e| spaces.volume[e].global.clone());
            let nl = dofs[0].len();
            let nt = 2 * nl;
            let mut c = vec![0.0; nt * nt];
            let mut ja = vec![0.0; nt * nt];
            let mut fb = vec![0.0; nt * nt];
            let mut av = vec![0.0; nt * nt];
            for (&sg, &w) in rule.points.iter().zip(&rule.weights) {
                let s = mesh.facet_local_params(f, sg);
                let (n1, len) = mesh.edge_normal(f.elements[0], f.local_edges[0], s[0]);
                let wq = w * len;
                // combined (side, local) arrays: jump value, normal flux, flux vector
                let mut jv = vec![0.0; nt];
                let mut jf = vec![0.0; nt];
                let mut fl = vec![[0.0; 2]; nt];
                for side in 0..2 {
                    let sgn = if side == 0 { 1.0 } else { -1.0 };
                    let xi = edge_ref_point(f.local_edges[side], s[side]);
                    let (pe, _) = element_eval(mesh, spaces, f.elements[side], xi);
                    for i in 0..nl {
                        let q = mat_vec(&nus[side], pe.grads[i]);
                        jv[side * nl + i] = sgn * pe.vals[i];
                        jf[side * nl + i] = sgn * dot(q, n1);
                        fl[side * nl + i] = [0.5 * q[0], 0.5 * q[1]];
                    }
                }
                for i in 0..nt {
                    let avn_i = dot(fl[i], n1);
                    for j in 0..nt {
                        let avn_j = dot(fl[j], n1);
                        c[i * nt + j] -= wq * (jv[j] * avn_i + avn_j * jv[i]);
                        ja[i * nt + j] += wq * alpha * jv[i] * jv[j];
                        fb[i * nt + j] += wq * beta * jf[i] * jf[j];
                        av[i * nt + j] += wq / alpha * dot(fl[i], fl[j]);
                    }
                }
            }
            let glob = |i: usize| dofs[i / nl][i % nl];
            let scatter = |loc: &[f64]| -> Trip {
                let mut t = Vec::with_capacity(nt * nt);
                for i in 0..nt {
                    for j in 0..nt {
                        t.push((glob(i), glob(j), loc[i * nt + j]));
                    }
                }
                t
            };
            FacetTerms {
                consistency: scatter(&c),
                jump_alpha: scatter(&ja),
                flux_beta: scatter(&fb),
                avg_inv_alpha: scatter(&av),
            }
        })
        .collect();
    let mut out = FacetTerms { consistency: vec![], jump_alpha: vec![], flux_beta: vec![], avg_inv_alpha: vec![] };
    for t in per {
        out.consistency.extend(t.consistency);
        out.jump_alpha.extend(t.jump_alpha);
        out.flux_beta.extend(t.flux_beta);
        out.avg_inv_alpha.extend(t.avg_inv_alpha);
    }
    out
}

/// Everything integrated over Gamma. `delta` is None for the conforming space.
struct BoundaryTerms {
    mass: Trip,
    trace_w: Trip,
    trace_z: Trip,
    dd: Trip,
    vd: Trip,
    mass_1md: Trip,
    w_d: Trip,
    w_1md: Trip,
    w_delta: Trip,
}

fn boundary_terms(
    mesh: &CurvedMesh,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    delta: Option<(f64, &PenaltyParams)>,
) -> BoundaryTerms {
    let p = spaces.p;
    let rule = gauss_unchecked(p + 6).to_unit();
    let mut t = BoundaryTerms {
        mass: vec![],
        trace_w: vec![],
        trace_z: vec![],
        dd: vec![],
        vd: vec![],
        mass_1md: vec![],
        w_d: vec![],
        w_1md: vec![],
        w_delta: vec![],
    };
    for (pi, panel) in gamma.panels.iter().enumerate() {
        let e = panel.element;
        let nu = mesh.partition.coefficients[mesh.elements[e].subdomain].nu;
        let dofs = &spaces.volume[e].global;
        let wd = spaces.w_dofs(pi);
        let zd = spaces.z_dofs(pi);
        let dl = delta.map(|(k, pen)| pen.delta(k, p, panel.h)).unwrap_or(0.0);
        for (&s, &w) in rule.points.iter().zip(&rule.weights) {
            let (_, n, jac) = gamma.eval(pi, s);
            let wq = w * jac;
            let se = mesh.panel_to_edge_param(panel, s);
            let (pe, _) = element_eval(mesh, spaces, e, edge_ref_point(panel.local_edge, se));
            let (bw, _) = spaces.seg_w.eval(s);
            let (bz, _) = spaces.seg_z.eval(s);
            let dn: Vec<f64> = pe.grads.iter().map(|g| dot(mat_vec(&nu, *g), n)).collect();
            for (i, &gi) in dofs.iter().enumerate() {
                for (j, &gj) in dofs.iter().enumerate() {
                    t.mass.push((gi, gj, wq * pe.vals[i] * pe.vals[j]));
                    if delta.is_some() {
                        t.dd.push((gi, gj, wq * dl * dn[i] * dn[j]));
                        t.vd.push((gi, gj, wq * dl * pe.vals[j] * dn[i]));
                        t.mass_1md.push((gi, gj, wq * (1.0 - dl) * pe.vals[i] * pe.vals[j]));
                    }
                }
                for (j, &gj) in wd.iter().enumerate() {
                    t.trace_w.push((gi, gj, wq * bw[j] * pe.vals[i]));
                    if delta.is_some() {
                        t.w_d.push((gi, gj, wq * dl * bw[j] * dn[i]));
                        t.w_1md.push((gi, gj, wq * (1.0 - dl) * bw[j] * pe.vals[i]));
                    }
                }
                for (j, &gj) in zd.iter().enumerate() {
                    t.trace_z.push((gi, gj, wq * bz[j] * pe.vals[i]));
                }
            }
            if delta.is_some() {
                for (i, &gi) in wd.iter().enumerate() {
                    for (j, &gj) in wd.iter().enumerate() {
                        t.w_delta.push((gi, gj, wq * dl * bw[i] * bw[j]));
                    }
                }
            }
        }
    }
    t
}

fn check_coefficients(mesh: &CurvedMesh) -> Result<(), AssemblyError> {
    for (i, c) in mesh.partition.coefficients.iter().enumerate() {
        let sym = (c.nu[0][1] - c.nu[1][0]).abs() <= 1e-14 * c.nu_norm();
        if !sym || !(c.nu_min_eigenvalue() > 0.0) {
            return Err(AssemblyError::Coefficients(format!("nu of subdomain {i} is not SPD")));
        }
    }
    Ok(())
}

/// Assembles all real volume matrices. `k` and `penalties` enter only the
/// facet matrices (the penalty functions depend on k); the DG space uses the
/// default penalties when none are given.
pub fn assemble_volume_matrices(
    mesh: &CurvedMesh,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    k: f64,
    penalties: Option<&PenaltyParams>,
) -> Result<VolumeMatrices, AssemblyError> {
    check_coefficients(mesh)?;
    let n = spaces.n_volume;
    let (kt, mt, nt) = volume_terms(mesh, spaces)?;
    // facet matrices are also built on the conforming space when penalties
    // are given (the DG norms of continuous functions)
    let dg_pen = if spaces.kind == VolumeKind::Dg || penalties.is_some() {
        let pen = penalties.copied().unwrap_or_default();
        if !(k > 0.0) {
            return Err(AssemblyError::Wavenumber(k));
        }
        pen.validate(k, spaces.p, gamma)?;
        Some(pen)
    } else {
        None
    };
    let bt = boundary_terms(mesh, gamma, spaces, dg_pen.as_ref().map(|p| (k, p)));
    let (nw, nz) = (spaces.n_w, spaces.n_z);
    let dg = dg_pen.map(|pen| {
        let ft = interior_facet_terms(mesh, spaces, k, &pen);
        DgMatrices {
            penalties: pen,
            consistency: Coo::from_triplets(n, n, ft.consistency),
            jump_alpha: Coo::from_triplets(n, n, ft.jump_alpha),
            flux_beta: Coo::from_triplets(n, n, ft.flux_beta),
            avg_inv_alpha: Coo::from_triplets(n, n, ft.avg_inv_alpha),
            bnd_dd: Coo::from_triplets(n, n, bt.dd),
            bnd_vd: Coo::from_triplets(n, n, bt.vd),
            bnd_mass_1md: Coo::from_triplets(n, n, bt.mass_1md),
            trace_w_d: Coo::from_triplets(n, nw, bt.w_d),
            trace_w_1md: Coo::from_triplets(n, nw, bt.w_1md),
            w_mass_delta: Coo::from_triplets(nw, nw, bt.w_delta),
        }
    });
    Ok(VolumeMatrices {
        kind: spaces.kind,
        n,
        stiffness: Coo::from_triplets(n, n, kt),
        mass: Coo::from_triplets(n, n, mt),
        mass_n2: Coo::from_triplets(n, n, nt),
        bnd_mass: Coo::from_triplets(n, n, bt.mass),
        trace_w: Coo::from_triplets(n, nw, bt.trace_w),
        trace_z: Coo::from_triplets(n, nz, bt.trace_z),
        dg,
    })
}
