//! Errors of discrete triples against an exact solution, and the best
//! approximation in the same norm. Both go through one quadrature routine, so
//! the error and the projection right-hand side see identical integrals.

use rayon::prelude::*;
use serde::Serialize;

use super::{spd_solve, EnergyNormContext, MassWeight, NormError, NormKind};
use crate::assembly::volume::{dot, element_eval, mat_vec};
use crate::assembly::{Coo, ThreeFieldVector};
use crate::bem::{eval_trace, TraceSpace};
use crate::discretization::quadrature::{gauss_unchecked, triangle_unchecked};
use crate::discretization::SpaceTriple;
use crate::driver::SparseLu;
use crate::geometry::{edge_ref_point, BoundaryMesh, CurvedMesh, Point};

type C = num_complex::Complex64;

/// An exact solution triple. `u` must be smooth on the closure of Omega;
/// `m` and `ext` take the curve parameter (the polar angle on a circle).
pub trait ExactSolution: Sync {
    /// Value and gradient.
    fn u(&self, x: Point) -> (C, [C; 2]);
    /// m = nu grad u . n + i k u on Gamma.
    fn m(&self, t: f64) -> C;
    /// Trace of the exterior field.
    fn ext(&self, t: f64) -> C;
}

/// Squared contributions of the volume terms, already weighted by k.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct VolumeErrorParts {
    pub grad: f64,
    pub mass: f64,
    pub jump: f64,
    pub flux: f64,
    pub bnd_flux: f64,
    pub bnd_val: f64,
    pub avg: f64,
}

impl VolumeErrorParts {
    pub fn total(&self, kind: NormKind) -> f64 {
        let mut s = self.grad + self.mass;
        if kind != NormKind::Energy {
            s += self.jump + self.flux + self.bnd_flux + self.bnd_val;
        }
        if kind == NormKind::DgPlus {
            s += self.avg;
        }
        s
    }

    fn add(&mut self, o: &VolumeErrorParts) {
        self.grad += o.grad;
        self.mass += o.mass;
        self.jump += o.jump;
        self.flux += o.flux;
        self.bnd_flux += o.bnd_flux;
        self.bnd_val += o.bnd_val;
        self.avg += o.avg;
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct ErrorParts {
    pub volume: VolumeErrorParts,
    /// ||m - m_h||_{-1/2}^2
    pub m: f64,
    /// ||h^{1/2} p^{-1} (m - m_h)||_0^2
    pub m_mesh: f64,
    /// ||u_ext - u_ext,h||_{1/2}^2
    pub ext: f64,
}

impl ErrorParts {
    pub fn total_sq(&self, kind: NormKind) -> f64 {
        let mut s = self.volume.total(kind) + self.m + self.ext;
        if kind == NormKind::DgPlus {
            s += self.m_mesh;
        }
        s
    }

    pub fn total(&self, kind: NormKind) -> f64 {
        self.total_sq(kind).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct BestApproximation {
    pub coeffs: ThreeFieldVector,
    pub parts: ErrorParts,
    pub error: f64,
}

/// Right-hand sides (e, phi_i) of the grad+mass, facet/boundary and average groups.
struct VolumeRhs {
    energy: Vec<C>,
    dg: Vec<C>,
    avg: Vec<C>,
}

struct Ctx<'a> {
    norm: &'a EnergyNormContext,
    mesh: &'a CurvedMesh,
    gamma: &'a BoundaryMesh,
    spaces: &'a SpaceTriple,
    exact: &'a dyn ExactSolution,
}

fn interp(vals: &[f64], grads: &[Point], dofs: &[usize], c: &[C]) -> (C, [C; 2]) {
    let mut v = C::new(0.0, 0.0);
    let mut g = [C::new(0.0, 0.0); 2];
    for (i, &d) in dofs.iter().enumerate() {
        v += c[d] * vals[i];
        g[0] += c[d] * grads[i][0];
        g[1] += c[d] * grads[i][1];
    }
    (v, g)
}

fn nu_apply(nu: &[[f64; 2]; 2], g: [C; 2]) -> [C; 2] {
    [g[0] * nu[0][0] + g[1] * nu[0][1], g[0] * nu[1][0] + g[1] * nu[1][1]]
}

fn cdot(a: [C; 2], b: Point) -> C {
    a[0] * b[0] + a[1] * b[1]
}

fn volume_error(cx: &Ctx, coeffs: &[C], want_rhs: bool) -> (VolumeErrorParts, Option<VolumeRhs>) {
    let (mesh, spaces, k) = (cx.mesh, cx.spaces, cx.norm.k);
    let n = spaces.n_volume;
    let zero = C::new(0.0, 0.0);
    type Local = (VolumeErrorParts, Vec<(usize, C)>, Vec<(usize, C)>, Vec<(usize, C)>);

    let elems: Vec<Local> = (0..mesh.element_count())
        .into_par_iter()
        .map(|e| {
            let el = &mesh.elements[e];
            let coef = &mesh.partition.coefficients[el.subdomain];
            let rule = triangle_unchecked(spaces.volume_exactness(el.curved.is_some()) + 4);
            let dofs = &spaces.volume[e].global;
            let mut parts = VolumeErrorParts::default();
            let mut r = vec![zero; dofs.len()];
            for (xi, w) in rule.points.iter().zip(&rule.weights) {
                let (pe, det) = element_eval(mesh, spaces, e, *xi);
                let wq = w * det;
                let (uv, ug) = cx.exact.u(pe.x);
                let (hv, hg) = interp(&pe.vals, &pe.grads, dofs, coeffs);
                let ev = uv - hv;
                let eg = [ug[0] - hg[0], ug[1] - hg[1]];
                let neg = nu_apply(&coef.nu, eg);
                let mw = match cx.norm.mass_weight {
                    MassWeight::Uniform => k * k,
                    MassWeight::Index => (k * coef.n.eval(pe.x)).powi(2),
                };
                parts.grad += wq * (neg[0] * eg[0].conj() + neg[1] * eg[1].conj()).re;
                parts.mass += wq * mw * ev.norm_sqr();
                if want_rhs {
                    for i in 0..dofs.len() {
                        r[i] += wq * (cdot(neg, pe.grads[i]) + ev * (mw * pe.vals[i]));
                    }
                }
            }
            (parts, dofs.iter().cloned().zip(r).collect(), vec![], vec![])
        })
        .collect();

    let mut locals = elems;
    if let Some(pen) = cx.norm.penalties {
        let p = spaces.p;
        let rule = gauss_unchecked(p + 6).to_unit();
        let facets: Vec<Local> = mesh
            .interior_facets
            .par_iter()
            .map(|f| {
                let nus = f.elements.map(|e| mesh.partition.coefficients[mesh.elements[e].subdomain].nu);
                let nu_t = f
                    .elements
                    .map(|e| mesh.partition.coefficients[mesh.elements[e].subdomain].nu_norm())
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max);
                let alpha = pen.alpha(k, p, f.h, nu_t);
                let beta = pen.beta(k, p, f.h, nu_t);
                let mut parts = VolumeErrorParts::default();
                let mut rd = Vec::new();
                let mut ra = Vec::new();
                for (&sg, &w) in rule.points.iter().zip(&rule.weights) {
                    let s = mesh.facet_local_params(f, sg);
                    let (n1, len) = mesh.edge_normal(f.elements[0], f.local_edges[0], s[0]);
                    let wq = w * len;
                    let mut evals = Vec::with_capacity(2);
                    let mut exact = None;
                    for side in 0..2 {
                        let e = f.elements[side];
                        let (pe, _) = element_eval(mesh, spaces, e, edge_ref_point(f.local_edges[side], s[side]));
                        let (uv, ug) = *exact.get_or_insert_with(|| cx.exact.u(pe.x));
                        let dofs = &spaces.volume[e].global;
                        let (hv, hg) = interp(&pe.vals, &pe.grads, dofs, coeffs);
                        let eg = nu_apply(&nus[side], [ug[0] - hg[0], ug[1] - hg[1]]);
                        evals.push((uv - hv, eg, pe));
                    }
                    let jump = evals[0].0 - evals[1].0;
                    let flux = cdot(evals[0].1, n1) - cdot(evals[1].1, n1);
                    let avg = [0.5 * (evals[0].1[0] + evals[1].1[0]), 0.5 * (evals[0].1[1] + evals[1].1[1])];
                    parts.jump += wq * k * alpha * jump.norm_sqr();
                    parts.flux += wq * beta / k * flux.norm_sqr();
                    parts.avg += wq / (k * alpha) * (avg[0].norm_sqr() + avg[1].norm_sqr());
                    if want_rhs {
                        for side in 0..2 {
                            let sgn = if side == 0 { 1.0 } else { -1.0 };
                            let pe = &evals[side].2;
                            for (i, &d) in spaces.volume[f.elements[side]].global.iter().enumerate() {
                                let q = mat_vec(&nus[side], pe.grads[i]);
                                rd.push((d, wq * (jump * (k * alpha * sgn * pe.vals[i]) + flux * (beta / k * sgn * dot(q, n1)))));
                                ra.push((d, wq / (k * alpha) * cdot(avg, [0.5 * q[0], 0.5 * q[1]])));
                            }
                        }
                    }
                }
                (parts, vec![], rd, ra)
            })
            .collect();
        locals.extend(facets);

        let gamma = cx.gamma;
        let panels: Vec<Local> = gamma
            .panels
            .par_iter()
            .enumerate()
            .map(|(pi, panel)| {
                let e = panel.element;
                let nu = mesh.partition.coefficients[mesh.elements[e].subdomain].nu;
                let dofs = &spaces.volume[e].global;
                let dl = pen.delta(k, p, panel.h);
                let mut parts = VolumeErrorParts::default();
                let mut rd = Vec::new();
                for (&s, &w) in rule.points.iter().zip(&rule.weights) {
                    let (_, nrm, jac) = gamma.eval(pi, s);
                    let wq = w * jac;
                    let se = mesh.panel_to_edge_param(panel, s);
                    let (pe, _) = element_eval(mesh, spaces, e, edge_ref_point(panel.local_edge, se));
                    let (uv, ug) = cx.exact.u(pe.x);
                    let (hv, hg) = interp(&pe.vals, &pe.grads, dofs, coeffs);
                    let ev = uv - hv;
                    let dn = cdot(nu_apply(&nu, [ug[0] - hg[0], ug[1] - hg[1]]), nrm);
                    parts.bnd_flux += wq * dl / k * dn.norm_sqr();
                    parts.bnd_val += wq * k * (1.0 - dl) * ev.norm_sqr();
                    if want_rhs {
                        for (i, &d) in dofs.iter().enumerate() {
                            let dni = dot(mat_vec(&nu, pe.grads[i]), nrm);
                            rd.push((d, wq * (dn * (dl / k * dni) + ev * (k * (1.0 - dl) * pe.vals[i]))));
                        }
                    }
                }
                (parts, vec![], rd, vec![])
            })
            .collect();
        locals.extend(panels);
    }

    let mut parts = VolumeErrorParts::default();
    let mut rhs = want_rhs.then(|| VolumeRhs { energy: vec![zero; n], dg: vec![zero; n], avg: vec![zero; n] });
    for (pp, re, rd, ra) in locals {
        parts.add(&pp);
        if let Some(r) = rhs.as_mut() {
            re.into_iter().for_each(|(i, v)| r.energy[i] += v);
            rd.into_iter().for_each(|(i, v)| r.dg[i] += v);
            ra.into_iter().for_each(|(i, v)| r.avg[i] += v);
        }
    }
    (parts, rhs)
}

fn fourier_of<'a>(cx: &Ctx<'a>) -> Result<&'a super::BoundaryFourier, NormError> {
    cx.norm.fourier.as_ref().ok_or(NormError::NotCircle)
}

/// Fourier modes of exact - discrete on a trace space.
fn trace_error_modes(cx: &Ctx, space: TraceSpace, coeffs: &[C]) -> Result<Vec<C>, NormError> {
    let f = fourier_of(cx)?;
    let b = cx.norm.basis;
    let ex = cx.exact;
    Ok(f.transform_fn(&|nd: &super::FourierNode| {
        let v = match space {
            TraceSpace::W => ex.m(nd.theta),
            TraceSpace::Z | TraceSpace::X => ex.ext(nd.theta),
        };
        v - eval_trace(&b, space, coeffs, nd.panel, nd.s)
    }))
}

/// (||h^{1/2} p^{-1} (m - m_h)||^2, int h p^{-2} (m - m_h) psi_i).
fn m_mesh_terms(cx: &Ctx, coeffs: &[C]) -> (f64, Vec<C>) {
    let b = cx.norm.basis;
    let p = b.p as f64;
    let g = gauss_unchecked(b.p + 8).to_unit();
    let mut s2 = 0.0;
    let mut r = vec![C::new(0.0, 0.0); b.n_w()];
    for (pi, panel) in cx.gamma.panels.iter().enumerate() {
        let dofs = b.dofs(TraceSpace::W, pi);
        for (&s, &w) in g.points.iter().zip(&g.weights) {
            let wq = w * cx.gamma.eval(pi, s).2 * panel.h / (p * p);
            let e = cx.exact.m(panel.theta(s)) - eval_trace(&b, TraceSpace::W, coeffs, pi, s);
            s2 += wq * e.norm_sqr();
            let (v, _) = b.eval(TraceSpace::W, s);
            for (a, &d) in dofs.iter().enumerate() {
                r[d] += wq * e * v[a];
            }
        }
    }
    (s2, r)
}

fn check(cx: &Ctx, x: &ThreeFieldVector) -> Result<(), NormError> {
    if x.u.len() != cx.spaces.n_volume || x.m.len() != cx.norm.basis.n_w() || x.ext.len() != cx.norm.basis.n_z() {
        return Err(NormError::Unsupported("triple does not match the spaces".into()));
    }
    if cx.norm.realization != super::BoundaryRealization::Fourier {
        return Err(NormError::Unsupported("exact errors need the Fourier realization".into()));
    }
    Ok(())
}

/// All squared error contributions of a discrete triple.
pub fn error_parts(
    ctx: &EnergyNormContext,
    mesh: &CurvedMesh,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    exact: &dyn ExactSolution,
    x: &ThreeFieldVector,
) -> Result<ErrorParts, NormError> {
    let cx = Ctx { norm: ctx, mesh, gamma, spaces, exact };
    check(&cx, x)?;
    let f = fourier_of(&cx)?;
    let (volume, _) = volume_error(&cx, &x.u, false);
    let m = f.norm_sq(&trace_error_modes(&cx, TraceSpace::W, &x.m)?, -0.5);
    let ext = f.norm_sq(&trace_error_modes(&cx, TraceSpace::Z, &x.ext)?, 0.5);
    let (m_mesh, _) = m_mesh_terms(&cx, &x.m);
    Ok(ErrorParts { volume, m, m_mesh, ext })
}

/// Best approximation of the exact triple in the chosen norm. The norm is
/// block diagonal, so each field is projected separately.
pub fn best_approximation_error(
    ctx: &EnergyNormContext,
    mesh: &CurvedMesh,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    exact: &dyn ExactSolution,
    kind: NormKind,
) -> Result<BestApproximation, NormError> {
    let cx = Ctx { norm: ctx, mesh, gamma, spaces, exact };
    let basis = ctx.basis;
    let zero = ThreeFieldVector::zeros(spaces.n_volume, basis.n_w(), basis.n_z());
    check(&cx, &zero)?;
    let f = fourier_of(&cx)?;

    let (_, rhs) = volume_error(&cx, &zero.u, true);
    let rhs = rhs.expect("requested");
    let mut b = rhs.energy;
    if kind != NormKind::Energy {
        b.iter_mut().zip(&rhs.dg).for_each(|(a, c)| *a += c);
    }
    if kind == NormKind::DgPlus {
        b.iter_mut().zip(&rhs.avg).for_each(|(a, c)| *a += c);
    }
    let g = ctx.volume_gram(kind)?;
    let gc = Coo { nrows: g.nrows, ncols: g.ncols, entries: g.entries.iter().map(|&(i, j, v)| (i, j, C::new(v, 0.0))).collect() };
    let lu = SparseLu::new(&gc).map_err(|_| NormError::Singular("volume"))?;
    let u = lu.solve_vec(&b);

    let fw = ctx.fourier_w.as_ref().ok_or(NormError::NotCircle)?;
    let fz = ctx.fourier_z.as_ref().ok_or(NormError::NotCircle)?;
    let mut bm = f.pairing_with_basis(fw, &trace_error_modes(&cx, TraceSpace::W, &zero.m)?, -0.5);
    if kind == NormKind::DgPlus {
        let (_, r) = m_mesh_terms(&cx, &zero.m);
        bm.iter_mut().zip(&r).for_each(|(a, c)| *a += c);
    }
    let m = spd_solve(&ctx.m_gram(kind), &bm, "m")?;
    let be = f.pairing_with_basis(fz, &trace_error_modes(&cx, TraceSpace::Z, &zero.ext)?, 0.5);
    let ext = spd_solve(&ctx.gram_ext, &be, "u_ext")?;

    let coeffs = ThreeFieldVector { u, m, ext };
    let parts = error_parts(ctx, mesh, gamma, spaces, exact, &coeffs)?;
    Ok(BestApproximation { error: parts.total(kind), coeffs, parts })
}
