//! Galerkin boundary integral operators V, K, K', W on the trace spaces
//! W_h (discontinuous, degree p - 1) and Z_h (continuous, degree p), layer
//! potentials and the Calderon residual.
//!
//! Conventions: G_k = (i/4) H_0(k|x - y|), G_0 = -(1/2 pi) ln|x - y|,
//! (K phi)(x) = int d_{n_y} G phi, (K' phi)(x) = int d_{n_x} G phi, and W via
//! <W phi, psi> = int int G (phi' psi' - k^2 n_x.n_y phi psi) (arc-length derivatives).

use faer::linalg::solvers::Solve;
use faer::{Mat, Scale};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::discretization::shape::{LegendreSegment, SegmentBasis};
use crate::discretization::quadrature::gauss_unchecked;
use crate::discretization::SpaceTriple;
use crate::geometry::{dist, BoundaryMesh, Point};
use crate::specfun::{radial_green, radial_split, SpecFunError};

pub mod potential;
pub mod quad;

pub use potential::{evaluate_potential, jump_errors, JumpErrors, PotentialField, PotentialKind};
use quad::{far_order, pair_nodes, PairKind};

type C = Complex64;

#[derive(Debug, thiserror::Error)]
pub enum BemError {
    #[error("wavenumber must be finite and >= 0, got {0}")]
    Wavenumber(f64),
    #[error("operator {0:?} is not defined on the requested spaces")]
    UnsupportedSpace(OperatorTag),
    #[error("point at distance {0:.3e} from Gamma is too close for the potential quadrature")]
    TooClose(f64),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("singular mass matrix")]
    SingularMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    V,
    K,
    Kp,
    W,
}

/// One of the two trace spaces; `X` is their concatenation W_h + Z_h with
/// the W_h dofs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceSpace {
    W,
    Z,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Points per direction on self and adjacent pairs: p + near_extra.
    pub near_extra: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { near_extra: 10 }
    }
}

/// Dof bookkeeping of W_h and Z_h on the panels of Gamma_h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceBasis {
    pub p: usize,
    pub n_panels: usize,
    seg_w: LegendreSegment,
    seg_z: SegmentBasis,
}

impl TraceBasis {
    pub fn new(p: usize, n_panels: usize) -> Self {
        TraceBasis {
            p,
            n_panels,
            seg_w: LegendreSegment { p },
            seg_z: SegmentBasis { p },
        }
    }

    pub fn from_spaces(s: &SpaceTriple) -> Self {
        Self::new(s.p, s.n_panels)
    }

    pub fn n_w(&self) -> usize {
        self.n_panels * self.p
    }

    pub fn n_z(&self) -> usize {
        self.n_panels * self.p
    }

    pub fn dim(&self, space: TraceSpace) -> usize {
        match space {
            TraceSpace::W => self.n_w(),
            TraceSpace::Z => self.n_z(),
            TraceSpace::X => self.n_w() + self.n_z(),
        }
    }

    /// Global dofs of the panel within its own space.
    pub fn dofs(&self, space: TraceSpace, panel: usize) -> Vec<usize> {
        match space {
            TraceSpace::W => (panel * self.p..(panel + 1) * self.p).collect(),
            TraceSpace::Z => {
                let n = self.n_panels;
                let mut d = vec![panel, (panel + 1) % n];
                d.extend((0..self.p - 1).map(|j| n + panel * (self.p - 1) + j));
                d
            }
            TraceSpace::X => {
                let mut d = self.dofs(TraceSpace::W, panel);
                d.extend(self.dofs(TraceSpace::Z, panel).into_iter().map(|i| i + self.n_w()));
                d
            }
        }
    }

    /// Local basis values and d/ds on the panel parameter.
    pub fn eval(&self, space: TraceSpace, s: f64) -> (Vec<f64>, Vec<f64>) {
        match space {
            TraceSpace::W => self.seg_w.eval(s),
            TraceSpace::Z => self.seg_z.eval(s),
            TraceSpace::X => {
                let (mut v, mut d) = self.seg_w.eval(s);
                let (vz, dz) = self.seg_z.eval(s);
                v.extend(vz);
                d.extend(dz);
                (v, d)
            }
        }
    }

    /// Offset of a space inside X.
    pub fn offset(&self, space: TraceSpace) -> usize {
        match space {
            TraceSpace::Z => self.n_w(),
            _ => 0,
        }
    }
}

/// An assembled operator block: entry (i, j) = <Op phi_j, psi_i>.
#[derive(Debug, Clone)]
pub struct BoundaryOperatorMatrix {
    pub tag: OperatorTag,
    pub k: f64,
    pub test: TraceSpace,
    pub trial: TraceSpace,
    pub data: Mat<C>,
}

/// All four operators at one wavenumber: V, K, K' on X x X, W on Z x Z,
/// and the real boundary mass matrix on X x X.
#[derive(Debug, Clone)]
pub struct BemOperators {
    pub k: f64,
    pub basis: TraceBasis,
    pub v: Mat<C>,
    pub dl: Mat<C>,
    pub adl: Mat<C>,
    pub w: Mat<C>,
    pub mass: Mat<f64>,
}

fn sub<T: Copy>(m: &Mat<T>, r0: usize, nr: usize, c0: usize, nc: usize) -> Mat<T> {
    Mat::from_fn(nr, nc, |i, j| m[(r0 + i, c0 + j)])
}

impl BemOperators {
    fn range(&self, s: TraceSpace) -> (usize, usize) {
        (self.basis.offset(s), self.basis.dim(s))
    }

    pub fn block(&self, tag: OperatorTag, test: TraceSpace, trial: TraceSpace) -> Result<Mat<C>, BemError> {
        let (r0, nr) = self.range(test);
        let (c0, nc) = self.range(trial);
        Ok(match tag {
            OperatorTag::V => sub(&self.v, r0, nr, c0, nc),
            OperatorTag::K => sub(&self.dl, r0, nr, c0, nc),
            OperatorTag::Kp => sub(&self.adl, r0, nr, c0, nc),
            OperatorTag::W => {
                if test != TraceSpace::Z || trial != TraceSpace::Z {
                    return Err(BemError::UnsupportedSpace(tag));
                }
                self.w.clone()
            }
        })
    }

    pub fn mass_block(&self, test: TraceSpace, trial: TraceSpace) -> Mat<f64> {
        let (r0, nr) = self.range(test);
        let (c0, nc) = self.range(trial);
        sub(&self.mass, r0, nr, c0, nc)
    }
}

#[derive(Debug, Clone, Copy)]
struct PanelPoint {
    x: Point,
    n: Point,
    jac: f64,
}

fn panel_point(gamma: &BoundaryMesh, panel: usize, s: f64) -> PanelPoint {
    let (x, n, jac) = gamma.eval(panel, s);
    PanelPoint { x, n, jac }
}

/// Minimum distance between the panels estimated on 9 samples each, and
/// the larger of the two panel lengths.
fn panel_separation(samples: &[Vec<Point>], lengths: &[f64], i: usize, j: usize) -> (f64, f64) {
    let mut d = f64::INFINITY;
    for a in &samples[i] {
        for b in &samples[j] {
            d = d.min(dist(*a, *b));
        }
    }
    (d, lengths[i].max(lengths[j]))
}

fn pair_kind(n: usize, i: usize, j: usize) -> Option<PairKind> {
    if i == j {
        Some(PairKind::Same)
    } else if (i + 1) % n == j {
        Some(PairKind::TestEndTrialStart)
    } else if (j + 1) % n == i {
        Some(PairKind::TestStartTrialEnd)
    } else {
        None
    }
}

struct LocalBlocks {
    v: Vec<C>,
    dl: Vec<C>,
    adl: Vec<C>,
    w: Vec<C>,
}

fn check_k(k: f64) -> Result<(), BemError> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(BemError::Wavenumber(k));
    }
    Ok(())
}

fn pair_blocks(
    k: f64,
    gamma: &BoundaryMesh,
    basis: &TraceBasis,
    i: usize,
    j: usize,
    kind: PairKind,
    n_near: usize,
) -> LocalBlocks {
    let nl = 2 * basis.p + 1;
    let nz = basis.p + 1;
    let pw = basis.p;
    let mut out = LocalBlocks {
        v: vec![C::new(0.0, 0.0); nl * nl],
        dl: vec![C::new(0.0, 0.0); nl * nl],
        adl: vec![C::new(0.0, 0.0); nl * nl],
        w: vec![C::new(0.0, 0.0); nz * nz],
    };
    let far = matches!(kind, PairKind::Far(_));
    for q in pair_nodes(kind, n_near) {
        let px = panel_point(gamma, i, q.s);
        let py = panel_point(gamma, j, q.t);
        let (fx, dfx) = basis.eval(TraceSpace::X, q.s);
        let (fy, dfy) = basis.eval(TraceSpace::X, q.t);
        let dx = [py.x[0] - px.x[0], py.x[1] - px.x[1]];
        let r = dx[0].hypot(dx[1]);
        let d_y = dx[0] * py.n[0] + dx[1] * py.n[1];
        let d_x = -(dx[0] * px.n[0] + dx[1] * px.n[1]);
        let (cg, cd) = if far {
            let g = radial_green(k, r);
            (g[0] * q.ws, g[1] / r * q.ws)
        } else {
            let sp = radial_split(k, r);
            let lr = r.ln() - q.ln_rho;
            (sp.a0 * q.wl + (sp.a0 * lr + sp.b0) * q.ws, sp.a1 * q.wl + (sp.a1 * lr + sp.b1) * q.ws)
        };
        let jj = px.jac * py.jac;
        let cv = cg * jj;
        let ck = cd * (d_y * jj);
        let ckp = cd * (d_x * jj);
        for a in 0..nl {
            let fa = fx[a];
            let row = a * nl;
            for b in 0..nl {
                let f = fa * fy[b];
                out.v[row + b] += cv * f;
                out.dl[row + b] += ck * f;
                out.adl[row + b] += ckp * f;
            }
        }
        let nn = px.n[0] * py.n[0] + px.n[1] * py.n[1];
        let k2 = k * k * nn * jj;
        for a in 0..nz {
            for b in 0..nz {
                let (ia, ib) = (pw + a, pw + b);
                out.w[a * nz + b] += cg * (dfx[ia] * dfy[ib] - k2 * fx[ia] * fy[ib]);
            }
        }
    }
    out
}

pub fn boundary_mass(gamma: &BoundaryMesh, basis: &TraceBasis) -> Mat<f64> {
    let n = basis.dim(TraceSpace::X);
    let mut m = Mat::<f64>::zeros(n, n);
    let g = gauss_unchecked(basis.p + 4).to_unit();
    for panel in 0..basis.n_panels {
        let dofs = basis.dofs(TraceSpace::X, panel);
        for (&s, &w) in g.points.iter().zip(&g.weights) {
            let (f, _) = basis.eval(TraceSpace::X, s);
            let jac = gamma.eval(panel, s).2;
            for a in 0..dofs.len() {
                for b in 0..dofs.len() {
                    m[(dofs[a], dofs[b])] += w * jac * f[a] * f[b];
                }
            }
        }
    }
    m
}

/// Assembles V, K, K' on X x X and W on Z x Z.
pub fn assemble_operators(k: f64, gamma: &BoundaryMesh, basis: &TraceBasis, quad: &QuadConfig) -> Result<BemOperators, BemError> {
    check_k(k)?;
    let np = basis.n_panels;
    let nx = basis.dim(TraceSpace::X);
    let nz = basis.dim(TraceSpace::Z);
    let samples: Vec<Vec<Point>> = (0..np)
        .map(|i| (0..9).map(|q| gamma.eval(i, q as f64 / 8.0).0).collect())
        .collect();
    let lengths: Vec<f64> = (0..np).map(|i| gamma.length(i)).collect();
    let n_near = basis.p + quad.near_extra;
    let mut v = Mat::<C>::zeros(nx, nx);
    let mut dl = Mat::<C>::zeros(nx, nx);
    let mut adl = Mat::<C>::zeros(nx, nx);
    let mut w = Mat::<C>::zeros(nz, nz);
    let zoff = basis.offset(TraceSpace::Z);
    let chunk = 32;
    for start in (0..np).step_by(chunk) {
        let rows: Vec<Vec<LocalBlocks>> = (start..(start + chunk).min(np))
            .into_par_iter()
            .map(|i| {
                (0..np)
                    .map(|j| {
                        let kind = pair_kind(np, i, j).unwrap_or_else(|| {
                            let (d, l) = panel_separation(&samples, &lengths, i, j);
                            PairKind::Far(far_order(basis.p, d, l))
                        });
                        pair_blocks(k, gamma, basis, i, j, kind, n_near)
                    })
                    .collect()
            })
            .collect();
        for (di, row) in rows.into_iter().enumerate() {
            let i = start + di;
            let ri = basis.dofs(TraceSpace::X, i);
            for (j, blk) in row.into_iter().enumerate() {
                let cj = basis.dofs(TraceSpace::X, j);
                let nl = ri.len();
                for a in 0..nl {
                    for b in 0..nl {
                        v[(ri[a], cj[b])] += blk.v[a * nl + b];
                        dl[(ri[a], cj[b])] += blk.dl[a * nl + b];
                        adl[(ri[a], cj[b])] += blk.adl[a * nl + b];
                    }
                }
                let nzl = basis.p + 1;
                for a in 0..nzl {
                    for b in 0..nzl {
                        w[(ri[basis.p + a] - zoff, cj[basis.p + b] - zoff)] += blk.w[a * nzl + b];
                    }
                }
            }
        }
    }
    Ok(BemOperators { k, basis: *basis, v, dl, adl, w, mass: boundary_mass(gamma, basis) })
}

pub fn assemble_boundary_operator(
    tag: OperatorTag,
    k: f64,
    gamma: &BoundaryMesh,
    spaces: &SpaceTriple,
    test: TraceSpace,
    trial: TraceSpace,
    quad: &QuadConfig,
) -> Result<BoundaryOperatorMatrix, BemError> {
    if tag == OperatorTag::W && (test != TraceSpace::Z || trial != TraceSpace::Z) {
        return Err(BemError::UnsupportedSpace(tag));
    }
    let ops = assemble_operators(k, gamma, &TraceBasis::from_spaces(spaces), quad)?;
    Ok(BoundaryOperatorMatrix { tag, k, test, trial, data: ops.block(tag, test, trial)? })
}

/// B_k = -W - ik(M/2 - K) on Z x Z and A'_k = M/2 + K' + ikV with test Z_h
/// and trial W_h.
pub fn assemble_bk_apk(ops: &BemOperators) -> (Mat<C>, Mat<C>) {
    let ik = C::new(0.0, ops.k);
    let z = TraceSpace::Z;
    let w = TraceSpace::W;
    let mzz = ops.mass_block(z, z);
    let kzz = ops.block(OperatorTag::K, z, z).expect("K block");
    let wzz = &ops.w;
    let bk = Mat::from_fn(mzz.nrows(), mzz.ncols(), |i, j| {
        -wzz[(i, j)] - ik * (C::new(0.5 * mzz[(i, j)], 0.0) - kzz[(i, j)])
    });
    let mzw = ops.mass_block(z, w);
    let kp = ops.block(OperatorTag::Kp, z, w).expect("K' block");
    let vzw = ops.block(OperatorTag::V, z, w).expect("V block");
    let apk = Mat::from_fn(mzw.nrows(), mzw.ncols(), |i, j| {
        C::new(0.5 * mzw[(i, j)], 0.0) + kp[(i, j)] + ik * vzw[(i, j)]
    });
    (bk, apk)
}

/// Coefficients of the L2 projection of f(theta) onto a trace space.
pub fn l2_project(gamma: &BoundaryMesh, basis: &TraceBasis, space: TraceSpace, f: impl Fn(f64) -> C) -> Result<Vec<C>, BemError> {
    let n = basis.dim(space);
    let mass = boundary_mass(gamma, basis);
    let off = basis.offset(space);
    let m = sub(&mass, off, n, off, n);
    let mut rhs = Mat::<C>::zeros(n, 1);
    let g = gauss_unchecked(basis.p + 8).to_unit();
    for panel in 0..basis.n_panels {
        let dofs = basis.dofs(space, panel);
        for (&s, &w) in g.points.iter().zip(&g.weights) {
            let (v, _) = basis.eval(space, s);
            let jac = gamma.eval(panel, s).2;
            let fv = f(gamma.panels[panel].theta(s));
            for a in 0..dofs.len() {
                rhs[(dofs[a], 0)] += fv * (w * jac * v[a]);
            }
        }
    }
    let llt = m.llt(faer::Side::Lower).map_err(|_| BemError::SingularMass)?;
    let re = llt.solve(Mat::from_fn(n, 1, |i, _| rhs[(i, 0)].re));
    let im = llt.solve(Mat::from_fn(n, 1, |i, _| rhs[(i, 0)].im));
    Ok((0..n).map(|i| C::new(re[(i, 0)], im[(i, 0)])).collect())
}

/// Evaluates a trace-space function at parameter s on a panel.
pub fn eval_trace(basis: &TraceBasis, space: TraceSpace, coeffs: &[C], panel: usize, s: f64) -> C {
    let dofs = basis.dofs(space, panel);
    let (v, _) = basis.eval(space, s);
    dofs.iter().zip(&v).map(|(&d, &f)| coeffs[d] * f).sum()
}

/// Relative residual of V W + K K - 1/4 on Z_h, applied to the projections
/// of cos(n theta) and sin(n theta), n <= n_modes:
/// ||(V M^{-1} W + K M^{-1} K - M/4) X||_F / ||M X / 4||_F.
pub fn calderon_residual(ops: &BemOperators, gamma: &BoundaryMesh, n_modes: usize) -> Result<f64, BemError> {
    let z = TraceSpace::Z;
    let basis = &ops.basis;
    let nz = basis.dim(z);
    let m = ops.mass_block(z, z);
    let mc = Mat::<C>::from_fn(nz, nz, |i, j| C::new(m[(i, j)], 0.0));
    let lu = mc.partial_piv_lu();
    let v = ops.block(OperatorTag::V, z, z)?;
    let kk = ops.block(OperatorTag::K, z, z)?;
    let mut cols: Vec<Vec<C>> = Vec::new();
    for n in 0..=n_modes {
        cols.push(l2_project(gamma, basis, z, |t| C::new((n as f64 * t).cos(), 0.0))?);
        if n > 0 {
            cols.push(l2_project(gamma, basis, z, |t| C::new((n as f64 * t).sin(), 0.0))?);
        }
    }
    let x = Mat::<C>::from_fn(nz, cols.len(), |i, j| cols[j][i]);
    let wx = &ops.w * &x;
    let kx = &kk * &x;
    let r = &v * lu.solve(&wx) + &kk * lu.solve(&kx) - Scale(C::new(0.25, 0.0)) * (&mc * &x);
    let denom = (Scale(C::new(0.25, 0.0)) * (&mc * &x)).norm_l2();
    Ok(r.norm_l2() / denom)
}

/// Writes `<path>.bin` (little-endian f64, interleaved re/im, row-major)
/// and the sidecar `<path>.json`.
pub fn dump_matrix(path: &Path, data: &Mat<C>, meta: serde_json::Value) -> Result<(), BemError> {
    let mut bin = std::io::BufWriter::new(std::fs::File::create(path.with_extension("bin"))?);
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            bin.write_all(&data[(i, j)].re.to_le_bytes())?;
            bin.write_all(&data[(i, j)].im.to_le_bytes())?;
        }
    }
    bin.flush()?;
    let mut side = serde_json::json!({ "rows": data.nrows(), "cols": data.ncols() });
    if let (Some(obj), serde_json::Value::Object(extra)) = (side.as_object_mut(), meta) {
        obj.extend(extra);
    }
    std::fs::write(path.with_extension("json"), serde_json::to_string_pretty(&side).expect("json"))?;
    Ok(())
}
