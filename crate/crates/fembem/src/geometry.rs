//! Analytic boundary curves, star-shaped structured triangulations with
//! curved (blended) elements, facet bookkeeping and element maps.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("incompatible partition: {0}")]
    Partition(String),
    #[error("invalid coefficients: {0}")]
    Coefficients(String),
    #[error("curve is not star-shaped about its centre")]
    NotStarShaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveKind {
    Circle { radius: f64 },
    /// (cos t + 0.65 cos 2t - 0.65, 1.5 sin t) scaled by `scale`.
    Kite { scale: f64 },
}

/// Closed 2 pi-periodic analytic curve, optionally shrunk towards its centre:
/// position(t) = centre + rho (base(t) - centre).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub kind: CurveKind,
    pub center: Point,
    pub rho: f64,
}

pub fn make_circle(radius: f64, center: Point) -> Result<BoundaryCurve, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::Partition(format!("circle radius {radius}")));
    }
    Ok(BoundaryCurve { kind: CurveKind::Circle { radius }, center, rho: 1.0 })
}

pub fn make_kite() -> BoundaryCurve {
    BoundaryCurve { kind: CurveKind::Kite { scale: 0.3 }, center: [0.0, 0.0], rho: 1.0 }
}

impl BoundaryCurve {
    /// Base curve relative to the centre and its first two derivatives.
    fn base(&self, t: f64) -> [Point; 3] {
        let (s, c) = t.sin_cos();
        match self.kind {
            CurveKind::Circle { radius: r } => [[r * c, r * s], [-r * s, r * c], [-r * c, -r * s]],
            CurveKind::Kite { scale: a } => {
                let (s2, c2) = (2.0 * t).sin_cos();
                [
                    [a * (c + 0.65 * c2 - 0.65), a * 1.5 * s],
                    [a * (-s - 1.3 * s2), a * 1.5 * c],
                    [a * (-c - 2.6 * c2), -a * 1.5 * s],
                ]
            }
        }
    }

    pub fn scaled(&self, rho: f64) -> BoundaryCurve {
        BoundaryCurve { rho: self.rho * rho, ..*self }
    }

    pub fn position(&self, t: f64) -> Point {
        let b = self.base(t)[0];
        [self.center[0] + self.rho * b[0], self.center[1] + self.rho * b[1]]
    }

    pub fn d1(&self, t: f64) -> Point {
        let b = self.base(t)[1];
        [self.rho * b[0], self.rho * b[1]]
    }

    pub fn d2(&self, t: f64) -> Point {
        let b = self.base(t)[2];
        [self.rho * b[0], self.rho * b[1]]
    }

    pub fn speed(&self, t: f64) -> f64 {
        let d = self.d1(t);
        d[0].hypot(d[1])
    }

    /// Outward unit normal (the curves are traversed counterclockwise).
    pub fn normal(&self, t: f64) -> Point {
        let d = self.d1(t);
        let s = d[0].hypot(d[1]);
        [d[1] / s, -d[0] / s]
    }

    pub fn curvature(&self, t: f64) -> f64 {
        let d = self.d1(t);
        let dd = self.d2(t);
        (d[0] * dd[1] - d[1] * dd[0]) / d[0].hypot(d[1]).powi(3)
    }

    pub fn is_circle(&self) -> Option<(f64, Point)> {
        match self.kind {
            CurveKind::Circle { radius } => Some((radius * self.rho, self.center)),
            _ => None,
        }
    }

    /// Largest distance between `n` equispaced samples.
    pub fn sampled_diameter(&self, n: usize) -> f64 {
        let pts: Vec<Point> = (0..n).map(|i| self.position(TAU * i as f64 / n as f64)).collect();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                d = d.max(dist(pts[i], pts[j]));
            }
        }
        d
    }

    /// Checks (base(t) - centre) x base'(t) > 0 on a sample grid.
    pub fn is_star_shaped(&self) -> bool {
        (0..512).all(|i| {
            let t = TAU * i as f64 / 512.0;
            let b = self.base(t);
            b[0][0] * b[1][1] - b[0][1] * b[1][0] > 0.0
        })
    }

    /// Star coordinates (rho, t) of x: x = centre + rho (base(t) - centre).
    pub fn star_coordinates(&self, x: Point) -> (f64, f64) {
        let v = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = v[0].hypot(v[1]);
        if r == 0.0 {
            return (0.0, 0.0);
        }
        let target = v[1].atan2(v[0]);
        let angle_err = |t: f64| {
            let b = self.base(t)[0];
            wrap_angle(b[1].atan2(b[0]) - target)
        };
        // the polar angle of base(t) is increasing in t for star-shaped curves
        let mut t = target.rem_euclid(TAU);
        let mut lo = t - PI;
        let mut hi = t + PI;
        for _ in 0..200 {
            let e = angle_err(t);
            if e.abs() < 1e-15 {
                break;
            }
            if e > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            t = 0.5 * (lo + hi);
        }
        let b = self.base(t)[0];
        let rb = b[0].hypot(b[1]);
        (r / (rb * self.rho), t.rem_euclid(TAU))
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Refractive-index field on one subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScalarField {
    Constant(f64),
    /// c0 + amp exp(-|x - centre|^2 / width^2)
    Bump { c0: f64, amp: f64, center: Point, width: f64 },
}

impl ScalarField {
    pub fn eval(&self, x: Point) -> f64 {
        match *self {
            ScalarField::Constant(c) => c,
            ScalarField::Bump { c0, amp, center, width } => {
                let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                c0 + amp * (-d2 / (width * width)).exp()
            }
        }
    }
}

/// Coefficients on one subdomain: constant symmetric nu and a scalar n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub nu: [[f64; 2]; 2],
    pub n: ScalarField,
}

impl Coefficients {
    pub fn isotropic(n: f64) -> Self {
        Coefficients { nu: [[1.0, 0.0], [0.0, 1.0]], n: ScalarField::Constant(n) }
    }

    pub fn nu_min_eigenvalue(&self) -> f64 {
        let [[a, b], [c, d]] = self.nu;
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * c).sqrt();
        m - r
    }

    /// Spectral norm of nu.
    pub fn nu_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.nu;
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * c).sqrt();
        (m + r).abs().max((m - r).abs())
    }
}

/// Concentric partition: subdomain j lies between interfaces j-1 and j
/// (in star coordinates), the innermost first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainPartition {
    pub interfaces: Vec<f64>,
    pub coefficients: Vec<Coefficients>,
    /// Width (in star coordinate) of a collar below Gamma where nu = I, n = 1
    /// is required. `None` disables the check.
    pub collar: Option<f64>,
}

impl SubdomainPartition {
    pub fn trivial(c: Coefficients) -> Self {
        SubdomainPartition { interfaces: vec![], coefficients: vec![c], collar: None }
    }

    pub fn count(&self) -> usize {
        self.coefficients.len()
    }

    pub fn classify(&self, curve: &BoundaryCurve, x: Point) -> usize {
        let (rho, _) = curve.star_coordinates(x);
        self.interfaces.iter().filter(|&&r| rho > r).count()
    }

    pub fn validate(&self, curve: &BoundaryCurve, nu0: f64) -> Result<(), GeometryError> {
        if self.coefficients.len() != self.interfaces.len() + 1 {
            return Err(GeometryError::Partition("coefficient count".into()));
        }
        for c in &self.coefficients {
            let [[_, b], [cc, _]] = c.nu;
            if (b - cc).abs() > 1e-14 || c.nu_min_eigenvalue() < nu0 {
                return Err(GeometryError::Coefficients(format!("nu {:?}", c.nu)));
            }
        }
        if let Some(w) = self.collar {
            let outer = self.coefficients.last().unwrap();
            let inner_edge = self.interfaces.last().copied().unwrap_or(0.0);
            if inner_edge > 1.0 - w {
                return Err(GeometryError::Coefficients("interface inside collar".into()));
            }
            for i in 0..64 {
                let t = TAU * i as f64 / 64.0;
                let x = curve.scaled(1.0 - 0.5 * w).position(t);
                let n = outer.n.eval(x);
                if (n - 1.0).abs() > 1e-12 || outer.nu != [[1.0, 0.0], [0.0, 1.0]] {
                    return Err(GeometryError::Coefficients("collar requires nu = I, n = 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// Curved edge of an element: the local edge opposite local vertex
/// `local_edge`, traversed from local vertex (e+1)%3 to (e+2)%3 as
/// curve(t_a + s delta), s in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvedEdge {
    pub local_edge: usize,
    pub curve: usize,
    pub t_a: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub vertices: [usize; 3],
    pub subdomain: usize,
    pub curved: Option<CurvedEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorFacet {
    /// elements[0] < elements[1]; the facet normal points out of elements[0].
    pub elements: [usize; 2],
    pub local_edges: [usize; 2],
    /// Global vertex ids (lower, higher); facet parameter runs from the first.
    pub vertices: [usize; 2],
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFacet {
    pub element: usize,
    pub local_edge: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEval {
    pub x: Point,
    /// jac[i][j] = d x_i / d xi_j
    pub jac: [[f64; 2]; 2],
}

impl MapEval {
    pub fn det(&self) -> f64 {
        self.jac[0][0] * self.jac[1][1] - self.jac[0][1] * self.jac[1][0]
    }

    /// Inverse transpose of the Jacobian (maps reference gradients).
    pub fn inv_t(&self) -> [[f64; 2]; 2] {
        let d = self.det();
        let j = self.jac;
        [[j[1][1] / d, -j[1][0] / d], [-j[0][1] / d, j[0][0] / d]]
    }
}

pub const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
const GRAD_LAMBDA: [Point; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

pub fn barycentric(xi: Point) -> [f64; 3] {
    [1.0 - xi[0] - xi[1], xi[0], xi[1]]
}

/// Reference point at parameter s on local edge e (from (e+1)%3 to (e+2)%3).
pub fn edge_ref_point(e: usize, s: f64) -> Point {
    let a = REF_VERTICES[(e + 1) % 3];
    let b = REF_VERTICES[(e + 2) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvedMesh {
    pub vertices: Vec<Point>,
    /// Curve membership of each vertex: (curve index, parameter).
    pub vertex_curve: Vec<Option<(usize, f64)>>,
    pub elements: Vec<Element>,
    /// curves[0] is Gamma; the others are the interfaces.
    pub curves: Vec<BoundaryCurve>,
    pub interior_facets: Vec<InteriorFacet>,
    /// Sorted by parameter along Gamma.
    pub boundary_facets: Vec<BoundaryFacet>,
    pub h_elem: Vec<f64>,
    pub level: usize,
    pub partition: SubdomainPartition,
}

impl CurvedMesh {
    pub fn boundary(&self) -> &BoundaryCurve {
        &self.curves[0]
    }

    pub fn map(&self, e: usize, xi: Point) -> MapEval {
        let el = &self.elements[e];
        let lam = barycentric(xi);
        let xs = el.vertices.map(|v| self.vertices[v]);
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..3 {
            for d in 0..2 {
                x[d] += lam[i] * xs[i][d];
                for j in 0..2 {
                    jac[d][j] += GRAD_LAMBDA[i][j] * xs[i][d];
                }
            }
        }
        if let Some(ce) = el.curved {
            // x = sum lambda_i x_i + lambda_a lambda_b E(s), s = (1 + lambda_b - lambda_a) / 2,
            // E(s) = D(s) / (s (1 - s)), D the deviation of the curve from the chord
            let a = (ce.local_edge + 1) % 3;
            let b = (ce.local_edge + 2) % 3;
            let curve = &self.curves[ce.curve];
            let (xa, xb) = (xs[a], xs[b]);
            let s = 0.5 * (1.0 + lam[b] - lam[a]);
            let dd = |s: f64| {
                let t = ce.t_a + s * ce.delta;
                let c = curve.position(t);
                let c1 = curve.d1(t);
                let c2 = curve.d2(t);
                let d0 = [c[0] - (1.0 - s) * xa[0] - s * xb[0], c[1] - (1.0 - s) * xa[1] - s * xb[1]];
                let d1 = [c1[0] * ce.delta - (xb[0] - xa[0]), c1[1] * ce.delta - (xb[1] - xa[1])];
                let d2 = [c2[0] * ce.delta * ce.delta, c2[1] * ce.delta * ce.delta];
                (d0, d1, d2)
            };
            const TAYLOR: f64 = 1e-5;
            let (ev, dev) = if s < TAYLOR {
                let (_, d1, d2) = dd(0.0);
                let f = |i: usize| ((d1[i] + 0.5 * d2[i] * s) * (1.0 + s), 0.5 * d2[i] + d1[i]);
                let (e0, g0) = f(0);
                let (e1, g1) = f(1);
                ([e0, e1], [g0, g1])
            } else if 1.0 - s < TAYLOR {
                let sig = 1.0 - s;
                let (_, d1, d2) = dd(1.0);
                let f = |i: usize| ((-d1[i] + 0.5 * d2[i] * sig) * (1.0 + sig), d1[i] - 0.5 * d2[i]);
                let (e0, g0) = f(0);
                let (e1, g1) = f(1);
                ([e0, e1], [g0, g1])
            } else {
                let (d0, d1, _) = dd(s);
                let q = s * (1.0 - s);
                let dq = 1.0 - 2.0 * s;
                let f = |i: usize| (d0[i] / q, (d1[i] * q - d0[i] * dq) / (q * q));
                let (e0, g0) = f(0);
                let (e1, g1) = f(1);
                ([e0, e1], [g0, g1])
            };
            let p = lam[a] * lam[b];
            let gp = [
                lam[b] * GRAD_LAMBDA[a][0] + lam[a] * GRAD_LAMBDA[b][0],
                lam[b] * GRAD_LAMBDA[a][1] + lam[a] * GRAD_LAMBDA[b][1],
            ];
            let gs = [
                0.5 * (GRAD_LAMBDA[b][0] - GRAD_LAMBDA[a][0]),
                0.5 * (GRAD_LAMBDA[b][1] - GRAD_LAMBDA[a][1]),
            ];
            for d in 0..2 {
                x[d] += p * ev[d];
                for j in 0..2 {
                    jac[d][j] += gp[j] * ev[d] + p * dev[d] * gs[j];
                }
            }
        }
        MapEval { x, jac }
    }

    /// Affine part A_K of the element map (vertex interpolation).
    pub fn affine_map(&self, e: usize) -> ([[f64; 2]; 2], Point) {
        let xs = self.elements[e].vertices.map(|v| self.vertices[v]);
        (
            [[xs[1][0] - xs[0][0], xs[2][0] - xs[0][0]], [xs[1][1] - xs[0][1], xs[2][1] - xs[0][1]]],
            xs[0],
        )
    }

    /// Evaluates R_K = Phi_K o A_K^{-1} at a physical point y of A_K(T).
    pub fn nonaffine_part(&self, e: usize, y: Point) -> Point {
        let (a, x0) = self.affine_map(e);
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let r = [y[0] - x0[0], y[1] - x0[1]];
        let xi = [(a[1][1] * r[0] - a[0][1] * r[1]) / det, (-a[1][0] * r[0] + a[0][0] * r[1]) / det];
        self.map(e, xi).x
    }

    /// Outward unit normal of element e on its local edge at parameter s.
    pub fn edge_normal(&self, e: usize, local_edge: usize, s: f64) -> (Point, f64) {
        let a = REF_VERTICES[(local_edge + 1) % 3];
        let b = REF_VERTICES[(local_edge + 2) % 3];
        let tref = [b[0] - a[0], b[1] - a[1]];
        let m = self.map(e, edge_ref_point(local_edge, s));
        let t = [
            m.jac[0][0] * tref[0] + m.jac[0][1] * tref[1],
            m.jac[1][0] * tref[0] + m.jac[1][1] * tref[1],
        ];
        let len = t[0].hypot(t[1]);
        // counterclockwise elements: outward normal is the tangent rotated clockwise
        ([t[1] / len, -t[0] / len], len)
    }

    /// Parameters on the two elements' local edges for facet parameter sigma.
    pub fn facet_local_params(&self, f: &InteriorFacet, sigma: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for side in 0..2 {
            let el = &self.elements[f.elements[side]];
            let a = el.vertices[(f.local_edges[side] + 1) % 3];
            out[side] = if a == f.vertices[0] { sigma } else { 1.0 - sigma };
        }
        out
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_elem.iter().cloned().fold(0.0, f64::max)
    }

    pub fn area(&self) -> f64 {
        let rule = crate::discretization::quadrature::triangle_unchecked(12);
        (0..self.elements.len())
            .map(|e| {
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * self.map(e, *p).det())
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialises")
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn curved_info(
    vertex_curve: &[Option<(usize, f64)>],
    a: usize,
    b: usize,
) -> Option<(usize, f64, f64)> {
    match (vertex_curve[a], vertex_curve[b]) {
        (Some((ca, ta)), Some((cb, tb))) if ca == cb => {
            let d = wrap_angle(tb - ta);
            if d.abs() <= 0.5 * PI {
                Some((ca, ta, d))
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Structured mesh of the star-shaped domain bounded by `curve`, refined
/// `level` times. The level-0 mesh has a centre vertex, six vertices on an
/// inner ring (the interface if the partition has one) and twelve on Gamma.
pub fn build_disk_mesh(
    curve: &BoundaryCurve,
    refinement_level: usize,
    partition: &SubdomainPartition,
) -> Result<CurvedMesh, GeometryError> {
    if !curve.is_star_shaped() {
        return Err(GeometryError::NotStarShaped);
    }
    if partition.interfaces.len() > 1 {
        return Err(GeometryError::Partition("at most one interface is supported".into()));
    }
    partition.validate(curve, 1e-8)?;
    let rho1 = match partition.interfaces.first() {
        Some(&r) if (0.3..=0.7).contains(&r) => r,
        Some(&r) => return Err(GeometryError::Partition(format!("interface at rho = {r}"))),
        None => 0.5,
    };
    let has_interface = !partition.interfaces.is_empty();
    let mut curves = vec![*curve];
    if has_interface {
        curves.push(curve.scaled(rho1));
    }
    let inner_curve = curve.scaled(rho1);
    let mut vertices = vec![curve.center];
    let mut vertex_curve = vec![None];
    for j in 0..6 {
        let t = TAU * j as f64 / 6.0;
        vertices.push(inner_curve.position(t));
        vertex_curve.push(if has_interface { Some((1, t)) } else { None });
    }
    for j in 0..12 {
        let t = TAU * j as f64 / 12.0;
        vertices.push(curve.position(t));
        vertex_curve.push(Some((0, t)));
    }
    let inner = |j: usize| 1 + (j % 6);
    let outer = |j: usize| 7 + (j % 12);
    let tag_in = 0;
    let tag_out = if has_interface { 1 } else { 0 };
    let mut tris: Vec<([usize; 3], usize)> = Vec::new();
    for j in 0..6 {
        tris.push(([0, inner(j), inner(j + 1)], tag_in));
        tris.push(([inner(j), outer(2 * j), outer(2 * j + 1)], tag_out));
        tris.push(([inner(j), outer(2 * j + 1), inner(j + 1)], tag_out));
        tris.push(([inner(j + 1), outer(2 * j + 1), outer(2 * j + 2)], tag_out));
    }
    for _ in 0..refinement_level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        for (v, tag) in &tris {
            let mut m = [0usize; 3];
            for e in 0..3 {
                let a = v[(e + 1) % 3];
                let b = v[(e + 2) % 3];
                let key = edge_key(a, b);
                m[e] = *mid.entry(key).or_insert_with(|| {
                    let (p, vc) = match curved_info(&vertex_curve, key.0, key.1) {
                        Some((c, ta, d)) => {
                            let t = (ta + 0.5 * d).rem_euclid(TAU);
                            (curves[c].position(t), Some((c, t)))
                        }
                        None => {
                            let (pa, pb) = (vertices[key.0], vertices[key.1]);
                            ([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])], None)
                        }
                    };
                    vertices.push(p);
                    vertex_curve.push(vc);
                    vertices.len() - 1
                });
            }
            next.push(([v[0], m[2], m[1]], *tag));
            next.push(([m[2], v[1], m[0]], *tag));
            next.push(([m[1], m[0], v[2]], *tag));
            next.push(([m[0], m[1], m[2]], *tag));
        }
        tris = next;
    }
    let elements: Vec<Element> = tris
        .iter()
        .map(|(v, tag)| {
            let mut curved = None;
            for e in 0..3 {
                if let Some((c, ta, d)) = curved_info(&vertex_curve, v[(e + 1) % 3], v[(e + 2) % 3]) {
                    curved = Some(CurvedEdge { local_edge: e, curve: c, t_a: ta, delta: d });
                }
            }
            Element { vertices: *v, subdomain: *tag, curved }
        })
        .collect();
    let mut mesh = CurvedMesh {
        vertices,
        vertex_curve,
        elements,
        curves,
        interior_facets: vec![],
        boundary_facets: vec![],
        h_elem: vec![],
        level: refinement_level,
        partition: partition.clone(),
    };
    mesh.h_elem = (0..mesh.elements.len()).map(|e| sampled_element_diameter(&mesh, e)).collect();
    let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (ei, el) in mesh.elements.iter().enumerate() {
        for e in 0..3 {
            let key = edge_key(el.vertices[(e + 1) % 3], el.vertices[(e + 2) % 3]);
            edges.entry(key).or_default().push((ei, e));
        }
    }
    let mut keys: Vec<_> = edges.keys().copied().collect();
    keys.sort();
    for key in keys {
        let list = &edges[&key];
        match list.len() {
            2 => {
                let (mut a, mut b) = (list[0], list[1]);
                if a.0 > b.0 {
                    std::mem::swap(&mut a, &mut b);
                }
                mesh.interior_facets.push(InteriorFacet {
                    elements: [a.0, b.0],
                    local_edges: [a.1, b.1],
                    vertices: [key.0, key.1],
                    h: mesh.h_elem[a.0].min(mesh.h_elem[b.0]),
                });
            }
            1 => {
                let (ei, e) = list[0];
                let ce = mesh.elements[ei].curved.filter(|c| c.local_edge == e && c.curve == 0);
                let ce = ce.ok_or_else(|| GeometryError::Partition("boundary edge off Gamma".into()))?;
                let (t0, t1) = if ce.delta > 0.0 {
                    (ce.t_a, ce.t_a + ce.delta)
                } else {
                    (ce.t_a + ce.delta, ce.t_a)
                };
                let t0w = t0.rem_euclid(TAU);
                mesh.boundary_facets.push(BoundaryFacet {
                    element: ei,
                    local_edge: e,
                    t_start: t0w,
                    t_end: t0w + (t1 - t0),
                    h: mesh.h_elem[ei],
                });
            }
            _ => return Err(GeometryError::Partition("non-manifold edge".into())),
        }
    }
    mesh.boundary_facets.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    Ok(mesh)
}

fn sampled_element_diameter(mesh: &CurvedMesh, e: usize) -> f64 {
    let mut pts = Vec::with_capacity(24);
    for edge in 0..3 {
        for i in 0..8 {
            pts.push(mesh.map(e, edge_ref_point(edge, i as f64 / 8.0)).x);
        }
    }
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max(dist(pts[i], pts[j]));
        }
    }
    d
}

/// One panel of the boundary mesh: Gamma restricted to [t0, t1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub t0: f64,
    pub t1: f64,
    pub element: usize,
    pub local_edge: usize,
    pub h: f64,
}

impl Panel {
    pub fn theta(&self, s: f64) -> f64 {
        self.t0 + s * (self.t1 - self.t0)
    }

    pub fn dtheta(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// The mesh Gamma_h induced on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMesh {
    pub curve: BoundaryCurve,
    pub panels: Vec<Panel>,
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    /// Point, unit normal and ds/ds_ref (jacobian w.r.t. the panel parameter).
    pub fn eval(&self, panel: usize, s: f64) -> (Point, Point, f64) {
        let p = &self.panels[panel];
        let t = p.theta(s);
        (self.curve.position(t), self.curve.normal(t), self.curve.speed(t) * p.dtheta())
    }

    pub fn length(&self, panel: usize) -> f64 {
        let g = crate::discretization::quadrature::gauss_unchecked(12).to_unit();
        g.integrate(|s| self.eval(panel, s).2)
    }
}

pub fn induced_boundary_mesh(mesh: &CurvedMesh) -> BoundaryMesh {
    BoundaryMesh {
        curve: mesh.curves[0],
        panels: mesh
            .boundary_facets
            .iter()
            .map(|f| {
                // element edge orientation relative to increasing t
                Panel { t0: f.t_start, t1: f.t_end, element: f.element, local_edge: f.local_edge, h: f.h }
            })
            .collect(),
    }
}

impl CurvedMesh {
    /// Local edge parameter on the adjacent element for boundary parameter s
    /// of panel p.
    pub fn panel_to_edge_param(&self, p: &Panel, s: f64) -> f64 {
        let ce = self.elements[p.element].curved.expect("boundary element is curved");
        if ce.delta > 0.0 {
            s
        } else {
            1.0 - s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> SubdomainPartition {
        SubdomainPartition::trivial(Coefficients::isotropic(1.0))
    }

    #[test]
    fn circle_basics() {
        let c = make_circle(1.0, [0.5, -0.25]).unwrap();
        assert_eq!(c.position(0.0), [1.5, -0.25]);
        let c8 = make_circle(0.8, [0.0, 0.0]).unwrap();
        for i in 0..16 {
            let t = TAU * i as f64 / 16.0;
            assert!((c8.curvature(t) - 1.25).abs() < 1e-13);
            let n = c8.normal(t);
            assert!((n[0] - t.cos()).abs() < 1e-15 && (n[1] - t.sin()).abs() < 1e-15);
        }
        let g = crate::discretization::quadrature::gauss_unchecked(64);
        let len = g.integrate(|x| c8.speed(PI * (x + 1.0)) * PI);
        assert!((len - TAU * 0.8).abs() < 1e-12);
        assert!(make_circle(0.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn kite_basics() {
        let k = make_kite();
        assert!(dist(k.position(0.0), k.position(TAU - 1e-12)) <= 1e-9);
        assert!(k.sampled_diameter(1024) < 1.0);
        assert!(k.is_star_shaped());
        for i in 0..32 {
            let t = TAU * i as f64 / 32.0;
            let n = k.normal(t);
            let d = k.d1(t);
            assert!((n[0] * d[0] + n[1] * d[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn star_coordinates_roundtrip() {
        let k = make_kite();
        for i in 0..50 {
            let t = 0.1 + 0.12 * i as f64;
            let x = k.scaled(0.37).position(t);
            let (rho, tt) = k.star_coordinates(x);
            assert!((rho - 0.37).abs() < 1e-12 && wrap_angle(tt - t).abs() < 1e-12);
        }
    }

    #[test]
    fn mesh_counts_and_area() {
        let c = make_circle(0.4, [0.0, 0.0]).unwrap();
        for level in 0..3 {
            let m = build_disk_mesh(&c, level, &unit()).unwrap();
            assert_eq!(m.element_count(), 24 * 4usize.pow(level as u32));
            assert_eq!(m.boundary_facets.len(), 12 << level);
            let a = m.area();
            assert!((a - PI * 0.16).abs() < 1e-12, "{level} {a} {}", a - PI * 0.16);
        }
    }

    #[test]
    fn interface_out_of_range() {
        let c = make_circle(0.4, [0.0, 0.0]).unwrap();
        let p = SubdomainPartition {
            interfaces: vec![0.9],
            coefficients: vec![Coefficients::isotropic(2.0), Coefficients::isotropic(1.0)],
            collar: None,
        };
        assert!(build_disk_mesh(&c, 0, &p).is_err());
    }

    #[test]
    fn facet_traces_agree() {
        let c = make_kite();
        let p = SubdomainPartition {
            interfaces: vec![0.5],
            coefficients: vec![Coefficients::isotropic(1.5), Coefficients::isotropic(1.0)],
            collar: None,
        };
        let g = crate::discretization::quadrature::gauss_unchecked(5).to_unit();
        for level in 0..3 {
            let m = build_disk_mesh(&c, level, &p).unwrap();
            for f in &m.interior_facets {
                for &s in &g.points {
                    let [s0, s1] = m.facet_local_params(f, s);
                    let x0 = m.map(f.elements[0], edge_ref_point(f.local_edges[0], s0)).x;
                    let x1 = m.map(f.elements[1], edge_ref_point(f.local_edges[1], s1)).x;
                    assert!(dist(x0, x1) < 1e-12);
                    let (n0, _) = m.edge_normal(f.elements[0], f.local_edges[0], s0);
                    let (n1, _) = m.edge_normal(f.elements[1], f.local_edges[1], s1);
                    assert!((n0[0] + n1[0]).abs() < 1e-12 && (n0[1] + n1[1]).abs() < 1e-12);
                }
                assert_eq!(f.h, m.h_elem[f.elements[0]].min(m.h_elem[f.elements[1]]));
            }
            let rule = crate::discretization::quadrature::triangle_unchecked(10);
            for (e, el) in m.elements.iter().enumerate() {
                let mut tags = vec![];
                for xi in &rule.points {
                    let me = m.map(e, *xi);
                    assert!(me.det() > 0.0);
                    tags.push(p.classify(&c, me.x));
                }
                assert!(tags.iter().all(|&t| t == el.subdomain), "element {e}");
            }
        }
    }

    #[test]
    fn refinement_family() {
        let c = make_circle(0.4, [0.0, 0.0]).unwrap();
        let meshes: Vec<_> = (0..4).map(|l| build_disk_mesh(&c, l, &unit()).unwrap()).collect();
        for w in meshes.windows(2) {
            assert_eq!(w[1].element_count(), 4 * w[0].element_count());
            let r = w[1].h_max() / w[0].h_max();
            assert!((0.45..=0.55).contains(&r), "{r}");
        }
        // shape regularity of the element maps
        let rule = crate::discretization::quadrature::triangle_unchecked(6);
        for m in &meshes {
            for e in 0..m.element_count() {
                let h = m.h_elem[e];
                for xi in &rule.points {
                    let j = m.map(e, *xi).jac;
                    let it = m.map(e, *xi).inv_t();
                    let nj = j.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                    let ni = it.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                    assert!(nj / h < 2.0 && ni * h < 4.0, "{nj} {ni} {h}");
                }
            }
        }
    }

    #[test]
    fn boundary_mesh_covers_gamma() {
        let c = make_kite();
        let m = build_disk_mesh(&c, 2, &unit()).unwrap();
        let b = induced_boundary_mesh(&m);
        assert_eq!(b.len(), m.boundary_facets.len());
        assert!(b.panels[0].t0.abs() < 1e-12);
        for w in b.panels.windows(2) {
            assert!((w[1].t0 - w[0].t1).abs() < 1e-12);
        }
        assert!((b.panels.last().unwrap().t1 - TAU).abs() < 1e-12);
        for (i, p) in b.panels.iter().enumerate() {
            for s in [0.0, 0.3, 1.0] {
                let x = b.eval(i, s).0;
                let y = m.map(p.element, edge_ref_point(p.local_edge, m.panel_to_edge_param(p, s))).x;
                assert!(dist(x, y) < 1e-12);
            }
        }
    }

    #[test]
    fn mesh_json_dump() {
        let c = make_circle(0.4, [0.0, 0.0]).unwrap();
        let m = build_disk_mesh(&c, 0, &unit()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["elements"].as_array().unwrap().len(), 24);
    }
}
