use fembem::geometry::{make_circle, Coefficients, Point, ScalarField, SubdomainPartition};
use fembem::reference::{
    manufactured_solution, plane_wave, plane_wave_data, solve_disk_series, solve_disk_series_with, ReferenceError,
    SmoothField,
};
use fembem::specfun::bessel_j_seq;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

const I: C = C::new(0.0, 1.0);

#[test]
fn no_contrast_gives_no_scattering() {
    let s = solve_disk_series(4.0, 0.4, 1.0, [0.6, 0.8]).unwrap();
    assert!(s.d.iter().all(|d| d.norm() <= 1e-13));
    for x in [[0.1, 0.2], [0.0, 0.0], [0.7, -0.3]] {
        let (v, g) = s.eval(x);
        let (w, gw) = plane_wave(4.0, [0.6, 0.8], x);
        assert!((v - w).norm() < 1e-12 && (g[0] - gw[0]).norm() < 1e-11 && (g[1] - gw[1]).norm() < 1e-11);
    }
}

#[test]
fn matching_and_interface_continuity() {
    let s = solve_disk_series(4.0, 0.4, 1.5, [1.0, 0.0]).unwrap();
    assert!(s.matching_residual <= 1e-12);
    for j in 0..64 {
        let t = TAU * j as f64 / 64.0;
        let (ui, di) = s.boundary_cauchy(t, true);
        let (ue, de) = s.boundary_cauchy(t, false);
        assert!((ui - ue).norm() <= 1e-11 && (di - de).norm() <= 1e-10);
    }
}

#[test]
fn lossless_flux_balance() {
    let s = solve_disk_series(6.0, 0.4, 2.0, [0.0, 1.0]).unwrap();
    for r in [0.4, 0.8] {
        let n = 256;
        let mut flux = 0.0;
        for j in 0..n {
            let t = TAU * j as f64 / n as f64;
            let x = [r * t.cos(), r * t.sin()];
            let (v, g) = if r > 0.4 { s.eval(x) } else { (s.boundary_cauchy(t, false).0, s.eval(x).1) };
            let dr = g[0] * t.cos() + g[1] * t.sin();
            flux += (v.conj() * dr).im * r * TAU / n as f64;
        }
        assert!(flux.abs() <= 1e-10, "flux {flux} at r = {r}");
    }
}

#[test]
fn interior_pde_residual() {
    let (k, n0) = (4.0, 1.5);
    let s = solve_disk_series(k, 0.4, n0, [0.8, -0.6]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-3;
    for _ in 0..50 {
        let r = rng.random_range(0.0..0.38);
        let t = rng.random_range(0.0..TAU);
        let x = [r * t.cos(), r * t.sin()];
        let u = |dx: f64, dy: f64| s.eval_interior([x[0] + dx, x[1] + dy]);
        let d2 = |f: &dyn Fn(f64) -> C| (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h);
        let lap = d2(&|e| u(e, 0.0)) + d2(&|e| u(0.0, e));
        let res = -lap - (k * n0).powi(2) * u(0.0, 0.0);
        assert!(res.norm() <= 1e-6 * (k * n0).powi(2) * u(0.0, 0.0).norm().max(1e-3), "residual {res}");
    }
}

#[test]
fn truncation_is_converged() {
    let s = solve_disk_series(8.0, 0.4, 1.5, [1.0, 1.0]).unwrap();
    let s2 = solve_disk_series_with(8.0, 0.4, [0.0, 0.0], 1.5, [1.0, 1.0], Some(s.n_max + 10)).unwrap();
    for x in [[0.1, 0.1], [0.39, 0.0], [-0.2, 0.3], [0.9, 0.2]] {
        let (a, b) = (s.eval(x).0, s2.eval(x).0);
        assert!((a - b).norm() <= 1e-12 * b.norm(), "{x:?}: {a} vs {b}");
    }
}

#[test]
fn out_of_range_parameters() {
    assert!(matches!(solve_disk_series(200.0, 0.4, 1.5, [1.0, 0.0]), Err(ReferenceError::Domain(_))));
    assert!(matches!(solve_disk_series(4.0, 0.4, -1.0, [1.0, 0.0]), Err(ReferenceError::Domain(_))));
}

struct Quadratic;

impl SmoothField for Quadratic {
    fn eval(&self, x: Point) -> (C, [C; 2], [[C; 2]; 2]) {
        let z = C::new(0.0, 0.0);
        (C::new(x[0] * x[0], 0.0), [C::new(2.0 * x[0], 0.0), z], [[C::new(2.0, 0.0), z], [z, z]])
    }
}

struct Wave(f64, Point);

impl SmoothField for Wave {
    fn eval(&self, x: Point) -> (C, [C; 2], [[C; 2]; 2]) {
        let (v, g) = plane_wave(self.0, self.1, x);
        let k = self.0;
        let d = self.1;
        let hs = [[-k * k * d[0] * d[0] * v, -k * k * d[0] * d[1] * v], [-k * k * d[1] * d[0] * v, -k * k * d[1] * d[1] * v]];
        (v, g, hs)
    }
}

/// c J_0(kappa r)
struct RadialJ0 {
    c: C,
    kappa: f64,
}

impl SmoothField for RadialJ0 {
    fn eval(&self, x: Point) -> (C, [C; 2], [[C; 2]; 2]) {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let z = self.kappa * r;
        let j = bessel_j_seq(1, z);
        let fp = -self.kappa * j[1];
        let j1_over_r = if r > 0.0 { j[1] / r } else { 0.5 * self.kappa };
        let fpp = -self.kappa * (self.kappa * j[0] - j1_over_r);
        let e = if r > 0.0 { [x[0] / r, x[1] / r] } else { [1.0, 0.0] };
        let fp_r = -self.kappa * j1_over_r;
        let mut hs = [[C::new(0.0, 0.0); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let delta = if a == b { 1.0 } else { 0.0 };
                hs[a][b] = self.c * (fpp * e[a] * e[b] + fp_r * (delta - e[a] * e[b]));
            }
        }
        (self.c * j[0], [self.c * fp * e[0], self.c * fp * e[1]], hs)
    }
}

#[test]
fn quadratic_source_term() {
    let nu = [[2.0, 0.3], [0.3, 1.0]];
    let part = SubdomainPartition::trivial(Coefficients { nu, n: ScalarField::Constant(1.3) });
    let curve = make_circle(0.4, [0.0, 0.0]).unwrap();
    let k = 3.0;
    let m = manufactured_solution(&Quadratic, k, &part, &curve, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x = [rng.random_range(-0.28..0.28), rng.random_range(-0.28..0.28)];
        let want = -2.0 * nu[0][0] - (k * 1.3f64).powi(2) * x[0] * x[0];
        assert!((m.f(x) - C::new(want, 0.0)).norm() <= 1e-12);
    }
}

#[test]
fn free_space_plane_wave_reproduces_incident_data() {
    let part = SubdomainPartition::trivial(Coefficients::isotropic(1.0));
    let curve = make_circle(0.4, [0.0, 0.0]).unwrap();
    let (k, d) = (5.0, [0.6, -0.8]);
    let wave = Wave(k, d);
    let m = manufactured_solution(&wave, k, &part, &curve, 48).unwrap();
    let (g, h) = plane_wave_data(k, d, &curve);
    for t in [0.0, 1.0, 2.5, 4.0] {
        assert!(m.f(curve.position(t)).norm() <= 1e-12 * k * k);
        assert!((m.g(t) - g(t)).norm() <= 1e-9, "g at {t}");
        assert!((m.h(t) - h(t)).norm() <= 1e-9 * k, "h at {t}");
    }
}

#[test]
fn radial_mode_matches_the_series() {
    let (k, a, n0) = (4.0, 0.4, 1.5);
    let s = solve_disk_series(k, a, n0, [1.0, 0.0]).unwrap();
    let c0 = s.c[s.n_max];
    let a0 = s.a[s.n_max];
    let part = SubdomainPartition::trivial(Coefficients::isotropic(n0));
    let curve = make_circle(a, [0.0, 0.0]).unwrap();
    let field = RadialJ0 { c: c0, kappa: k * n0 };
    let m = manufactured_solution(&field, k, &part, &curve, 16).unwrap();
    let j = bessel_j_seq(1, k * a);
    let g_want = a0 * j[0];
    let h_want = -a0 * (-k * j[1] + I * k * j[0]);
    for t in [0.3, 2.0] {
        assert!((m.g(t) - g_want).norm() <= 1e-9 * g_want.norm());
        assert!((m.h(t) - h_want).norm() <= 1e-9 * h_want.norm());
    }
}
