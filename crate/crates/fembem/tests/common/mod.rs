#![allow(dead_code)]

pub mod bigbessel;
use fembem::geometry::{build_disk_mesh, induced_boundary_mesh, make_circle, BoundaryMesh, Coefficients, CurvedMesh, SubdomainPartition};
use fembem::specfun::{bessel_j_seq, bessel_y_seq};
use num_complex::Complex64 as C;

pub fn disk(radius: f64, level: usize) -> (CurvedMesh, BoundaryMesh) {
    let c = make_circle(radius, [0.0, 0.0]).unwrap();
    let m = build_disk_mesh(&c, level, &SubdomainPartition::trivial(Coefficients::isotropic(1.0))).unwrap();
    let g = induced_boundary_mesh(&m);
    (m, g)
}

/// J_n(z), J_n'(z), H_n(z), H_n'(z) for n >= 0.
pub fn bessel_pair(n: usize, z: f64) -> (f64, f64, C, C) {
    let j = bessel_j_seq(n + 1, z);
    let y = bessel_y_seq(n + 1, z);
    let nf = n as f64;
    let jp = -j[n + 1] + nf / z * j[n];
    let yp = -y[n + 1] + nf / z * y[n];
    (j[n], jp, C::new(j[n], y[n]), C::new(jp, yp))
}

/// Circle symbols (V, K, K', W) of mode n at wavenumber k on radius R.
pub fn circle_symbols(k: f64, radius: f64, n: i64) -> [C; 4] {
    let m = n.unsigned_abs() as usize;
    if k == 0.0 {
        let v = if m == 0 { -radius * radius.ln() } else { radius / (2.0 * m as f64) };
        let kk = if m == 0 { -0.5 } else { 0.0 };
        let w = m as f64 / (2.0 * radius);
        return [C::new(v, 0.0), C::new(kk, 0.0), C::new(kk, 0.0), C::new(w, 0.0)];
    }
    let z = k * radius;
    let (j, jp, h, hp) = bessel_pair(m, z);
    let i = C::new(0.0, 1.0);
    let pi = std::f64::consts::PI;
    let v = i * pi * radius / 2.0 * j * h;
    let kk = 0.5 + i * pi * z / 2.0 * j * hp;
    let w = -i * pi * k * k * radius / 2.0 * jp * hp;
    [v, kk, kk, w]
}
