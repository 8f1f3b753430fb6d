mod common;

use common::bigbessel::{jy_f64, Consts};
use fembem::specfun::{
    bessel_j, bessel_j_seq, bessel_y, bessel_y_seq, green_kernel, hankel1, kernel_log_split, radial_green,
};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// (n, z, J_n(z), Y_n(z)) from the fixed-point series in tests/common/bigbessel.rs.
const GOLDEN: &[(u32, f64, f64, f64)] = &[
    (0, 5.99, 1.47868620168148001692e-1, -2.89931800644567028158e-1),
    (0, 6.01, 1.53402218596012857033e-1, -2.86431664864850221708e-1),
    (0, 24.99, 9.50082369675481208660e-2, -1.28231549886451051679e-1),
    (0, 25.01, 9.75152015931957105721e-2, -1.26254985125168389670e-1),
    (0, 80.0, -6.97421655122100192514e-2, -5.56203390897700017392e-2),
    (0, 250.0, -2.60533734252042341317e-2, -4.32168454403662680163e-2),
    (1, 0.05, 2.49921883137597007629e-2, -1.27898551711749703941e1),
    (1, 5.99, -2.78639603186253026479e-1, -1.72409450578502654317e-1),
    (1, 6.01, -2.74704492725032722866e-1, -1.77589906209717041108e-1),
    (1, 24.99, -1.26356985007805205923e-1, -9.75918421020189608139e-2),
    (1, 25.01, -1.24331404403968087680e-1, -1.00057727185679679049e-1),
    (1, 80.0, -5.60572966757125756843e-2, 6.93959137845880508211e-2),
    (1, 250.0, -4.32690384103307512653e-2, 2.59669921854845837939e-2),
    (2, 0.05, 3.12434900919384447686e-4, -5.09614895846181525485e2),
    (2, 5.99, -2.40903546106796734305e-1, 2.32366040852078653556e-1),
    (2, 6.01, -2.44818023163411446763e-1, 2.27333526359120768889e-1),
    (2, 24.99, -1.05120840809709403807e-1, 1.20421078329666836337e-1),
    (2, 25.01, -1.07457736931377875744e-1, 1.18253567517357133232e-1),
    (2, 80.0, 6.83407330953172131860e-2, 5.73552369343846984995e-2),
    (2, 250.0, 2.57072211179215880106e-2, 4.34245813778501438263e-2),
    (5, 0.05, 8.13717316067309661232e-11, -7.82400620015300273895e8),
    (5, 5.99, 3.61522066740975867027e-1, -1.99686145366404693702e-1),
    (5, 6.01, 3.62640087604477689975e-1, -1.94433986386657209344e-1),
    (5, 24.99, -6.74600818615533476263e-2, -1.46434525370518792142e-1),
    (5, 25.01, -6.45501542046808401976e-2, -1.47667096887732218757e-1),
    (5, 80.0, -6.58623491400315702604e-2, 6.02936671048963229724e-2),
    (5, 250.0, -4.44694385121587529297e-2, 2.38632032306052947745e-2),
    (12, 0.05, 1.24429186105917701198e-28, -2.13181943489243010514e26),
    (12, 5.99, 5.35651544924231007988e-4, -5.72831384588584100470e1),
    (12, 6.01, 5.54804930014039300069e-4, -5.53689718471991909610e1),
    (12, 24.99, -7.15321793685286949627e-2, 1.54601157471008832101e-1),
    (12, 25.01, -7.41973342840986510582e-2, 1.53241857624998312204e-1),
    (12, 80.0, 3.63102625776144031892e-4, -8.97134114755178263545e-2),
    (12, 250.0, -1.27099786837789746619e-2, -4.88658262259224970836e-2),
    (40, 0.05, 1.01379152979412404494e-112, -7.84949680640566375941e109),
    (40, 5.99, 1.11934357699929378587e-29, -7.19043183682147114623e26),
    (40, 6.01, 1.27711641536911803765e-29, -6.30262174466582261115e26),
    (40, 24.99, 1.65358451536661913415e-6, -6.16695074657747227320e3),
    (40, 25.01, 1.69582310481816721348e-6, -6.01645011572329804039e3),
    (40, 80.0, 9.34147763114311600885e-3, 9.53976031831722665055e-2),
    (40, 250.0, 2.33304239381520762964e-2, 4.51153928575551907421e-2),
];

const GRID_ORDERS: [u32; 6] = [0, 1, 2, 5, 12, 40];
const GRID_ARGS: [f64; 12] = [0.05, 0.7, 3.3, 5.99, 6.01, 8.5, 12.0, 24.99, 25.01, 31.4, 80.0, 250.0];

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn oracle_reproduces_frozen_table() {
    let c = Consts::new();
    for &(n, z, j, y) in GOLDEN {
        let (oj, oy) = jy_f64(&c, n, z);
        assert!(rel(oj, j) <= 1e-15 && rel(oy, y) <= 1e-15, "n={n} z={z}");
    }
}

#[test]
fn golden_values() {
    for &(n, z, j, y) in GOLDEN {
        let h = hankel1(n, z).unwrap();
        let err = (h - C::new(j, y)).norm() / j.hypot(y);
        assert!(err <= 1e-11, "H_{n}({z}): {err:e}");
        assert!(rel(h.re, j) <= 1e-11, "J_{n}({z})");
        assert!(rel(h.im, y) <= 1e-11, "Y_{n}({z})");
    }
}

#[test]
fn oracle_grid() {
    let c = Consts::new();
    for n in GRID_ORDERS {
        for z in GRID_ARGS {
            let (j, y) = jy_f64(&c, n, z);
            assert!(rel(bessel_j(n, z).unwrap(), j) <= 1e-11, "J_{n}({z})");
            assert!(rel(bessel_y(n, z).unwrap(), y) <= 1e-11, "Y_{n}({z})");
        }
    }
}

#[test]
fn sequences_match_single_orders() {
    for z in [0.3, 4.0, 9.0, 40.0] {
        let js = bessel_j_seq(30, z);
        let ys = bessel_y_seq(30, z);
        for n in 0..=30u32 {
            let j = bessel_j(n, z).unwrap();
            assert!((js[n as usize] - j).abs() <= 1e-14 * j.abs().max(1e-300) + 1e-300, "J_{n}({z})");
            assert!(rel(ys[n as usize], bessel_y(n, z).unwrap()) <= 1e-13);
        }
    }
}

#[test]
fn wronskian() {
    for z in [0.01, 0.5, 2.0, 5.999, 6.0, 7.3, 13.0, 24.9, 25.1, 60.0, 500.0, 4000.0] {
        for n in [0u32, 1, 3, 10, 25] {
            let w = bessel_j(n + 1, z).unwrap() * bessel_y(n, z).unwrap()
                - bessel_j(n, z).unwrap() * bessel_y(n + 1, z).unwrap();
            let exact = 2.0 / (PI * z);
            assert!(rel(w, exact) <= 1e-11, "n={n} z={z}: {w:e}");
        }
    }
}

#[test]
fn radial_derivatives_against_oracle() {
    let c = Consts::new();
    let i4 = C::new(0.0, 0.25);
    for (k, r) in [(2.0, 0.05), (4.0, 0.4), (16.0, 0.8), (8.0, 3.125)] {
        let z = k * r;
        let (j0, y0) = jy_f64(&c, 0, z);
        let (j1, y1) = jy_f64(&c, 1, z);
        let h0 = C::new(j0, y0);
        let h1 = C::new(j1, y1);
        let [g, dg, d2g] = radial_green(k, r);
        let g_ref = i4 * h0;
        let dg_ref = -i4 * k * h1;
        // H1' = H0 - H1 / z
        let d2g_ref = -i4 * k * k * (h0 - h1 / z);
        assert!((g - g_ref).norm() <= 1e-11 * g_ref.norm());
        assert!((dg - dg_ref).norm() <= 1e-11 * dg_ref.norm());
        assert!((d2g - d2g_ref).norm() <= 1e-11 * d2g_ref.norm());
    }
}

#[test]
fn kernel_gradient_against_differences() {
    let x = [0.1, -0.2];
    for k in [0.0, 1.0, 4.0, 30.0] {
        for y in [[0.35, 0.1], [-0.5, 0.4], [0.12, -0.19]] {
            let e = green_kernel(k, x, y).unwrap();
            let step = 1e-5;
            for a in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[a] += step;
                ym[a] -= step;
                let fd = (green_kernel(k, x, yp).unwrap().value - green_kernel(k, x, ym).unwrap().value) / (2.0 * step);
                let scale = e.grad_y[a].norm().max(e.value.norm());
                assert!((fd - e.grad_y[a]).norm() <= 1e-6 * scale, "k={k} y={y:?}");
            }
        }
    }
}

#[test]
fn log_split_reassembles_kernel() {
    let x = [0.0, 0.0];
    for k in [0.0, 2.0, 9.0, 40.0] {
        for r in [1e-6, 0.01, 0.3, 1.0] {
            let y = [r * 0.6, r * 0.8];
            let (a, b) = kernel_log_split(k, x, y).unwrap();
            let g = green_kernel(k, x, y).unwrap().value;
            assert!((a * r.ln() + b - g).norm() <= 1e-12 * g.norm().max(1.0));
        }
    }
}

#[test]
fn domain_errors() {
    assert!(bessel_y(0, 0.0).is_err());
    assert!(bessel_j(0, -1.0).is_err());
    assert!(bessel_j(0, f64::NAN).is_err());
    assert!(green_kernel(1.0, [0.0, 0.0], [0.0, 0.0]).is_err());
    assert!(green_kernel(-1.0, [0.0, 0.0], [1.0, 0.0]).is_err());
}
