mod common;

use common::{circle_symbols, disk};
use fembem::bem::{
    assemble_bk_apk, assemble_boundary_operator, assemble_operators, calderon_residual, dump_matrix, evaluate_potential,
    l2_project, OperatorTag, PotentialField, PotentialKind, QuadConfig, TraceBasis, TraceSpace,
};
use fembem::discretization::{SpaceTriple, VolumeKind};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bilinear(m: &faer::Mat<C>, a: &[C], b: &[C]) -> C {
    let mut s = C::new(0.0, 0.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            s += b[i] * m[(i, j)] * a[j];
        }
    }
    s
}

fn mode(n: i64) -> impl Fn(f64) -> C {
    move |t| C::from_polar(1.0, n as f64 * t)
}

#[test]
fn v0_of_constant() {
    let r = 0.4;
    let (_, g) = disk(r, 2);
    let b = TraceBasis::new(2, g.len());
    let ops = assemble_operators(0.0, &g, &b, &QuadConfig::default()).unwrap();
    let one = l2_project(&g, &b, TraceSpace::W, |_| C::new(1.0, 0.0)).unwrap();
    let v = ops.block(OperatorTag::V, TraceSpace::W, TraceSpace::W).unwrap();
    let val = bilinear(&v, &one, &one) / (std::f64::consts::TAU * r);
    assert!((val.re - 0.366_516_292_749_662_6).abs() < 1e-10, "{val}");
    let onez = l2_project(&g, &b, TraceSpace::Z, |_| C::new(1.0, 0.0)).unwrap();
    let wz: Vec<C> = (0..ops.w.nrows()).map(|i| (0..ops.w.ncols()).map(|j| ops.w[(i, j)] * onez[j]).sum()).collect();
    assert!(wz.iter().map(|c| c.norm()).fold(0.0, f64::max) < 1e-9);
}

#[test]
fn circle_symbols_all_operators() {
    let r = 0.4;
    let (_, g) = disk(r, 2);
    let b = TraceBasis::new(4, g.len());
    for k in [0.0, 2.0, 6.0] {
        let ops = assemble_operators(k, &g, &b, &QuadConfig::default()).unwrap();
        for n in [0i64, 1, 3, 7] {
            let sym = circle_symbols(k, r, n);
            let len = std::f64::consts::TAU * r;
            let (w, z) = (TraceSpace::W, TraceSpace::Z);
            let pw = l2_project(&g, &b, w, mode(n)).unwrap();
            let qw = l2_project(&g, &b, w, mode(-n)).unwrap();
            let pz = l2_project(&g, &b, z, mode(n)).unwrap();
            let qz = l2_project(&g, &b, z, mode(-n)).unwrap();
            let v = bilinear(&ops.block(OperatorTag::V, w, w).unwrap(), &pw, &qw) / len;
            let kk = bilinear(&ops.block(OperatorTag::K, w, z).unwrap(), &pz, &qw) / len;
            let kp = bilinear(&ops.block(OperatorTag::Kp, z, w).unwrap(), &pw, &qz) / len;
            let ww = bilinear(&ops.w, &pz, &qz) / len;
            for (name, got, want) in [("V", v, sym[0]), ("K", kk, sym[1]), ("K'", kp, sym[2]), ("W", ww, sym[3])] {
                let err = (got - want).norm() / want.norm().max(1.0);
                assert!(err < 1e-8, "k {k} n {n} {name}: {got} vs {want} ({err:.2e})");
            }
        }
    }
}

#[test]
fn laplace_symmetries_and_transposition() {
    let (m, g) = disk(0.4, 1);
    let s = SpaceTriple::new(&m, &g, VolumeKind::Conforming, 2).unwrap();
    let q = QuadConfig::default();
    let v = assemble_boundary_operator(OperatorTag::V, 0.0, &g, &s, TraceSpace::W, TraceSpace::W, &q).unwrap().data;
    let w = assemble_boundary_operator(OperatorTag::W, 0.0, &g, &s, TraceSpace::Z, TraceSpace::Z, &q).unwrap().data;
    for a in [&v, &w] {
        let scale = a.norm_l2();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert!((a[(i, j)] - a[(j, i)].conj()).norm() <= 1e-10 * scale);
            }
        }
    }
    let k = assemble_boundary_operator(OperatorTag::K, 0.0, &g, &s, TraceSpace::W, TraceSpace::Z, &q).unwrap().data;
    let kp = assemble_boundary_operator(OperatorTag::Kp, 0.0, &g, &s, TraceSpace::Z, TraceSpace::W, &q).unwrap().data;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            assert!((k[(i, j)] - kp[(j, i)]).norm() < 1e-10);
        }
    }
    assert!(assemble_boundary_operator(OperatorTag::V, -1.0, &g, &s, TraceSpace::W, TraceSpace::W, &q).is_err());
    assert!(assemble_boundary_operator(OperatorTag::W, 1.0, &g, &s, TraceSpace::W, TraceSpace::Z, &q).is_err());
}

#[test]
fn bk_apk_from_parts_and_symbol() {
    let r = 0.4;
    let k = 3.0;
    let (_, g) = disk(r, 2);
    let b = TraceBasis::new(4, g.len());
    let ops = assemble_operators(k, &g, &b, &QuadConfig::default()).unwrap();
    let (bk, apk) = assemble_bk_apk(&ops);
    let (z, w) = (TraceSpace::Z, TraceSpace::W);
    let mz = ops.mass_block(z, z);
    let kz = ops.block(OperatorTag::K, z, z).unwrap();
    let ik = C::new(0.0, k);
    for i in 0..bk.nrows() {
        for j in 0..bk.ncols() {
            let want = -ops.w[(i, j)] + ik * (kz[(i, j)] - C::new(0.5 * mz[(i, j)], 0.0));
            assert!((bk[(i, j)] - want).norm() < 1e-15 * (1.0 + want.norm()));
        }
    }
    for n in [0i64, 2, 5] {
        let s = circle_symbols(k, r, n);
        let want = 0.5 + s[2] + ik * s[0];
        let pw = l2_project(&g, &b, w, mode(n)).unwrap();
        let qz = l2_project(&g, &b, z, mode(-n)).unwrap();
        let got = bilinear(&apk, &pw, &qz) / (std::f64::consts::TAU * r);
        assert!((got - want).norm() < 1e-8, "{n}: {got} {want}");
    }
}

#[test]
fn single_layer_real_part_positive() {
    let (_, g) = disk(0.4, 1);
    let b = TraceBasis::new(2, g.len());
    let ops = assemble_operators(2.0, &g, &b, &QuadConfig::default()).unwrap();
    let v = ops.block(OperatorTag::V, TraceSpace::W, TraceSpace::W).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let m: Vec<C> = (0..v.nrows()).map(|_| C::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        assert!(bilinear(&v, &m, &m).re > 0.0);
    }
}

#[test]
fn operator_differences_are_smoothing() {
    let r = 0.4;
    let (_, g) = disk(r, 2);
    let b = TraceBasis::new(2, g.len());
    let q = QuadConfig::default();
    let k = 4.0;
    let ok = assemble_operators(k, &g, &b, &q).unwrap();
    let o0 = assemble_operators(0.0, &g, &b, &q).unwrap();
    let (w, z) = (TraceSpace::W, TraceSpace::Z);
    let mw = ok.mass_block(w, w);
    // L2 size of the difference applied to the lowest and highest discrete modes
    let nmax = (g.len() / 2) as i64;
    let ratio = |n_lo: i64, n_hi: i64| {
        let dv = &ok.block(OperatorTag::V, w, w).unwrap() - &o0.block(OperatorTag::V, w, w).unwrap();
        let apply = |n: i64| {
            let p = l2_project(&g, &b, w, mode(n)).unwrap();
            let y: Vec<C> = (0..dv.nrows()).map(|i| (0..dv.ncols()).map(|j| dv[(i, j)] * p[j]).sum()).collect();
            let pn: f64 = (0..y.len())
                .map(|i| (0..y.len()).map(|j| (y[i].conj() * mw[(i, j)] * y[j]).re).sum::<f64>())
                .sum();
            pn.sqrt()
        };
        apply(n_lo) / apply(n_hi)
    };
    assert!(ratio(0, nmax - 1) >= 5.0);
    let _ = z;
}

#[test]
fn calderon_identity() {
    let q = QuadConfig::default();
    let mut prev = f64::INFINITY;
    for level in 1..=3 {
        let (_, g) = disk(0.4, level);
        let b = TraceBasis::new(3, g.len());
        let ops = assemble_operators(2.0, &g, &b, &q).unwrap();
        let res = calderon_residual(&ops, &g, 4).unwrap();
        assert!(res < prev, "level {level}: {res}");
        prev = res;
        if level == 3 {
            assert!(res <= 1e-4, "{res}");
            let ops0 = assemble_operators(0.0, &g, &b, &q).unwrap();
            let r0 = calderon_residual(&ops0, &g, 4).unwrap();
            assert!(r0 <= 1e-6, "{r0}");
        }
    }
}

#[test]
fn potentials_zero_density_and_helmholtz() {
    let (_, g) = disk(0.4, 1);
    let b = TraceBasis::new(2, g.len());
    let zero = PotentialField { kind: PotentialKind::Single, k: 2.0, gamma: &g, basis: b, space: TraceSpace::W, coeffs: vec![C::new(0.0, 0.0); b.n_w()] };
    assert!(evaluate_potential(&zero, &[[0.1, 0.0], [1.0, 1.0]]).unwrap().iter().all(|v| v.norm() == 0.0));
    assert!(evaluate_potential(&zero, &[[0.4, 0.0]]).is_err());
    let dens = l2_project(&g, &b, TraceSpace::Z, |t| C::new(t.cos() + 0.3 * (2.0 * t).sin(), 0.0)).unwrap();
    let k = 2.0;
    for kind in [PotentialKind::Single, PotentialKind::Double] {
        let f = PotentialField { kind, k, gamma: &g, basis: b, space: TraceSpace::Z, coeffs: dens.clone() };
        for x in [[0.1, 0.05], [0.7, -0.2]] {
            let h = 1e-3;
            let u = |p: [f64; 2]| f.eval_with_gradient(p).unwrap().0;
            let lap = (u([x[0] + h, x[1]]) + u([x[0] - h, x[1]]) + u([x[0], x[1] + h]) + u([x[0], x[1] - h]) - 4.0 * u(x)) / (h * h);
            let res = (lap + k * k * u(x)).norm() / (k * k * u(x).norm());
            assert!(res < 1e-4, "{kind:?} {x:?} {res}");
            let (_, grad) = f.eval_with_gradient(x).unwrap();
            let fd = (u([x[0] + 1e-5, x[1]]) - u([x[0] - 1e-5, x[1]])) / 2e-5;
            assert!((grad[0] - fd).norm() < 1e-6 * (1.0 + fd.norm()));
        }
    }
}

#[test]
fn matrix_dump_roundtrip() {
    let (_, g) = disk(0.4, 0);
    let b = TraceBasis::new(1, g.len());
    let ops = assemble_operators(1.0, &g, &b, &QuadConfig::default()).unwrap();
    let dir = std::env::temp_dir().join(format!("fembem-dump-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("v");
    dump_matrix(&path, &ops.v, serde_json::json!({"k": 1.0, "tag": "V"})).unwrap();
    let bytes = std::fs::read(path.with_extension("bin")).unwrap();
    assert_eq!(bytes.len(), 16 * ops.v.nrows() * ops.v.ncols());
    let re = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    assert_eq!(re, ops.v[(0, 1)].re);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["tag"], "V");
    std::fs::remove_dir_all(dir).ok();
}
