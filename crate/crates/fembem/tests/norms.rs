mod common;

use common::disk;
use fembem::assembly::{assemble_volume_matrices, PenaltyParams, ThreeFieldVector};
use fembem::bem::{assemble_operators, l2_project, QuadConfig, TraceBasis, TraceSpace};
use fembem::discretization::{SpaceTriple, VolumeKind};
use fembem::geometry::{BoundaryMesh, CurvedMesh, Point};
use fembem::norms::filters::high_pass_bound;
use fembem::norms::{
    best_approximation_error, error_parts, filter, fractional_boundary_norm, volume_filter, BoundaryFourier,
    BoundaryRealization, EnergyNormContext, ExactSolution, FilterKind, FilterVariant, FourierNode, FractionalMethod,
    MassWeight, NormError, NormKind,
};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

struct PlaneWave {
    k: f64,
    d: Point,
}

impl ExactSolution for PlaneWave {
    fn u(&self, x: Point) -> (C, [C; 2]) {
        let i = C::new(0.0, 1.0);
        let v = (i * self.k * (self.d[0] * x[0] + self.d[1] * x[1])).exp();
        (v, [i * self.k * self.d[0] * v, i * self.k * self.d[1] * v])
    }
    fn m(&self, t: f64) -> C {
        let x = [0.4 * t.cos(), 0.4 * t.sin()];
        let (_, g) = self.u(x);
        g[0] * t.cos() + g[1] * t.sin()
    }
    fn ext(&self, t: f64) -> C {
        C::new((2.0 * t).cos(), t.sin())
    }
}

struct Fixture {
    mesh: CurvedMesh,
    gamma: BoundaryMesh,
    spaces: SpaceTriple,
    ctx: EnergyNormContext,
}

fn fixture(level: usize, p: usize, kind: VolumeKind, k: f64) -> Fixture {
    let (mesh, gamma) = disk(0.4, level);
    let spaces = SpaceTriple::new(&mesh, &gamma, kind, p).unwrap();
    let vm = assemble_volume_matrices(&mesh, &gamma, &spaces, k, Some(&PenaltyParams::default())).unwrap();
    let basis = TraceBasis::from_spaces(&spaces);
    let ctx = EnergyNormContext::new(k, &vm, &gamma, basis, MassWeight::Index, BoundaryRealization::Fourier, None).unwrap();
    Fixture { mesh, gamma, spaces, ctx }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

#[test]
fn fourier_norm_of_single_modes() {
    let (_, gamma) = disk(0.4, 2);
    let basis = TraceBasis::new(2, gamma.len());
    let f = BoundaryFourier::new(&gamma, basis, None).unwrap();
    for n in [0i64, 1, 3, 7] {
        let modes = f.transform_fn(&|nd: &FourierNode| C::from_polar(1.0, n as f64 * nd.theta));
        for s in [-0.5, 0.0, 0.5] {
            let want = TAU * 0.4 * (1.0 + (n * n) as f64).powf(s);
            assert!((f.norm_sq(&modes, s) - want).abs() < 1e-12 * want, "n = {n}, s = {s}");
        }
        let z = f.synthesize(&modes, 0.3);
        assert!((z - C::from_polar(1.0, n as f64 * 0.3)).norm() < 1e-12);
    }
}

#[test]
fn gram_matches_transform() {
    let (_, gamma) = disk(0.4, 1);
    let basis = TraceBasis::new(2, gamma.len());
    let f = BoundaryFourier::new(&gamma, basis, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for space in [TraceSpace::W, TraceSpace::Z] {
        let x = random_vec(&mut rng, basis.dim(space));
        let g = f.gram(space, 0.5);
        let mut q = 0.0;
        for i in 0..x.len() {
            for j in 0..x.len() {
                q += g[(i, j)] * (x[i].conj() * x[j]).re;
            }
        }
        let direct = f.norm_sq(&f.transform(space, &x), 0.5);
        assert!((q - direct).abs() < 1e-10 * direct);
    }
}

#[test]
fn riesz_and_fourier_norms_are_equivalent() {
    let (_, gamma) = disk(0.4, 2);
    let basis = TraceBasis::new(2, gamma.len());
    let f = BoundaryFourier::new(&gamma, basis, None).unwrap();
    let ops0 = assemble_operators(0.0, &gamma, &basis, &QuadConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (space, s) in [(TraceSpace::W, -0.5), (TraceSpace::Z, 0.5)] {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for _ in 0..10 {
            let x = random_vec(&mut rng, basis.dim(space));
            let a = fractional_boundary_norm(Some(&f), None, space, &x, s, FractionalMethod::Fourier).unwrap();
            let b = fractional_boundary_norm(None, Some(&ops0), space, &x, s, FractionalMethod::Riesz).unwrap();
            lo = lo.min(b / a);
            hi = hi.max(b / a);
        }
        assert!(lo > 0.2 && hi < 5.0 && hi / lo < 3.0, "{space:?}: ratio in [{lo}, {hi}]");
    }
    let x = random_vec(&mut rng, basis.n_w());
    assert!(matches!(
        fractional_boundary_norm(None, Some(&ops0), TraceSpace::W, &x, 0.5, FractionalMethod::Riesz),
        Err(NormError::Unsupported(_))
    ));
}

#[test]
fn fourier_realization_rejects_other_curves() {
    use fembem::geometry::{build_disk_mesh, induced_boundary_mesh, make_kite, Coefficients, SubdomainPartition};
    let m = build_disk_mesh(&make_kite(), 1, &SubdomainPartition::trivial(Coefficients::isotropic(1.0))).unwrap();
    let g = induced_boundary_mesh(&m);
    assert!(matches!(BoundaryFourier::new(&g, TraceBasis::new(1, g.len()), None), Err(NormError::NotCircle)));
}

#[test]
fn norms_are_positive_and_ordered() {
    let fx = fixture(1, 2, VolumeKind::Dg, 4.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = &fx.spaces;
    for _ in 0..5 {
        let v = ThreeFieldVector { u: random_vec(&mut rng, s.n_volume), m: random_vec(&mut rng, s.n_w), ext: random_vec(&mut rng, s.n_z) };
        let e = fx.ctx.norm(&v, NormKind::Energy).unwrap();
        let d = fx.ctx.norm(&v, NormKind::Dg).unwrap();
        let dp = fx.ctx.norm(&v, NormKind::DgPlus).unwrap();
        assert!(e > 0.0 && e < d && d < dp);
    }
}

/// Best approximation: Pythagoras against any other discrete triple checks
/// that the quadrature error and the Gram matrices describe the same norm.
#[test]
fn best_approximation_is_orthogonal() {
    for (vk, kind) in [(VolumeKind::Conforming, NormKind::Energy), (VolumeKind::Dg, NormKind::Dg), (VolumeKind::Dg, NormKind::DgPlus)] {
        let fx = fixture(1, 2, vk, 3.0);
        let ex = PlaneWave { k: 3.0, d: [0.6, 0.8] };
        let best = best_approximation_error(&fx.ctx, &fx.mesh, &fx.gamma, &fx.spaces, &ex, kind).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = &fx.spaces;
        let d = ThreeFieldVector { u: random_vec(&mut rng, s.n_volume), m: random_vec(&mut rng, s.n_w), ext: random_vec(&mut rng, s.n_z) };
        let d = ThreeFieldVector {
            u: d.u.iter().map(|z| z * 0.01).collect(),
            m: d.m.iter().map(|z| z * 0.01).collect(),
            ext: d.ext.iter().map(|z| z * 0.01).collect(),
        };
        let w = best.coeffs.axpy(C::new(1.0, 0.0), &d);
        let ew = error_parts(&fx.ctx, &fx.mesh, &fx.gamma, &fx.spaces, &ex, &w).unwrap().total_sq(kind);
        let dn = fx.ctx.norm(&d, kind).unwrap().powi(2);
        let lhs = best.error.powi(2) + dn;
        assert!((ew - lhs).abs() < 1e-8 * lhs, "{kind:?}: {ew} vs {lhs}");
        assert!(ew > best.error.powi(2));
    }
}

#[test]
fn best_approximation_converges() {
    let ex = PlaneWave { k: 3.0, d: [1.0, 0.0] };
    let errs: Vec<f64> = (1..=3)
        .map(|l| {
            let fx = fixture(l, 2, VolumeKind::Conforming, 3.0);
            best_approximation_error(&fx.ctx, &fx.mesh, &fx.gamma, &fx.spaces, &ex, NormKind::Energy).unwrap().error
        })
        .collect();
    assert!(errs[1] < errs[0] / 3.0 && errs[2] < errs[1] / 3.0, "{errs:?}");
}

#[test]
fn exact_errors_of_a_projection() {
    let fx = fixture(2, 2, VolumeKind::Conforming, 3.0);
    let ex = PlaneWave { k: 3.0, d: [0.0, 1.0] };
    let basis = fx.ctx.basis;
    let m = l2_project(&fx.gamma, &basis, TraceSpace::W, |t| ex.m(t)).unwrap();
    let ext = l2_project(&fx.gamma, &basis, TraceSpace::Z, |t| ex.ext(t)).unwrap();
    let x = ThreeFieldVector { u: vec![C::new(0.0, 0.0); fx.spaces.n_volume], m, ext };
    let parts = error_parts(&fx.ctx, &fx.mesh, &fx.gamma, &fx.spaces, &ex, &x).unwrap();
    // with u_h = 0 the volume part is ||grad u||^2 + k^2 ||u||^2 = 2 k^2 |Omega|
    let want = 2.0 * 9.0 * fx.mesh.area();
    assert!((parts.volume.grad + parts.volume.mass - want).abs() < 1e-9 * want);
    assert!(parts.m < 1e-4 && parts.ext < 1e-3);
}

#[test]
fn boundary_filters_split_the_identity() {
    let (_, gamma) = disk(0.4, 2);
    let f = BoundaryFourier::new(&gamma, TraceBasis::new(3, gamma.len()), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let modes = random_vec(&mut rng, f.n_modes());
    for k in [4.0, 8.0, 16.0] {
        for variant in [FilterVariant::Plus, FilterVariant::Minus] {
            let lo = filter(&f, &modes, FilterKind::Low, variant, 0.5, k).unwrap();
            let hi = filter(&f, &modes, FilterKind::High, variant, 0.5, k).unwrap();
            let err = lo.modes.iter().zip(&hi.modes).zip(&modes).map(|((a, b), c)| (a + b - c).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-13);
            assert_eq!(hi.modes[f.n_max], C::new(0.0, 0.0));
            assert_eq!(variant == FilterVariant::Plus, lo.extension.is_some());
            if let Some(e) = lo.extension {
                let t: f64 = 1.1;
                let on = e.eval([0.4 * t.cos(), 0.4 * t.sin()]);
                assert!((on - f.synthesize(&lo.modes, t)).norm() < 1e-10);
            }
        }
    }
    assert!(matches!(filter(&f, &modes, FilterKind::Low, FilterVariant::Plus, 0.0, 4.0), Err(NormError::Domain(_))));
    let c = high_pass_bound(0.5, 8.0, 1.5, 0.5).unwrap();
    assert!(c > 0.9 && c <= 1.0);
}

#[test]
fn volume_filter_on_plane_waves() {
    let (k, eta) = (8.0, 0.5);
    let lam = k / eta;
    // the window spectrum has Gaussian tails of width 6 / margin
    let kappa = lam + 56.0;
    let v = move |x: Point| C::from_polar(1.0, kappa * (0.6 * x[0] + 0.8 * x[1]));
    let r = volume_filter(&v, [-0.4, -0.4], [0.4, 0.4], 1.0, 512, eta, k).unwrap();
    let id = r.low.iter().zip(&r.high).zip(&r.values).map(|((a, b), c)| (a + b - c).norm()).fold(0.0, f64::max);
    assert!(id < 1e-13);
    let low = r.low.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(low < 1e-8, "low part {low}");
}
