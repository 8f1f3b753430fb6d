//! Convergence studies, k-sweeps and the operator measurements behind the
//! CLI subcommands. Runs are independent and execute in the rayon pool;
//! records come back in configuration order.

use faer::linalg::triangular_solve::solve_lower_triangular_in_place;
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::time::Instant;

use super::config::{CoefficientPreset, Experiment, ExperimentConfig, GeometryPreset};
use super::output::{Check, Report, RunRecord, Timings};
use super::{solve_system, DriverError};
use crate::assembly::{
    assemble_adjoint, assemble_coupled, assemble_rhs, assemble_theta, assemble_volume_matrices, trace_load,
    volume_load, CoupledSystem, ThreeFieldVector, VolumeMatrices,
};
use crate::bem::{
    assemble_operators, calderon_residual, jump_errors, l2_project, BemOperators, QuadConfig, TraceBasis, TraceSpace,
};
use crate::discretization::{measure_inverse_inequality, SpaceTriple, VolumeKind};
use crate::geometry::{build_disk_mesh, induced_boundary_mesh, BoundaryCurve, BoundaryMesh, CurvedMesh, Point};
use crate::norms::{
    best_approximation_error, error_parts, filter, high_pass_bound, mesh_weighted_mass, riesz_grams,
    BoundaryFourier, BoundaryRealization, EnergyNormContext, ExactSolution, FilterKind, FilterVariant, NormKind,
};
use crate::reference::{manufactured_solution, plane_wave_data, solve_disk_series, PlaneWave};

type C = num_complex::Complex64;

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Converge => run_convergence_study(cfg),
        Experiment::Quasiopt => run_quasioptimality_sweep(cfg),
        Experiment::Garding => run_garding_experiment(cfg),
        Experiment::Continuity => run_continuity_experiment(cfg),
        Experiment::Filters => run_filters(cfg),
        Experiment::Jumps => run_jumps(cfg),
        Experiment::Calderon => run_calderon(cfg),
        Experiment::Adjoint => run_adjoint_consistency(cfg),
        Experiment::Inverse => run_inverse_inequality(cfg),
    }
}

/// Mesh, spaces, volume matrices and boundary operators of one run.
pub struct Setup {
    pub kind: VolumeKind,
    pub k: f64,
    pub level: usize,
    pub p: usize,
    pub curve: BoundaryCurve,
    pub mesh: CurvedMesh,
    pub gamma: BoundaryMesh,
    pub spaces: SpaceTriple,
    pub basis: TraceBasis,
    pub vm: VolumeMatrices,
    pub ops: BemOperators,
    pub timings: Timings,
}

pub fn discretize(cfg: &ExperimentConfig, kind: VolumeKind, k: f64, level: usize, p: usize) -> Result<Setup, DriverError> {
    let curve = cfg.geometry.curve()?;
    let t0 = Instant::now();
    let mesh = build_disk_mesh(&curve, level, &cfg.coefficients.partition())?;
    let gamma = induced_boundary_mesh(&mesh);
    let spaces = SpaceTriple::new(&mesh, &gamma, kind, p)?;
    let basis = TraceBasis::from_spaces(&spaces);
    let pen = (kind == VolumeKind::Dg).then_some(cfg.penalties);
    let vm = assemble_volume_matrices(&mesh, &gamma, &spaces, k, pen.as_ref())?;
    let t1 = Instant::now();
    let ops = assemble_operators(k, &gamma, &basis, &QuadConfig::default())?;
    let timings = Timings { volume: (t1 - t0).as_secs_f64(), bem: t1.elapsed().as_secs_f64(), ..Timings::default() };
    Ok(Setup { kind, k, level, p, curve, mesh, gamma, spaces, basis, vm, ops, timings })
}

fn kind_name(kind: VolumeKind) -> &'static str {
    match kind {
        VolumeKind::Conforming => "conforming",
        VolumeKind::Dg => "dg",
    }
}

fn geometry_label(g: &GeometryPreset) -> String {
    match g {
        GeometryPreset::Disk { radius } => format!("disk:r={radius}"),
        GeometryPreset::Kite { scale } => format!("kite:scale={scale}"),
    }
}

fn coefficient_label(c: &CoefficientPreset) -> String {
    match c {
        CoefficientPreset::Homogeneous { n0 } => format!("homogeneous:n0={n0}"),
        CoefficientPreset::Anisotropic { nu, n0 } => {
            format!("anisotropic:nu={};{};{};{}:n0={n0}", nu[0][0], nu[0][1], nu[1][0], nu[1][1])
        }
        CoefficientPreset::Bump { c0, amp, width } => format!("bump:c0={c0};amp={amp};width={width}"),
    }
}

fn lower(s: impl serde::Serialize) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Record with the configuration fields filled in.
fn base_record(cfg: &ExperimentConfig, kind: VolumeKind, k: f64, level: usize, p: usize, h_max: f64) -> RunRecord {
    let mut r = RunRecord::blank(cfg.experiment.name());
    r.formulation = kind_name(kind).into();
    r.geometry = geometry_label(&cfg.geometry);
    r.coefficients = coefficient_label(&cfg.coefficients);
    r.k = k;
    r.level = level;
    r.p = p;
    r.h_max = h_max;
    r.kh_over_p = k * h_max / p as f64;
    if kind == VolumeKind::Dg {
        r.penalty_a = cfg.penalties.a;
        r.penalty_b = cfg.penalties.b;
        r.penalty_d = cfg.penalties.d;
    }
    r.realization = lower(cfg.realization);
    r.mass_weight = lower(cfg.mass_weight);
    r.solver = lower(cfg.solver);
    r.seed = cfg.seed;
    r
}

fn setup_record(cfg: &ExperimentConfig, s: &Setup) -> RunRecord {
    let mut r = base_record(cfg, s.kind, s.k, s.level, s.p, s.mesh.h_max());
    r.n_volume = s.spaces.n_volume;
    r.n_w = s.spaces.n_w;
    r.n_z = s.spaces.n_z;
    r.timings = s.timings;
    r
}

/// Norm of the error (left side) and of the best approximation (right side).
fn error_norms(kind: VolumeKind) -> (NormKind, NormKind) {
    match kind {
        VolumeKind::Conforming => (NormKind::Energy, NormKind::Energy),
        VolumeKind::Dg => (NormKind::Dg, NormKind::DgPlus),
    }
}

/// Assembles, solves and measures one run against the reference solution.
fn solve_run(cfg: &ExperimentConfig, kind: VolumeKind, k: f64, level: usize, p: usize, label: &str) -> Result<RunRecord, DriverError> {
    let s = discretize(cfg, kind, k, level, p)?;
    let sys = assemble_coupled(&s.spaces, &s.vm, &s.ops)?;
    let partition = cfg.coefficients.partition();
    let mut rec = match (cfg.geometry, cfg.coefficients) {
        (GeometryPreset::Disk { radius }, CoefficientPreset::Homogeneous { n0 }) => {
            let mie = solve_disk_series(k, radius, n0, cfg.incident)?;
            let (g, h) = plane_wave_data(k, cfg.incident, &s.curve);
            measure(cfg, &s, sys, &mie, &|_| C::new(0.0, 0.0), &g, &h)?
        }
        (GeometryPreset::Disk { radius }, _) => {
            let field = PlaneWave { k, direction: cfg.incident };
            let n_max = (2.0 * k * radius).ceil() as usize + 40;
            let ms = manufactured_solution(&field, k, &partition, &s.curve, n_max)?;
            measure(cfg, &s, sys, &ms, &|x| ms.f(x), &|t| ms.g(t), &|t| ms.h(t))?
        }
        _ => return Err(DriverError::Config("reference solutions need the disk geometry".into())),
    };
    rec.label = label.into();
    Ok(rec)
}

#[allow(clippy::too_many_arguments)]
fn measure(
    cfg: &ExperimentConfig,
    s: &Setup,
    sys: CoupledSystem,
    exact: &dyn ExactSolution,
    f: &(dyn Fn(Point) -> C + Sync),
    g: &dyn Fn(f64) -> C,
    h: &dyn Fn(f64) -> C,
) -> Result<RunRecord, DriverError> {
    let mut rec = setup_record(cfg, s);
    let t0 = Instant::now();
    let rhs = assemble_rhs(&s.mesh, &s.gamma, &s.spaces, f, g, h);
    let sol = solve_system(&sys.with_rhs(rhs), cfg.solver).map_err(|e| DriverError::Solver {
        context: format!("{} k={} level={} p={}", kind_name(s.kind), s.k, s.level, s.p),
        source: e,
    })?;
    let t1 = Instant::now();
    let ctx = EnergyNormContext::new(s.k, &s.vm, &s.gamma, s.basis, cfg.mass_weight, cfg.realization, None)?;
    let (ek, bk) = error_norms(s.kind);
    let err = error_parts(&ctx, &s.mesh, &s.gamma, &s.spaces, exact, &sol.x)?.total(ek);
    let best = best_approximation_error(&ctx, &s.mesh, &s.gamma, &s.spaces, exact, bk)?.error;
    rec.timings.solve = (t1 - t0).as_secs_f64();
    rec.timings.error = t1.elapsed().as_secs_f64();
    rec.residual = Some(sol.residual);
    rec.valid = sol.residual <= cfg.criteria.residual_max;
    rec.error = Some(err);
    rec.best_error = Some(best);
    rec.ratio = Some(err / best);
    Ok(rec)
}

fn residual_check(records: &[RunRecord], max: f64) -> Check {
    let worst = records.iter().filter_map(|r| r.residual).fold(0.0, f64::max);
    Check::at_most("solver residual (all runs)", worst, max)
}

fn collect<T: Send>(items: Vec<Result<T, DriverError>>) -> Result<Vec<T>, DriverError> {
    items.into_iter().collect()
}

pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let mut runs = Vec::new();
    for &kind in &cfg.formulations {
        for &k in &cfg.ks {
            for &level in &cfg.levels {
                runs.push((kind, k, level, cfg.degree.degree(k)));
            }
        }
    }
    let mut records = collect(runs.par_iter().map(|&(kind, k, l, p)| solve_run(cfg, kind, k, l, p, "")).collect())?;
    let mut checks = Vec::new();
    let cr = &cfg.criteria;
    for i in 1..records.len() {
        let (a, b) = (&records[i - 1], &records[i]);
        if a.formulation == b.formulation && a.k == b.k && a.p == b.p {
            let (ea, eb) = (a.error.unwrap_or(f64::NAN), b.error.unwrap_or(f64::NAN));
            let eoc = (ea / eb).ln() / (a.h_max / b.h_max).ln();
            let name = format!("{} k={} EOC L{}-L{}", b.formulation, b.k, a.level, b.level);
            checks.push(Check::within(name, eoc, cr.eoc_range[0], cr.eoc_range[1]));
            records[i].eoc = Some(eoc);
        }
    }
    for &kind in &cfg.formulations {
        let worst = records.iter().filter(|r| r.formulation == kind_name(kind)).filter_map(|r| r.ratio).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{} error / best approximation", kind_name(kind)), worst, cr.best_factor));
    }
    checks.push(residual_check(&records, cr.residual_max));
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

/// h_max of each configured level.
fn level_sizes(cfg: &ExperimentConfig) -> Result<Vec<(usize, f64)>, DriverError> {
    let curve = cfg.geometry.curve()?;
    let part = cfg.coefficients.partition();
    let mut levels = cfg.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    levels.iter().map(|&l| Ok((l, build_disk_mesh(&curve, l, &part)?.h_max()))).collect()
}

pub fn run_quasioptimality_sweep(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let res = cfg.resolution.ok_or_else(|| DriverError::Config("the sweep needs a resolution rule".into()))?;
    let sizes = level_sizes(cfg)?;
    let mut runs = Vec::new();
    for &kind in &cfg.formulations {
        for &k in &cfg.ks {
            let p = cfg.degree.degree(k);
            let level = sizes
                .iter()
                .find(|&&(_, h)| k * h / p as f64 <= res.c1)
                .map(|&(l, _)| l)
                .ok_or_else(|| DriverError::Config(format!("no configured level has k h / p <= {} at k = {k}", res.c1)))?;
            runs.push((kind, k, level, p, ""));
        }
        if let Some(c) = cfg.control {
            let level = sizes
                .iter()
                .min_by(|a, b| {
                    let d = |h: f64| (c.k * h / c.p as f64 - c.kh_over_p).abs();
                    d(a.1).total_cmp(&d(b.1))
                })
                .map(|&(l, _)| l)
                .expect("levels are nonempty");
            runs.push((kind, c.k, level, c.p, "control"));
        }
    }
    let records = collect(runs.par_iter().map(|&(kind, k, l, p, lab)| solve_run(cfg, kind, k, l, p, lab)).collect())?;
    let cr = &cfg.criteria;
    let mut checks = Vec::new();
    for &kind in &cfg.formulations {
        let name = kind_name(kind);
        let resolved: Vec<&RunRecord> = records.iter().filter(|r| r.formulation == name && r.label.is_empty()).collect();
        let worst = resolved.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
        checks.push(Check::at_most(format!("{name} max ratio under resolution"), worst, cr.ratio_max));
        if let Some(c) = cfg.control {
            let ctrl = records.iter().find(|r| r.formulation == name && r.label == "control").and_then(|r| r.ratio);
            let reference = resolved.iter().find(|r| r.k == c.k).and_then(|r| r.ratio).unwrap_or(worst);
            if let Some(ctrl) = ctrl {
                checks.push(Check::at_least(format!("{name} control ratio / resolved ratio at k={}", c.k), ctrl / reference, 1.0 + 1e-12));
            }
        }
    }
    checks.push(residual_check(&records, cr.residual_max));
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

/// L^{-1} A L^{-H} for the Cholesky factor L of the Gram matrix.
fn whiten(a: &Mat<C>, gram: &Mat<f64>) -> Result<Mat<C>, DriverError> {
    let llt = gram.llt(Side::Lower).map_err(|_| DriverError::Singular("Gram matrix"))?;
    let l = llt.L();
    let lc = Mat::<C>::from_fn(l.nrows(), l.ncols(), |i, j| C::new(l[(i, j)], 0.0));
    let mut x = a.clone();
    solve_lower_triangular_in_place(lc.as_ref(), x.as_mut(), Par::Seq);
    let mut y = x.adjoint().to_owned();
    solve_lower_triangular_in_place(lc.as_ref(), y.as_mut(), Par::Seq);
    Ok(y.adjoint().to_owned())
}

fn min_eigenvalue(h: &Mat<C>) -> Result<f64, DriverError> {
    let ev = h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| DriverError::Singular("eigenvalue iteration"))?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}

fn max_singular_value(a: &Mat<C>) -> Result<f64, DriverError> {
    let s = a.singular_values().map_err(|_| DriverError::Singular("singular value iteration"))?;
    Ok(s.iter().cloned().fold(0.0, f64::max))
}

/// T (and T + Theta) densely, with the Gram matrix of the formulation's norm.
fn operator_setup(cfg: &ExperimentConfig, s: &Setup) -> Result<(Mat<C>, Mat<C>, Mat<f64>), DriverError> {
    let ops0 = assemble_operators(0.0, &s.gamma, &s.basis, &QuadConfig::default())?;
    let sys = assemble_coupled(&s.spaces, &s.vm, &s.ops)?;
    let theta = assemble_theta(&s.spaces, &s.vm, &s.ops, &ops0)?;
    let t = sys.to_dense();
    let tt = sys.plus(&theta)?.to_dense();
    let ctx = EnergyNormContext::new(s.k, &s.vm, &s.gamma, s.basis, cfg.mass_weight, cfg.realization, Some(&ops0))?;
    let gram = ctx.gram_dense(error_norms(s.kind).0)?;
    Ok((t, tt, gram))
}

fn sweep_runs(cfg: &ExperimentConfig) -> Vec<(VolumeKind, f64, usize, usize)> {
    let mut runs = Vec::new();
    for &kind in &cfg.formulations {
        for &level in &cfg.levels {
            for &k in &cfg.ks {
                runs.push((kind, k, level, cfg.degree.degree(k)));
            }
        }
    }
    runs
}

/// Smallest eigenvalue of Re B + eps Im B, maximized over eps for DG.
fn coercivity(b: &Mat<C>, kind: VolumeKind, epsilons: &[f64]) -> Result<(f64, f64), DriverError> {
    let bh = b.adjoint().to_owned();
    let re = Mat::<C>::from_fn(b.nrows(), b.ncols(), |i, j| 0.5 * (b[(i, j)] + bh[(i, j)]));
    if kind == VolumeKind::Conforming || epsilons.is_empty() {
        return Ok((min_eigenvalue(&re)?, 0.0));
    }
    let im = Mat::<C>::from_fn(b.nrows(), b.ncols(), |i, j| (b[(i, j)] - bh[(i, j)]) / C::new(0.0, 2.0));
    let lam = |eps: f64| min_eigenvalue(&Mat::<C>::from_fn(re.nrows(), re.ncols(), |i, j| re[(i, j)] + eps * im[(i, j)]));
    let mut grid: Vec<f64> = epsilons.to_vec();
    grid.sort_by(f64::total_cmp);
    let vals = grid.iter().map(|&e| lam(e)).collect::<Result<Vec<_>, _>>()?;
    let best = (0..grid.len()).max_by(|&a, &b| vals[a].total_cmp(&vals[b])).expect("nonempty");
    // the minimum of a family affine in eps is concave: golden section on the bracket
    let mut lo = if best > 0 { grid[best - 1] } else { grid[best] };
    let mut hi = if best + 1 < grid.len() { grid[best + 1] } else { grid[best] };
    let (mut eps, mut val) = (grid[best], vals[best]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    if hi > lo {
        let mut a = hi - g * (hi - lo);
        let mut b2 = lo + g * (hi - lo);
        let (mut fa, mut fb) = (lam(a)?, lam(b2)?);
        for _ in 0..24 {
            if fa < fb {
                lo = a;
                a = b2;
                fa = fb;
                b2 = lo + g * (hi - lo);
                fb = lam(b2)?;
            } else {
                hi = b2;
                b2 = a;
                fb = fa;
                a = hi - g * (hi - lo);
                fa = lam(a)?;
            }
        }
        for (e, v) in [(a, fa), (b2, fb)] {
            if v > val {
                eps = e;
                val = v;
            }
        }
    }
    Ok((val, eps))
}

pub fn run_garding_experiment(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let runs = sweep_runs(cfg);
    let records = collect(
        runs.par_iter()
            .map(|&(kind, k, level, p)| {
                let s = discretize(cfg, kind, k, level, p)?;
                let (_, tt, gram) = operator_setup(cfg, &s)?;
                let (lam, eps) = coercivity(&whiten(&tt, &gram)?, kind, &cfg.epsilons)?;
                let mut r = setup_record(cfg, &s);
                r.garding_eig = Some(lam);
                r.garding_eps = Some(eps);
                Ok(r)
            })
            .collect(),
    )?;
    let cr = &cfg.criteria;
    let mut checks = Vec::new();
    for &kind in &cfg.formulations {
        for &level in &cfg.levels {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.formulation == kind_name(kind) && r.level == level)
                .filter_map(|r| r.garding_eig)
                .collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let name = kind_name(kind);
            checks.push(Check::at_least(format!("{name} L{level} min eigenvalue over k"), lo, f64::MIN_POSITIVE));
            checks.push(Check::at_most(format!("{name} L{level} eigenvalue max / min over k"), hi / lo, cr.garding_ratio_max));
        }
    }
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

/// Least-squares slope of ln y against ln x.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| {
        let dx = x.ln() - mx;
        (a + dx * (y.ln() - my), b + dx * dx)
    });
    num / den
}

pub fn run_continuity_experiment(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let runs = sweep_runs(cfg);
    let records = collect(
        runs.par_iter()
            .map(|&(kind, k, level, p)| {
                let s = discretize(cfg, kind, k, level, p)?;
                let (t, tt, gram) = operator_setup(cfg, &s)?;
                let mut r = setup_record(cfg, &s);
                r.norm_t = Some(max_singular_value(&whiten(&t, &gram)?)?);
                r.norm_t_theta = Some(max_singular_value(&whiten(&tt, &gram)?)?);
                Ok(r)
            })
            .collect(),
    )?;
    let cr = &cfg.criteria;
    let mut checks = Vec::new();
    if cfg.ks.len() >= 2 {
        for &kind in &cfg.formulations {
            for &level in &cfg.levels {
                let rs: Vec<&RunRecord> = records.iter().filter(|r| r.formulation == kind_name(kind) && r.level == level).collect();
                let pts = |f: fn(&RunRecord) -> Option<f64>| rs.iter().filter_map(|r| Some((r.k, f(r)?))).collect::<Vec<_>>();
                let name = kind_name(kind);
                let e_tt = fit_exponent(&pts(|r| r.norm_t_theta));
                let e_t = fit_exponent(&pts(|r| r.norm_t));
                checks.push(Check::at_most(format!("{name} L{level} k-exponent of ||T + Theta||"), e_tt, cr.exponent_theta_max));
                checks.push(Check::at_most(format!("{name} L{level} k-exponent of ||T||"), e_t, cr.exponent_t_max));
            }
        }
    }
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

fn circle_boundary(cfg: &ExperimentConfig, level: usize) -> Result<(BoundaryMesh, f64), DriverError> {
    let GeometryPreset::Disk { radius } = cfg.geometry else {
        return Err(DriverError::Config("this experiment needs the disk geometry".into()));
    };
    let curve = cfg.geometry.curve()?;
    let mesh = build_disk_mesh(&curve, level, &cfg.coefficients.partition())?;
    Ok((induced_boundary_mesh(&mesh), radius))
}

pub fn run_filters(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let level = cfg.levels[0];
    let (gamma, _) = circle_boundary(cfg, level)?;
    let [s, sp] = cfg.filter_orders;
    let runs: Vec<(usize, f64)> = cfg.ks.iter().copied().enumerate().collect();
    let records = collect(
        runs.par_iter()
            .map(|&(idx, k)| {
                let lam = k / cfg.eta;
                let n_max = (4.0 * lam).ceil() as usize + 32;
                let fourier = BoundaryFourier::new(&gamma, TraceBasis::new(1, gamma.len()), Some(n_max))?;
                let nm = fourier.n_modes();
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(idx as u64));
                let mut funcs: Vec<Vec<C>> = (0..cfg.samples)
                    .map(|_| {
                        (0..nm)
                            .map(|j| {
                                let n = fourier.mode(j) as f64;
                                let z = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                                z * (1.0 + n * n).powf(-0.5 * (s + 1.0))
                            })
                            .collect()
                    })
                    .collect();
                // single modes at the cutoff attain the bound
                let n0 = lam.ceil() as i64;
                for n in [n0, n0 + 1, n0 + 2, -n0] {
                    funcs.push((0..nm).map(|j| if fourier.mode(j) == n { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }).collect());
                }
                let m = 4 * n_max + 4;
                let thetas: Vec<f64> = (0..m).map(|j| TAU * j as f64 / m as f64).collect();
                let (mut ident, mut mean, mut constant) = (0.0f64, 0.0f64, 0.0f64);
                for f in &funcs {
                    let low = filter(&fourier, f, FilterKind::Low, FilterVariant::Plus, cfg.eta, k)?;
                    let high = filter(&fourier, f, FilterKind::High, FilterVariant::Plus, cfg.eta, k)?;
                    let high_minus = filter(&fourier, f, FilterKind::High, FilterVariant::Minus, cfg.eta, k)?;
                    let ext = low.extension.as_ref().expect("plus variant");
                    let mut fmax = 0.0f64;
                    let mut dmax = 0.0f64;
                    let mut sum = C::new(0.0, 0.0);
                    for &t in &thetas {
                        let v = fourier.synthesize(f, t);
                        let x = [fourier.radius * t.cos(), fourier.radius * t.sin()];
                        let split = ext.eval(x) + fourier.synthesize(&high.modes, t);
                        fmax = fmax.max(v.norm());
                        dmax = dmax.max((split - v).norm());
                        sum += fourier.synthesize(&high_minus.modes, t);
                    }
                    ident = ident.max(dmax / fmax);
                    mean = mean.max(sum.norm() / m as f64 / fmax);
                    let ratio = (fourier.norm_sq(&high.modes, sp) / fourier.norm_sq(f, s)).sqrt() * lam.powf(s - sp);
                    constant = constant.max(ratio);
                }
                let mut r = base_record(cfg, VolumeKind::Conforming, k, level, 1, gamma.panels.iter().map(|p| p.h).fold(0.0, f64::max));
                r.formulation = "boundary".into();
                r.filter_identity = Some(ident);
                r.filter_mean = Some(mean);
                r.filter_constant = Some(constant);
                r.filter_reference = Some(high_pass_bound(cfg.eta, k, s, sp)?);
                Ok(r)
            })
            .collect(),
    )?;
    let cr = &cfg.criteria;
    let max_of = |f: fn(&RunRecord) -> Option<f64>| records.iter().filter_map(f).fold(0.0, f64::max);
    let min_of = |f: fn(&RunRecord) -> Option<f64>| records.iter().filter_map(f).fold(f64::INFINITY, f64::min);
    let checks = vec![
        Check::at_most("high + low = identity", max_of(|r| r.filter_identity), cr.filter_identity_max),
        Check::at_most("mean of the minus high-pass", max_of(|r| r.filter_mean), cr.filter_mean_max),
        Check::at_most(
            format!("bound constant (s, s') = ({s}, {sp}) max / min over k"),
            max_of(|r| r.filter_constant) / min_of(|r| r.filter_constant),
            cr.filter_stability_max,
        ),
    ];
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

/// Checks that `values` decrease strictly and end below `max`.
fn decay_checks(name: &str, values: &[f64], max: f64) -> Vec<Check> {
    let worst_step = values.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mut out = vec![Check::at_most(format!("{name} at the finest level"), *values.last().unwrap_or(&f64::NAN), max)];
    if values.len() >= 2 {
        out.push(Check::at_most(format!("{name} largest ratio between levels"), worst_step, 1.0 - 1e-12));
    }
    out
}

fn boundary_runs(cfg: &ExperimentConfig) -> Vec<(f64, usize, usize)> {
    let mut runs = Vec::new();
    for &k in &cfg.ks {
        for &level in &cfg.levels {
            runs.push((k, level, cfg.degree.degree(k)));
        }
    }
    runs
}

fn boundary_record(cfg: &ExperimentConfig, gamma: &BoundaryMesh, basis: &TraceBasis, k: f64, level: usize) -> RunRecord {
    let h = gamma.panels.iter().map(|p| p.h).fold(0.0, f64::max);
    let mut r = base_record(cfg, VolumeKind::Conforming, k, level, basis.p, h);
    r.formulation = "boundary".into();
    r.n_w = basis.n_w();
    r.n_z = basis.n_z();
    r
}

pub fn run_jumps(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let runs = boundary_runs(cfg);
    let records = collect(
        runs.par_iter()
            .map(|&(k, level, p)| {
                let (gamma, _) = circle_boundary(cfg, level)?;
                let basis = TraceBasis::new(p, gamma.len());
                let density = |t: f64| C::new(t.cos() + 0.5 * (2.0 * t).sin(), 0.3 * (3.0 * t).cos());
                let mut worst = 0.0f64;
                for space in [TraceSpace::W, TraceSpace::Z] {
                    let c = l2_project(&gamma, &basis, space, density)?;
                    worst = worst.max(jump_errors(k, &gamma, basis, space, &c, cfg.jump_offset)?.max());
                }
                let mut r = boundary_record(cfg, &gamma, &basis, k, level);
                r.jump_error = Some(worst);
                Ok(r)
            })
            .collect(),
    )?;
    let mut checks = Vec::new();
    for &k in &cfg.ks {
        let v: Vec<f64> = records.iter().filter(|r| r.k == k).filter_map(|r| r.jump_error).collect();
        checks.extend(decay_checks(&format!("k={k} jump relation error"), &v, cfg.criteria.jump_max));
    }
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

pub fn run_calderon(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let runs = boundary_runs(cfg);
    let records = collect(
        runs.par_iter()
            .map(|&(k, level, p)| {
                let (gamma, _) = circle_boundary(cfg, level)?;
                let basis = TraceBasis::new(p, gamma.len());
                let t0 = Instant::now();
                let ops = assemble_operators(k, &gamma, &basis, &QuadConfig::default())?;
                let mut r = boundary_record(cfg, &gamma, &basis, k, level);
                r.timings.bem = t0.elapsed().as_secs_f64();
                r.calderon_residual = Some(calderon_residual(&ops, &gamma, cfg.calderon_modes)?);
                Ok(r)
            })
            .collect(),
    )?;
    let mut checks = Vec::new();
    for &k in &cfg.ks {
        let v: Vec<f64> = records.iter().filter(|r| r.k == k).filter_map(|r| r.calderon_residual).collect();
        checks.extend(decay_checks(&format!("k={k} Calderon residual"), &v, cfg.criteria.calderon_max));
    }
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

fn random_triple(rng: &mut ChaCha8Rng, s: &SpaceTriple) -> ThreeFieldVector {
    let mut v = |n: usize| (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect::<Vec<_>>();
    let x = ThreeFieldVector { u: v(s.n_volume), m: v(s.n_w), ext: v(s.n_z) };
    let n = x.norm_l2();
    ThreeFieldVector { u: x.u.iter().map(|z| z / n).collect(), m: x.m.iter().map(|z| z / n).collect(), ext: x.ext.iter().map(|z| z / n).collect() }
}

/// Solves the adjoint problem for random smooth data (r, R_m, R_ext) and
/// compares T(Phi, Psi) with (Phi, r) + <m, R_m> + <u_ext, R_ext> for
/// random discrete Phi. Data and Phi have unit Euclidean norm.
pub fn run_adjoint_consistency(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let runs = sweep_runs(cfg);
    let records = collect(
        runs.par_iter()
            .enumerate()
            .map(|(idx, &(kind, k, level, p))| {
                let s = discretize(cfg, kind, k, level, p)?;
                let sys = assemble_coupled(&s.spaces, &s.vm, &s.ops)?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(idx as u64));
                let mut coef = || C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let waves: Vec<(C, f64)> = (0..3).map(|_| (coef(), TAU * coef().re)).collect();
                let rm: Vec<C> = (0..7).map(|_| coef()).collect();
                let re: Vec<C> = (0..7).map(|_| coef()).collect();
                let r = |x: Point| -> C {
                    waves.iter().map(|&(c, a)| c * C::from_polar(1.0, k * (a.cos() * x[0] + a.sin() * x[1]))).sum()
                };
                let trig = |c: &[C], t: f64| -> C { c.iter().enumerate().map(|(j, &z)| z * C::from_polar(1.0, (j as f64 - 3.0) * t)).sum() };
                let b = ThreeFieldVector {
                    u: volume_load(&s.mesh, &s.spaces, &r),
                    m: trace_load(&s.gamma, &s.spaces, TraceSpace::W, &|t| trig(&rm, t)),
                    ext: trace_load(&s.gamma, &s.spaces, TraceSpace::Z, &|t| trig(&re, t)),
                };
                let nb = b.norm_l2();
                let b = ThreeFieldVector {
                    u: b.u.iter().map(|z| z / nb).collect(),
                    m: b.m.iter().map(|z| z / nb).collect(),
                    ext: b.ext.iter().map(|z| z / nb).collect(),
                };
                let t0 = Instant::now();
                let adj = assemble_adjoint(&sys, b.clone());
                let psi = solve_system(&adj, cfg.solver).map_err(|e| DriverError::Solver {
                    context: format!("adjoint {} k={k} level={level} p={p}", kind_name(kind)),
                    source: e,
                })?;
                let mut worst = 0.0f64;
                for _ in 0..cfg.samples {
                    let phi = random_triple(&mut rng, &s.spaces);
                    let lhs = sys.form(&phi, &psi.x);
                    let rhs: C = phi.flat().iter().zip(b.flat()).map(|(x, y)| x * y.conj()).sum();
                    worst = worst.max((lhs - rhs).norm());
                }
                let mut rec = setup_record(cfg, &s);
                rec.timings.solve = t0.elapsed().as_secs_f64();
                rec.residual = Some(psi.residual);
                rec.valid = psi.residual <= cfg.criteria.residual_max;
                rec.adjoint_residual = Some(worst);
                Ok(rec)
            })
            .collect(),
    )?;
    let worst = records.iter().filter_map(|r| r.adjoint_residual).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most(format!("adjoint consistency residual ({} samples per run)", cfg.samples), worst, cfg.criteria.adjoint_max),
        residual_check(&records, cfg.criteria.residual_max),
    ];
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}

fn inverse_constant(cfg: &ExperimentConfig, gamma: &BoundaryMesh, p: usize) -> Result<f64, DriverError> {
    let basis = TraceBasis::new(p, gamma.len());
    let riesz = match cfg.realization {
        BoundaryRealization::Fourier => BoundaryFourier::new(gamma, basis, None)?.gram(TraceSpace::W, -0.5),
        BoundaryRealization::Riesz => {
            let ops0 = assemble_operators(0.0, gamma, &basis, &QuadConfig::default())?;
            riesz_grams(&ops0)?.0
        }
    };
    Ok(measure_inverse_inequality(&mesh_weighted_mass(gamma, &basis), &riesz)?)
}

/// sqrt of the largest eigenvalue of the h / p^2 weighted W_h mass matrix
/// against the H^{-1/2} Gram matrix, over levels at p = degree(k) and over
/// `degrees` on `degree_level`.
pub fn run_inverse_inequality(cfg: &ExperimentConfig) -> Result<Report, DriverError> {
    let k = cfg.ks[0];
    let p0 = cfg.degree.degree(k);
    let mut runs: Vec<(usize, usize, &str)> = cfg.levels.iter().map(|&l| (l, p0, "level")).collect();
    runs.extend(cfg.degrees.iter().map(|&p| (cfg.degree_level, p, "degree")));
    let records = collect(
        runs.par_iter()
            .map(|&(level, p, label)| {
                let (gamma, _) = circle_boundary(cfg, level)?;
                let basis = TraceBasis::new(p, gamma.len());
                let mut r = boundary_record(cfg, &gamma, &basis, k, level);
                r.label = label.into();
                r.inverse_constant = Some(inverse_constant(cfg, &gamma, p)?);
                Ok(r)
            })
            .collect(),
    )?;
    let variation = |label: &str| {
        let v: Vec<f64> = records.iter().filter(|r| r.label == label).filter_map(|r| r.inverse_constant).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        hi / lo - 1.0
    };
    let mut checks = vec![Check::at_most("inverse constant variation over levels", variation("level"), cfg.criteria.inverse_level_variation)];
    if !cfg.degrees.is_empty() {
        checks.push(Check::at_most("inverse constant variation over degrees", variation("degree"), cfg.criteria.inverse_degree_variation));
    }
    Ok(Report { experiment: cfg.experiment.name().into(), records, checks })
}
