//! Acceptance suite shared by the `validate` command and the `acceptance`
//! test target. Every criterion reports its measured values; nothing here
//! adjusts a tolerance to make a check pass.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{default_slices, dephasing_comparison, sweep_bz, sweep_n, SweepOptions};
use crate::config::{LdfConfig, ValidateConfig};
use crate::error::Result;
use crate::legendre::{
    conditional_ldfs, dual_minimizer, fitted_kink_slope, geometry_report, invert_curve_unchecked,
    invert_surface, lockdown_check, JointRateSurface,
};
use crate::linalg::{c, commutator, eigenvalues, max_abs, max_abs_diff};
use crate::liouville::{
    build_liouvillian, build_tilted_liouvillian, count_null_eigenvalues, log_partition,
    steady_state, CountingFields, DensityMatrix, LiouvillianParts, SteadySector,
};
use crate::model::{
    build_hamiltonian, build_jump_operators, build_symmetry_bases, equal_superposition_state,
    sector_superposition_state, ModelParams,
};
use crate::spectral::{linspace, Axis, KinkOptions, LdfSurface, SpectralEngine};
use crate::symmetry::{sector_overlap, BlockLabel, Sector, SectorOverlap, SymmetryBlockMap};
use crate::trajectories::{
    ensemble_run, freezing_statistics, xi_master_equation, EnsembleOptions, InitialState,
    TrajectoryOptions, DEFAULT_FREEZE_TOL,
};

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "symmetry structure"),
    (2, "steady states"),
    (3, "sector transport"),
    (4, "fluctuation theorem"),
    (5, "DPT structure"),
    (6, "spectral vs evolution"),
    (7, "joint geometry"),
    (8, "trajectory vs master equation"),
    (9, "dissipative freezing"),
    (10, "dephasing washout"),
    (11, "sweep structure"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, measured: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            measured: measured.into(),
            passed,
        }
    }

    /// `value ≤ tol`.
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self::new(name, value <= tol, format!("{value:.3e} (tol {tol:.0e})"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CriterionReport {
    /// One summary line followed by one indented line per check.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "criterion {:>2} {} {} ({:.2} s)",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64()
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "    [{}] {}: {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.measured
            )?;
        }
        Ok(())
    }
}

fn runtime_check(checks: &mut Vec<Check>, start: Instant, budget: f64, enforce: bool) {
    let t = start.elapsed().as_secs_f64();
    checks.push(Check::new(
        "runtime",
        !enforce || t < budget,
        format!("{t:.2} s (budget {budget} s{})", if enforce { "" } else { ", not enforced" }),
    ));
}

fn c1(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut out = Vec::new();
    let bases = build_symmetry_bases();
    let pi = &bases.exchange_op;
    let ev = eigenvalues(pi)?;
    let plus = ev.iter().filter(|z| (*z - c(1.0)).norm() < 1e-9).count();
    let minus = ev.iter().filter(|z| (*z + c(1.0)).norm() < 1e-9).count();
    out.push(Check::new(
        "exchange multiplicities",
        plus == 6 && minus == 2,
        format!("+1:{plus} -1:{minus}"),
    ));

    let param_sets = [
        ModelParams::reference(),
        ModelParams::reference().with_b_z(0.1).with_n_bath(0.5),
        ModelParams::reference().with_b_z(1.3).with_n_bath(1.0),
    ];
    let mut comm: f64 = 0.0;
    for p in &param_sets {
        comm = comm.max(max_abs(&commutator(pi, &build_hamiltonian(p))));
        for l in build_jump_operators(p).iter().take(2) {
            comm = comm.max(max_abs(&commutator(pi, l)));
        }
    }
    out.push(Check::at_most("[pi,H], [pi,L+-]", comm, 1e-12));

    let map = SymmetryBlockMap::shared();
    let dims: Vec<usize> = BlockLabel::ALL.iter().map(|&b| map.dim(b)).collect();
    out.push(Check::new(
        "block dims",
        dims == [36, 4, 12, 12],
        format!("{dims:?}"),
    ));

    let mut leak: f64 = 0.0;
    for p in &param_sets {
        let mut gens = vec![build_liouvillian(p).matrix];
        for (l, e) in [(0.7, -0.3), (-2.0, 1.5), (0.0, 3.0)] {
            gens.push(build_tilted_liouvillian(p, CountingFields::new(l, e)).matrix);
        }
        for g in &gens {
            for b in BlockLabel::ALL {
                leak = leak.max(map.leakage(g, b));
            }
        }
    }
    out.push(Check::at_most("block leakage", leak, 1e-12));
    runtime_check(&mut out, start, 1.0, opts.enforce_runtime);
    Ok(out)
}

fn c2(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let l = build_liouvillian(&p);
    let total = count_null_eigenvalues(&l.matrix, 1e-10)?;
    let map = SymmetryBlockMap::shared();
    let mut per_block = Vec::new();
    for b in BlockLabel::ALL {
        per_block.push(count_null_eigenvalues(&map.restrict(&l, b)?, 1e-10)?);
    }
    out.push(Check::new(
        "null eigenvalues at gamma=0",
        total == 2 && per_block == [1, 1, 0, 0],
        format!("total {total}, per block SS/AA/SA/AS {per_block:?}"),
    ));

    let bases = build_symmetry_bases();
    let mut worst: f64 = 0.0;
    for n in [0.1, 0.5, 1.0] {
        let rho = steady_state(&p.with_n_bath(n), SteadySector::A)?;
        let (g, e) = (&bases.antisym_basis[0], &bases.antisym_basis[1]);
        let expected = g * g.adjoint() * c((1.0 + n) / (1.0 + 2.0 * n))
            + e * e.adjoint() * c(n / (1.0 + 2.0 * n));
        worst = worst.max(max_abs_diff(&rho.0, &expected));
    }
    out.push(Check::at_most("antisymmetric steady state thermal", worst, 1e-10));

    let deph = count_null_eigenvalues(&build_liouvillian(&p.with_gamma_dephase(0.01)).matrix, 1e-10)?;
    out.push(Check::new(
        "null eigenvalues at gamma=0.01",
        deph == 1,
        deph.to_string(),
    ));
    runtime_check(&mut out, start, 5.0, opts.enforce_runtime);
    Ok(out)
}

fn c3() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let engine = SpectralEngine::new(&ModelParams::reference())?;
    let avg = engine.sector_averages()?;
    out.push(Check::at_most("|q_A|", avg.q_a.abs(), 1e-9));
    let grid = linspace(-4.0, 2.0, 61);
    let curve = engine.scan_curve(Axis::Lambda, 0.0, &grid, &SectorOverlap::only(Sector::A))?;
    let flat = curve.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    out.push(Check::at_most("max |mu_A(lambda,0)|", flat, 1e-9));
    out.push(Check::new("q_S < 0", avg.q_s < 0.0, format!("q_S = {:.7}", avg.q_s)));
    out.push(Check::new(
        "a_S > a_A > 0",
        avg.a_s > avg.a_a && avg.a_a > 0.0,
        format!("a_S = {:.7}, a_A = {:.7}", avg.a_s, avg.a_a),
    ));
    Ok(out)
}

fn c4() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let both = SectorOverlap::both();
    for n in [0.1, 0.5] {
        let p = ModelParams::reference().with_n_bath(n);
        let kappa = p.kappa();
        let engine = SpectralEngine::new(&p)?;
        let mu = |l: f64, e: f64| engine.mu(CountingFields::new(l, e), &both).map(|m| m.value);
        let mut d1: f64 = 0.0;
        for l in linspace(-4.0, 2.0, 201) {
            d1 = d1.max((mu(l, 0.0)? - mu(kappa - l, 0.0)?).abs());
        }
        out.push(Check::at_most(format!("theta GC, n={n}"), d1, 1e-8));
        let mut d2: f64 = 0.0;
        for l in linspace(-3.0, 1.0, 21) {
            for e in linspace(-1.0, 1.0, 21) {
                d2 = d2.max((mu(l, e)? - mu(kappa - l, e)?).abs());
            }
        }
        out.push(Check::at_most(format!("mu GC 21x21, n={n}"), d2, 1e-8));
    }
    Ok(out)
}

fn c5() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let kappa = p.kappa();
    let engine = SpectralEngine::new(&p)?;
    let avg = engine.sector_averages()?;
    let both = SectorOverlap::both();
    let kopt = KinkOptions::default();

    let lgrid = linspace(-4.0, 2.0, 601);
    let h = lgrid[1] - lgrid[0];
    let theta = engine.scan_curve(Axis::Lambda, 0.0, &lgrid, &both)?;
    let mut kinks = engine.kinks(&theta, &kopt)?;
    kinks.sort_by(|a, b| a.position.total_cmp(&b.position));
    let pos: Vec<String> = kinks.iter().map(|k| format!("{:.6}", k.position)).collect();
    let placed = kinks.len() == 2
        && (kinks[0].position - kappa).abs() <= h
        && kinks[1].position.abs() <= h;
    out.push(Check::new(
        "theta kinks at kappa and 0",
        placed,
        format!("[{}] vs kappa {kappa:.6}, cell {h:.3}", pos.join(", ")),
    ));
    if let Some(k0) = kinks.iter().min_by(|a, b| a.position.abs().total_cmp(&b.position.abs())) {
        out.push(Check::at_most(
            "theta jump at 0 vs |q_S|",
            (k0.jump.abs() - avg.q_s.abs()).abs(),
            1e-4,
        ));
    }

    let egrid = linspace(-1.0, 1.0, 201);
    let he = egrid[1] - egrid[0];
    let zeta = engine.scan_curve(Axis::Epsilon, 0.0, &egrid, &both)?;
    let zk = engine.kinks(&zeta, &kopt)?;
    out.push(Check::new(
        "zeta single kink at 0",
        zk.len() == 1 && zk[0].position.abs() <= he,
        format!(
            "{} kink(s) at {:?}",
            zk.len(),
            zk.iter().map(|k| k.position).collect::<Vec<_>>()
        ),
    ));
    if zk.len() == 1 {
        out.push(Check::at_most(
            "zeta jump vs a_S - a_A",
            (zk[0].jump.abs() - (avg.a_s - avg.a_a)).abs(),
            1e-4,
        ));
    }

    let ns = [0.1, 0.2, 0.5, 1.0];
    let opts = SweepOptions::default();
    let sweep = sweep_n(&p.with_b_z(0.1), &ns, &opts)?;
    let hl = opts.lambda_grid[1] - opts.lambda_grid[0];
    let mut worst_delta: f64 = 0.0;
    let mut worst_jump: f64 = 0.0;
    let mut missing = 0;
    for pt in &sweep.points {
        match (pt.delta, pt.jump_q) {
            (Some(d), Some(j)) => {
                worst_delta = worst_delta.max((d - ((pt.value + 1.0) / pt.value).ln()).abs());
                worst_jump = worst_jump.max((j.abs() - pt.averages.q_s.abs()).abs());
            }
            _ => missing += 1,
        }
    }
    out.push(Check::new(
        "delta = ln((n+1)/n), n in {0.1,0.2,0.5,1}",
        missing == 0 && worst_delta <= hl,
        format!("max error {worst_delta:.3e} (cell {hl:.3}), {missing} point(s) without two kinks"),
    ));
    out.push(Check::at_most("sweep jump_q vs |q_S|", worst_jump, 1e-4));
    Ok(out)
}

fn c6(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let p = ModelParams::reference();
    let engine = SpectralEngine::new(&p)?;
    let rho0 = DensityMatrix::maximally_mixed();
    let overlap = sector_overlap(&rho0, crate::symmetry::DEFAULT_OVERLAP_THRESHOLD);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let t = 2000.0;
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for _ in 0..5 {
        let (l, e) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let f = CountingFields::new(l, e);
        let z = log_partition(&rho0, t, &build_tilted_liouvillian(&p, f), 50.0) / t;
        let mu = engine.mu(f, &overlap)?.value;
        worst = worst.max((z - mu).abs());
        detail.push(format!("({l:.3},{e:.3}): {:+.2e}", z - mu));
    }
    let mut out = vec![Check::new(
        "|(1/t) ln Z - mu| at t=2000",
        worst <= 1e-4,
        format!("max {worst:.3e} (tol 1e-4); {}", detail.join(" ")),
    )];
    runtime_check(&mut out, start, 30.0, opts.enforce_runtime);
    Ok(out)
}

fn c7() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let engine = SpectralEngine::new(&p)?;
    let avg = engine.sector_averages()?;
    let geo = geometry_report(&avg, &p)?;
    let cfg = LdfConfig::default();

    let lgrid = cfg.surface_lambda_grid(p.kappa());
    let egrid = cfg.surface_epsilon.values();
    let surface = engine.scan_surface(&lgrid, &egrid, &SectorOverlap::both())?;
    let (qg, ag) = (cfg.q.values(), cfg.a.values());
    let joint = invert_surface(&surface, &qg, &ag);
    let da = ag[1] - ag[0];

    let mut wrong_marker = 0;
    let mut interior_escape = 0;
    for (i, &q) in qg.iter().enumerate() {
        for (j, &a) in ag.iter().enumerate() {
            let outside = q.abs() > a + 1e-12;
            if joint.cells[(i, j)].is_infeasible() != outside {
                wrong_marker += 1;
            }
            if q.abs() > a + da {
                let (li, ej) = dual_minimizer(&surface, q, a);
                if li != 0 && ej != 0 && li + 1 != lgrid.len() && ej + 1 != egrid.len() {
                    interior_escape += 1;
                }
            }
        }
    }
    out.push(Check::new(
        "infeasible exactly on |q| > a",
        wrong_marker == 0 && interior_escape == 0,
        format!("{wrong_marker} mismarked cells, {interior_escape} |q|>a cells with interior dual minimizer"),
    ));

    let lock = lockdown_check(&joint, geo.a_c);
    out.push(Check::new(
        "lockdown below a_c",
        lock.max_abs_g_zero_current <= 1e-6 && lock.finite_nonzero_current == 0,
        format!(
            "a_c = {:.6}; max |G(0,a)| = {:.3e}; {} of {} cells with q != 0 finite",
            geo.a_c, lock.max_abs_g_zero_current, lock.finite_nonzero_current, lock.cells_checked
        ),
    ));

    let w = cfg.slope_window;
    let fine_l = linspace(-w, w, cfg.slope_points);
    let fine_e = linspace(-2.0 * w, 2.0 * w, 2 * cfg.slope_points - 1);
    let fine = engine.scan_surface(&fine_l, &fine_e, &SectorOverlap::both())?;
    let fitted = fitted_kink_slope(&fine, w)?;
    let rel = ((fitted - geo.u0) / geo.u0).abs();
    out.push(Check::new(
        "u0 formula vs fitted slope",
        rel <= 0.05,
        format!("u0 = {:.5}, fitted = {fitted:.5}, rel {rel:.2e} (tol 5e-2)", geo.u0),
    ));

    let sym = conditional_symmetry(&surface, &joint)?;
    out.push(Check::new(
        "G_A(a|q) = G_A(a|-q)",
        sym.0 <= 1e-8 && sym.1 == 0,
        format!("max diff {:.3e} (tol 1e-8), {} status mismatches", sym.0, sym.1),
    ));
    Ok(out)
}

/// Largest mirror difference of `G_A(a|q)` and the number of cells whose
/// status (value vs infeasible) differs from the mirror cell.
fn conditional_symmetry(surface: &LdfSurface, joint: &JointRateSurface) -> Result<(f64, usize)> {
    let i0 = LdfSurface::find(&surface.lambda_grid, 0.0)
        .ok_or_else(|| crate::Error::GridMismatch("surface λ grid lacks 0".into()))?;
    let j0 = LdfSurface::find(&surface.epsilon_grid, 0.0)
        .ok_or_else(|| crate::Error::GridMismatch("surface ε grid lacks 0".into()))?;
    let fq = invert_curve_unchecked(&surface.lambda_slice(j0), &joint.q_grid);
    let ia = invert_curve_unchecked(&surface.epsilon_slice(i0), &joint.a_grid);
    let cond = conditional_ldfs(joint, &fq, &ia)?;
    let ga = &cond.activity_given_current;
    let nq = joint.q_grid.len();
    let mut worst: f64 = 0.0;
    let mut mismatch = 0;
    for i in 0..nq {
        for j in 0..joint.a_grid.len() {
            match (ga[(i, j)].value(), ga[(nq - 1 - i, j)].value()) {
                (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                (None, None) => {}
                _ => mismatch += 1,
            }
        }
    }
    Ok((worst, mismatch))
}

fn c8(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let start = Instant::now();
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let psi = equal_superposition_state();
    let rho0 = DensityMatrix::pure(&psi);
    let duration = 500.0;
    let eopts = |seed: u64| EnsembleOptions {
        n_traj: opts.n_traj,
        master_seed: seed,
        trajectory: TrajectoryOptions::default(),
        keep_records: 0,
    };
    for (k, g) in [0.0, 0.001, 0.01].into_iter().enumerate() {
        let pg = p.with_gamma_dephase(g);
        let stats = ensemble_run(&pg, &InitialState::Pure(psi.clone()), duration, &eopts(opts.seed + k as u64))?;
        let n = stats.times.len();
        let idx: Vec<usize> = (1..=10).map(|m| m * (n - 1) / 10).collect();
        let times: Vec<f64> = idx.iter().map(|&i| stats.times[i]).collect();
        let me = xi_master_equation(&pg, &rho0, &times);
        let mut worst_z: f64 = 0.0;
        for (&i, m) in idx.iter().zip(&me) {
            let d = (stats.mean_xi[i] - m).abs();
            let se = stats.stderr_xi[i];
            let z = if se > 0.0 { d / se } else if d < 1e-12 { 0.0 } else { f64::INFINITY };
            worst_z = worst_z.max(z);
        }
        out.push(Check::new(
            format!("xi ensemble vs master equation, gamma={g}"),
            worst_z <= 3.0,
            format!("max |z| = {worst_z:.2} over 10 checkpoints (n_traj {})", opts.n_traj),
        ));
    }

    let avg = SpectralEngine::new(&p)?.sector_averages()?;
    for (k, (sector, steady)) in [(Sector::S, SteadySector::S), (Sector::A, SteadySector::A)]
        .into_iter()
        .enumerate()
    {
        let init = InitialState::steady_state(&p, steady)?;
        let stats = ensemble_run(&p, &init, duration, &eopts(opts.seed + 10 + k as u64))?;
        let zq = (stats.mean_q - avg.current(sector)).abs() / stats.stderr_q;
        let za = (stats.mean_a - avg.activity(sector)).abs() / stats.stderr_a;
        out.push(Check::new(
            format!("sector {sector} means of q, a"),
            zq <= 3.0 && za <= 3.0,
            format!(
                "q {:.5} vs {:.5} (|z| {zq:.2}); a {:.5} vs {:.5} (|z| {za:.2})",
                stats.mean_q,
                avg.current(sector),
                stats.mean_a,
                avg.activity(sector)
            ),
        ));
    }
    runtime_check(&mut out, start, 300.0, opts.enforce_runtime);
    Ok(out)
}

fn c9(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let n = opts.n_traj as f64;
    for (k, w) in [0.5, 0.25].into_iter().enumerate() {
        let eo = EnsembleOptions {
            n_traj: opts.n_traj,
            master_seed: opts.seed + 20 + k as u64,
            trajectory: TrajectoryOptions {
                n_samples: 201,
                ..TrajectoryOptions::default()
            },
            keep_records: 0,
        };
        let stats = ensemble_run(&p, &InitialState::Pure(sector_superposition_state(w)), 2000.0, &eo)?;
        match freezing_statistics(&stats, DEFAULT_FREEZE_TOL) {
            Ok(f) => {
                let sigma = (w * (1.0 - w) / n).sqrt();
                out.push(Check::new(
                    format!("xi(0)={w}: all frozen, fraction to A"),
                    (f.fraction_to_a - w).abs() <= 3.0 * sigma,
                    format!(
                        "{} of {} frozen; fraction {:.4} vs {w} (3 sigma = {:.4}); mean collapse time {:.1}",
                        f.n_traj, opts.n_traj, f.fraction_to_a, 3.0 * sigma, f.mean_collapse_time
                    ),
                ));
            }
            Err(e) => out.push(Check::new(format!("xi(0)={w}: all frozen"), false, e.to_string())),
        }
    }
    Ok(out)
}

fn c10(opts: &ValidateConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let p = ModelParams::reference();
    let cmp = dephasing_comparison(
        &p,
        &[0.0, 0.01],
        &default_slices(),
        |axis| match axis {
            Axis::Lambda => linspace(-3.0, 1.0, 401),
            Axis::Epsilon => linspace(-1.0, 1.0, 201),
        },
        &KinkOptions::default(),
    )?;
    let describe = |g: f64| {
        cmp.slices
            .iter()
            .filter(|s| s.gamma == g)
            .map(|s| format!("{}@{}:{}", s.slice.axis, s.slice.fixed, s.kinks.len()))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let clean_ok = cmp.slices.iter().filter(|s| s.gamma == 0.0).all(|s| match s.slice.axis {
        Axis::Lambda => s.kinks.len() == 2,
        Axis::Epsilon => !s.kinks.is_empty(),
    });
    out.push(Check::new("kinks at gamma=0", clean_ok, describe(0.0)));
    let noisy_ok = cmp
        .slices
        .iter()
        .filter(|s| s.gamma == 0.01)
        .all(|s| s.kinks.is_empty());
    out.push(Check::new("no kinks at gamma=0.01", noisy_ok, describe(0.01)));

    let n_traj = opts.n_traj.min(500);
    let eo = |seed| EnsembleOptions {
        n_traj,
        master_seed: seed,
        trajectory: TrajectoryOptions::default(),
        keep_records: 0,
    };
    let anti = ensemble_run(
        &p,
        &InitialState::steady_state(&p, SteadySector::A)?,
        2000.0,
        &eo(opts.seed + 30),
    )?;
    let events = anti.c_plus_times().count() + anti.c_minus_times().count();
    out.push(Check::new(
        "no C+- events from antisymmetric starts at gamma=0",
        events == 0,
        format!("{events} events over {n_traj} trajectories"),
    ));
    let deph = ensemble_run(
        &p.with_gamma_dephase(0.01),
        &InitialState::Pure(equal_superposition_state()),
        2000.0,
        &eo(opts.seed + 31),
    )?;
    let inter = deph.intermittency();
    let frac = inter.quiescent_fraction();
    out.push(Check::new(
        "quiescent windows at gamma=0.01",
        frac > 0.0 && frac < 1.0,
        format!(
            "{} of {} windows quiescent ({frac:.3}); {} C+ / {} C- events",
            inter.quiescent,
            inter.windows,
            deph.c_plus_times().count(),
            deph.c_minus_times().count()
        ),
    ));
    Ok(out)
}

fn c11() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let values = linspace(0.05, 1.5, 30);
    let sweep = sweep_bz(&ModelParams::reference(), &values, &SweepOptions::default())?;
    let spread = |f: &dyn Fn(&crate::analysis::SweepPoint) -> f64| {
        let v: Vec<f64> = sweep.points.iter().map(f).collect();
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    out.push(Check::at_most("|q_A| spread over B_z", spread(&|p| p.averages.q_a.abs()), 1e-8));
    out.push(Check::at_most("a_A spread over B_z", spread(&|p| p.averages.a_a), 1e-8));
    let grid_step = 2.0 * sweep.resolution;
    out.push(match (sweep.argmax_q, sweep.argmax_a) {
        (Some(bq), Some(ba)) => Check::new(
            "common interior maximum",
            (bq - ba).abs() <= grid_step,
            format!("B_z* = {bq:.4} (current), {ba:.4} (activity); grid step {grid_step:.3}"),
        ),
        other => Check::new("common interior maximum", false, format!("{other:?}")),
    });
    let deltas: Vec<f64> = sweep.points.iter().filter_map(|p| p.delta).collect();
    let dspread = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - deltas.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(Check::new(
        "delta constant in B_z",
        deltas.len() == sweep.points.len() && dspread <= 1e-6,
        format!(
            "spread {dspread:.3e} (tol 1e-6) over {} of {} points",
            deltas.len(),
            sweep.points.len()
        ),
    ));
    Ok(out)
}

/// Runs one criterion; computation errors are reported as a failing check.
pub fn run_criterion(id: u8, opts: &ValidateConfig) -> CriterionReport {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, t)| t);
    let start = Instant::now();
    let result = match id {
        1 => c1(opts),
        2 => c2(opts),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(opts),
        7 => c7(),
        8 => c8(opts),
        9 => c9(opts),
        10 => c10(opts),
        11 => c11(),
        _ => Ok(vec![Check::new("known criterion", false, format!("no criterion {id}"))]),
    };
    let checks = result.unwrap_or_else(|e| vec![Check::new("evaluation", false, e.to_string())]);
    CriterionReport {
        id,
        title,
        checks,
        elapsed: start.elapsed(),
    }
}

pub fn run_all(opts: &ValidateConfig) -> Vec<CriterionReport> {
    CRITERIA.iter().map(|(id, _)| run_criterion(*id, opts)).collect()
}

/// Expected-fail check for configurations without the exchange symmetry:
/// reports the commutator `[π, L_D]` instead of asserting it vanishes.
pub fn symmetry_commutator(params: &ModelParams) -> Check {
    let pi = build_symmetry_bases().exchange_op;
    let worst = build_jump_operators(params)
        .iter()
        .map(|l| max_abs(&commutator(&pi, l)))
        .fold(max_abs(&commutator(&pi, &build_hamiltonian(params))), f64::max);
    Check::new(
        "config: [pi, H] = [pi, L_k] = 0",
        worst <= 1e-12,
        format!("max commutator {worst:.3e}"),
    )
}

/// GC residual `max |μ(λ) − μ(κ−λ)|` of a generator assembled from `parts`
/// with arbitrary tilt weights; used to show the identity detects a wrong
/// sign in the tilt.
pub fn gc_residual(
    parts: &LiouvillianParts,
    kappa: f64,
    weights: impl Fn(f64) -> (f64, f64),
    grid: &[f64],
) -> Result<f64> {
    let lead = |l: f64| -> Result<f64> {
        let (wp, wm) = weights(l);
        let m = &parts.base + &parts.plus * c(wp) + &parts.minus * c(wm);
        Ok(crate::linalg::leading_eigenvalue(&m)?.re)
    };
    let mut worst: f64 = 0.0;
    for &l in grid {
        worst = worst.max((lead(l)? - lead(kappa - l)?).abs());
    }
    Ok(worst)
}
