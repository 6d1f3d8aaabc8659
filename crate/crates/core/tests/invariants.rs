use num_complex::Complex64;
use proptest::prelude::*;

use symfcs::legendre::invert_curve_unchecked;
use symfcs::linalg::{c, max_abs_diff, CMat};
use symfcs::liouville::{
    build_liouvillian, build_tilted_liouvillian, devectorize, evolve, vectorize, CountingFields,
    DensityMatrix,
};
use symfcs::model::{build_symmetry_bases, ModelParams, DIM};
use symfcs::spectral::{linspace, Axis, SpectralEngine};
use symfcs::symmetry::{sector_overlap, Sector, SectorOverlap, DEFAULT_OVERLAP_THRESHOLD};

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..1.5f64, 0.02..0.5f64, 0.05..2.0f64).prop_map(|(b, g, n)| ModelParams {
        b_z: b,
        gamma_bath: g,
        n_bath: n,
        gamma_dephase: 0.0,
    })
}

fn density() -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec(-1.0..1.0f64, 2 * DIM * DIM).prop_map(|xs| {
        let g = CMat::from_fn(DIM, DIM, |i, j| {
            let k = 2 * (i * DIM + j);
            Complex64::new(xs[k], xs[k + 1])
        });
        let m = &g * g.adjoint();
        let tr = symfcs::linalg::trace(&m).re;
        DensityMatrix(m * c(1.0 / tr))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(p in params(), g in 0.0..0.05f64, rho in density()) {
        let l = build_liouvillian(&p.with_gamma_dephase(g));
        let out = devectorize(&(&l.matrix * vectorize(&rho))).unwrap();
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!(max_abs_diff(&out.0, &out.0.adjoint()) < 1e-12);
    }

    #[test]
    fn evolution_keeps_states_physical(p in params(), rho in density(), t in 0.0..50.0f64) {
        let out = evolve(&rho, t, &build_liouvillian(&p));
        prop_assert!((out.trace() - c(1.0)).norm() < 1e-10);
        let h = (&out.0 + out.0.adjoint()) * c(0.5);
        prop_assert!(h.symmetric_eigenvalues().iter().all(|&e| e > -1e-9));
    }

    #[test]
    fn sector_weight_is_conserved(p in params(), rho in density(), t in 0.0..200.0f64) {
        let w0 = sector_overlap(&rho, DEFAULT_OVERLAP_THRESHOLD).weight_a;
        let out = evolve(&rho, t, &build_liouvillian(&p));
        let w1 = out.expect(&build_symmetry_bases().antisym_projector).re;
        prop_assert!((w0 - w1).abs() < 1e-10, "{w0} -> {w1}");
    }

    #[test]
    fn gallavotti_cohen(p in params(), g in prop_oneof![Just(0.0), 0.001..0.05f64],
                        l in -3.0..1.0f64, e in -1.0..1.0f64) {
        let p = p.with_gamma_dephase(g);
        let engine = SpectralEngine::new(&p).unwrap();
        let both = SectorOverlap::both();
        let a = engine.mu(CountingFields::new(l, e), &both).unwrap().value;
        let b = engine.mu(CountingFields::new(p.kappa() - l, e), &both).unwrap().value;
        prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn scgf_is_convex_along_lines(p in params(), x0 in -2.0..1.0f64, y0 in -1.0..1.0f64,
                                  x1 in -2.0..1.0f64, y1 in -1.0..1.0f64) {
        let engine = SpectralEngine::new(&p).unwrap();
        let both = SectorOverlap::both();
        let mu = |l: f64, e: f64| engine.mu(CountingFields::new(l, e), &both).unwrap().value;
        let mid = mu(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        prop_assert!(mid <= 0.5 * (mu(x0, y0) + mu(x1, y1)) + 1e-10);
    }

    #[test]
    fn scgf_vanishes_at_origin_and_mu_a_is_flat(p in params(), l in -4.0..2.0f64) {
        let engine = SpectralEngine::new(&p).unwrap();
        let origin = engine.mu(CountingFields::ZERO, &SectorOverlap::both()).unwrap().value;
        prop_assert!(origin.abs() < 1e-10);
        let a = engine.mu(CountingFields::current(l), &SectorOverlap::only(Sector::A)).unwrap().value;
        prop_assert!(a.abs() < 1e-9);
    }

    #[test]
    fn activity_bounds_current(p in params()) {
        let avg = SpectralEngine::new(&p).unwrap().sector_averages().unwrap();
        prop_assert!(avg.q_s.abs() <= avg.a_s + 1e-12);
        prop_assert!(avg.q_a.abs() <= 1e-9);
        prop_assert!(avg.a_s > avg.a_a && avg.a_a > 0.0);
    }

    #[test]
    fn rate_function_is_nonpositive_and_concave(p in params()) {
        let engine = SpectralEngine::new(&p).unwrap();
        let grid = linspace(-4.0, 2.0, 241);
        let theta = engine.scan_curve(Axis::Lambda, 0.0, &grid, &SectorOverlap::both()).unwrap();
        let f = invert_curve_unchecked(&theta, &linspace(-0.03, 0.03, 31));
        for w in f.values.windows(3) {
            prop_assert!(w[1] + 1e-12 >= 0.5 * (w[0] + w[2]));
        }
        prop_assert!(f.values.iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn tilt_with_zero_fields_is_the_generator(p in params(), g in 0.0..0.05f64) {
        let p = p.with_gamma_dephase(g);
        let a = build_liouvillian(&p).matrix;
        let b = build_tilted_liouvillian(&p, CountingFields::ZERO).matrix;
        prop_assert_eq!(a, b);
    }
}

#[test]
fn antisymmetric_ensemble_has_no_current_cumulants() {
    let engine = SpectralEngine::new(&ModelParams::reference()).unwrap();
    let grid = linspace(-4.0, 2.0, 61);
    let curve = engine
        .scan_curve(Axis::Lambda, 0.3, &grid, &SectorOverlap::only(Sector::A))
        .unwrap();
    let lo = curve.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = curve.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo < 1e-9, "mu_A varies along lambda at epsilon = 0.3: {lo} .. {hi}");
}
