//! Fock-Liouville representation of the master equation and its tilted
//! (counting-field) deformation.
//!
//! Density matrices are column-stacked: `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`, so
//! left multiplication is `I ⊗ A` and right multiplication is `Bᵀ ⊗ I`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, dagger, expm, identity, kron, CMat, CVec, I};
use crate::model::{build_hamiltonian, build_jump_operators, ModelParams, DIM};
use crate::symmetry::{BlockLabel, SymmetryBlockMap};

/// Dimension of the Fock-Liouville space.
pub const LDIM: usize = DIM * DIM;

/// Bias fields: `lambda` conjugate to the current, `epsilon` to the activity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CountingFields {
    pub lambda: f64,
    pub epsilon: f64,
}

impl CountingFields {
    pub const ZERO: CountingFields = CountingFields {
        lambda: 0.0,
        epsilon: 0.0,
    };

    pub fn new(lambda: f64, epsilon: f64) -> Self {
        Self { lambda, epsilon }
    }

    pub fn current(lambda: f64) -> Self {
        Self::new(lambda, 0.0)
    }

    pub fn activity(epsilon: f64) -> Self {
        Self::new(0.0, epsilon)
    }

    /// Weight `e^{-λ-ε}` on absorption jumps.
    pub fn plus_weight(&self) -> f64 {
        (-self.lambda - self.epsilon).exp()
    }

    /// Weight `e^{+λ-ε}` on emission jumps.
    pub fn minus_weight(&self) -> f64 {
        (self.lambda - self.epsilon).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    pub matrix: CMat,
    pub tilt: Option<CountingFields>,
}

impl SuperOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        devectorize(&(&self.matrix * vectorize(rho))).expect("square superoperator")
    }

    pub fn eigenvalues(&self) -> Result<Vec<num_complex::Complex64>> {
        linalg::eigenvalues(&self.matrix)
    }
}

/// An 8×8 operator on the register; "physical" when Hermitian, unit trace and
/// positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != DIM || m.ncols() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                got: m.nrows().max(m.ncols()),
            });
        }
        Ok(Self(m))
    }

    pub fn maximally_mixed() -> Self {
        Self(identity(DIM) * c(1.0 / DIM as f64))
    }

    pub fn pure(psi: &CVec) -> Self {
        let n = psi.norm_squared();
        Self(psi * psi.adjoint() * c(1.0 / n))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn trace(&self) -> num_complex::Complex64 {
        linalg::trace(&self.0)
    }

    /// Hermitian part divided by its trace.
    pub fn normalized(&self) -> Self {
        let h = (&self.0 + self.0.adjoint()) * c(0.5);
        let t = linalg::trace(&h).re;
        Self(h * c(1.0 / t))
    }

    pub fn is_physical(&self) -> bool {
        if !linalg::is_hermitian(&self.0, 1e-12) || (self.trace() - c(1.0)).norm() > 1e-12 {
            return false;
        }
        let h = (&self.0 + self.0.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().all(|&e| e >= -1e-10)
    }

    /// Expectation value `Tr(op ρ)`.
    pub fn expect(&self, op: &CMat) -> num_complex::Complex64 {
        linalg::trace(&(op * &self.0))
    }
}

pub fn vectorize(rho: &DensityMatrix) -> CVec {
    CVec::from_column_slice(rho.0.as_slice())
}

pub fn devectorize(v: &CVec) -> Result<DensityMatrix> {
    if v.len() != LDIM {
        return Err(Error::DimensionMismatch {
            expected: LDIM,
            got: v.len(),
        });
    }
    Ok(DensityMatrix(CMat::from_column_slice(DIM, DIM, v.as_slice())))
}

/// Hilbert-Schmidt product `Tr(σ†ρ)` of two vectorized operators.
pub fn hs_inner(sigma: &CVec, rho: &CVec) -> num_complex::Complex64 {
    sigma.dotc(rho)
}

pub fn left_mul(a: &CMat) -> CMat {
    kron(&identity(a.nrows()), a)
}

pub fn right_mul(b: &CMat) -> CMat {
    kron(&b.transpose(), &identity(b.nrows()))
}

/// `ρ ↦ L ρ L†`.
pub fn sandwich(l: &CMat) -> CMat {
    kron(&l.conjugate(), l)
}

/// `ρ ↦ -½{ρ, L†L}`.
pub fn anticommutator_term(l: &CMat) -> CMat {
    let ldl = dagger(l) * l;
    (left_mul(&ldl) + right_mul(&ldl)) * c(-0.5)
}

/// The Liouvillian split into its tilt-independent part and the two
/// counted jump terms, so that `L(λ,ε) = base + e^{-λ-ε} plus + e^{λ-ε} minus`.
#[derive(Debug, Clone)]
pub struct LiouvillianParts {
    pub base: CMat,
    pub plus: CMat,
    pub minus: CMat,
}

impl LiouvillianParts {
    pub fn new(params: &ModelParams) -> Self {
        let h = build_hamiltonian(params);
        let ops = build_jump_operators(params);
        let mut base = (left_mul(&h) - right_mul(&h)) * (-I);
        for (k, l) in ops.iter().enumerate() {
            base += anticommutator_term(l);
            if k >= 2 {
                base += sandwich(l);
            }
        }
        Self {
            base,
            plus: sandwich(&ops[0]),
            minus: sandwich(&ops[1]),
        }
    }

    pub fn assemble(&self, fields: CountingFields) -> CMat {
        &self.base + &self.plus * c(fields.plus_weight()) + &self.minus * c(fields.minus_weight())
    }

    /// No-jump generator: the tilted Liouvillian with counted jump terms removed.
    pub fn no_jump(&self) -> &CMat {
        &self.base
    }
}

pub fn build_liouvillian(params: &ModelParams) -> SuperOperator {
    SuperOperator {
        matrix: LiouvillianParts::new(params).assemble(CountingFields::ZERO),
        tilt: None,
    }
}

pub fn build_tilted_liouvillian(params: &ModelParams, fields: CountingFields) -> SuperOperator {
    SuperOperator {
        matrix: LiouvillianParts::new(params).assemble(fields),
        tilt: Some(fields),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SteadySector {
    S,
    A,
    Full,
}

/// Number of eigenvalues of `m` with modulus at most `tol`.
pub fn count_null_eigenvalues(m: &CMat, tol: f64) -> Result<usize> {
    Ok(linalg::eigenvalues(m)?
        .iter()
        .filter(|z| z.norm() <= tol)
        .count())
}

/// Unit-trace null vector of `m` (a square matrix acting on coefficients in
/// the orthonormal basis `basis`, whose columns are vectorized operators).
fn null_operator(m: &CMat, basis: &CMat) -> Result<DensityMatrix> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let coeffs: CVec = v_t.row(k).adjoint();
    let rho = devectorize(&(basis * coeffs))?;
    let tr = rho.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::NoPhysicalState);
    }
    Ok(DensityMatrix(rho.0 * (c(1.0) / tr)).normalized())
}

/// Stationary state of the master equation in the requested sector.
///
/// `S` and `A` require the exchange symmetry (γ = 0); `Full` requires a
/// unique fixed point.
pub fn steady_state(params: &ModelParams, sector: SteadySector) -> Result<DensityMatrix> {
    let l = build_liouvillian(params);
    match sector {
        SteadySector::Full => {
            let nulls = count_null_eigenvalues(&l.matrix, 1e-10)?;
            if nulls > 1 {
                return Err(Error::NonUniqueSteadyState(nulls));
            }
            null_operator(&l.matrix, &identity(LDIM))
        }
        SteadySector::S | SteadySector::A => {
            let blocks = SymmetryBlockMap::build();
            let label = if sector == SteadySector::S {
                BlockLabel::SS
            } else {
                BlockLabel::AA
            };
            let restricted = blocks.restrict(&l, label)?;
            null_operator(&restricted, blocks.basis(label))
        }
    }
}

/// `exp(superop · t)` applied to `ρ0`. Tilted generators give an
/// unnormalized result.
pub fn evolve(rho0: &DensityMatrix, t: f64, superop: &SuperOperator) -> DensityMatrix {
    assert!(t >= 0.0, "evolve requires t >= 0");
    if t == 0.0 {
        return rho0.clone();
    }
    let prop = expm(&(&superop.matrix * c(t)));
    devectorize(&(prop * vectorize(rho0))).expect("dimension checked by construction")
}

/// `ln Tr[exp(superop · t) ρ0]`, propagated in chunks of length `chunk` with
/// renormalization so that large growth or decay rates do not overflow.
pub fn log_partition(rho0: &DensityMatrix, t: f64, superop: &SuperOperator, chunk: f64) -> f64 {
    assert!(t >= 0.0 && chunk > 0.0);
    let steps = (t / chunk).floor() as usize;
    let rest = t - steps as f64 * chunk;
    let step_prop = expm(&(&superop.matrix * c(chunk)));
    let mut v = vectorize(rho0);
    let mut log_scale = 0.0;
    let renorm = |v: &mut CVec, log_scale: &mut f64| {
        let s = v.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        *v /= c(s);
        *log_scale += s.ln();
    };
    for _ in 0..steps {
        v = &step_prop * v;
        renorm(&mut v, &mut log_scale);
    }
    if rest > 0.0 {
        v = expm(&(&superop.matrix * c(rest))) * v;
    }
    let tr = devectorize(&v).expect("dimension").trace();
    log_scale + tr.re.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_diff, ONE, ZERO};
    use crate::model::product_state;
    use crate::test_util::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Row functional `vec(ρ) ↦ Tr ρ`.
    fn trace_row() -> CVec {
        vectorize(&DensityMatrix(identity(DIM)))
    }

    #[test]
    fn vectorize_layout() {
        let v = vectorize(&DensityMatrix::maximally_mixed());
        for (k, z) in v.iter().enumerate() {
            let expected = if k % (DIM + 1) == 0 { 0.125 } else { 0.0 };
            assert_eq!(z.re, expected);
            assert_eq!(z.im, 0.0);
        }
        let rho = DensityMatrix::pure(&product_state([0, 0, 0]));
        let v = vectorize(&rho);
        assert!((hs_inner(&v, &v) - ONE).norm() < 1e-15);
    }

    #[test]
    fn hs_product_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_density(&mut rng);
            let b = random_density(&mut rng);
            let direct = linalg::trace(&(b.0.adjoint() * &a.0));
            let dot = hs_inner(&vectorize(&b), &vectorize(&a));
            assert!((direct - dot).norm() <= 1e-14);
            assert_eq!(devectorize(&vectorize(&a)).unwrap(), a);
        }
    }

    #[test]
    fn devectorize_rejects_wrong_length() {
        assert!(matches!(
            devectorize(&CVec::zeros(10)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn superoperator_matches_direct_lindblad_form() {
        let p = ModelParams::reference().with_gamma_dephase(0.02);
        let l = build_liouvillian(&p);
        let h = build_hamiltonian(&p);
        let ops = build_jump_operators(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_density(&mut rng);
        let r = &rho.0;
        let mut direct = (&h * r - r * &h) * (-I);
        for lk in &ops {
            let ldl = lk.adjoint() * lk;
            direct += lk * r * lk.adjoint() - (r * &ldl + &ldl * r) * c(0.5);
        }
        assert!(max_abs_diff(&l.apply(&rho).0, &direct) < 1e-13);
    }

    #[test]
    fn trace_preserving_and_dissipative() {
        for g in [0.0, 0.01] {
            let l = build_liouvillian(&ModelParams::reference().with_gamma_dephase(g));
            let tr = trace_row().adjoint() * &l.matrix;
            assert!(tr.iter().all(|z| z.norm() <= 1e-12));
            for z in l.eigenvalues().unwrap() {
                assert!(z.re <= 1e-10);
            }
        }
    }

    #[test]
    fn null_eigenvalue_counts() {
        let l0 = build_liouvillian(&ModelParams::reference());
        assert_eq!(count_null_eigenvalues(&l0.matrix, 1e-10).unwrap(), 2);
        let l1 = build_liouvillian(&ModelParams::reference().with_gamma_dephase(0.01));
        assert_eq!(count_null_eigenvalues(&l1.matrix, 1e-10).unwrap(), 1);
    }

    #[test]
    fn zero_tilt_is_bit_identical() {
        let p = ModelParams::reference().with_gamma_dephase(0.01);
        let a = build_liouvillian(&p);
        let b = build_tilted_liouvillian(&p, CountingFields::ZERO);
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(b.tilt, Some(CountingFields::ZERO));
    }

    #[test]
    fn tilted_generator_is_not_trace_preserving() {
        let p = ModelParams::reference();
        let l = build_tilted_liouvillian(&p, CountingFields::new(0.4, 0.2));
        let tr = trace_row().adjoint() * &l.matrix;
        assert!(tr.iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn large_activity_bias_approaches_no_jump_limit() {
        let p = ModelParams::reference();
        let parts = LiouvillianParts::new(&p);
        let no_jump = linalg::leading_eigenvalue(parts.no_jump()).unwrap().re;
        let mut prev = f64::INFINITY;
        for eps in [0.0, 1.0, 5.0, 10.0, 30.0] {
            let m = linalg::leading_eigenvalue(&parts.assemble(CountingFields::activity(eps)))
                .unwrap()
                .re;
            assert!(m <= prev + 1e-12, "not monotone at eps={eps}");
            prev = m;
        }
        assert!((prev - no_jump).abs() < 1e-10);
    }

    #[test]
    fn gallavotti_cohen_on_full_spectrum() {
        let p = ModelParams::reference();
        let kappa = p.kappa();
        for (l, e) in [(0.3, 0.1), (-1.2, 0.5), (0.9, -0.4)] {
            let a = build_tilted_liouvillian(&p, CountingFields::new(l, e));
            let b = build_tilted_liouvillian(&p, CountingFields::new(kappa - l, e));
            let la = linalg::leading_eigenvalue(&a.matrix).unwrap();
            let lb = linalg::leading_eigenvalue(&b.matrix).unwrap();
            assert!((la - lb).norm() < 1e-8);
        }
    }

    #[test]
    fn antisymmetric_steady_state_is_thermal() {
        for n in [0.1, 0.5, 1.0] {
            let p = ModelParams::reference().with_n_bath(n);
            let rho = steady_state(&p, SteadySector::A).unwrap();
            let b = crate::model::build_symmetry_bases();
            let ground = &b.antisym_basis[0];
            let excited = &b.antisym_basis[1];
            let expected = ground * ground.adjoint() * c((1.0 + n) / (1.0 + 2.0 * n))
                + excited * excited.adjoint() * c(n / (1.0 + 2.0 * n));
            assert!(max_abs_diff(&rho.0, &expected) < 1e-10, "n={n}");
            assert!(rho.is_physical());
        }
        let rho = steady_state(&ModelParams::reference().with_n_bath(0.5), SteadySector::A).unwrap();
        let b = crate::model::build_symmetry_bases();
        let pops: Vec<f64> = b
            .antisym_basis
            .iter()
            .map(|v| (v.adjoint() * &rho.0 * v)[(0, 0)].re)
            .collect();
        assert!((pops[0] - 0.75).abs() < 1e-12 && (pops[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn symmetric_steady_state_is_stationary() {
        let p = ModelParams::reference();
        let rho = steady_state(&p, SteadySector::S).unwrap();
        assert!(rho.is_physical());
        let l = build_liouvillian(&p);
        assert!(max_abs(&l.apply(&rho).0) <= 1e-10);
    }

    #[test]
    fn full_steady_state_requires_uniqueness() {
        assert!(matches!(
            steady_state(&ModelParams::reference(), SteadySector::Full),
            Err(Error::NonUniqueSteadyState(2))
        ));
        let p = ModelParams::reference().with_gamma_dephase(0.01);
        let rho = steady_state(&p, SteadySector::Full).unwrap();
        assert!(rho.is_physical());
        assert!(max_abs(&build_liouvillian(&p).apply(&rho).0) <= 1e-10);
    }

    #[test]
    fn sector_steady_state_rejects_broken_symmetry() {
        let p = ModelParams::reference().with_gamma_dephase(0.01);
        assert!(matches!(
            steady_state(&p, SteadySector::A),
            Err(Error::BrokenSymmetry { .. })
        ));
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_density(&mut rng);
        let l = build_liouvillian(&ModelParams::reference());
        assert_eq!(evolve(&rho, 0.0, &l), rho);
    }

    #[test]
    fn evolve_relaxes_to_antisymmetric_steady_state() {
        let p = ModelParams::reference();
        let l = build_liouvillian(&p);
        let b = crate::model::build_symmetry_bases();
        let rho0 = DensityMatrix::pure(&b.antisym_basis[1]);
        let rho = evolve(&rho0, 1000.0, &l);
        let ss = steady_state(&p, SteadySector::A).unwrap();
        assert!(max_abs_diff(&rho.0, &ss.0) < 1e-8);
    }

    #[test]
    fn evolve_preserves_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let l = build_liouvillian(&ModelParams::reference().with_gamma_dephase(0.01));
        let props: Vec<CMat> = [0.1, 1.0, 10.0]
            .iter()
            .map(|&t| expm(&(&l.matrix * c(t))))
            .collect();
        for _ in 0..100 {
            let rho = random_density(&mut rng);
            for prop in &props {
                let out = devectorize(&(prop * vectorize(&rho))).unwrap();
                assert!((out.trace() - ONE).norm() <= 1e-9);
                assert!(linalg::is_hermitian(&out.0, 1e-10));
            }
        }
        let _ = ZERO;
    }

    #[test]
    fn log_partition_untilted_is_zero() {
        let l = build_liouvillian(&ModelParams::reference());
        let z = log_partition(&DensityMatrix::maximally_mixed(), 500.0, &l, 25.0);
        assert!(z.abs() < 1e-10);
    }

    #[test]
    fn log_partition_chunking_is_consistent() {
        let p = ModelParams::reference();
        let l = build_tilted_liouvillian(&p, CountingFields::new(0.3, 0.1));
        let rho = DensityMatrix::maximally_mixed();
        let direct = linalg::trace(&evolve(&rho, 40.0, &l).0).re.ln();
        let chunked = log_partition(&rho, 40.0, &l, 7.0);
        assert!((direct - chunked).abs() < 1e-10);
    }
}
