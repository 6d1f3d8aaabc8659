//! Three-qubit model: parameters, operators and exchange-symmetry bases.
//!
//! Computational basis ordering is lexicographic `|s0 s1 s2>`, index
//! `4*s0 + 2*s1 + s2`, with qubit 0 the bath-coupled site. Single-qubit
//! conventions: `σz|0> = +|0>`, `σz|1> = -|1>`, `σ+ = |1><0|`, `σ- = |0><1|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, identity, kron, CMat, CVec, I, ONE, ZERO};

/// Hilbert-space dimension of the three-qubit register.
pub const DIM: usize = 8;
pub const N_QUBITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Magnetic field along z.
    pub b_z: f64,
    /// Coupling Γ of qubit 0 to the bath.
    pub gamma_bath: f64,
    /// Mean bath occupation n.
    pub n_bath: f64,
    /// Local dephasing strength γ.
    pub gamma_dephase: f64,
}

impl ModelParams {
    pub fn new(b_z: f64, gamma_bath: f64, n_bath: f64, gamma_dephase: f64) -> Result<Self> {
        let p = Self {
            b_z,
            gamma_bath,
            n_bath,
            gamma_dephase,
        };
        p.validate()?;
        Ok(p)
    }

    /// B_z = 0.5, Γ = 0.1, n = 0.1, γ = 0.
    pub fn reference() -> Self {
        Self {
            b_z: 0.5,
            gamma_bath: 0.1,
            n_bath: 0.1,
            gamma_dephase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("b_z", self.b_z),
            ("gamma_bath", self.gamma_bath),
            ("n_bath", self.n_bath),
            ("gamma_dephase", self.gamma_dephase),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in &fields[1..] {
            if *v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_b_z(self, b_z: f64) -> Self {
        Self { b_z, ..self }
    }

    pub fn with_n_bath(self, n_bath: f64) -> Self {
        Self { n_bath, ..self }
    }

    pub fn with_gamma_dephase(self, gamma_dephase: f64) -> Self {
        Self {
            gamma_dephase,
            ..self
        }
    }

    /// Whether the 1↔2 exchange is a strong symmetry of the dynamics.
    pub fn is_symmetric(&self) -> bool {
        self.gamma_dephase == 0.0
    }

    /// Gallavotti-Cohen constant κ = ln[n/(n+1)].
    pub fn kappa(&self) -> f64 {
        (self.n_bath / (self.n_bath + 1.0)).ln()
    }

    /// Flat `key = value` text, one parameter per line.
    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("ModelParams always serializes")
    }

    pub fn from_config_str(s: &str) -> Result<Self> {
        let p: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// σ+ = |1><0|.
pub fn sigma_plus() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO])
}

/// σ- = |0><1|.
pub fn sigma_minus() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// Embeds a single-qubit operator at `site` of the three-qubit register.
pub fn on_site(op: &CMat, site: usize) -> CMat {
    assert!(site < N_QUBITS, "site {site} out of range");
    let id = identity(2);
    let factors: Vec<&CMat> = (0..N_QUBITS)
        .map(|k| if k == site { op } else { &id })
        .collect();
    kron(&kron(factors[0], factors[1]), factors[2])
}

/// H = Σ_{i<j} σx_i σx_j + B_z Σ_i σz_i.
pub fn build_hamiltonian(params: &ModelParams) -> CMat {
    let sx: Vec<CMat> = (0..N_QUBITS).map(|i| on_site(&sigma_x(), i)).collect();
    let mut h = CMat::zeros(DIM, DIM);
    for i in 0..N_QUBITS {
        for j in (i + 1)..N_QUBITS {
            h += &sx[i] * &sx[j];
        }
        h += on_site(&sigma_z(), i) * c(params.b_z);
    }
    h
}

/// Dissipation channels, in the fixed order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Plus,
    Minus,
    Deph0,
    Deph1,
    Deph2,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::Plus,
        Channel::Minus,
        Channel::Deph0,
        Channel::Deph1,
        Channel::Deph2,
    ];

    /// Bath channels contribute to the current and activity counters.
    pub fn is_counted(self) -> bool {
        matches!(self, Channel::Plus | Channel::Minus)
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Plus => "plus",
            Channel::Minus => "minus",
            Channel::Deph0 => "deph0",
            Channel::Deph1 => "deph1",
            Channel::Deph2 => "deph2",
        }
    }
}

/// Returns `[L0+, L0-, LD0, LD1, LD2]`.
pub fn build_jump_operators(params: &ModelParams) -> Vec<CMat> {
    let g = params.gamma_bath;
    let n = params.n_bath;
    let mut ops = vec![
        on_site(&sigma_plus(), 0) * c((g * n).sqrt()),
        on_site(&sigma_minus(), 0) * c((g * (n + 1.0)).sqrt()),
    ];
    let excited = &sigma_plus() * &sigma_minus();
    for i in 0..N_QUBITS {
        ops.push(on_site(&excited, i) * c(params.gamma_dephase.sqrt()));
    }
    ops
}

fn ket(bits: [u8; 3]) -> CVec {
    let idx = 4 * bits[0] as usize + 2 * bits[1] as usize + bits[2] as usize;
    let mut v = CVec::zeros(DIM);
    v[idx] = ONE;
    v
}

/// State vectors adapted to the 1↔2 exchange, plus the exchange operator
/// and the projector onto its antisymmetric eigenspace.
#[derive(Debug, Clone)]
pub struct SymmetryBases {
    /// `{|0>,|1>}_0 ⊗ {|00>, |+>, |11>}_12`, qubit-0 index slowest.
    pub sym_basis: Vec<CVec>,
    /// `{|0>,|1>}_0 ⊗ |->_12`.
    pub antisym_basis: Vec<CVec>,
    pub exchange_op: CMat,
    pub antisym_projector: CMat,
}

pub fn build_symmetry_bases() -> SymmetryBases {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut sym_basis = Vec::with_capacity(6);
    let mut antisym_basis = Vec::with_capacity(2);
    for q in 0..2u8 {
        sym_basis.push(ket([q, 0, 0]));
        sym_basis.push((ket([q, 0, 1]) + ket([q, 1, 0])) * c(r));
        sym_basis.push(ket([q, 1, 1]));
        antisym_basis.push((ket([q, 0, 1]) - ket([q, 1, 0])) * c(r));
    }

    // π12 = 1_0 ⊗ (|10><01| + |01><10| + |11><11| + |00><00|)
    let mut exchange_op = CMat::zeros(DIM, DIM);
    for s0 in 0..2usize {
        for s1 in 0..2usize {
            for s2 in 0..2usize {
                exchange_op[(4 * s0 + 2 * s2 + s1, 4 * s0 + 2 * s1 + s2)] = ONE;
            }
        }
    }

    let singlet = (ket([0, 0, 1]) - ket([0, 1, 0])) * c(r);
    let singlet_12 = CVec::from_iterator(4, singlet.iter().take(4).copied());
    let antisym_projector = kron(&identity(2), &(&singlet_12 * singlet_12.adjoint()));

    SymmetryBases {
        sym_basis,
        antisym_basis,
        exchange_op,
        antisym_projector,
    }
}

/// `½(|0>+|1>)_0 ⊗ (|00> + |->)_12`, an equal-weight superposition of both
/// exchange sectors.
pub fn equal_superposition_state() -> CVec {
    sector_superposition_state(0.5)
}

/// `(|0>+|1>)/√2 ⊗ (√(1-w)|00> + √w|->)`, whose antisymmetric weight is `w`.
pub fn sector_superposition_state(weight_a: f64) -> CVec {
    assert!((0.0..=1.0).contains(&weight_a));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = (1.0 - weight_a).sqrt();
    let a = weight_a.sqrt();
    let mut psi = CVec::zeros(DIM);
    for q in 0..2u8 {
        psi += ket([q, 0, 0]) * c(r * s);
        psi += (ket([q, 0, 1]) - ket([q, 1, 0])) * c(r * a * r);
    }
    psi
}

/// Pure state with all three qubits in `bits`.
pub fn product_state(bits: [u8; 3]) -> CVec {
    ket(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, is_hermitian, max_abs, max_abs_diff};

    fn exchange_commutator(op: &CMat) -> f64 {
        max_abs(&commutator(&build_symmetry_bases().exchange_op, op))
    }

    #[test]
    fn pauli_algebra() {
        let id = identity(2);
        for s in [sigma_x(), sigma_y(), sigma_z()] {
            assert!(max_abs_diff(&(&s * &s), &id) < 1e-15);
        }
        let comm = commutator(&sigma_x(), &sigma_y());
        assert!(max_abs_diff(&comm, &(sigma_z() * (I * 2.0))) < 1e-15);
        let anti = sigma_plus() * sigma_minus() + sigma_minus() * sigma_plus();
        assert!(max_abs_diff(&anti, &id) < 1e-15);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_symmetric() {
        for bz in [0.0, 0.5, -1.3] {
            let h = build_hamiltonian(&ModelParams::reference().with_b_z(bz));
            assert!(is_hermitian(&h, 1e-12));
            assert!(exchange_commutator(&h) <= 1e-12);
        }
    }

    #[test]
    fn hamiltonian_diagonal_on_all_excited() {
        let h = build_hamiltonian(&ModelParams::reference());
        let v = product_state([1, 1, 1]);
        let e = (v.adjoint() * &h * &v)[(0, 0)];
        assert!((e.re + 1.5).abs() < 1e-15);
    }

    #[test]
    fn antisymmetric_block_of_hamiltonian() {
        let bz = 0.3;
        for p in [ModelParams::reference().with_b_z(0.0), ModelParams::reference().with_b_z(bz)] {
            let h = build_hamiltonian(&p);
            let b = build_symmetry_bases();
            for (i, ai) in b.antisym_basis.iter().enumerate() {
                for (j, aj) in b.antisym_basis.iter().enumerate() {
                    let hij = (ai.adjoint() * &h * aj)[(0, 0)];
                    // H_A = -|-><-| + B_z σz_0, qubit-0 state index i
                    let expected = if i == j {
                        -1.0 + p.b_z * if i == 0 { 1.0 } else { -1.0 }
                    } else {
                        0.0
                    };
                    assert!((hij - c(expected)).norm() < 1e-12, "{i}{j}: {hij}");
                }
            }
        }
    }

    #[test]
    fn jump_operators() {
        let p = ModelParams::reference();
        let ops = build_jump_operators(&p);
        assert_eq!(ops.len(), 5);
        assert!(exchange_commutator(&ops[0]) <= 1e-12);
        assert!(exchange_commutator(&ops[1]) <= 1e-12);
        for op in &ops[2..] {
            assert_eq!(max_abs(op), 0.0);
        }

        let empty = build_jump_operators(&p.with_n_bath(0.0));
        assert_eq!(max_abs(&empty[0]), 0.0);

        let deph = build_jump_operators(&p.with_gamma_dephase(0.01));
        assert!(exchange_commutator(&deph[3]) > 0.0);
        assert!(exchange_commutator(&deph[2]) <= 1e-12);
    }

    #[test]
    fn symmetry_bases() {
        let b = build_symmetry_bases();
        let all: Vec<&CVec> = b.sym_basis.iter().chain(&b.antisym_basis).collect();
        assert_eq!(all.len(), 8);
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate() {
                let g = u.dotc(v);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(e)).norm() < 1e-12);
            }
        }
        let pi = &b.exchange_op;
        for v in &b.sym_basis {
            assert!((pi * v - v).norm() < 1e-12);
        }
        for v in &b.antisym_basis {
            assert!((pi * v + v).norm() < 1e-12);
        }
        assert!(max_abs_diff(&(pi * pi), &identity(DIM)) < 1e-15);
        assert!(is_hermitian(pi, 0.0));

        let p = &b.antisym_projector;
        assert!(max_abs_diff(&(p * p), p) < 1e-12);
        assert!(is_hermitian(p, 1e-15));
        assert!((crate::linalg::trace(p).re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exchange_swaps_qubits_one_and_two() {
        let b = build_symmetry_bases();
        let out = &b.exchange_op * product_state([0, 0, 1]);
        assert!((out - product_state([0, 1, 0])).norm() < 1e-15);
    }

    #[test]
    fn exchange_multiplicities() {
        let b = build_symmetry_bases();
        let ev = crate::linalg::eigenvalues(&b.exchange_op).unwrap();
        let plus = ev.iter().filter(|z| (*z - ONE).norm() < 1e-9).count();
        let minus = ev.iter().filter(|z| (*z + ONE).norm() < 1e-9).count();
        assert_eq!((plus, minus), (6, 2));
    }

    #[test]
    fn projector_action() {
        let b = build_symmetry_bases();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let minus = (product_state([0, 0, 1]) - product_state([0, 1, 0])) * c(r);
        let plus = (product_state([0, 0, 1]) + product_state([0, 1, 0])) * c(r);
        assert!((&b.antisym_projector * &minus - &minus).norm() < 1e-15);
        assert!((&b.antisym_projector * &plus).norm() < 1e-15);
    }

    #[test]
    fn superposition_weights() {
        let b = build_symmetry_bases();
        for w in [0.0, 0.25, 0.5, 1.0] {
            let psi = sector_superposition_state(w);
            assert!((psi.norm() - 1.0).abs() < 1e-14);
            let xi = (&b.antisym_projector * &psi).norm_squared();
            assert!((xi - w).abs() < 1e-14);
        }
    }

    #[test]
    fn reference_params_round_trip() {
        let p = ModelParams::reference();
        let text = p.to_config_string();
        assert_eq!(ModelParams::from_config_str(&text).unwrap(), p);
    }

    #[test]
    fn rejects_negative_rates() {
        assert!(ModelParams::new(0.5, -0.1, 0.1, 0.0).is_err());
        assert!(ModelParams::new(0.5, 0.1, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let p = ModelParams::reference().with_gamma_dephase(0.01);
        assert_eq!(build_hamiltonian(&p), build_hamiltonian(&p));
        assert_eq!(build_jump_operators(&p), build_jump_operators(&p));
    }
}
