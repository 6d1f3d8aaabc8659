//! Exchange-symmetry superoperators and the four-block decomposition of
//! Fock-Liouville space.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::liouville::{left_mul, right_mul, vectorize, DensityMatrix, SuperOperator, LDIM};
use crate::model::{build_symmetry_bases, SymmetryBases};

/// Off-block leakage above which a restriction is refused.
pub const LEAKAGE_TOLERANCE: f64 = 1e-10;

/// Default threshold on sector weights for `has_S` / `has_A`.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockLabel {
    SS,
    AA,
    SA,
    AS,
}

impl BlockLabel {
    pub const ALL: [BlockLabel; 4] = [BlockLabel::SS, BlockLabel::AA, BlockLabel::SA, BlockLabel::AS];

    fn index(self) -> usize {
        match self {
            BlockLabel::SS => 0,
            BlockLabel::AA => 1,
            BlockLabel::SA => 2,
            BlockLabel::AS => 3,
        }
    }

    /// Eigenvalues of (Π_l, Π_r) on this block.
    pub fn parities(self) -> (f64, f64) {
        match self {
            BlockLabel::SS => (1.0, 1.0),
            BlockLabel::AA => (-1.0, -1.0),
            BlockLabel::SA => (1.0, -1.0),
            BlockLabel::AS => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BlockLabel::SS => "SS",
            BlockLabel::AA => "AA",
            BlockLabel::SA => "SA",
            BlockLabel::AS => "AS",
        };
        f.write_str(s)
    }
}

/// A symmetry sector of the Hilbert space (diagonal block of operator space).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    S,
    A,
}

impl Sector {
    pub const ALL: [Sector; 2] = [Sector::S, Sector::A];

    pub fn block(self) -> BlockLabel {
        match self {
            Sector::S => BlockLabel::SS,
            Sector::A => BlockLabel::AA,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sector::S => "S",
            Sector::A => "A",
        })
    }
}

/// Orthonormal bases of the four invariant blocks, as 64×d column matrices
/// of vectorized operators `|α_i><β_j|`.
#[derive(Debug, Clone)]
pub struct SymmetryBlockMap {
    blocks: [CMat; 4],
}

fn outer_basis(rows: &[CVec], cols: &[CVec]) -> CMat {
    let vecs: Vec<CVec> = rows
        .iter()
        .flat_map(|x| {
            cols.iter()
                .map(move |y| vectorize(&DensityMatrix(x * y.adjoint())))
        })
        .collect();
    CMat::from_columns(&vecs)
}

impl SymmetryBlockMap {
    pub fn build() -> Self {
        let SymmetryBases {
            sym_basis: s,
            antisym_basis: a,
            ..
        } = build_symmetry_bases();
        Self {
            blocks: [
                outer_basis(&s, &s),
                outer_basis(&a, &a),
                outer_basis(&s, &a),
                outer_basis(&a, &s),
            ],
        }
    }

    /// Process-wide instance; the decomposition does not depend on parameters.
    pub fn shared() -> &'static SymmetryBlockMap {
        static MAP: OnceLock<SymmetryBlockMap> = OnceLock::new();
        MAP.get_or_init(SymmetryBlockMap::build)
    }

    pub fn basis(&self, label: BlockLabel) -> &CMat {
        &self.blocks[label.index()]
    }

    pub fn dim(&self, label: BlockLabel) -> usize {
        self.basis(label).ncols()
    }

    /// Largest modulus of the component of `superop · v` outside the block,
    /// over the block's basis vectors `v`.
    pub fn leakage(&self, superop: &CMat, label: BlockLabel) -> f64 {
        let v = self.basis(label);
        let image = superop * v;
        let inside = v * (v.adjoint() * &image);
        linalg::max_abs(&(image - inside))
    }

    /// Matrix of `superop` in the block basis: `M[a,b] = <<v_a|superop|v_b>>`.
    pub fn restrict(&self, superop: &SuperOperator, label: BlockLabel) -> Result<CMat> {
        self.restrict_matrix(&superop.matrix, label)
    }

    pub fn restrict_matrix(&self, superop: &CMat, label: BlockLabel) -> Result<CMat> {
        let leakage = self.leakage(superop, label);
        if leakage > LEAKAGE_TOLERANCE {
            return Err(Error::BrokenSymmetry {
                leakage,
                tolerance: LEAKAGE_TOLERANCE,
            });
        }
        Ok(self.project(superop, label))
    }

    /// `V† superop V` without the leakage check.
    pub fn project(&self, superop: &CMat, label: BlockLabel) -> CMat {
        let v = self.basis(label);
        v.adjoint() * superop * v
    }
}

/// Returns `(Π_l, Π_r)` with `Π_l ρ = π12 ρ` and `Π_r ρ = ρ π12†`.
pub fn build_symmetry_superops() -> (SuperOperator, SuperOperator) {
    let pi = build_symmetry_bases().exchange_op;
    (
        SuperOperator {
            matrix: left_mul(&pi),
            tilt: None,
        },
        SuperOperator {
            matrix: right_mul(&pi.adjoint()),
            tilt: None,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorOverlap {
    pub weight_a: f64,
    pub weight_s: f64,
    pub has_a: bool,
    pub has_s: bool,
}

impl SectorOverlap {
    pub fn from_weight(weight_a: f64, threshold: f64) -> Self {
        let weight_s = 1.0 - weight_a;
        Self {
            weight_a,
            weight_s,
            has_a: weight_a > threshold,
            has_s: weight_s > threshold,
        }
    }

    pub fn both() -> Self {
        Self::from_weight(0.5, DEFAULT_OVERLAP_THRESHOLD)
    }

    pub fn only(sector: Sector) -> Self {
        match sector {
            Sector::S => Self::from_weight(0.0, DEFAULT_OVERLAP_THRESHOLD),
            Sector::A => Self::from_weight(1.0, DEFAULT_OVERLAP_THRESHOLD),
        }
    }

    pub fn contains(&self, sector: Sector) -> bool {
        match sector {
            Sector::S => self.has_s,
            Sector::A => self.has_a,
        }
    }
}

/// Antisymmetric weight `Tr(P₋ρ)` of a unit-trace state.
pub fn sector_overlap(rho: &DensityMatrix, threshold: f64) -> SectorOverlap {
    let p = build_symmetry_bases().antisym_projector;
    let weight_a = rho.expect(&p).re;
    SectorOverlap::from_weight(weight_a, threshold)
}

/// Multiset comparison of two spectra: largest distance after greedy matching.
pub fn spectrum_distance(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for z in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// Coefficient-space identity on the full Fock-Liouville space.
pub fn liouville_identity() -> CMat {
    CMat::identity(LDIM, LDIM) * c(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, max_abs, max_abs_diff};
    use crate::liouville::{build_liouvillian, build_tilted_liouvillian, evolve, CountingFields};
    use crate::model::{equal_superposition_state, ModelParams};
    use crate::test_util::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetry_superops_are_commuting_involutions() {
        let (pl, pr) = build_symmetry_superops();
        let id = liouville_identity();
        assert!(max_abs_diff(&(&pl.matrix * &pl.matrix), &id) < 1e-15);
        assert!(max_abs_diff(&(&pr.matrix * &pr.matrix), &id) < 1e-15);
        assert!(max_abs(&commutator(&pl.matrix, &pr.matrix)) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&mut rng);
        assert!(max_abs_diff(&pl.apply(&pl.apply(&rho)).0, &rho.0) < 1e-15);
    }

    #[test]
    fn symmetry_superops_commute_with_generators() {
        let (pl, pr) = build_symmetry_superops();
        let p = ModelParams::reference();
        for l in [
            build_liouvillian(&p),
            build_tilted_liouvillian(&p, CountingFields::new(0.7, -0.2)),
        ] {
            assert!(max_abs(&commutator(&pl.matrix, &l.matrix)) <= 1e-12);
            assert!(max_abs(&commutator(&pr.matrix, &l.matrix)) <= 1e-12);
        }
    }

    #[test]
    fn block_dimensions_and_orthonormality() {
        let map = SymmetryBlockMap::build();
        let dims: Vec<usize> = BlockLabel::ALL.iter().map(|&b| map.dim(b)).collect();
        assert_eq!(dims, vec![36, 4, 12, 12]);
        let all = CMat::from_columns(
            &BlockLabel::ALL
                .iter()
                .flat_map(|&b| map.basis(b).column_iter().map(|c| c.into_owned()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        assert_eq!(all.ncols(), LDIM);
        assert!(max_abs_diff(&(all.adjoint() * &all), &liouville_identity()) <= 1e-12);
    }

    #[test]
    fn blocks_are_joint_eigenspaces() {
        let map = SymmetryBlockMap::build();
        let (pl, pr) = build_symmetry_superops();
        for b in BlockLabel::ALL {
            let (sl, sr) = b.parities();
            let v = map.basis(b);
            assert!(max_abs_diff(&(&pl.matrix * v), &(v * c(sl))) < 1e-12);
            assert!(max_abs_diff(&(&pr.matrix * v), &(v * c(sr))) < 1e-12);
        }
    }

    #[test]
    fn off_diagonal_blocks_are_traceless() {
        let map = SymmetryBlockMap::build();
        let tr_row = vectorize(&DensityMatrix(CMat::identity(8, 8)));
        for b in [BlockLabel::SA, BlockLabel::AS] {
            for col in map.basis(b).column_iter() {
                assert!(tr_row.dotc(&col.into_owned()).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn leakage_with_and_without_dephasing() {
        let map = SymmetryBlockMap::build();
        let p = ModelParams::reference();
        for f in [CountingFields::ZERO, CountingFields::new(0.7, -0.2), CountingFields::new(-2.0, 1.5)] {
            let l = build_tilted_liouvillian(&p, f);
            for b in BlockLabel::ALL {
                assert!(map.leakage(&l.matrix, b) <= 1e-12);
            }
        }
        let g = 0.01;
        let broken = build_liouvillian(&p.with_gamma_dephase(g));
        assert!(map.leakage(&broken.matrix, BlockLabel::AA) > 1e-6 * g);
        assert!(map.restrict(&broken, BlockLabel::AA).is_err());
    }

    #[test]
    fn restricted_blocks_have_one_null_eigenvalue() {
        let map = SymmetryBlockMap::build();
        let l = build_liouvillian(&ModelParams::reference());
        for (b, n) in [(BlockLabel::AA, 4), (BlockLabel::SS, 36)] {
            let m = map.restrict(&l, b).unwrap();
            assert_eq!(m.nrows(), n);
            let ev = linalg::eigenvalues(&m).unwrap();
            assert_eq!(ev.iter().filter(|z| z.norm() <= 1e-10).count(), 1);
        }
    }

    #[test]
    fn block_spectra_reassemble_full_spectrum() {
        let map = SymmetryBlockMap::build();
        let p = ModelParams::reference();
        for f in [CountingFields::ZERO, CountingFields::new(0.4, 0.3)] {
            let l = build_tilted_liouvillian(&p, f);
            let full = l.eigenvalues().unwrap();
            let mut parts = Vec::new();
            for b in BlockLabel::ALL {
                parts.extend(linalg::eigenvalues(&map.restrict(&l, b).unwrap()).unwrap());
            }
            assert!(spectrum_distance(&full, &parts) <= 1e-8);
        }
    }

    #[test]
    fn overlap_examples() {
        let b = build_symmetry_bases();
        let rho = DensityMatrix::pure(&b.antisym_basis[0]);
        assert!((sector_overlap(&rho, 1e-10).weight_a - 1.0).abs() < 1e-14);

        let psi = equal_superposition_state();
        let o = sector_overlap(&DensityMatrix::pure(&psi), 1e-10);
        assert!((o.weight_a - 0.5).abs() < 1e-14);
        assert!(o.has_a && o.has_s);

        let o = sector_overlap(&DensityMatrix::maximally_mixed(), 1e-10);
        assert!((o.weight_a - 0.25).abs() < 1e-14);
        assert!((o.weight_a + o.weight_s - 1.0).abs() < 1e-15);

        let o = sector_overlap(&DensityMatrix::pure(&b.sym_basis[2]), 1e-10);
        assert!(!o.has_a && o.has_s);
    }

    #[test]
    fn overlap_is_conserved_without_dephasing() {
        let p = ModelParams::reference();
        let l = build_liouvillian(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(&mut rng);
        let w0 = sector_overlap(&rho, 1e-10).weight_a;
        for t in [0.5, 5.0, 50.0] {
            let w = sector_overlap(&evolve(&rho, t, &l), 1e-10).weight_a;
            assert!((w - w0).abs() <= 1e-9);
        }
    }
}
