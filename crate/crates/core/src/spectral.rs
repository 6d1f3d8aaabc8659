//! Leading eigenvalues of the tilted generator and the scaled cumulant
//! generating functions built from them.
//!
//! `μ(λ,ε)` is the largest real part among the sector eigenvalues that the
//! initial state overlaps; `θ(λ) = μ(λ,0)` and `ζ(ε) = μ(0,ε)`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::liouville::{CountingFields, LiouvillianParts};
use crate::model::ModelParams;
use crate::symmetry::{Sector, SectorOverlap, SymmetryBlockMap};

/// Imaginary part above which a leading eigenvalue is reported as complex.
pub const IMAG_TOLERANCE: f64 = 1e-9;

/// First-derivative step.
pub const DERIVATIVE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorEigenvalue {
    pub sector: Sector,
    pub value: Complex64,
    pub fields: CountingFields,
}

impl SectorEigenvalue {
    pub fn is_real(&self) -> bool {
        self.value.im.abs() <= IMAG_TOLERANCE
    }
}

/// `μ` at one point together with the sector that attains it (`None` when
/// the symmetry is broken and the full generator is used).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuValue {
    pub value: f64,
    pub sector: Option<Sector>,
}

pub fn sector_label(s: Option<Sector>) -> &'static str {
    match s {
        Some(Sector::S) => "S",
        Some(Sector::A) => "A",
        None => "none",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Lambda,
    Epsilon,
}

impl Axis {
    /// Fields at coordinate `x` along this axis with the other field held at `fixed`.
    pub fn fields(self, x: f64, fixed: f64) -> CountingFields {
        match self {
            Axis::Lambda => CountingFields::new(x, fixed),
            Axis::Epsilon => CountingFields::new(fixed, x),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Lambda => "lambda",
            Axis::Epsilon => "epsilon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Current,
    Activity,
}

impl Observable {
    pub fn axis(self) -> Axis {
        match self {
            Observable::Current => Axis::Lambda,
            Observable::Activity => Axis::Epsilon,
        }
    }
}

/// `μ` sampled along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LdfCurve {
    pub axis: Axis,
    /// Value of the other counting field along the slice.
    pub fixed: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub dominant: Vec<Option<Sector>>,
    /// Central differences, one-sided at the ends.
    pub derivative: Vec<f64>,
}

impl LdfCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// `μ` on a tensor grid; rows index λ, columns ε.
#[derive(Debug, Clone, PartialEq)]
pub struct LdfSurface {
    pub lambda_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub mu: DMatrix<f64>,
    pub dominant: DMatrix<Option<Sector>>,
    /// `μ_S − μ_A` when both sectors were evaluated.
    pub sector_gap: Option<DMatrix<f64>>,
}

impl LdfSurface {
    /// Constant-ε slice through column `j`.
    pub fn lambda_slice(&self, j: usize) -> LdfCurve {
        let values: Vec<f64> = self.mu.column(j).iter().copied().collect();
        LdfCurve {
            axis: Axis::Lambda,
            fixed: self.epsilon_grid[j],
            derivative: central_differences(&self.lambda_grid, &values),
            grid: self.lambda_grid.clone(),
            values,
            dominant: self.dominant.column(j).iter().copied().collect(),
        }
    }

    /// Constant-λ slice through row `i`.
    pub fn epsilon_slice(&self, i: usize) -> LdfCurve {
        let values: Vec<f64> = self.mu.row(i).iter().copied().collect();
        LdfCurve {
            axis: Axis::Epsilon,
            fixed: self.lambda_grid[i],
            derivative: central_differences(&self.epsilon_grid, &values),
            grid: self.epsilon_grid.clone(),
            values,
            dominant: self.dominant.row(i).iter().copied().collect(),
        }
    }

    /// Index of the grid point equal to `x` (to 1e-12), if any.
    pub fn find(grid: &[f64], x: f64) -> Option<usize> {
        grid.iter().position(|&g| (g - x).abs() <= 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorAverages {
    pub q_s: f64,
    pub q_a: f64,
    pub a_s: f64,
    pub a_a: f64,
}

impl SectorAverages {
    pub fn current(&self, s: Sector) -> f64 {
        match s {
            Sector::S => self.q_s,
            Sector::A => self.q_a,
        }
    }

    pub fn activity(&self, s: Sector) -> f64 {
        match s {
            Sector::S => self.a_s,
            Sector::A => self.a_a,
        }
    }
}

/// Derivative discontinuity found on a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    /// Grid index with the largest slope jump.
    pub index: usize,
    /// First and last flagged grid indices.
    pub span: (usize, usize),
    pub position: f64,
    /// Right derivative minus left derivative (positive for a convex curve).
    pub jump: f64,
    pub left: Option<Sector>,
    pub right: Option<Sector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkOptions {
    /// A slope jump must exceed `threshold` times the local median jump.
    pub threshold: f64,
    /// Half-width (in grid points) of the median window.
    pub window: usize,
    /// Jumps below `floor` times the slope range are never kinks.
    pub floor: f64,
}

impl Default for KinkOptions {
    fn default() -> Self {
        Self {
            threshold: 10.0,
            window: 5,
            floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
struct BlockParts {
    base: CMat,
    plus: CMat,
    minus: CMat,
}

impl BlockParts {
    fn assemble(&self, f: CountingFields) -> CMat {
        &self.base + &self.plus * c(f.plus_weight()) + &self.minus * c(f.minus_weight())
    }
}

/// Evaluates tilted leading eigenvalues for one parameter set. At γ = 0 the
/// generator pieces are pre-restricted to the two diagonal blocks so each
/// evaluation is a 36×36 and a 4×4 eigensolve.
#[derive(Debug, Clone)]
pub struct SpectralEngine {
    params: ModelParams,
    parts: LiouvillianParts,
    blocks: Option<[BlockParts; 2]>,
}

fn sector_index(s: Sector) -> usize {
    match s {
        Sector::S => 0,
        Sector::A => 1,
    }
}

impl SpectralEngine {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let parts = LiouvillianParts::new(params);
        let blocks = if params.is_symmetric() {
            let map = SymmetryBlockMap::shared();
            let restrict = |s: Sector| -> Result<BlockParts> {
                let b = s.block();
                Ok(BlockParts {
                    base: map.restrict_matrix(&parts.base, b)?,
                    plus: map.restrict_matrix(&parts.plus, b)?,
                    minus: map.restrict_matrix(&parts.minus, b)?,
                })
            };
            Some([restrict(Sector::S)?, restrict(Sector::A)?])
        } else {
            None
        };
        Ok(Self {
            params: *params,
            parts,
            blocks,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn is_symmetric(&self) -> bool {
        self.blocks.is_some()
    }

    /// Tilted generator restricted to a diagonal block.
    pub fn sector_matrix(&self, fields: CountingFields, sector: Sector) -> Result<CMat> {
        match &self.blocks {
            Some(b) => Ok(b[sector_index(sector)].assemble(fields)),
            None => {
                let full = self.parts.assemble(fields);
                let map = SymmetryBlockMap::shared();
                // always fails at γ > 0; reports the measured leakage
                map.restrict_matrix(&full, sector.block())
            }
        }
    }

    pub fn sector_leading_eigenvalue(
        &self,
        fields: CountingFields,
        sector: Sector,
    ) -> Result<SectorEigenvalue> {
        let m = self.sector_matrix(fields, sector)?;
        Ok(SectorEigenvalue {
            sector,
            value: linalg::leading_eigenvalue(&m)?,
            fields,
        })
    }

    fn sector_mu(&self, fields: CountingFields, sector: Sector) -> Result<f64> {
        Ok(self.sector_leading_eigenvalue(fields, sector)?.value.re)
    }

    /// Leading eigenvalue of the full 64×64 tilted generator.
    pub fn full_leading_eigenvalue(&self, fields: CountingFields) -> Result<Complex64> {
        linalg::leading_eigenvalue(&self.parts.assemble(fields))
    }

    /// Ties at exact degeneracy are labelled `S`.
    pub fn mu(&self, fields: CountingFields, overlap: &SectorOverlap) -> Result<MuValue> {
        if !overlap.has_s && !overlap.has_a {
            return Err(Error::EmptyOverlap);
        }
        if !self.is_symmetric() {
            return Ok(MuValue {
                value: self.full_leading_eigenvalue(fields)?.re,
                sector: None,
            });
        }
        let mut best: Option<MuValue> = None;
        for s in Sector::ALL {
            if !overlap.contains(s) {
                continue;
            }
            let v = self.sector_mu(fields, s)?;
            if best.is_none_or(|b| v > b.value) {
                best = Some(MuValue {
                    value: v,
                    sector: Some(s),
                });
            }
        }
        Ok(best.expect("at least one sector"))
    }

    /// `μ_S − μ_A`; requires the symmetry.
    pub fn sector_gap(&self, fields: CountingFields) -> Result<f64> {
        Ok(self.sector_mu(fields, Sector::S)? - self.sector_mu(fields, Sector::A)?)
    }

    pub fn scan_curve(
        &self,
        axis: Axis,
        fixed: f64,
        grid: &[f64],
        overlap: &SectorOverlap,
    ) -> Result<LdfCurve> {
        check_grid(grid)?;
        let pts: Vec<MuValue> = grid
            .par_iter()
            .map(|&x| self.mu(axis.fields(x, fixed), overlap))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = pts.iter().map(|p| p.value).collect();
        Ok(LdfCurve {
            axis,
            fixed,
            grid: grid.to_vec(),
            derivative: central_differences(grid, &values),
            values,
            dominant: pts.iter().map(|p| p.sector).collect(),
        })
    }

    pub fn scan_surface(
        &self,
        lambda_grid: &[f64],
        epsilon_grid: &[f64],
        overlap: &SectorOverlap,
    ) -> Result<LdfSurface> {
        check_grid(lambda_grid)?;
        check_grid(epsilon_grid)?;
        let (nl, ne) = (lambda_grid.len(), epsilon_grid.len());
        let both = self.is_symmetric() && overlap.has_s && overlap.has_a;
        let cells: Vec<(MuValue, f64)> = (0..nl * ne)
            .into_par_iter()
            .map(|k| {
                let f = CountingFields::new(lambda_grid[k / ne], epsilon_grid[k % ne]);
                if both {
                    let s = self.sector_mu(f, Sector::S)?;
                    let a = self.sector_mu(f, Sector::A)?;
                    let sector = if s >= a { Sector::S } else { Sector::A };
                    Ok((
                        MuValue {
                            value: s.max(a),
                            sector: Some(sector),
                        },
                        s - a,
                    ))
                } else {
                    Ok((self.mu(f, overlap)?, f64::NAN))
                }
            })
            .collect::<Result<_>>()?;
        Ok(LdfSurface {
            lambda_grid: lambda_grid.to_vec(),
            epsilon_grid: epsilon_grid.to_vec(),
            mu: DMatrix::from_fn(nl, ne, |i, j| cells[i * ne + j].0.value),
            dominant: DMatrix::from_fn(nl, ne, |i, j| cells[i * ne + j].0.sector),
            sector_gap: both.then(|| DMatrix::from_fn(nl, ne, |i, j| cells[i * ne + j].1)),
        })
    }

    /// `d/dx` of one sector's leading eigenvalue along `axis`, by a
    /// Richardson-extrapolated central difference.
    pub fn sector_slope(&self, sector: Sector, axis: Axis, at: f64, fixed: f64) -> Result<f64> {
        let f = |x: f64| self.sector_mu(axis.fields(x, fixed), sector);
        let d = |h: f64| -> Result<f64> { Ok((f(at + h)? - f(at - h)?) / (2.0 * h)) };
        let h = DERIVATIVE_STEP;
        Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
    }

    /// `q_α = −∂_λ μ_α`, `a_α = −∂_ε μ_α` at the origin.
    pub fn sector_averages(&self) -> Result<SectorAverages> {
        if !self.is_symmetric() {
            return Err(self.broken_symmetry());
        }
        let q = |s| self.sector_slope(s, Axis::Lambda, 0.0, 0.0).map(|d| -d);
        let a = |s| self.sector_slope(s, Axis::Epsilon, 0.0, 0.0).map(|d| -d);
        Ok(SectorAverages {
            q_s: q(Sector::S)?,
            q_a: q(Sector::A)?,
            a_s: a(Sector::S)?,
            a_a: a(Sector::A)?,
        })
    }

    fn broken_symmetry(&self) -> Error {
        let l = self.parts.assemble(CountingFields::ZERO);
        Error::BrokenSymmetry {
            leakage: SymmetryBlockMap::shared().leakage(&l, Sector::A.block()),
            tolerance: crate::symmetry::LEAKAGE_TOLERANCE,
        }
    }

    /// `k`-th cumulant rate `(−1)^k ∂^k μ` along the observable's axis at the
    /// origin. With both sectors present at γ = 0 the derivative only exists
    /// if the two sectors agree to `tol`.
    pub fn cumulant(
        &self,
        observable: Observable,
        order: u32,
        overlap: &SectorOverlap,
        tol: f64,
    ) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidParams(format!("cumulant order {order} not in 1..=3")));
        }
        if !overlap.has_s && !overlap.has_a {
            return Err(Error::EmptyOverlap);
        }
        let axis = observable.axis();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        if !self.is_symmetric() {
            let f = |x: f64| -> Result<f64> { Ok(self.full_leading_eigenvalue(axis.fields(x, 0.0))?.re) };
            return Ok(sign * derivative_at_zero(f, order, tol)?);
        }
        let mut found: Vec<(Sector, f64)> = Vec::new();
        for s in Sector::ALL.into_iter().filter(|&s| overlap.contains(s)) {
            let f = |x: f64| self.sector_mu(axis.fields(x, 0.0), s);
            found.push((s, sign * derivative_at_zero(f, order, tol)?));
        }
        if let [(_, x), (_, y)] = found.as_slice() {
            if (x - y).abs() > tol {
                return Err(Error::NonDifferentiable(format!("S: {x:.6e}, A: {y:.6e}")));
            }
        }
        Ok(found[0].1)
    }

    /// Detected kinks of a curve produced by this engine. At γ = 0 each kink
    /// that separates two sectors is relocated by bisection on `μ_S − μ_A`
    /// and its jump recomputed from the per-sector slopes.
    pub fn kinks(&self, curve: &LdfCurve, opts: &KinkOptions) -> Result<Vec<Kink>> {
        let raw = detect_kinks(&curve.grid, &curve.values, &curve.dominant, opts);
        if !self.is_symmetric() {
            return Ok(raw);
        }
        raw.into_iter().map(|k| self.refine_kink(curve, k)).collect()
    }

    fn refine_kink(&self, curve: &LdfCurve, k: Kink) -> Result<Kink> {
        let (Some(left), Some(right)) = (k.left, k.right) else {
            return Ok(k);
        };
        if left == right {
            return Ok(k);
        }
        let n = curve.len();
        let lo = curve.grid[k.index.saturating_sub(2)];
        let hi = curve.grid[(k.index + 2).min(n - 1)];
        let gap = |x: f64| self.sector_gap(curve.axis.fields(x, curve.fixed));
        let Some(x) = bisect(gap, lo, hi)? else {
            return Ok(k);
        };
        let jump = self.sector_slope(right, curve.axis, x, curve.fixed)?
            - self.sector_slope(left, curve.axis, x, curve.fixed)?;
        Ok(Kink {
            position: x,
            jump,
            ..k
        })
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::GridMismatch("grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Root of a sign-changing function on `[lo, hi]`, or `None` if the ends
/// have the same sign.
fn bisect<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64) -> Result<Option<f64>> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(Some(lo));
    }
    if fhi == 0.0 {
        return Ok(Some(hi));
    }
    if flo.signum() == fhi.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `k`-th derivative at 0 by central differences with one Richardson step.
fn derivative_at_zero<F: Fn(f64) -> Result<f64>>(f: F, order: u32, tol: f64) -> Result<f64> {
    let (h, stencil): (f64, fn(&dyn Fn(f64) -> Result<f64>, f64) -> Result<f64>) = match order {
        1 => (DERIVATIVE_STEP, |f, h| Ok((f(h)? - f(-h)?) / (2.0 * h))),
        2 => (1e-3, |f, h| Ok((f(h)? - 2.0 * f(0.0)? + f(-h)?) / (h * h))),
        _ => (1e-2, |f, h| {
            Ok((f(2.0 * h)? - 2.0 * f(h)? + 2.0 * f(-h)? - f(-2.0 * h)?) / (2.0 * h * h * h))
        }),
    };
    let coarse = stencil(&f, h)?;
    let fine = stencil(&f, h / 2.0)?;
    let extrapolated = (4.0 * fine - coarse) / 3.0;
    let estimate = (extrapolated - fine).abs();
    if estimate > tol {
        return Err(Error::StepTooSmall {
            estimate,
            tolerance: tol,
        });
    }
    Ok(extrapolated)
}

pub fn central_differences(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Slope-jump kink detector on a sampled curve.
///
/// Interval slopes `s_i` are differenced at each interior point; a point is
/// flagged when its jump exceeds `threshold ×` the median jump in a window of
/// `±window` points (excluding itself) and `floor ×` the slope range.
/// Adjacent flagged points form one kink whose jump is their sum.
pub fn detect_kinks(
    grid: &[f64],
    values: &[f64],
    dominant: &[Option<Sector>],
    opts: &KinkOptions,
) -> Vec<Kink> {
    let n = grid.len();
    if n < 3 {
        return Vec::new();
    }
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]))
        .collect();
    let (smin, smax) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let floor = opts.floor * (smax - smin);
    if floor <= 0.0 {
        return Vec::new();
    }
    // jumps[i] lives at grid point i + 1
    let jumps: Vec<f64> = slopes.windows(2).map(|w| w[1] - w[0]).collect();
    let m = jumps.len();
    let flagged: Vec<bool> = (0..m)
        .map(|i| {
            let lo = i.saturating_sub(opts.window);
            let hi = (i + opts.window).min(m - 1);
            let local: Vec<f64> = (lo..=hi).filter(|&j| j != i).map(|j| jumps[j].abs()).collect();
            let j = jumps[i].abs();
            j > floor && j > opts.threshold * median(local)
        })
        .collect();

    let mut kinks = Vec::new();
    let mut i = 0;
    while i < m {
        if !flagged[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < m && flagged[i + 1] {
            i += 1;
        }
        let cluster = start..=i;
        let jump: f64 = cluster.clone().map(|j| jumps[j]).sum();
        let weight: f64 = cluster.clone().map(|j| jumps[j].abs()).sum();
        let position = cluster.clone().map(|j| jumps[j].abs() * grid[j + 1]).sum::<f64>() / weight;
        let index = cluster
            .clone()
            .max_by(|&a, &b| jumps[a].abs().total_cmp(&jumps[b].abs()))
            .expect("non-empty")
            + 1;
        kinks.push(Kink {
            index,
            span: (start + 1, i + 1),
            position,
            jump,
            left: dominant.get(start).copied().flatten(),
            right: dominant.get(i + 2).copied().flatten(),
        });
        i += 1;
    }
    kinks
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Grid `center + jΔ` with `Δ = half_width / m`, covering `[lo, hi]`
/// and symmetric about `center`. Used for current grids, which must map onto
/// themselves under `λ ↦ κ − λ` (center `κ/2`).
pub fn symmetric_grid(center: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    assert!(step > 0.0 && lo < hi);
    let reach = (center - lo).max(hi - center);
    let k = (reach / step).ceil() as i64;
    (-k..=k).map(|j| center + j as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn symmetric_grid_mirrors() {
        let kappa = -2.4;
        let g = symmetric_grid(kappa / 2.0, 0.1, -3.0, 1.0);
        for &x in &g {
            let m = kappa - x;
            assert!(g.iter().any(|&y| (y - m).abs() < 1e-12));
        }
    }

    #[test]
    fn detector_finds_abs_kink() {
        let g = linspace(-1.0, 1.0, 201);
        let v: Vec<f64> = g.iter().map(|x| x.abs() + 0.3 * x * x).collect();
        let k = detect_kinks(&g, &v, &vec![None; g.len()], &KinkOptions::default());
        assert_eq!(k.len(), 1);
        assert!(k[0].position.abs() < 1e-12);
        assert!((k[0].jump - 2.0).abs() < 0.6 * (g[1] - g[0]) + 1e-9);
    }

    #[test]
    fn detector_ignores_smooth_curves() {
        let g = linspace(-3.0, 1.0, 401);
        let v: Vec<f64> = g.iter().map(|x| (1.0 + (5.0 * x).exp()).ln() / 5.0).collect();
        assert!(detect_kinks(&g, &v, &vec![None; g.len()], &KinkOptions::default()).is_empty());
    }

    #[test]
    fn detector_ignores_flat_curves() {
        let g = linspace(0.0, 1.0, 50);
        assert!(detect_kinks(&g, &vec![0.0; 50], &vec![None; 50], &KinkOptions::default()).is_empty());
    }

    #[test]
    fn off_grid_kink_is_clustered() {
        let g = linspace(-1.0, 1.0, 100);
        let v: Vec<f64> = g.iter().map(|x| (x - 0.013).max(0.0)).collect();
        let k = detect_kinks(&g, &v, &vec![None; g.len()], &KinkOptions::default());
        assert_eq!(k.len(), 1);
        assert!((k[0].jump - 1.0).abs() < 1e-9);
        assert!((k[0].position - 0.013).abs() < g[1] - g[0]);
    }

    #[test]
    fn reference_averages_have_expected_signs() {
        let e = SpectralEngine::new(&ModelParams::reference()).unwrap();
        let avg = e.sector_averages().unwrap();
        assert!(avg.q_s < 0.0);
        assert!(avg.q_a.abs() < 1e-9);
        assert!(avg.a_s > avg.a_a && avg.a_a > 0.0);
        assert!((avg.q_s + 0.0392619).abs() < 1e-6);
        assert!((avg.a_s - 0.0510516).abs() < 1e-6);
        assert!((avg.a_a - 0.0183333).abs() < 1e-6);
    }

    #[test]
    fn dephasing_engine_refuses_sectors() {
        let e = SpectralEngine::new(&ModelParams::reference().with_gamma_dephase(0.01)).unwrap();
        assert!(matches!(
            e.sector_leading_eigenvalue(CountingFields::ZERO, Sector::S),
            Err(Error::BrokenSymmetry { .. })
        ));
        let m = e.mu(CountingFields::new(0.2, 0.0), &SectorOverlap::both()).unwrap();
        assert_eq!(m.sector, None);
    }
}
