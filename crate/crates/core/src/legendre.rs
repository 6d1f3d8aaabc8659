//! Numerical Legendre inversion of sampled cumulant generating functions.
//!
//! With `Z ≍ ⟨e^{−λQ−εA}⟩`, the rate functions are infima over the dual
//! grid: `F(q) = inf_λ [θ(λ) + λq]`, `I(a) = inf_ε [ζ(ε) + εa]` and
//! `G(q,a) = inf_{λ,ε} [μ(λ,ε) + λq + εa]`. Brute-force minimisation is used
//! throughout because the derivative map is discontinuous at the kinks.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{detect_kinks, Axis, KinkOptions, LdfCurve, LdfSurface, Observable, SectorAverages};

/// Values within this distance of the minimum count as co-minimizers.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// A rate-function value on a grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Finite(f64),
    /// Minimum over the sampled dual grid attained on its boundary; the true
    /// value is lower (possibly −∞). The grid minimum is kept.
    Unresolved(f64),
    /// Outside the support `|q| ≤ a`; the rate function is −∞.
    Infeasible,
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Cell::Finite(v) | Cell::Unresolved(v) => Some(v),
            Cell::Infeasible => None,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Cell::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Cell::Infeasible)
    }

    fn shift(self, by: Cell) -> Cell {
        match (self, by) {
            (Cell::Infeasible, _) | (_, Cell::Infeasible) => Cell::Infeasible,
            (Cell::Finite(a), Cell::Finite(b)) => Cell::Finite(a - b),
            (x, y) => Cell::Unresolved(x.value().unwrap() - y.value().unwrap()),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Finite(v) => write!(f, "{v:.12e}"),
            Cell::Unresolved(_) => f.write_str("NA"),
            Cell::Infeasible => f.write_str("INF"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFunctionCurve {
    pub observable: Observable,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub affine: Vec<bool>,
    /// Dual-grid index of the minimizer.
    pub argmin: Vec<usize>,
    /// False where the minimizer sits on the dual-grid boundary.
    pub resolved: Vec<bool>,
}

impl RateFunctionCurve {
    pub fn cell(&self, i: usize) -> Cell {
        if self.resolved[i] {
            Cell::Finite(self.values[i])
        } else {
            Cell::Unresolved(self.values[i])
        }
    }

    /// Inverse transform back to the generating function:
    /// `θ(λ) = sup_q [F(q) − λq]` over the resolved samples.
    pub fn transform_back(&self, duals: &[f64]) -> Vec<f64> {
        duals
            .iter()
            .map(|&l| {
                self.grid
                    .iter()
                    .zip(&self.values)
                    .zip(&self.resolved)
                    .filter(|(_, &r)| r)
                    .map(|((&x, &v), _)| v - l * x)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRateSurface {
    pub q_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    /// Rows index q, columns a.
    pub cells: DMatrix<Cell>,
    pub affine: DMatrix<bool>,
    /// Dual-grid minimizer `(i_λ, j_ε)` per cell; `None` for infeasible cells.
    pub argmin: DMatrix<Option<(usize, usize)>>,
}

/// Conditional rate functions `G_Q(q|a)` and `G_A(a|q)` on the joint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalLdfs {
    pub current_given_activity: DMatrix<Cell>,
    pub activity_given_current: DMatrix<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    /// Critical activity below which only `q = 0` is reachable.
    pub a_c: f64,
    /// Slope `dε/dλ` of the coexistence line at the origin.
    pub u0: f64,
    pub kappa: f64,
    /// Distance between the twin kinks of `θ`.
    pub delta: f64,
    pub q_s: f64,
}

impl GeometryReport {
    /// Fraction of time spent in the symmetric phase in the coexistence
    /// mixture realizing current `q`, for `|q| ≤ |q_S|`.
    pub fn maxwell_p(&self, q: f64) -> Option<f64> {
        if q.abs() <= self.q_s.abs() && self.q_s != 0.0 {
            Some((q / self.q_s).abs())
        } else {
            None
        }
    }
}

struct Minimum {
    value: f64,
    index: usize,
    /// All co-minimizers within `TIE_TOLERANCE`.
    ties: Vec<usize>,
}

impl Minimum {
    /// Co-minimizers that are not neighbours of one another on a 1-D grid.
    fn split_1d(&self) -> bool {
        self.ties.last().unwrap() - self.ties.first().unwrap() > 1
    }

    /// Co-minimizer more than one cell away from the minimizer on a 2-D grid
    /// with `ncols` columns.
    fn split_2d(&self, ncols: usize) -> bool {
        let (i0, j0) = (self.index / ncols, self.index % ncols);
        self.ties
            .iter()
            .any(|&k| (k / ncols).abs_diff(i0) > 1 || (k % ncols).abs_diff(j0) > 1)
    }
}

fn minimize(values: impl Iterator<Item = f64> + Clone) -> Minimum {
    let (index, value) = values
        .clone()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty dual grid");
    let ties: Vec<usize> = values
        .enumerate()
        .filter(|(_, v)| *v - value <= TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    Minimum { value, index, ties }
}

fn observable_of(axis: Axis) -> Observable {
    match axis {
        Axis::Lambda => Observable::Current,
        Axis::Epsilon => Observable::Activity,
    }
}

/// Legendre inversion without the boundary check; boundary minimizers are
/// reported through `resolved`.
pub fn invert_curve_unchecked(curve: &LdfCurve, targets: &[f64]) -> RateFunctionCurve {
    let kinks = detect_kinks(&curve.grid, &curve.values, &curve.dominant, &KinkOptions::default());
    let at_kink = |i: usize| kinks.iter().any(|k| (k.span.0..=k.span.1).contains(&i));
    let n = curve.len();
    let mins: Vec<Minimum> = targets
        .par_iter()
        .map(|&t| minimize(curve.grid.iter().zip(&curve.values).map(move |(&x, &m)| m + x * t)))
        .collect();
    RateFunctionCurve {
        observable: observable_of(curve.axis),
        grid: targets.to_vec(),
        values: mins.iter().map(|m| m.value).collect(),
        affine: mins.iter().map(|m| m.split_1d() || at_kink(m.index)).collect(),
        argmin: mins.iter().map(|m| m.index).collect(),
        resolved: mins.iter().map(|m| m.index != 0 && m.index != n - 1).collect(),
    }
}

/// Rate function on `targets` by minimisation over the curve's grid.
pub fn invert_curve(curve: &LdfCurve, targets: &[f64]) -> Result<RateFunctionCurve> {
    let out = invert_curve_unchecked(curve, targets);
    if let Some(index) = out.resolved.iter().position(|r| !r) {
        return Err(Error::GridTooNarrow { index });
    }
    Ok(out)
}

/// Range of `−dμ/dx` over the interior of the curve, i.e. the typical values
/// reachable by tilting within the sampled window.
pub fn conjugate_range(curve: &LdfCurve) -> (f64, f64) {
    let n = curve.len();
    curve.derivative[1..n - 1]
        .iter()
        .map(|d| -d)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

/// Joint rate function with the support `|q| ≤ a` marked explicitly.
pub fn invert_surface(surface: &LdfSurface, q_grid: &[f64], a_grid: &[f64]) -> JointRateSurface {
    let (nl, ne) = surface.mu.shape();
    let (nq, na) = (q_grid.len(), a_grid.len());
    let on_line = |i: usize, j: usize| {
        let s = surface.dominant[(i, j)];
        let nb = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        nb.iter()
            .filter(|(a, b)| *a < nl && *b < ne)
            .any(|&(a, b)| surface.dominant[(a, b)] != s)
    };
    let results: Vec<(Cell, bool, Option<(usize, usize)>)> = (0..nq * na)
        .into_par_iter()
        .map(|k| {
            let (q, a) = (q_grid[k / na], a_grid[k % na]);
            if q.abs() > a + 1e-12 {
                return (Cell::Infeasible, false, None);
            }
            let vals = (0..nl * ne).map(|m| {
                let (i, j) = (m / ne, m % ne);
                surface.mu[(i, j)] + surface.lambda_grid[i] * q + surface.epsilon_grid[j] * a
            });
            let min = minimize(vals);
            let (i, j) = (min.index / ne, min.index % ne);
            let boundary = i == 0 || j == 0 || i == nl - 1 || j == ne - 1;
            let cell = if boundary {
                Cell::Unresolved(min.value)
            } else {
                Cell::Finite(min.value)
            };
            (cell, min.split_2d(ne) || on_line(i, j), Some((i, j)))
        })
        .collect();
    JointRateSurface {
        q_grid: q_grid.to_vec(),
        a_grid: a_grid.to_vec(),
        cells: DMatrix::from_fn(nq, na, |i, j| results[i * na + j].0),
        affine: DMatrix::from_fn(nq, na, |i, j| results[i * na + j].1),
        argmin: DMatrix::from_fn(nq, na, |i, j| results[i * na + j].2),
    }
}

/// Unconstrained dual-grid minimizer for a cell, used to check that
/// infeasible cells really run off the sampled window.
pub fn dual_minimizer(surface: &LdfSurface, q: f64, a: f64) -> (usize, usize) {
    let (nl, ne) = surface.mu.shape();
    let vals = (0..nl * ne).map(|m| {
        let (i, j) = (m / ne, m % ne);
        surface.mu[(i, j)] + surface.lambda_grid[i] * q + surface.epsilon_grid[j] * a
    });
    let k = minimize(vals).index;
    (k / ne, k % ne)
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// `G_Q(q|a) = G(q,a) − I(a)` and `G_A(a|q) = G(q,a) − F(q)`.
pub fn conditional_ldfs(
    joint: &JointRateSurface,
    fq: &RateFunctionCurve,
    ia: &RateFunctionCurve,
) -> Result<ConditionalLdfs> {
    if fq.observable != Observable::Current || !same_grid(&fq.grid, &joint.q_grid) {
        return Err(Error::GridMismatch("F(q) grid differs from the joint q grid".into()));
    }
    if ia.observable != Observable::Activity || !same_grid(&ia.grid, &joint.a_grid) {
        return Err(Error::GridMismatch("I(a) grid differs from the joint a grid".into()));
    }
    let (nq, na) = joint.cells.shape();
    Ok(ConditionalLdfs {
        current_given_activity: DMatrix::from_fn(nq, na, |i, j| joint.cells[(i, j)].shift(ia.cell(j))),
        activity_given_current: DMatrix::from_fn(nq, na, |i, j| joint.cells[(i, j)].shift(fq.cell(i))),
    })
}

pub fn geometry_report(avg: &SectorAverages, params: &ModelParams) -> Result<GeometryReport> {
    let da = avg.a_s - avg.a_a;
    if da.abs() <= 1e-12 {
        return Err(Error::DegenerateSectors(da));
    }
    let kappa = params.kappa();
    Ok(GeometryReport {
        a_c: avg.q_s.abs(),
        u0: -(avg.q_s - avg.q_a) / da,
        kappa,
        delta: -kappa,
        q_s: avg.q_s,
    })
}

/// Slope of the sector boundary `ε = u λ` through the origin, fitted to the
/// zero crossings of `μ_S − μ_A` along ε within `|λ|, |ε| ≤ window`.
pub fn fitted_kink_slope(surface: &LdfSurface, window: f64) -> Result<f64> {
    let gap = surface
        .sector_gap
        .as_ref()
        .ok_or_else(|| Error::GridMismatch("surface has no sector gap (single sector or γ > 0)".into()))?;
    let eg = &surface.epsilon_grid;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, &l) in surface.lambda_grid.iter().enumerate() {
        if l.abs() > window || l.abs() < 1e-12 {
            continue;
        }
        for j in 0..eg.len() - 1 {
            let (g0, g1) = (gap[(i, j)], gap[(i, j + 1)]);
            if g0.signum() == g1.signum() || g0 == g1 {
                continue;
            }
            let e = eg[j] + (eg[j + 1] - eg[j]) * g0 / (g0 - g1);
            if e.abs() <= window {
                sxy += l * e;
                sxx += l * l;
            }
        }
    }
    if sxx == 0.0 {
        return Err(Error::GridMismatch("no boundary points inside the fit window".into()));
    }
    Ok(sxy / sxx)
}

/// Outcome of the lockdown check below the critical activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockdownCheck {
    /// Largest `|G(0,a)|` over grid cells with `a < a_c`.
    pub max_abs_g_zero_current: f64,
    /// Cells with `q ≠ 0`, `a < a_c` holding a finite value.
    pub finite_nonzero_current: usize,
    pub cells_checked: usize,
}

pub fn lockdown_check(joint: &JointRateSurface, a_c: f64) -> LockdownCheck {
    let mut out = LockdownCheck {
        max_abs_g_zero_current: 0.0,
        finite_nonzero_current: 0,
        cells_checked: 0,
    };
    for (i, &q) in joint.q_grid.iter().enumerate() {
        for (j, &a) in joint.a_grid.iter().enumerate() {
            if a >= a_c {
                continue;
            }
            out.cells_checked += 1;
            let cell = joint.cells[(i, j)];
            if q.abs() <= 1e-12 {
                let v = cell.value().map_or(f64::INFINITY, f64::abs);
                out.max_abs_g_zero_current = out.max_abs_g_zero_current.max(v);
            } else if cell.finite().is_some() {
                out.finite_nonzero_current += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{central_differences, linspace};

    fn curve(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> LdfCurve {
        let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        LdfCurve {
            axis: Axis::Lambda,
            fixed: 0.0,
            derivative: central_differences(&grid, &values),
            dominant: vec![None; grid.len()],
            grid,
            values,
        }
    }

    #[test]
    fn gaussian_round_trip() {
        // θ(λ) = −mλ + sλ²/2 ⇒ F(q) = −(q − m)²/(2s)
        let (m, s) = (0.3, 0.5);
        let c = curve(linspace(-4.0, 4.0, 801), |l| -m * l + 0.5 * s * l * l);
        let q = linspace(-1.0, 0.4, 15);
        let f = invert_curve(&c, &q).unwrap();
        for (x, v) in q.iter().zip(&f.values) {
            let exact = -(x - m).powi(2) / (2.0 * s);
            assert!((v - exact).abs() < 1e-4, "{x}: {v} vs {exact}");
        }
        assert!(f.affine.iter().all(|a| !a));
    }

    #[test]
    fn kink_maps_to_affine_segment() {
        // θ(λ) = max(0, λ) has F = 0 on q ∈ [−1, 0]
        let c = curve(linspace(-2.0, 2.0, 401), |l| l.max(0.0) + 0.01 * l * l);
        let q = linspace(-0.8, -0.2, 7);
        let f = invert_curve(&c, &q).unwrap();
        assert!(f.affine.iter().all(|&a| a));
        assert!(f.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn boundary_minimizer_is_rejected() {
        let c = curve(linspace(-1.0, 1.0, 21), |l| 0.5 * l * l);
        assert!(matches!(invert_curve(&c, &[5.0]), Err(Error::GridTooNarrow { index: 0 })));
    }

    #[test]
    fn maxwell_fraction() {
        let g = GeometryReport {
            a_c: 0.04,
            u0: 1.2,
            kappa: -2.4,
            delta: 2.4,
            q_s: -0.04,
        };
        assert_eq!(g.maxwell_p(-0.04), Some(1.0));
        assert_eq!(g.maxwell_p(0.0), Some(0.0));
        assert_eq!(g.maxwell_p(0.05), None);
    }

    #[test]
    fn degenerate_sectors_rejected() {
        let avg = SectorAverages {
            q_s: -0.01,
            q_a: 0.0,
            a_s: 0.02,
            a_a: 0.02,
        };
        assert!(matches!(
            geometry_report(&avg, &ModelParams::reference()),
            Err(Error::DegenerateSectors(_))
        ));
    }

    #[test]
    fn cell_display() {
        assert_eq!(Cell::Infeasible.to_string(), "INF");
        assert_eq!(Cell::Unresolved(1.0).to_string(), "NA");
        assert_eq!(Cell::Finite(0.0).shift(Cell::Infeasible), Cell::Infeasible);
    }
}
