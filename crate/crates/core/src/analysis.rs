//! Parameter sweeps and dephasing comparisons built on the spectral engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::ModelParams;
use crate::spectral::{linspace, Axis, KinkOptions, LdfCurve, SectorAverages, SpectralEngine};
use crate::symmetry::{Sector, SectorOverlap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub lambda_grid: Vec<f64>,
    pub epsilon_grid: Vec<f64>,
    pub kink: KinkOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            lambda_grid: linspace(-4.0, 2.0, 601),
            epsilon_grid: linspace(-1.0, 1.0, 201),
            kink: KinkOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    NBath,
    BZ,
}

impl SweptParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweptParameter::NBath => "n",
            SweptParameter::BZ => "b_z",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub averages: SectorAverages,
    /// Refined kink positions of θ(λ), ascending.
    pub lambda_kinks: Vec<f64>,
    pub epsilon_kinks: Vec<f64>,
    /// Distance between the two θ kinks, when exactly two were found.
    pub delta: Option<f64>,
    /// Slope jump of θ at the kink nearest λ = 0.
    pub jump_q: Option<f64>,
    /// Slope jump of ζ at the kink nearest ε = 0.
    pub jump_a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub swept: SweptParameter,
    pub points: Vec<SweepPoint>,
    /// Interior maximiser of `|q_S| − |q_A|` (quadratic fit), if any.
    pub argmax_q: Option<f64>,
    /// Interior maximiser of `a_S − a_A`.
    pub argmax_a: Option<f64>,
    /// Half the local grid spacing at the maximisers.
    pub resolution: f64,
}

fn nearest_to_zero(kinks: &[crate::spectral::Kink]) -> Option<f64> {
    kinks
        .iter()
        .min_by(|a, b| a.position.abs().total_cmp(&b.position.abs()))
        .map(|k| k.jump)
}

fn sweep_point(params: &ModelParams, value: f64, opts: &SweepOptions) -> Result<SweepPoint> {
    let engine = SpectralEngine::new(params)?;
    let both = SectorOverlap::both();
    let theta = engine.scan_curve(Axis::Lambda, 0.0, &opts.lambda_grid, &both)?;
    let zeta = engine.scan_curve(Axis::Epsilon, 0.0, &opts.epsilon_grid, &both)?;
    let lk = engine.kinks(&theta, &opts.kink)?;
    let ek = engine.kinks(&zeta, &opts.kink)?;
    let mut lambda_kinks: Vec<f64> = lk.iter().map(|k| k.position).collect();
    lambda_kinks.sort_by(f64::total_cmp);
    Ok(SweepPoint {
        value,
        averages: engine.sector_averages()?,
        delta: (lambda_kinks.len() == 2).then(|| lambda_kinks[1] - lambda_kinks[0]),
        lambda_kinks,
        epsilon_kinks: ek.iter().map(|k| k.position).collect(),
        jump_q: nearest_to_zero(&lk),
        jump_a: nearest_to_zero(&ek),
    })
}

/// Vertex of the parabola through the grid maximum and its two neighbours;
/// `None` when the maximum sits on the sweep boundary.
pub fn interior_argmax(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let k = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?
        .0;
    if k == 0 || k + 1 >= xs.len() {
        return None;
    }
    let (x0, x1, x2) = (xs[k - 1], xs[k], xs[k + 1]);
    let (y0, y1, y2) = (ys[k - 1], ys[k], ys[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv >= 0.0 {
        return Some(x1);
    }
    // Newton form p(x) = y0 + d01 (x - x0) + curv (x - x0)(x - x1); step from x1 by -p'(x1)/p''
    let slope_mid = d01 + curv * (x1 - x0);
    Some((x1 - slope_mid / (2.0 * curv)).clamp(x0, x2))
}

fn sweep(
    base: &ModelParams,
    swept: SweptParameter,
    values: &[f64],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&v| {
            let p = match swept {
                SweptParameter::NBath => base.with_n_bath(v),
                SweptParameter::BZ => base.with_b_z(v),
            }
            .with_gamma_dephase(0.0);
            p.validate()?;
            sweep_point(&p, v, opts)
        })
        .collect::<Result<_>>()?;
    let dq: Vec<f64> = points
        .iter()
        .map(|p| p.averages.q_s.abs() - p.averages.q_a.abs())
        .collect();
    let da: Vec<f64> = points.iter().map(|p| p.averages.a_s - p.averages.a_a).collect();
    let resolution = if values.len() > 1 {
        0.5 * values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max)
    } else {
        0.0
    };
    Ok(SweepResult {
        swept,
        argmax_q: interior_argmax(values, &dq),
        argmax_a: interior_argmax(values, &da),
        resolution,
        points,
    })
}

/// Sector averages and kink structure as functions of the bath occupation.
pub fn sweep_n(base: &ModelParams, n_list: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    if let Some(bad) = n_list.iter().find(|&&n| !(n > 0.0)) {
        return Err(crate::Error::InvalidParams(format!("sweep over n needs n > 0, got {bad}")));
    }
    sweep(base, SweptParameter::NBath, n_list, opts)
}

pub fn sweep_bz(base: &ModelParams, bz_list: &[f64], opts: &SweepOptions) -> Result<SweepResult> {
    sweep(base, SweptParameter::BZ, bz_list, opts)
}

/// A line in the (λ, ε) plane along `axis` at fixed value of the other field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub axis: Axis,
    pub fixed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceComparison {
    pub slice: Slice,
    pub gamma: f64,
    pub curve: LdfCurve,
    pub kinks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingComparison {
    pub slices: Vec<SliceComparison>,
}

impl DephasingComparison {
    /// Largest `|μ_γ − μ_0|` on a slice over points where the γ = 0 curve is
    /// dominated by `sector`.
    pub fn max_deviation(&self, slice: Slice, gamma: f64, sector: Sector) -> Option<f64> {
        let find = |g: f64| {
            self.slices
                .iter()
                .find(|s| s.slice == slice && s.gamma == g)
        };
        let (clean, noisy) = (find(0.0)?, find(gamma)?);
        clean
            .curve
            .values
            .iter()
            .zip(&noisy.curve.values)
            .zip(&clean.curve.dominant)
            .filter(|(_, d)| **d == Some(sector))
            .map(|((a, b), _)| (a - b).abs())
            .reduce(f64::max)
    }
}

/// Default slices: constant-ε lines through both kinks and constant-λ lines
/// crossing the coexistence line once.
pub fn default_slices() -> Vec<Slice> {
    let mut out: Vec<Slice> = [-0.2, 0.0, 0.2]
        .iter()
        .map(|&e| Slice {
            axis: Axis::Lambda,
            fixed: e,
        })
        .collect();
    out.extend([-0.5, 0.0, 0.5].iter().map(|&l| Slice {
        axis: Axis::Epsilon,
        fixed: l,
    }));
    out
}

/// `μ` along each slice for every dephasing strength, with kinks detected.
pub fn dephasing_comparison(
    params: &ModelParams,
    gammas: &[f64],
    slices: &[Slice],
    grid_for: impl Fn(Axis) -> Vec<f64>,
    kink: &KinkOptions,
) -> Result<DephasingComparison> {
    let mut out = Vec::new();
    for &g in gammas {
        let engine = SpectralEngine::new(&params.with_gamma_dephase(g))?;
        for &slice in slices {
            let grid = grid_for(slice.axis);
            let curve = engine.scan_curve(slice.axis, slice.fixed, &grid, &SectorOverlap::both())?;
            let kinks = engine.kinks(&curve, kink)?.iter().map(|k| k.position).collect();
            out.push(SliceComparison {
                slice,
                gamma: g,
                curve,
                kinks,
            });
        }
    }
    Ok(DephasingComparison { slices: out })
}

/// `μ` at one point of a slice, exposed for spot checks.
pub fn slice_value(engine: &SpectralEngine, slice: Slice, x: f64) -> Result<f64> {
    Ok(engine
        .mu(slice.axis.fields(x, slice.fixed), &SectorOverlap::both())?
        .value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| -(x - 0.33f64).powi(2)).collect();
        assert!((interior_argmax(&xs, &ys).unwrap() - 0.33).abs() < 1e-12);
        let mono: Vec<f64> = xs.clone();
        assert_eq!(interior_argmax(&xs, &mono), None);
    }
}
