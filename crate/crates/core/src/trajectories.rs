//! Quantum-jump unraveling of the master equation.
//!
//! Between jumps the unnormalized state evolves under
//! `H_eff = H − (i/2) Σ_k L_k†L_k`; a jump fires when `‖ψ‖²` falls to a
//! uniform draw `u`. The no-jump propagator is exact (precomputed matrix
//! exponentials on a fixed lattice aligned with the ξ output grid), and the
//! crossing inside a lattice step is located by regula falsi on a Taylor
//! expansion of the step. The norm is non-increasing, so a step contains a
//! crossing iff its end-point norm is below `u`.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, expm, CMat, CVec, I};
use crate::liouville::{build_liouvillian, vectorize, devectorize, DensityMatrix, SteadySector};
use crate::model::{build_hamiltonian, build_jump_operators, build_symmetry_bases, Channel, ModelParams, DIM};

type M8 = SMatrix<Complex64, DIM, DIM>;
type V8 = SVector<Complex64, DIM>;

/// Default number of ξ samples over `[0, T]`.
pub const DEFAULT_SAMPLES: usize = 500;
/// Default collapse tolerance on ξ.
pub const DEFAULT_FREEZE_TOL: f64 = 1e-3;

fn to_m8(m: &CMat) -> M8 {
    M8::from_fn(|i, j| m[(i, j)])
}

fn to_v8(v: &CVec) -> V8 {
    V8::from_fn(|i, _| v[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jump_events: Vec<JumpEvent>,
    /// `(t, ξ(t))` on the output grid.
    pub xi_samples: Vec<(f64, f64)>,
    pub k_plus: u64,
    pub k_minus: u64,
    pub duration: f64,
}

impl TrajectoryRecord {
    /// Net absorbed quanta `Q = K⁺ − K⁻`.
    pub fn current(&self) -> i64 {
        self.k_plus as i64 - self.k_minus as i64
    }

    /// Counted bath jumps `A = K⁺ + K⁻`.
    pub fn activity(&self) -> u64 {
        self.k_plus + self.k_minus
    }

    pub fn final_xi(&self) -> f64 {
        self.xi_samples.last().map_or(f64::NAN, |s| s.1)
    }

    pub fn counted_events(&self) -> impl Iterator<Item = &JumpEvent> {
        self.jump_events.iter().filter(|e| e.channel.is_counted())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    /// ξ samples over `[0, T]`, both ends included.
    pub n_samples: usize,
    /// Largest lattice step of the no-jump propagator.
    pub max_step: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            max_step: 0.25,
        }
    }
}

/// Precomputed propagators for one `(params, T, options)` triple.
#[derive(Debug, Clone)]
pub struct Unraveling {
    duration: f64,
    n_samples: usize,
    /// `−i H_eff`.
    generator: M8,
    jumps: Vec<(Channel, M8)>,
    projector: M8,
    out_step: f64,
    sub_steps: usize,
    u_out: M8,
    u_sub: M8,
}

struct Walker<'a> {
    un: &'a Unraveling,
    rng: ChaCha8Rng,
    psi: V8,
    u: f64,
    events: Vec<JumpEvent>,
    k_plus: u64,
    k_minus: u64,
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

impl Unraveling {
    pub fn new(params: &ModelParams, duration: f64, opts: &TrajectoryOptions) -> Result<Self> {
        params.validate()?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParams(format!("duration must be > 0, got {duration}")));
        }
        if opts.n_samples < 2 || !(opts.max_step > 0.0) {
            return Err(Error::InvalidParams("need n_samples >= 2 and max_step > 0".into()));
        }
        let h = build_hamiltonian(params);
        let ops = build_jump_operators(params);
        let mut decay = CMat::zeros(DIM, DIM);
        for l in &ops {
            decay += l.adjoint() * l;
        }
        let h_eff = h - decay * (I * 0.5);
        let generator = h_eff * (-I);
        let jumps = Channel::ALL
            .iter()
            .zip(&ops)
            .filter(|(_, l)| l.iter().any(|z| z.norm() > 0.0))
            .map(|(&ch, l)| (ch, to_m8(l)))
            .collect();
        let out_step = duration / (opts.n_samples - 1) as f64;
        let sub_steps = (out_step / opts.max_step).ceil().max(1.0) as usize;
        let sub = out_step / sub_steps as f64;
        Ok(Self {
            duration,
            n_samples: opts.n_samples,
            u_out: to_m8(&expm(&(&generator * c(out_step)))),
            u_sub: to_m8(&expm(&(&generator * c(sub)))),
            generator: to_m8(&generator),
            jumps,
            projector: to_m8(&build_symmetry_bases().antisym_projector),
            out_step,
            sub_steps,
        })
    }

    pub fn sample_times(&self) -> Vec<f64> {
        (0..self.n_samples).map(|k| self.time_at(k)).collect()
    }

    fn time_at(&self, k: usize) -> f64 {
        if k + 1 == self.n_samples {
            self.duration
        } else {
            k as f64 * self.out_step
        }
    }

    fn xi(&self, psi: &V8) -> f64 {
        ((&self.projector * psi).norm_squared() / psi.norm_squared()).clamp(0.0, 1.0)
    }

    /// Taylor coefficients `G^k ψ / k!` of `exp(G τ) ψ`.
    fn taylor(&self, psi: &V8) -> Vec<V8> {
        let scale = psi.norm();
        let mut terms = vec![*psi];
        let mut k = 1.0;
        while terms.len() < 60 {
            let next = (&self.generator * terms.last().unwrap()) / c(k);
            let small = next.norm() <= 1e-18 * scale;
            terms.push(next);
            if small {
                break;
            }
            k += 1.0;
        }
        terms
    }

    fn eval_taylor(terms: &[V8], tau: f64) -> V8 {
        let mut acc = *terms.last().unwrap();
        for t in terms.iter().rev().skip(1) {
            acc = acc * c(tau) + t;
        }
        acc
    }

    /// One trajectory from `psi0` (normalized internally).
    pub fn sample(&self, psi0: &CVec, seed: u64) -> Result<TrajectoryRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(psi0, seed, &mut rng)
    }

    fn sample_with(&self, psi0: &CVec, seed: u64, rng: &mut ChaCha8Rng) -> Result<TrajectoryRecord> {
        if psi0.len() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                got: psi0.len(),
            });
        }
        let n = psi0.norm();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let mut w = Walker {
            un: self,
            u: draw_threshold(rng),
            rng: rng.clone(),
            psi: to_v8(psi0) / c(n),
            events: Vec::new(),
            k_plus: 0,
            k_minus: 0,
        };
        let mut xi_samples = Vec::with_capacity(self.n_samples);
        xi_samples.push((0.0, self.xi(&w.psi)));
        for k in 1..self.n_samples {
            w.output_step(self.time_at(k - 1));
            xi_samples.push((self.time_at(k), self.xi(&w.psi)));
        }
        *rng = w.rng;
        Ok(TrajectoryRecord {
            seed,
            jump_events: w.events,
            xi_samples,
            k_plus: w.k_plus,
            k_minus: w.k_minus,
            duration: self.duration,
        })
    }
}

impl Walker<'_> {
    fn output_step(&mut self, start: f64) {
        let un = self.un;
        let cand = &un.u_out * self.psi;
        if cand.norm_squared() >= self.u {
            self.psi = cand;
            return;
        }
        let sub = un.out_step / un.sub_steps as f64;
        let mut t = start;
        let mut on_lattice = true;
        for k in 1..=un.sub_steps {
            let target = start + k as f64 * sub;
            loop {
                let cand = if on_lattice {
                    &un.u_sub * self.psi
                } else {
                    Unraveling::eval_taylor(&un.taylor(&self.psi), target - t)
                };
                if cand.norm_squared() >= self.u {
                    self.psi = cand;
                    on_lattice = true;
                    break;
                }
                let tau = self.crossing(target - t);
                t += tau;
                self.jump(t);
                on_lattice = false;
            }
            t = target;
        }
    }

    /// Time within `[0, span]` at which `‖ψ‖²` reaches `u`, advancing `ψ` to it.
    fn crossing(&mut self, span: f64) -> f64 {
        let terms = self.un.taylor(&self.psi);
        let f = |tau: f64| Unraveling::eval_taylor(&terms, tau).norm_squared() - self.u;
        let (mut a, mut b) = (0.0, span);
        let (mut fa, mut fb) = (f(a), f(b));
        let mut side = 0i8;
        let mut x = b;
        if fa <= 0.0 {
            x = 0.0;
        } else {
            for _ in 0..200 {
                x = (a * fb - b * fa) / (fb - fa);
                let fx = f(x);
                if fx.abs() <= 1e-15 * self.u || (b - a) <= 1e-14 * span.max(1.0) {
                    break;
                }
                if fx > 0.0 {
                    a = x;
                    fa = fx;
                    if side == 1 {
                        fb *= 0.5;
                    }
                    side = 1;
                } else {
                    b = x;
                    fb = fx;
                    if side == -1 {
                        fa *= 0.5;
                    }
                    side = -1;
                }
            }
        }
        self.psi = Unraveling::eval_taylor(&terms, x);
        x
    }

    fn jump(&mut self, time: f64) {
        let rates: Vec<f64> = self
            .un
            .jumps
            .iter()
            .map(|(_, l)| (l * self.psi).norm_squared())
            .collect();
        let total: f64 = rates.iter().sum();
        if total > 0.0 {
            let mut r = self.rng.gen::<f64>() * total;
            let mut pick = rates.len() - 1;
            for (k, &w) in rates.iter().enumerate() {
                if r < w {
                    pick = k;
                    break;
                }
                r -= w;
            }
            let (ch, l) = &self.un.jumps[pick];
            let next = l * self.psi;
            self.psi = next / c(next.norm());
            match ch {
                Channel::Plus => self.k_plus += 1,
                Channel::Minus => self.k_minus += 1,
                _ => {}
            }
            self.events.push(JumpEvent { time, channel: *ch });
        } else {
            // no channel can fire from this state; the norm stays put
            self.psi /= c(self.psi.norm());
        }
        self.u = draw_threshold(&mut self.rng);
    }
}

/// One trajectory of length `duration` from `psi0`.
pub fn sample_trajectory(
    params: &ModelParams,
    psi0: &CVec,
    duration: f64,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    Unraveling::new(params, duration, opts)?.sample(psi0, seed)
}

/// Times of the second jump in each pair of consecutive absorptions (`C⁺`)
/// and emissions (`C⁻`), scanning counted jumps only.
pub fn order_parameters(record: &TrajectoryRecord) -> (Vec<f64>, Vec<f64>) {
    order_parameters_of(record.counted_events())
}

fn order_parameters_of<'a>(events: impl Iterator<Item = &'a JumpEvent>) -> (Vec<f64>, Vec<f64>) {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    let mut prev: Option<Channel> = None;
    for e in events {
        if prev == Some(e.channel) {
            match e.channel {
                Channel::Plus => plus.push(e.time),
                Channel::Minus => minus.push(e.time),
                _ => {}
            }
        }
        prev = Some(e.channel);
    }
    (plus, minus)
}

/// Window statistics of the `C±` record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intermittency {
    pub windows: usize,
    /// Windows containing at least one counted jump.
    pub active: usize,
    /// Active windows without any `C±` event.
    pub quiescent: usize,
}

impl Intermittency {
    pub fn quiescent_fraction(&self) -> f64 {
        if self.active == 0 {
            0.0
        } else {
            self.quiescent as f64 / self.active as f64
        }
    }

    pub fn merge(self, other: Intermittency) -> Intermittency {
        Intermittency {
            windows: self.windows + other.windows,
            active: self.active + other.active,
            quiescent: self.quiescent + other.quiescent,
        }
    }
}

pub fn intermittency(record: &TrajectoryRecord, window: f64) -> Intermittency {
    let nw = (record.duration / window).ceil().max(1.0) as usize;
    let bin = |t: f64| ((t / window) as usize).min(nw - 1);
    let mut jumps = vec![0usize; nw];
    let mut c_events = vec![0usize; nw];
    for e in record.counted_events() {
        jumps[bin(e.time)] += 1;
    }
    let (p, m) = order_parameters(record);
    for t in p.into_iter().chain(m) {
        c_events[bin(t)] += 1;
    }
    let active = jumps.iter().filter(|&&j| j > 0).count();
    let quiescent = jumps.iter().zip(&c_events).filter(|(&j, &c)| j > 0 && c == 0).count();
    Intermittency {
        windows: nw,
        active,
        quiescent,
    }
}

/// Initial condition of an ensemble: a pure state, or a mixture sampled
/// component-wise per trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Pure(CVec),
    Mixture(Vec<(f64, CVec)>),
}

impl InitialState {
    /// Eigen-ensemble of a sector steady state; trajectories started from it
    /// are stationary on average.
    pub fn steady_state(params: &ModelParams, sector: SteadySector) -> Result<Self> {
        let rho = crate::liouville::steady_state(params, sector)?;
        Ok(Self::from_density(&rho))
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        let eig = rho.0.clone().symmetric_eigen();
        let comps = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 1e-14)
            .map(|(k, &p)| (p, eig.eigenvectors.column(k).into_owned()))
            .collect();
        InitialState::Mixture(comps)
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            InitialState::Pure(psi) => DensityMatrix::pure(psi),
            InitialState::Mixture(comps) => {
                let total: f64 = comps.iter().map(|(p, _)| p).sum();
                let mut m = CMat::zeros(DIM, DIM);
                for (p, v) in comps {
                    m += v * v.adjoint() * c(p / total / v.norm_squared());
                }
                DensityMatrix(m)
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &CVec {
        match self {
            InitialState::Pure(psi) => psi,
            InitialState::Mixture(comps) => {
                let total: f64 = comps.iter().map(|(p, _)| p).sum();
                let mut r = rng.gen::<f64>() * total;
                for (p, v) in comps {
                    if r < *p {
                        return v;
                    }
                    r -= p;
                }
                &comps.last().expect("non-empty mixture").1
            }
        }
    }
}

/// Per-trajectory seed: the first word of stream `index` of a ChaCha8
/// generator keyed by `master`. Independent of scheduling.
pub fn trajectory_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub master_seed: u64,
    pub trajectory: TrajectoryOptions,
    /// Full records (with jump lists) kept for the first this-many trajectories.
    pub keep_records: usize,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self {
            n_traj: 1000,
            master_seed: 0,
            trajectory: TrajectoryOptions::default(),
            keep_records: 0,
        }
    }
}

/// Compact per-trajectory outcome retained by ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub k_plus: u64,
    pub k_minus: u64,
    pub xi: Vec<f64>,
    pub c_plus: Vec<f64>,
    pub c_minus: Vec<f64>,
    pub intermittency: Intermittency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub duration: f64,
    pub times: Vec<f64>,
    pub mean_xi: Vec<f64>,
    pub stderr_xi: Vec<f64>,
    /// `⟨Q⟩/T`.
    pub mean_q: f64,
    pub stderr_q: f64,
    /// `⟨A⟩/T`.
    pub mean_a: f64,
    pub stderr_a: f64,
    /// Fraction with `ξ(T) > 1 − tol` at the default tolerance.
    pub freeze_fraction: f64,
    pub summaries: Vec<TrajectorySummary>,
    pub records: Vec<TrajectoryRecord>,
}

impl EnsembleStats {
    pub fn c_plus_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.summaries.iter().flat_map(|s| s.c_plus.iter().copied())
    }

    pub fn c_minus_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.summaries.iter().flat_map(|s| s.c_minus.iter().copied())
    }

    pub fn intermittency(&self) -> Intermittency {
        self.summaries.iter().fold(
            Intermittency {
                windows: 0,
                active: 0,
                quiescent: 0,
            },
            |acc, s| acc.merge(s.intermittency),
        )
    }
}

/// Window used for the per-trajectory intermittency statistics.
pub const INTERMITTENCY_WINDOW: f64 = 50.0;

fn mean_stderr(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        s += x;
        s2 += x * x;
    }
    let mean = s / n;
    if n < 2.0 {
        return (mean, f64::NAN);
    }
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Runs `opts.n_traj` independent trajectories in parallel and reduces them
/// in index order.
pub fn ensemble_run(
    params: &ModelParams,
    initial: &InitialState,
    duration: f64,
    opts: &EnsembleOptions,
) -> Result<EnsembleStats> {
    if opts.n_traj == 0 {
        return Err(Error::InvalidParams("n_traj must be >= 1".into()));
    }
    let un = Unraveling::new(params, duration, &opts.trajectory)?;
    let runs: Vec<(TrajectorySummary, Option<TrajectoryRecord>)> = (0..opts.n_traj)
        .into_par_iter()
        .map(|k| {
            let seed = trajectory_seed(opts.master_seed, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let psi0 = initial.draw(&mut rng).clone();
            let rec = un.sample_with(&psi0, seed, &mut rng)?;
            let (c_plus, c_minus) = order_parameters(&rec);
            let summary = TrajectorySummary {
                seed,
                k_plus: rec.k_plus,
                k_minus: rec.k_minus,
                xi: rec.xi_samples.iter().map(|s| s.1).collect(),
                c_plus,
                c_minus,
                intermittency: intermittency(&rec, INTERMITTENCY_WINDOW),
            };
            Ok((summary, (k < opts.keep_records).then_some(rec)))
        })
        .collect::<Result<_>>()?;

    let (summaries, records): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let records: Vec<TrajectoryRecord> = records.into_iter().flatten().collect();
    let times = un.sample_times();
    let (mean_xi, stderr_xi): (Vec<f64>, Vec<f64>) = (0..times.len())
        .map(|k| mean_stderr(summaries.iter().map(|s| s.xi[k])))
        .unzip();
    let (mean_q, stderr_q) =
        mean_stderr(summaries.iter().map(|s| (s.k_plus as f64 - s.k_minus as f64) / duration));
    let (mean_a, stderr_a) =
        mean_stderr(summaries.iter().map(|s| (s.k_plus + s.k_minus) as f64 / duration));
    let freeze_fraction = summaries
        .iter()
        .filter(|s| *s.xi.last().unwrap() > 1.0 - DEFAULT_FREEZE_TOL)
        .count() as f64
        / opts.n_traj as f64;
    Ok(EnsembleStats {
        n_traj: opts.n_traj,
        duration,
        times,
        mean_xi,
        stderr_xi,
        mean_q,
        stderr_q,
        mean_a,
        stderr_a,
        freeze_fraction,
        summaries,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreezingStats {
    pub fraction_to_a: f64,
    pub mean_collapse_time: f64,
    pub n_traj: usize,
}

/// Fraction of trajectories frozen into the antisymmetric sector and the
/// mean time after which ξ never re-enters `(tol, 1 − tol)`.
pub fn freezing_statistics(stats: &EnsembleStats, tol: f64) -> Result<FreezingStats> {
    let mut unfrozen = Vec::new();
    let mut to_a = 0usize;
    let mut collapse_sum = 0.0;
    for s in &stats.summaries {
        let inside = |x: f64| x > tol && x < 1.0 - tol;
        let last_inside = s.xi.iter().rposition(|&x| inside(x));
        match last_inside {
            Some(k) if k + 1 == s.xi.len() => {
                unfrozen.push(s.seed);
                continue;
            }
            Some(k) => collapse_sum += stats.times[k + 1],
            None => {}
        }
        if *s.xi.last().unwrap() >= 1.0 - tol {
            to_a += 1;
        }
    }
    if !unfrozen.is_empty() {
        return Err(Error::NotFrozen { seeds: unfrozen });
    }
    let n = stats.summaries.len();
    Ok(FreezingStats {
        fraction_to_a: to_a as f64 / n as f64,
        mean_collapse_time: collapse_sum / n as f64,
        n_traj: n,
    })
}

/// Ensemble-level oracle: `Tr(P₋ e^{Lt} ρ₀)` at each time.
pub fn xi_master_equation(params: &ModelParams, rho0: &DensityMatrix, times: &[f64]) -> Vec<f64> {
    let l = build_liouvillian(params);
    let p = build_symmetry_bases().antisym_projector;
    let mut out = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    let mut v = vectorize(rho0);
    for &t in times {
        let dt = t - t_prev;
        assert!(dt >= 0.0, "times must be non-decreasing");
        if dt > 0.0 {
            v = expm(&(&l.matrix * c(dt))) * v;
        }
        t_prev = t;
        out.push(devectorize(&v).expect("64-vector").expect(&p).re);
    }
    out
}
