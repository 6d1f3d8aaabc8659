//! Run configuration: a sectioned TOML file with strict keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{Slice, SweepOptions};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectral::{linspace, symmetric_grid, Axis, KinkOptions};
use crate::trajectories::{EnsembleOptions, TrajectoryOptions, DEFAULT_FREEZE_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub const fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }

    fn check(&self, key: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("{key}: bounds must be finite")));
        }
        if self.points < 2 || self.min >= self.max {
            return Err(Error::Config(format!(
                "{key}: need min < max and at least 2 points"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// `|z|` below which an eigenvalue counts as zero.
    pub null_tolerance: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            null_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdfConfig {
    pub lambda: GridSpec,
    pub epsilon: GridSpec,
    /// λ spacing of the surface grid; the grid itself is laid out
    /// symmetrically about κ/2 and snapped so it contains λ = 0.
    pub surface_lambda_step: f64,
    pub surface_lambda_min: f64,
    pub surface_lambda_max: f64,
    /// Must contain ε = 0.
    pub surface_epsilon: GridSpec,
    /// Must be symmetric about zero.
    pub q: GridSpec,
    pub a: GridSpec,
    /// Half-width of the window around the origin used to fit the
    /// coexistence-line slope.
    pub slope_window: f64,
    pub slope_points: usize,
    pub kink_threshold: f64,
    pub kink_window: usize,
    pub kink_floor: f64,
}

impl Default for LdfConfig {
    fn default() -> Self {
        Self {
            lambda: GridSpec::new(-4.0, 2.0, 601),
            epsilon: GridSpec::new(-2.0, 4.0, 601),
            surface_lambda_step: 0.05,
            surface_lambda_min: -4.0,
            surface_lambda_max: 2.0,
            surface_epsilon: GridSpec::new(-1.5, 3.0, 226),
            q: GridSpec::new(-0.1, 0.1, 81),
            a: GridSpec::new(0.0025, 0.2, 80),
            slope_window: 0.05,
            slope_points: 25,
            kink_threshold: 10.0,
            kink_window: 5,
            kink_floor: 1e-6,
        }
    }
}

impl LdfConfig {
    pub fn kink_options(&self) -> KinkOptions {
        KinkOptions {
            threshold: self.kink_threshold,
            window: self.kink_window,
            floor: self.kink_floor,
        }
    }

    /// Surface λ grid symmetric about κ/2 with a step close to
    /// `surface_lambda_step` that lands on λ = 0.
    pub fn surface_lambda_grid(&self, kappa: f64) -> Vec<f64> {
        let half = 0.5 * kappa.abs();
        let m = (half / self.surface_lambda_step).round().max(1.0);
        symmetric_grid(
            0.5 * kappa,
            half / m,
            self.surface_lambda_min,
            self.surface_lambda_max,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    /// One ensemble per dephasing strength; overrides `model.gamma_dephase`.
    pub gammas: Vec<f64>,
    pub duration: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub samples: usize,
    pub max_step: f64,
    /// Antisymmetric weight ξ(0) of the initial pure state.
    pub initial_weight_a: f64,
    /// Trajectories whose full jump and ξ logs are written.
    pub keep_records: usize,
    pub freeze_tol: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 0.001, 0.01],
            duration: 2000.0,
            n_traj: 1000,
            seed: 1,
            samples: 500,
            max_step: 0.25,
            initial_weight_a: 0.5,
            keep_records: 10,
            freeze_tol: DEFAULT_FREEZE_TOL,
        }
    }
}

impl TrajectoryConfig {
    pub fn ensemble_options(&self) -> EnsembleOptions {
        EnsembleOptions {
            n_traj: self.n_traj,
            master_seed: self.seed,
            trajectory: TrajectoryOptions {
                n_samples: self.samples,
                max_step: self.max_step,
            },
            keep_records: self.keep_records,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepNConfig {
    pub values: Vec<f64>,
    /// Field used for the whole sweep; falls back to `model.b_z`.
    pub b_z: Option<f64>,
}

impl Default for SweepNConfig {
    fn default() -> Self {
        Self {
            values: linspace(0.05, 2.0, 40),
            b_z: Some(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBzConfig {
    pub values: Vec<f64>,
    /// Bath occupation used for the whole sweep; falls back to `model.n_bath`.
    pub n_bath: Option<f64>,
}

impl Default for SweepBzConfig {
    fn default() -> Self {
        Self {
            values: linspace(0.05, 1.5, 30),
            n_bath: Some(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingConfig {
    pub gammas: Vec<f64>,
    /// ε values of the constant-ε (λ-direction) slices.
    pub lambda_slices: Vec<f64>,
    /// λ values of the constant-λ (ε-direction) slices.
    pub epsilon_slices: Vec<f64>,
    pub lambda: GridSpec,
    pub epsilon: GridSpec,
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 0.01],
            lambda_slices: vec![-0.2, 0.0, 0.2],
            epsilon_slices: vec![-0.5, 0.0, 0.5],
            lambda: GridSpec::new(-3.0, 1.0, 401),
            epsilon: GridSpec::new(-1.0, 1.0, 201),
        }
    }
}

impl DephasingConfig {
    pub fn slices(&self) -> Vec<Slice> {
        let l = self.lambda_slices.iter().map(|&e| Slice {
            axis: Axis::Lambda,
            fixed: e,
        });
        let e = self.epsilon_slices.iter().map(|&l| Slice {
            axis: Axis::Epsilon,
            fixed: l,
        });
        l.chain(e).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// Ensemble size of the trajectory criteria.
    pub n_traj: usize,
    pub seed: u64,
    /// Treat the runtime budgets as part of each criterion.
    pub enforce_runtime: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            n_traj: 10_000,
            seed: 1,
            enforce_runtime: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelParams,
    pub output: OutputConfig,
    pub spectrum: SpectrumConfig,
    pub ldf: LdfConfig,
    pub trajectories: TrajectoryConfig,
    pub sweep_n: SweepNConfig,
    pub sweep_bz: SweepBzConfig,
    pub dephasing: DephasingConfig,
    pub validate: ValidateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model: ModelParams::reference(),
            output: OutputConfig::default(),
            spectrum: SpectrumConfig::default(),
            ldf: LdfConfig::default(),
            trajectories: TrajectoryConfig::default(),
            sweep_n: SweepNConfig::default(),
            sweep_bz: SweepBzConfig::default(),
            dephasing: DephasingConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

/// Adds a "did you mean" hint to unknown-key errors.
fn with_suggestion(msg: String) -> String {
    let Some(rest) = msg.split("unknown field `").nth(1) else {
        return msg;
    };
    let Some(bad) = rest.split('`').next() else {
        return msg;
    };
    let expected: Vec<&str> = rest
        .split("expected")
        .nth(1)
        .map(|s| s.split('`').skip(1).step_by(2).collect())
        .unwrap_or_default();
    let best = expected
        .iter()
        .map(|k| (strsim::damerau_levenshtein(bad, k), *k))
        .min();
    match best {
        Some((d, k)) if d <= 2 || k.replace('_', "") == bad.replace('_', "") => {
            format!("{msg}\nhint: did you mean `{k}`?")
        }
        _ => msg,
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(s).map_err(|e| Error::Config(with_suggestion(e.to_string())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.model
            .validate()
            .map_err(|e| Error::Config(format!("[model] {e}")))?;

        let l = &self.ldf;
        l.lambda.check("ldf.lambda")?;
        l.epsilon.check("ldf.epsilon")?;
        l.surface_epsilon.check("ldf.surface_epsilon")?;
        l.q.check("ldf.q")?;
        l.a.check("ldf.a")?;
        for (k, v) in [
            ("ldf.surface_lambda_step", l.surface_lambda_step),
            ("ldf.surface_lambda_min", l.surface_lambda_min),
            ("ldf.surface_lambda_max", l.surface_lambda_max),
            ("ldf.slope_window", l.slope_window),
            ("ldf.kink_threshold", l.kink_threshold),
            ("ldf.kink_floor", l.kink_floor),
            ("spectrum.null_tolerance", self.spectrum.null_tolerance),
        ] {
            finite(k, v)?;
        }
        if !(l.surface_lambda_step > 0.0) || l.surface_lambda_min >= l.surface_lambda_max {
            return Err(Error::Config(
                "ldf: need surface_lambda_step > 0 and surface_lambda_min < surface_lambda_max"
                    .into(),
            ));
        }
        if l.q.min != -l.q.max || l.q.points % 2 == 0 {
            return Err(Error::Config(
                "ldf.q must be symmetric about zero with an odd number of points".into(),
            ));
        }
        if !l.surface_epsilon.values().iter().any(|&e| e.abs() < 1e-12) {
            return Err(Error::Config("ldf.surface_epsilon must contain 0".into()));
        }
        if l.slope_points < 5 || !(l.slope_window > 0.0) {
            return Err(Error::Config(
                "ldf: need slope_window > 0 and slope_points >= 5".into(),
            ));
        }

        let t = &self.trajectories;
        for (k, v) in [
            ("trajectories.duration", t.duration),
            ("trajectories.max_step", t.max_step),
            ("trajectories.initial_weight_a", t.initial_weight_a),
            ("trajectories.freeze_tol", t.freeze_tol),
        ] {
            finite(k, v)?;
        }
        if !(t.duration > 0.0) || t.n_traj == 0 || t.samples == 0 || !(t.max_step > 0.0) {
            return Err(Error::Config(
                "trajectories: duration, n_traj, samples and max_step must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&t.initial_weight_a) {
            return Err(Error::Config(
                "trajectories.initial_weight_a must lie in [0, 1]".into(),
            ));
        }
        for (k, list) in [
            ("trajectories.gammas", &t.gammas),
            ("dephasing.gammas", &self.dephasing.gammas),
        ] {
            if list.is_empty() || list.iter().any(|g| !g.is_finite() || *g < 0.0) {
                return Err(Error::Config(format!(
                    "{k} must be a non-empty list of finite values >= 0"
                )));
            }
        }
        for (k, list) in [
            ("sweep_n.values", &self.sweep_n.values),
            ("sweep_bz.values", &self.sweep_bz.values),
            ("dephasing.lambda_slices", &self.dephasing.lambda_slices),
            ("dephasing.epsilon_slices", &self.dephasing.epsilon_slices),
        ] {
            if let Some(v) = list.iter().find(|v| !v.is_finite()) {
                return Err(Error::Config(format!("{k} contains non-finite value {v}")));
            }
        }
        if self.sweep_n.values.iter().any(|&n| !(n > 0.0)) {
            return Err(Error::Config("sweep_n.values must all be > 0".into()));
        }
        for (k, v) in [
            ("sweep_n.b_z", self.sweep_n.b_z),
            ("sweep_bz.n_bath", self.sweep_bz.n_bath),
        ] {
            if let Some(v) = v {
                finite(k, v)?;
            }
        }
        self.dephasing.lambda.check("dephasing.lambda")?;
        self.dephasing.epsilon.check("dephasing.epsilon")?;
        if self.validate.n_traj == 0 {
            return Err(Error::Config("validate.n_traj must be >= 1".into()));
        }
        Ok(())
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            lambda_grid: self.ldf.lambda.values(),
            epsilon_grid: self.ldf.epsilon.values(),
            kink: self.ldf.kink_options(),
        }
    }

    pub fn sweep_n_base(&self) -> ModelParams {
        self.sweep_n
            .b_z
            .map_or(self.model, |b| self.model.with_b_z(b))
    }

    pub fn sweep_bz_base(&self) -> ModelParams {
        self.sweep_bz
            .n_bath
            .map_or(self.model, |n| self.model.with_n_bath(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn surface_grid_contains_zero_and_mirrors() {
        let l = LdfConfig::default();
        let kappa = ModelParams::reference().kappa();
        let g = l.surface_lambda_grid(kappa);
        assert!(g.iter().any(|x| x.abs() < 1e-12));
        for x in &g {
            assert!(g.iter().any(|y| (y - (kappa - x)).abs() < 1e-12));
        }
    }

    #[test]
    fn misspelled_key_gets_hint() {
        let err = RunConfig::from_toml_str("[model]\nbz = 0.3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bz"), "{msg}");
        assert!(msg.contains("did you mean `b_z`"), "{msg}");
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let cfg = RunConfig::from_toml_str("[model]\nn_bath = 0.5\n").unwrap();
        assert_eq!(cfg.model.n_bath, 0.5);
        assert_eq!(cfg.model.b_z, 0.5);
        assert_eq!(cfg.ldf, LdfConfig::default());
    }
}
