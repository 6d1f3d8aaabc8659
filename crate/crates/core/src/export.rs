//! CSV and flat-text artifacts, with a manifest line per file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::{DephasingComparison, SweepResult};
use crate::error::Result;
use crate::legendre::{Cell, GeometryReport, JointRateSurface, RateFunctionCurve};
use crate::linalg::CMat;
use crate::spectral::{sector_label, LdfCurve, LdfSurface};
use crate::symmetry::{BlockLabel, SymmetryBlockMap};
use crate::trajectories::{EnsembleStats, TrajectoryRecord};

pub const MANIFEST: &str = "run_manifest.txt";

/// Writes artifacts into one directory and keeps `run_manifest.txt`
/// (`file,rows,config_hash`) up to date.
pub struct RunWriter {
    dir: PathBuf,
    hash: String,
    entries: Vec<(String, usize)>,
}

/// Shortest round-trip representation, switching to exponent form for very
/// small or large magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

impl RunWriter {
    pub fn create(dir: &Path, config_hash: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        // fail early on read-only targets
        let probe = dir.join(".write_probe");
        fs::write(&probe, b"")?;
        fs::remove_file(&probe)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: config_hash.to_string(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<usize>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(std::io::Error::from)?;
        w.write_record(header).map_err(std::io::Error::from)?;
        let mut n = 0;
        for r in rows {
            w.write_record(r).map_err(std::io::Error::from)?;
            n += 1;
        }
        w.flush()?;
        self.entries.push((name.to_string(), n));
        Ok(n)
    }

    /// Flat `key = value` text.
    pub fn text(&mut self, name: &str, pairs: &[(String, String)]) -> Result<()> {
        let mut f = fs::File::create(self.dir.join(name))?;
        for (k, v) in pairs {
            writeln!(f, "{k} = {v}")?;
        }
        self.entries.push((name.to_string(), pairs.len()));
        Ok(())
    }

    /// Merges this run's entries into the manifest, replacing stale lines
    /// for files that were rewritten.
    pub fn finish(self) -> Result<PathBuf> {
        let path = self.dir.join(MANIFEST);
        let mut lines: Vec<String> = fs::read_to_string(&path)
            .unwrap_or_default()
            .lines()
            .skip(1)
            .filter(|l| {
                let file = l.split(',').next().unwrap_or("");
                !self.entries.iter().any(|(n, _)| n == file)
            })
            .map(str::to_string)
            .collect();
        lines.extend(
            self.entries
                .iter()
                .map(|(n, rows)| format!("{n},{rows},{}", self.hash)),
        );
        let mut f = fs::File::create(&path)?;
        writeln!(f, "file,rows,config_hash")?;
        for l in lines {
            writeln!(f, "{l}")?;
        }
        Ok(path)
    }
}

pub fn matrix_rows(m: &CMat) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push(vec![i.to_string(), j.to_string(), num(z.re), num(z.im)]);
        }
    }
    out
}

pub const MATRIX_HEADER: [&str; 4] = ["i", "j", "re", "im"];
pub const SPECTRUM_HEADER: [&str; 3] = ["re", "im", "sector"];

pub fn block_map_rows(map: &SymmetryBlockMap) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for label in BlockLabel::ALL {
        let v = map.basis(label);
        for k in 0..v.ncols() {
            for r in 0..v.nrows() {
                let z = v[(r, k)];
                out.push(vec![
                    label.to_string(),
                    k.to_string(),
                    r.to_string(),
                    num(z.re),
                    num(z.im),
                ]);
            }
        }
    }
    out
}

pub const BLOCK_MAP_HEADER: [&str; 5] =
    ["block_label", "vector_index", "component_index", "re", "im"];

pub fn curve_rows(c: &LdfCurve) -> Vec<Vec<String>> {
    (0..c.len())
        .map(|k| {
            vec![
                num(c.grid[k]),
                num(c.values[k]),
                num(c.derivative[k]),
                sector_label(c.dominant[k]).to_string(),
            ]
        })
        .collect()
}

pub const CURVE_HEADER: [&str; 4] = ["x", "mu", "dmu", "sector"];

pub fn surface_rows(s: &LdfSurface) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(s.mu.len());
    for (i, &l) in s.lambda_grid.iter().enumerate() {
        for (j, &e) in s.epsilon_grid.iter().enumerate() {
            out.push(vec![
                num(l),
                num(e),
                num(s.mu[(i, j)]),
                sector_label(s.dominant[(i, j)]).to_string(),
            ]);
        }
    }
    out
}

pub const SURFACE_HEADER: [&str; 4] = ["lambda", "epsilon", "mu", "sector"];

pub fn rate_rows(r: &RateFunctionCurve) -> Vec<Vec<String>> {
    (0..r.grid.len())
        .map(|k| {
            vec![
                num(r.grid[k]),
                r.cell(k).to_string(),
                u8::from(r.affine[k]).to_string(),
            ]
        })
        .collect()
}

pub const RATE_Q_HEADER: [&str; 3] = ["q", "F", "affine"];
pub const RATE_A_HEADER: [&str; 3] = ["a", "I", "affine"];

/// Joint rate function; `cells` may also be a conditional table on the same grid.
pub fn joint_rows(
    joint: &JointRateSurface,
    cells: &nalgebra::DMatrix<Cell>,
) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(cells.len());
    for (i, &q) in joint.q_grid.iter().enumerate() {
        for (j, &a) in joint.a_grid.iter().enumerate() {
            out.push(vec![
                num(q),
                num(a),
                cells[(i, j)].to_string(),
                u8::from(joint.affine[(i, j)]).to_string(),
            ]);
        }
    }
    out
}

pub const JOINT_HEADER: [&str; 4] = ["q", "a", "G_or_INF", "affine"];

pub fn geometry_pairs(g: &GeometryReport, params: &crate::model::ModelParams) -> Vec<(String, String)> {
    vec![
        ("b_z".into(), num(params.b_z)),
        ("gamma_bath".into(), num(params.gamma_bath)),
        ("n_bath".into(), num(params.n_bath)),
        ("gamma_dephase".into(), num(params.gamma_dephase)),
        ("kappa".into(), num(g.kappa)),
        ("delta".into(), num(g.delta)),
        ("q_s".into(), num(g.q_s)),
        ("a_c".into(), num(g.a_c)),
        ("u0".into(), num(g.u0)),
    ]
}

/// `time,mean_xi,stderr` plus the master-equation reference when given.
pub fn xi_rows(stats: &EnsembleStats, reference: Option<&[f64]>) -> Vec<Vec<String>> {
    (0..stats.times.len())
        .map(|k| {
            let mut r = vec![
                num(stats.times[k]),
                num(stats.mean_xi[k]),
                num(stats.stderr_xi[k]),
            ];
            if let Some(m) = reference {
                r.push(num(m[k]));
            }
            r
        })
        .collect()
}

pub fn event_rows(rec: &TrajectoryRecord) -> Vec<Vec<String>> {
    rec.jump_events
        .iter()
        .map(|e| vec![num(e.time), e.channel.name().to_string()])
        .collect()
}

pub fn xi_trace_rows(rec: &TrajectoryRecord) -> Vec<Vec<String>> {
    rec.xi_samples
        .iter()
        .map(|(t, x)| vec![num(*t), num(*x)])
        .collect()
}

pub fn sweep_rows(s: &SweepResult) -> Vec<Vec<String>> {
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), num);
    s.points
        .iter()
        .map(|p| {
            vec![
                num(p.value),
                num(p.averages.q_s.abs()),
                num(p.averages.q_a.abs()),
                num(p.averages.a_s),
                num(p.averages.a_a),
                opt(p.delta),
                opt(p.jump_q),
                opt(p.jump_a),
            ]
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 8] = [
    "param", "abs_qS", "abs_qA", "aS", "aA", "delta", "jump_q", "jump_a",
];

pub fn dephasing_rows(d: &DephasingComparison) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for s in &d.slices {
        for k in 0..s.curve.len() {
            out.push(vec![
                num(s.gamma),
                s.slice.axis.to_string(),
                num(s.slice.fixed),
                num(s.curve.grid[k]),
                num(s.curve.values[k]),
                sector_label(s.curve.dominant[k]).to_string(),
            ]);
        }
    }
    out
}

pub const DEPHASING_HEADER: [&str; 6] = ["gamma", "axis", "fixed", "x", "mu", "sector"];

pub fn dephasing_kink_rows(d: &DephasingComparison) -> Vec<Vec<String>> {
    d.slices
        .iter()
        .map(|s| {
            let pos: Vec<String> = s.kinks.iter().map(|k| num(*k)).collect();
            vec![
                num(s.gamma),
                s.slice.axis.to_string(),
                num(s.slice.fixed),
                s.kinks.len().to_string(),
                pos.join(";"),
            ]
        })
        .collect()
}

pub const DEPHASING_KINK_HEADER: [&str; 5] = ["gamma", "axis", "fixed", "n_kinks", "positions"];
