//! Pathway documents, CSV/JSON exporters and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{EdgeParams, InitialState, PathwaySpec};
use crate::ode::Trajectory;
use crate::rescale::RescaledCoordinates;
use crate::stationary::StationaryProfile;
use crate::sweep::SweepSummary;

/// Significant digits written by default; `FULL_DIGITS` round-trips an `f64`.
pub const DEFAULT_DIGITS: usize = 10;
pub const FULL_DIGITS: usize = 17;

/// Edge parameters as written in documents. Exactly one of `beta` and `B` is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    pub phi: f64,
}

impl EdgeDoc {
    pub fn to_params(&self) -> Result<EdgeParams<f64>> {
        match (self.beta, self.b) {
            (Some(beta), None) => EdgeParams::new(self.alpha, beta, self.phi),
            (None, Some(b)) => EdgeParams::from_saturation(self.alpha, b, self.phi),
            _ => Err(Error::Document("each edge needs exactly one of `beta` or `B`".into())),
        }
    }
}

impl From<&EdgeParams<f64>> for EdgeDoc {
    fn from(p: &EdgeParams<f64>) -> Self {
        Self { alpha: p.alpha(), beta: Some(p.beta()), b: None, phi: p.phi() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialDoc {
    Uniform(f64),
    Explicit(Vec<f64>),
}

/// JSON form of a [`PathwaySpec`]: either `uniform` edges with `n`, or an `edges` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwayDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub x0: f64,
    pub initial: InitialDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<EdgeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeDoc>>,
}

impl PathwayDoc {
    pub fn to_spec(&self) -> Result<PathwaySpec<f64>> {
        let edges = match (&self.uniform, &self.edges) {
            (Some(u), None) => {
                let n = self.n.ok_or_else(|| Error::Document("`uniform` requires `n`".into()))?;
                vec![u.to_params()?; n]
            }
            (None, Some(list)) => {
                if let Some(n) = self.n {
                    if n != list.len() {
                        return Err(Error::Document(format!("`n` = {n} but {} edges listed", list.len())));
                    }
                }
                list.iter().map(EdgeDoc::to_params).collect::<Result<_>>()?
            }
            (None, None) => return Err(Error::Document("pathway needs either `edges` or `uniform`".into())),
            (Some(_), Some(_)) => return Err(Error::Document("give only one of `edges` and `uniform`".into())),
        };
        let initial = match &self.initial {
            InitialDoc::Uniform(v) => InitialState::Uniform(*v),
            InitialDoc::Explicit(v) => InitialState::Explicit(v.clone()),
        };
        PathwaySpec::new(edges, self.x0, initial)
    }

    pub fn from_spec(spec: &PathwaySpec<f64>) -> Self {
        let initial = match spec.initial() {
            InitialState::Uniform(v) => InitialDoc::Uniform(*v),
            InitialState::Explicit(v) => InitialDoc::Explicit(v.clone()),
        };
        match spec.uniform_params() {
            Some(p) => Self {
                n: Some(spec.len()),
                x0: spec.boundary_input(),
                initial,
                uniform: Some(EdgeDoc::from(&p)),
                edges: None,
            },
            None => Self {
                n: Some(spec.len()),
                x0: spec.boundary_input(),
                initial,
                uniform: None,
                edges: Some(spec.edges().iter().map(EdgeDoc::from).collect()),
            },
        }
    }
}

/// Formats `v` with `digits` significant digits in scientific notation.
pub fn fmt_num(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{:.*e}", digits.clamp(1, FULL_DIGITS) - 1, v)
}

/// Rows of formatted cells under a header, rendered as CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: rows.into_iter().collect() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Array of objects keyed by column; numeric cells become JSON numbers.
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let cell = |c: &str| match c.parse::<f64>() {
            Ok(v) if v.is_finite() => json!(v),
            _ => json!(c),
        };
        let rows: Vec<serde_json::Map<String, serde_json::Value>> =
            self.rows.iter().map(|r| self.header.iter().cloned().zip(r.iter().map(|c| cell(c))).collect()).collect();
        json_bytes(&rows)
    }
}

/// `t,x1,...,xN`, one row per sample.
pub fn trajectory_table(traj: &Trajectory<f64>, digits: usize) -> Table {
    let n = traj.spec.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    let rows = traj
        .samples
        .iter()
        .map(|s| {
            let mut row = vec![fmt_num(s.t, digits)];
            row.extend(s.x.iter().map(|&v| fmt_num(v, digits)));
            row
        })
        .collect();
    Table { header, rows }
}

/// `i,x_i` for one sampled state (`i = 0` is the boundary input).
pub fn snapshot_table(x0: f64, x: &[f64], digits: usize) -> Table {
    Table::new(
        &["i", "x_i"],
        std::iter::once(x0).chain(x.iter().copied()).enumerate().map(|(i, v)| vec![i.to_string(), fmt_num(v, digits)]),
    )
}

/// `i,x_i,eps_i` for `i = 1..n`.
pub fn profile_table(p: &StationaryProfile<f64>, digits: usize) -> Table {
    let eps = p.deviations();
    Table::new(
        &["i", "x_i", "eps_i"],
        p.values
            .iter()
            .zip(&eps)
            .enumerate()
            .map(|(k, (&x, &e))| vec![(k + 1).to_string(), fmt_num(x, digits), fmt_num(e, digits)]),
    )
}

pub fn fit_json(p: &StationaryProfile<f64>) -> serde_json::Value {
    json!({
        "lambda": p.lambda,
        "delta_i_approx": p.delta_i_approx,
        "delta_i_fit": p.delta_i_fit,
        "x0": p.x0,
        "B": p.params.saturation(),
        "phi": p.params.phi(),
    })
}

/// `i,s_i,ds_i,c_i` for `i = 1..N` (`s_0 = 0`).
pub fn coords_table(c: &RescaledCoordinates<f64>, digits: usize) -> Table {
    Table::new(
        &["i", "s_i", "ds_i", "c_i"],
        (0..c.ds.len()).map(|k| {
            vec![
                (k + 1).to_string(),
                fmt_num(c.s[k + 1], digits),
                fmt_num(c.ds[k], digits),
                fmt_num(c.speeds[k], digits),
            ]
        }),
    )
}

/// Two-column time series (`t,c` or `t,R`).
pub fn series_table(name: &str, times: &[f64], values: &[f64], digits: usize) -> Table {
    Table::new(&["t", name], times.iter().zip(values).map(|(&t, &v)| vec![fmt_num(t, digits), fmt_num(v, digits)]))
}

/// `sigma,metric,frame,median,q1,q3,excluded`.
pub fn sweep_table(s: &SweepSummary, digits: usize) -> Table {
    let mut rows = Vec::new();
    for r in &s.rows {
        for (metric, frame, q) in [
            ("vise", "original", r.vise_original),
            ("vise", "rescaled", r.vise_rescaled),
            ("rise", "original", r.rise_original),
            ("rise", "rescaled", r.rise_rescaled),
        ] {
            rows.push(vec![
                fmt_num(r.sigma, digits),
                metric.into(),
                frame.into(),
                fmt_num(q.median, digits),
                fmt_num(q.q1, digits),
                fmt_num(q.q3, digits),
                r.excluded.to_string(),
            ]);
        }
    }
    Table::new(&["sigma", "metric", "frame", "median", "q1", "q3", "excluded"], rows)
}

/// `sigma,param,mean_min,mean_max`.
pub fn extrema_table(s: &SweepSummary, digits: usize) -> Table {
    let rows = s.rows.iter().flat_map(|r| {
        [("alpha", r.alpha_extrema), ("beta", r.beta_extrema)].map(|(name, e)| {
            vec![fmt_num(r.sigma, digits), name.into(), fmt_num(e.mean_min, digits), fmt_num(e.mean_max, digits)]
        })
    });
    Table::new(&["sigma", "param", "mean_min", "mean_max"], rows)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<S: Serialize + ?Sized>(v: &S) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidParams(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}
