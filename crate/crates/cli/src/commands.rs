//! Subcommand pipelines. Each returns the files it produced, keyed by name.

use serde_json::json;

use pathwave::io::{
    coords_table, extrema_table, fit_json, json_bytes, profile_table, series_table, snapshot_table, sweep_table,
    trajectory_table, Table,
};
use pathwave::metrics::{asymptotic_speed, velocity_series};
use pathwave::rescale::{oracle_config, SpeedTable, ORACLE_NODES};
use pathwave::sweep::{self, GradientSpec};
use pathwave::{
    build_gradient, integrate, run_comparison, sample_realization, stationary_profile, EdgeParams, Error, PathwaySpec,
    ProfileFrame, Result, SpeedOracle,
};

use crate::config::{
    Format, OracleDoc, OracleKind, RescaleConfig, SimulateConfig, StationaryConfig, SweepConfig, WavespeedConfig,
};

/// Produced files in write order.
pub struct Outputs {
    format: Format,
    digits: usize,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(format: Format, digits: usize) -> Self {
        Self { format, digits, files: Vec::new() }
    }

    fn table(&mut self, stem: &str, t: Table) -> Result<()> {
        let (ext, bytes) = match self.format {
            Format::Csv => ("csv", t.to_csv()?),
            Format::Json => ("json", t.to_json()?),
        };
        self.files.push((format!("{stem}.{ext}"), bytes));
        Ok(())
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) -> Result<()> {
        self.files.push((name.to_string(), json_bytes(v)?));
        Ok(())
    }
}

fn log(verbose: bool, msg: impl FnOnce() -> String) {
    if verbose {
        eprintln!("{}", msg());
    }
}

pub fn simulate(cfg: &SimulateConfig, out: &mut Outputs, verbose: bool) -> Result<()> {
    if cfg.runs.is_empty() {
        return Err(Error::Document("`runs` must list at least one pathway".into()));
    }
    let mut summary = Vec::new();
    for run in &cfg.runs {
        let spec = run.pathway.to_spec()?;
        let traj = integrate(&spec, &cfg.integrator)?;
        log(verbose, || format!("{}: {} samples, arrival {:?}", run.name, traj.len(), traj.arrival_time));
        out.table(&format!("trajectory_{}", run.name), trajectory_table(&traj, out.digits))?;
        for &t in &cfg.snapshots {
            let j = traj.nearest_index(t);
            let s = &traj.samples[j];
            out.table(
                &format!("snapshot_{}_t{}", run.name, s.t),
                snapshot_table(spec.boundary_input(), &s.x, out.digits),
            )?;
        }
        summary.push(json!({ "name": run.name, "samples": traj.len(), "arrival_time": traj.arrival_time }));
    }
    out.json("runs.json", &json!(summary))
}

pub fn stationary(cfg: &StationaryConfig, out: &mut Outputs, verbose: bool) -> Result<()> {
    let mut fits = Vec::new();
    for &b in &cfg.b {
        let p = EdgeParams::from_saturation(cfg.alpha, b, cfg.phi)?;
        for &x0 in &cfg.x0 {
            let prof = stationary_profile(x0, &p, cfg.n, cfg.fit)?;
            let stem = format!("profile_B{b}_x0_{x0}");
            log(verbose, || format!("{stem}: lambda {}, fit {:?}", prof.lambda, prof.delta_i_fit));
            out.table(&stem, profile_table(&prof, out.digits))?;
            let mut f = fit_json(&prof);
            f["file"] = json!(stem);
            fits.push(f);
        }
    }
    out.json("fits.json", &json!(fits))
}

pub fn wavespeed(cfg: &WavespeedConfig, out: &mut Outputs, verbose: bool) -> Result<()> {
    let (input, init) = if cfg.inhibitory { (-1.0, 1.0) } else { (1.0, -1.0) };
    let mut rows = Vec::new();
    for &b in &cfg.b {
        for phi in cfg.phi.values(b)? {
            let p = EdgeParams::from_saturation(cfg.alpha, b, phi)?;
            let spec = PathwaySpec::uniform(p, cfg.n, input, init)?;
            let m = asymptotic_speed(&spec, &cfg.integrator)?;
            log(verbose, || format!("B = {b}, phi = {phi}: speed {}", m.speed));
            let d = out.digits;
            rows.push(vec![
                pathwave::io::fmt_num(b, d),
                pathwave::io::fmt_num(phi, d),
                pathwave::io::fmt_num(cfg.alpha, d),
                pathwave::io::fmt_num(m.speed, d),
                pathwave::io::fmt_num(m.arrival_time, d),
            ]);
        }
    }
    out.table("speeds", Table::new(&["B", "phi", "alpha", "speed", "arrival_time"], rows))?;

    let mut traces = Vec::new();
    for req in &cfg.series {
        let p = EdgeParams::from_saturation(cfg.alpha, req.b, req.phi)?;
        let spec = PathwaySpec::uniform(p, cfg.n, input, init)?;
        let conf = cfg.integrator.with_t_end(req.t_end).with_stop_on_arrival(true);
        let traj = integrate(&spec, &conf)?;
        let v = velocity_series(&traj, &ProfileFrame::original(cfg.n))?;
        let stem = format!("velocity_B{}_phi{}", req.b, req.phi);
        out.table(&stem, series_table("c", &v.times, &v.values, out.digits))?;
        // halted by arrival before the requested horizon
        traces.push(json!({ "file": stem, "B": req.b, "phi": req.phi, "arrival_time": traj.arrival_time, "truncated": traj.arrival_time.is_some() }));
    }
    if !traces.is_empty() {
        out.json("series.json", &json!(traces))?;
    }
    Ok(())
}

/// Builds the oracle described by `doc`. Table mode without a file builds the default grid,
/// restricted to the unbiased column when `unbiased_only` is set.
pub fn build_oracle(doc: &OracleDoc, unbiased_only: bool, verbose: bool) -> Result<SpeedOracle> {
    match doc.mode {
        OracleKind::Exact => Ok(SpeedOracle::exact()),
        OracleKind::Table => {
            let table = match &doc.table_file {
                Some(f) => SpeedTable::load(std::path::Path::new(f))?,
                None => {
                    let (lb, phi) = SpeedTable::default_grid();
                    let phi = if unbiased_only { vec![0.0] } else { phi };
                    log(verbose, || format!("building speed table ({} x {})", lb.len(), phi.len()));
                    SpeedTable::build(lb, phi, ORACLE_NODES, &oracle_config())?
                }
            };
            Ok(SpeedOracle::table(table))
        }
    }
}

fn rescale_source(cfg: &RescaleConfig) -> Result<PathwaySpec> {
    match (&cfg.pathway, &cfg.gradient, &cfg.stochastic) {
        (Some(p), None, None) => p.to_spec(),
        (None, Some(g), None) => build_gradient(&GradientSpec {
            kind: g.kind,
            lo: g.lo,
            hi: g.hi,
            base: EdgeParams::from_saturation(g.alpha, g.b, g.phi)?,
            n: g.n,
        }),
        (None, None, Some(s)) => sample_realization(&s.ensemble, s.realization),
        _ => Err(Error::Document("give exactly one of `pathway`, `gradient` and `stochastic`".into())),
    }
}

pub fn rescale(cfg: &RescaleConfig, out: &mut Outputs, verbose: bool) -> Result<()> {
    let spec = rescale_source(cfg)?;
    let unbiased = spec.edges().iter().all(|e| e.phi() == 0.0);
    let oracle = build_oracle(&cfg.oracle, unbiased, verbose)?;
    let c = run_comparison(&spec, &oracle, &cfg.integrator)?;
    log(verbose, || {
        format!("window {:?}, t_J {}, {} oracle simulations", c.window, c.reference_time, oracle.simulations())
    });
    let d = out.digits;
    out.table("coords", coords_table(&c.coords, d))?;
    let mut frames = Vec::new();
    for (name, f) in [("original", &c.original), ("rescaled", &c.rescaled)] {
        out.table(&format!("velocity_{name}"), series_table("c", &f.velocity.times, &f.velocity.values, d))?;
        out.table(&format!("residual_{name}"), series_table("R", &f.residual.times, &f.residual.values, d))?;
        frames.push(json!({
            "frame": name,
            "t_J": c.reference_time,
            "vise": f.vise,
            "rise": f.rise,
            "window_start_index": f.velocity.valid_from,
            "series": {
                "velocity": { "t": f.velocity.times, "c": f.velocity.values },
                "residual": { "t": f.residual.times, "R": f.residual.values },
            },
        }));
    }
    out.json(
        "report.json",
        &json!({ "window": [c.window.0, c.window.1], "t_J": c.reference_time, "c_bar": c.coords.c_bar, "frames": frames }),
    )?;
    if let Some(t) = oracle.table_snapshot() {
        out.json("speed_table.json", &serde_json::to_value(&t)?)?;
    }
    Ok(())
}

pub fn sweep(cfg: &SweepConfig, out: &mut Outputs, verbose: bool) -> Result<()> {
    let oracle = build_oracle(&cfg.oracle, cfg.ensemble.phi == 0.0, verbose)?;
    let summary = sweep::sweep(&cfg.ensemble, &cfg.sigma_grid, &oracle, &cfg.integrator)?;
    for r in &summary.rows {
        log(verbose, || {
            format!(
                "sigma {}: median VISE {:.3e} / {:.3e}, excluded {}",
                r.sigma, r.vise_original.median, r.vise_rescaled.median, r.excluded
            )
        });
    }
    out.table("sweep", sweep_table(&summary, out.digits))?;
    out.table("extrema", extrema_table(&summary, out.digits))?;
    out.json("summary.json", &serde_json::to_value(&summary.rows)?)?;
    if cfg.details {
        let mut lines = Vec::new();
        for r in &summary.realizations {
            lines.extend(serde_json::to_vec(r)?);
            lines.push(b'\n');
        }
        out.files.push(("realizations.jsonl".into(), lines));
    }
    if let Some(t) = oracle.table_snapshot() {
        out.json("speed_table.json", &serde_json::to_value(&t)?)?;
    }
    Ok(())
}
