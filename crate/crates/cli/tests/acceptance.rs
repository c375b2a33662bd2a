//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs with a custom main so the report is always printed. The process fails if a
//! criterion fails that is not listed in `KNOWN_FAILURES`, or if a listed one passes.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pathwave::metrics::instantaneous_velocity;
use pathwave::rescale::{coordinates_from_speeds, oracle_config, SpeedTable, ORACLE_NODES};
use pathwave::sweep::{default_sigma_grid, sweep, GradientSpec, SweepRow};
use pathwave::*;

const SIGN_SAMPLES: usize = 100;
const MAP_PARAM_SETS: usize = 20;
const MAP_GRID: usize = 1000;
const MAP_REL_RESIDUAL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-12;
const PROFILE_MAX_NORM: f64 = 1e-3;
const DECAY_REL_TOL: f64 = 1e-6;
const SYNTHETIC_REL_TOL: f64 = 1e-3;
const PLATEAU_SPREAD: f64 = 0.01;
const SPEED_REL_TOL: f64 = 5e-3;
const UNIT_SPAN_TOL: f64 = 1e-12;
const FLATTENING_ALPHA_GRADIENT: f64 = 3.0;
const FLATTENING_B_GRADIENT: f64 = 2.0;
const RISE_RATIO_B_GRADIENT: f64 = 10.0;
const RISE_RATIO_STOCHASTIC: f64 = 1.2;
const ALPHA_SPREAD: f64 = 1e2;
const FRAME_AGREEMENT: f64 = 1e-3;
const SWEEP_REALIZATIONS: usize = 20;
const SWEEP_SEED: u64 = 2024;

/// Criteria expected to fail; each is analysed in the project notes.
const KNOWN_FAILURES: &[u32] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn long() -> IntegratorConfig {
    IntegratorConfig::default().with_t_end(1e5)
}

fn cv(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt() / m.abs()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_bifurcation() -> Outcome {
    let p = EdgeParams::new(1.0, 1.5, 0.0).unwrap();
    let eq = classify(&p);
    let mut ok = eq.phi_c == 0.5 && eq.region == Region::Region2 && eq.xi == Some(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    let mut counts = [0usize; 3];
    for _ in 0..SIGN_SAMPLES {
        let beta = rng.random_range(1.05..10.0);
        let phi = rng.random_range(-1.0..1.0);
        let p = EdgeParams::new(1.0, beta, phi).unwrap();
        let eq = classify(&p);
        let phi_c = 1.0 / (2.0 * beta - 1.0);
        let xi = -phi * (2.0 * beta - 1.0);
        let expected = if phi < -phi_c {
            Region::Region1
        } else if phi > phi_c {
            Region::Region3
        } else {
            Region::Region2
        };
        if eq.region != expected {
            bad += 1;
            continue;
        }
        counts[expected as usize] += 1;
        for k in 1..200 {
            let x = -1.0 + 2.0 * k as f64 / 200.0;
            if (x - xi).abs() < 1e-9 {
                continue;
            }
            let f = uniform_rhs(x, &p).unwrap();
            let want_positive = match expected {
                Region::Region1 => false,
                Region::Region3 => true,
                Region::Region2 => x > xi,
            };
            if (f > 0.0) != want_positive || f == 0.0 {
                bad += 1;
                break;
            }
        }
    }
    ok &= bad == 0;
    outcome(
        ok,
        format!(
            "phi_c(beta=1.5) = {}; {SIGN_SAMPLES} random pairs (R1/R2/R3 = {}/{}/{}), {bad} sign mismatches",
            eq.phi_c, counts[0], counts[1], counts[2]
        ),
    )
}

fn c2_stationary_map() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut worst_fixed = 0.0f64;
    let mut order_bad = 0;
    for _ in 0..MAP_PARAM_SETS {
        let beta = rng.random_range(1.05..20.0);
        let b = 2.0 * beta - 1.0;
        let phi = rng.random_range(-0.95..0.95) / b;
        let p = EdgeParams::new(1.0, beta, phi).unwrap();
        let xi = -phi * b;
        for (u, want) in [(-1.0, -1.0), (xi, xi), (1.0, 1.0)] {
            worst_fixed = worst_fixed.max((stationary_map(u, &p).unwrap() - want).abs());
        }
        for k in 0..MAP_GRID {
            let u = -1.0 + 2.0 * (k as f64 + 0.5) / MAP_GRID as f64;
            let x = stationary_map(u, &p).unwrap();
            // x^2 + (B-1) chi x - B = 0 multiplied through by X^- (1 - phi) / 2
            let (xp, xm) = (1.0 + phi * u, phi + u);
            let terms = [xm * x * x, (b - 1.0) * xp * x, -b * xm];
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
            let ordered = if u < xi {
                x < u
            } else if u > xi {
                x > u
            } else {
                true
            };
            if !ordered {
                order_bad += 1;
            }
        }
    }
    outcome(
        worst < MAP_REL_RESIDUAL && worst_fixed < FIXED_POINT_TOL && order_bad == 0,
        format!("max relative residual {worst:.2e} (< {MAP_REL_RESIDUAL:e}), fixed-point error {worst_fixed:.1e}, {order_bad} ordering violations"),
    )
}

fn c3_dynamics_vs_map() -> Outcome {
    // (phi, boundary input, initial state); the input magnitude 0.8 keeps the stationary tail nontrivial
    let cases =
        [(0.0, 0.8, -1.0), (0.0, -0.8, 1.0), (-0.75, 0.8, -1.0), (0.75, 0.8, -1.0), (0.3, -0.8, 1.0), (0.3, 0.8, -1.0)];
    let config = IntegratorConfig::default().with_t_end(2000.0);
    let results: Vec<(f64, f64, Region, f64)> = cases
        .par_iter()
        .map(|&(phi, x0, init)| {
            let p = EdgeParams::new(1.0, 1.5, phi).unwrap();
            let spec = PathwaySpec::uniform(p, 200, x0, init).unwrap();
            let traj = integrate(&spec, &config).unwrap();
            let prof = stationary_profile(x0, &p, 200, false).unwrap();
            let err = traj.last().x.iter().zip(&prof.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (phi, x0, classify(&p).region, err)
        })
        .collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (phi, x0, region, err) in results {
        if region == Region::Region2 {
            ok &= err <= PROFILE_MAX_NORM;
        }
        parts.push(format!(
            "phi {phi:+}, x0 {x0:+}: {err:.1e}{}",
            if region == Region::Region2 { "" } else { " (info)" }
        ));
    }
    outcome(ok, format!("max-norm at t = 2000 [{}]", parts.join("; ")))
}

/// Independent root of the printed quadratic, valid on both sides of +-1.
fn quadratic_root(u: f64, phi: f64, b: f64) -> f64 {
    let a = (1.0 + phi) * (1.0 + u);
    let c = (1.0 - phi) * (1.0 - u);
    let d = a - c;
    let lin = (b - 1.0) * (a + c);
    (-lin + (lin * lin + 4.0 * b * d * d).sqrt()) / (2.0 * d)
}

fn c4_decay_rate() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut rejected = 0;
    let mut cells = 0;
    let mut ok = true;
    for b in [1.5, 2.0, 3.0, 5.0, 10.0] {
        for phi in [-0.2, 0.0, 0.2] {
            let p = EdgeParams::from_saturation(1.0, b, phi).unwrap();
            for limit in [-1.0, 1.0] {
                let fd = ((quadratic_root(limit + h, phi, b) - quadratic_root(limit - h, phi, b)) / (2.0 * h)).abs();
                cells += 1;
                match decay_rate(&p, limit) {
                    Ok(lambda) => worst = worst.max(rel(fd, lambda)),
                    Err(_) => {
                        // rejected limits are not attracting: the derivative must be at least 1
                        rejected += 1;
                        ok &= fd >= 1.0 - DECAY_REL_TOL;
                    }
                }
            }
        }
    }
    outcome(
        ok && worst < DECAY_REL_TOL,
        format!("{cells} cells, max relative error {worst:.1e} (< {DECAY_REL_TOL:e}); {rejected} non-attracting limits rejected with |g'| >= 1"),
    )
}

fn c5_penetration_depth() -> Outcome {
    let mut lower_bound_cells = 0;
    let mut monotone = true;
    let mut rows = Vec::new();
    for b in [1.5, 3.0, 5.0, 10.0] {
        let p = EdgeParams::from_saturation(1.0, b, 0.0).unwrap();
        let mut gaps = Vec::new();
        for x0 in [0.005, 0.05, 0.2, 0.6] {
            let prof = stationary_profile(x0, &p, 200, true).unwrap();
            let (fit, approx) = (prof.delta_i_fit.unwrap(), prof.delta_i_approx.unwrap());
            if fit >= approx {
                lower_bound_cells += 1;
            }
            gaps.push((fit - approx).abs());
        }
        if b >= 3.0 {
            monotone &= gaps.windows(2).all(|w| w[1] < w[0]);
        }
        rows.push(format!("B {b}: gaps {}", gaps.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>().join("/")));
    }
    let a = lower_bound_cells == 16;
    outcome(
        a && monotone,
        format!(
            "(a) fit >= approx in {lower_bound_cells}/16 cells {}; (b) gap shrinks with x0 for B >= 3 {} [{}]",
            if a { "PASS" } else { "FAIL" },
            if monotone { "PASS" } else { "FAIL" },
            rows.join("; ")
        ),
    )
}

fn c6_velocity_estimator() -> Outcome {
    let n = 200;
    let (speed, dt, width, start) = (2.0, 0.5, 4.0, 40.0);
    let frame = ProfileFrame::original(n);
    let state = |t: f64| {
        let x = (1..=n).map(|i| ((start + speed * t - i as f64) / width).tanh()).collect();
        CascadeState::new(t, x)
    };
    let mut worst = 0.0f64;
    for j in 0..40 {
        let t = j as f64 * dt;
        let est = instantaneous_velocity(&state(t), &state(t + dt), &frame, dt).unwrap();
        worst = worst.max(rel(est.c, speed));
    }

    let p = EdgeParams::from_saturation(1.0, 3.0, 0.0).unwrap();
    let spec = PathwaySpec::uniform(p, n, 1.0, -1.0).unwrap();
    let cmp = run_comparison(&spec, &SpeedOracle::exact(), &long()).unwrap();
    let v = cmp.original.velocity.windowed(cmp.window.0, cmp.window.1).values;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let spread = (hi - lo) / mean;
    outcome(
        worst < SYNTHETIC_REL_TOL && spread < PLATEAU_SPREAD,
        format!(
            "synthetic max relative error {worst:.1e}; homogeneous B = 3 plateau (max-min)/mean = {spread:.1e} over {} samples in [{:.1}, {:.1}]",
            v.len(),
            cmp.window.0,
            cmp.window.1
        ),
    )
}

fn measure(alpha: f64, b: f64, phi: f64, inhibitory: bool, sample_dt: f64) -> SpeedMeasurement<f64> {
    let p = EdgeParams::from_saturation(alpha, b, phi).unwrap();
    let (x0, init) = if inhibitory { (-1.0, 1.0) } else { (1.0, -1.0) };
    let spec = PathwaySpec::uniform(p, 200, x0, init).unwrap();
    let config = IntegratorConfig { sample_dt, ..long() };
    metrics::asymptotic_speed(&spec, &config).unwrap()
}

fn speed(alpha: f64, b: f64, phi: f64, inhibitory: bool) -> f64 {
    measure(alpha, b, phi, inhibitory, 1.0).speed
}

fn c7_speed_laws() -> Outcome {
    let bs = [1.5, 3.0, 5.0, 10.0];
    let fractions = [-0.8, -0.4, 0.0, 0.4, 0.8];
    let jobs: Vec<(f64, f64)> = bs.iter().flat_map(|&b| fractions.iter().map(move |&f| (b, f / b))).collect();
    let grid: Vec<f64> = jobs.par_iter().map(|&(b, phi)| speed(1.0, b, phi, false)).collect();
    let mut increasing = true;
    for (k, _) in bs.iter().enumerate() {
        let row = &grid[k * fractions.len()..(k + 1) * fractions.len()];
        increasing &= row.windows(2).all(|w| w[1] > w[0]);
    }
    let at_zero: Vec<f64> = (0..bs.len()).map(|k| grid[k * fractions.len() + 2]).collect();
    let decreasing = at_zero.windows(2).all(|w| w[1] < w[0]);

    // alpha rescales time, so the doubled run is sampled at the same dimensionless step alpha * dt;
    // at a fixed dt the linear-interpolation bias of the estimator differs between the two runs
    let doubled: Vec<(SpeedMeasurement<f64>, SpeedMeasurement<f64>)> =
        bs.par_iter().map(|&b| (measure(2.0, b, 0.0, false, 0.5), measure(2.0, b, 0.0, false, 1.0))).collect();
    let mut doubling = 0.0f64;
    let mut fixed_dt = 0.0f64;
    for (k, (matched, fixed)) in doubled.iter().enumerate() {
        let base = measure(1.0, bs[k], 0.0, false, 1.0);
        doubling =
            doubling.max(rel(matched.speed, 2.0 * base.speed)).max(rel(2.0 * matched.arrival_time, base.arrival_time));
        fixed_dt = fixed_dt.max(rel(fixed.speed, 2.0 * base.speed));
    }

    let sym_jobs: Vec<(f64, f64)> = bs.iter().flat_map(|&b| [(b, 0.4 / b), (b, -0.4 / b)]).collect();
    let symmetry = sym_jobs
        .par_iter()
        .map(|&(b, phi)| rel(speed(1.0, b, phi, true), speed(1.0, b, -phi, false)))
        .reduce(|| 0.0, f64::max);

    outcome(
        increasing && decreasing && doubling < SPEED_REL_TOL && symmetry < SPEED_REL_TOL,
        format!(
            "increasing in phi {increasing}; decreasing in B {decreasing} ({}); alpha doubling error {doubling:.1e} (speed and arrival time; {fixed_dt:.1e} at a fixed dt = 1); inhibitory symmetry error {symmetry:.1e}",
            at_zero.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn c8_rescaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let speeds: Vec<f64> = (0..200).map(|_| (rng.random_range(-3.0f64..3.0)).exp()).collect();
    let c = coordinates_from_speeds::<f64>(speeds).unwrap();
    let span = (c.s[c.s.len() - 1] - 1.0).abs();
    let h = coordinates_from_speeds::<f64>(vec![0.3; 200]).unwrap();
    let uniform = h.ds.iter().map(|d| (d - 1.0 / 200.0).abs()).fold(0.0, f64::max);
    let two = coordinates_from_speeds::<f64>(vec![1.0, 3.0]).unwrap();
    let harmonic = (two.c_bar - 0.75).abs().max((two.ds[0] - 0.75).abs()).max((two.ds[1] - 0.25).abs());
    outcome(
        span < UNIT_SPAN_TOL && uniform < UNIT_SPAN_TOL && harmonic < UNIT_SPAN_TOL,
        format!(
            "|s_N - 1| = {span:.1e}; homogeneous |ds - 1/N| = {uniform:.1e}; speeds (1, 3): c_bar = {}, ds = {:?}",
            two.c_bar, two.ds
        ),
    )
}

fn gradient(kind: GradientKind, lo: f64, hi: f64, b: f64) -> PathwaySpec {
    let base = EdgeParams::from_saturation(1.0, b, 0.0).unwrap();
    build_gradient(&GradientSpec { kind, lo, hi, base, n: 200 }).unwrap()
}

fn flattening(cmp: &Comparison) -> (f64, f64, f64) {
    let (a, b) = cmp.window;
    let o = cv(&cmp.original.velocity.windowed(a, b).values);
    let r = cv(&cmp.rescaled.velocity.windowed(a, b).values);
    (o, r, o / r)
}

fn c9_flattening() -> Outcome {
    let spec = gradient(GradientKind::AlphaLinear, 1.0, 5.0, 100.0);
    let cmp = run_comparison(&spec, &SpeedOracle::exact(), &long()).unwrap();
    let (o, r, ratio) = flattening(&cmp);
    outcome(
        ratio >= FLATTENING_ALPHA_GRADIENT,
        format!(
            "cv(c/N) = {o:.3e}, cv(c~) = {r:.3e}, ratio {ratio:.1} (>= {FLATTENING_ALPHA_GRADIENT}); t_J = {:.1}",
            cmp.reference_time
        ),
    )
}

fn c10_shape_direction() -> Outcome {
    let spec = gradient(GradientKind::BLog, 1.02, 201.0, 3.0);
    let cmp = run_comparison(&spec, &SpeedOracle::exact(), &long()).unwrap();
    let (_, _, ratio) = flattening(&cmp);
    let rise_ratio = cmp.rescaled.rise / cmp.original.rise;
    outcome(
        ratio >= FLATTENING_B_GRADIENT && rise_ratio < RISE_RATIO_B_GRADIENT,
        format!("flattening ratio {ratio:.1} (>= {FLATTENING_B_GRADIENT}); RISE rescaled/original = {rise_ratio:.3} (< {RISE_RATIO_B_GRADIENT})"),
    )
}

fn c11_single_realization() -> Outcome {
    let s = StochasticEnsembleSpec::default();
    let spec = sample_realization::<f64>(&s, 0).unwrap();
    let cmp = run_comparison(&spec, &SpeedOracle::exact(), &long()).unwrap();
    let (vo, vr, ro, rr) = (cmp.original.vise, cmp.rescaled.vise, cmp.original.rise, cmp.rescaled.rise);
    outcome(
        vr < vo && rr <= RISE_RATIO_STOCHASTIC * ro,
        format!(
            "seed {} realization 0, sigma {}: VISE {vo:.3e} -> {vr:.3e}; RISE {ro:.3e} -> {rr:.3e} (ratio {:.3})",
            s.seed,
            s.sigma,
            rr / ro
        ),
    )
}

fn c12_sweep() -> Outcome {
    let (lb, _) = SpeedTable::default_grid();
    let table = SpeedTable::build(lb, vec![0.0], ORACLE_NODES, &oracle_config()).unwrap();
    let oracle = SpeedOracle::table(table);
    let s = StochasticEnsembleSpec { realizations: SWEEP_REALIZATIONS, seed: SWEEP_SEED, ..Default::default() };
    let summary = sweep(&s, &default_sigma_grid(), &oracle, &long()).unwrap();
    let rows = &summary.rows;
    // sigma = 0 is homogeneous, where both frames coincide up to the shift-search tolerance
    let low: Vec<&SweepRow> = rows.iter().filter(|r| r.sigma <= 0.5 + 1e-12).collect();
    let ratios: Vec<f64> = low.iter().map(|r| r.vise_rescaled.median / r.vise_original.median).collect();
    let a =
        low.iter().zip(&ratios).all(|(r, q)| if r.sigma == 0.0 { (q - 1.0).abs() < FRAME_AGREEMENT } else { *q < 1.0 });
    let argmax = rows
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.vise_original.median.total_cmp(&y.1.vise_original.median))
        .map(|(k, _)| k)
        .unwrap();
    let b = argmax > 0 && argmax + 1 < rows.len();
    let last = rows.last().unwrap();
    let spread = last.alpha_extrema.mean_max / last.alpha_extrema.mean_min;
    let c = spread > ALPHA_SPREAD;
    let excluded: usize = rows.iter().map(|r| r.excluded).sum();
    outcome(
        a && b && c,
        format!(
            "{SWEEP_REALIZATIONS} realizations, seed {SWEEP_SEED}: (a) {a}, VISE rescaled/original for sigma <= 0.5: {}; (b) max median VISE_original at sigma {} {b}; (c) alpha max/min at sigma 1 = {spread:.1} {c}; {excluded} excluded",
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(" "),
            rows[argmax].sigma
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pathwave")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c13_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let configs: [(&str, &str, &[&str]); 7] = [
        (
            "simulate",
            r#"{"runs":[{"name":"act","pathway":{"n":40,"x0":1,"initial":-1,"uniform":{"alpha":1,"beta":1.5,"phi":0.3}}}],"snapshots":[10,40],"integrator":{"t_end":200}}"#,
            &[],
        ),
        ("stationary", r#"{"B":[1.5,3],"x0":[0.05,0.6]}"#, &["--format", "json"]),
        (
            "wavespeed",
            r#"{"B":[3],"phi":{"count":3,"margin":0.05},"n":60,"series":[{"B":3,"phi":0,"t_end":400}]}"#,
            &[],
        ),
        ("rescale", r#"{"gradient":{"kind":"alpha_linear","lo":1,"hi":5,"n":60,"alpha":1,"B":100,"phi":0}}"#, &[]),
        (
            "rescale",
            r#"{"stochastic":{"ensemble":{"n":60,"sigma":0.4},"realization":2},"oracle":{"mode":"table"}}"#,
            &["--seed", "11"],
        ),
        (
            "sweep",
            r#"{"ensemble":{"n":40,"realizations":3},"sigma_grid":[0.2,0.6],"details":true}"#,
            &["--seed", "5", "--threads", "2"],
        ),
        ("sweep", r#"{"ensemble":{"n":40},"sigma_grid":[0.3]}"#, &["--realizations", "4", "--format", "json"]),
    ];
    let mut failures = Vec::new();
    let mut files = 0;
    for (k, (cmd, cfg, extra)) in configs.iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        let cfg_path = dir.join("config.json");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(&cfg_path, cfg).unwrap();
        let (first, second) = (dir.join("first"), dir.join("second"));
        let mut args = vec![*cmd, "--config", cfg_path.to_str().unwrap(), "--out", first.to_str().unwrap()];
        args.extend_from_slice(extra);
        let replay_cfg = first.join("manifest.json");
        let replay = [*cmd, "--config", replay_cfg.to_str().unwrap(), "--out", second.to_str().unwrap()];
        match run_cli(&args).and_then(|_| run_cli(&replay)) {
            Ok(()) => {
                let (a, b) = (read_dir(&first), read_dir(&second));
                files += a.len();
                if a != b {
                    failures.push(format!("{cmd} #{k}: outputs differ"));
                }
            }
            Err(e) => failures.push(e),
        }
    }
    let pass = failures.is_empty();
    outcome(
        pass,
        if pass {
            format!("{} runs replayed from their manifests, {files} files byte-identical", configs.len())
        } else {
            failures.join(" | ")
        },
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "bifurcation structure", c1_bifurcation),
        (2, "stationary map correctness", c2_stationary_map),
        (3, "dynamics/map agreement", c3_dynamics_vs_map),
        (4, "decay rate", c4_decay_rate),
        (5, "penetration depth", c5_penetration_depth),
        (6, "velocity estimator", c6_velocity_estimator),
        (7, "speed laws", c7_speed_laws),
        (8, "rescaling identities", c8_rescaling),
        (9, "velocity flattening", c9_flattening),
        (10, "shape-residual direction", c10_shape_direction),
        (11, "stochastic single realization", c11_single_realization),
        (12, "desk-scale sweep", c12_sweep),
        (13, "determinism", c13_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let known = KNOWN_FAILURES.contains(&id);
        let status = match (o.pass, known) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known deviation)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected; update KNOWN_FAILURES)",
        };
        println!("criterion {id:>2} {name:<30} {status}  {:.1}s  {}", start.elapsed().as_secs_f64(), o.detail);
        if o.pass == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
