//! Subcommand bodies. Each returns `Ok(pass)`; errors carry the typed
//! library error so `main` can pick the exit code.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use manakov_sr::algebra::{from_csv, random_skew, random_skew_with, trial_rng};
use manakov_sr::flows::{integrate, monitor, standard_invariants, Integration, Scheme, Trajectory};
use manakov_sr::limits::limit_sweep;
use manakov_sr::poisson::bracket_matrix;
use manakov_sr::rolling::{
    alpha_offset, casimir_value, contact_path, curve_residual, energy, write_path_csv, write_svg, PathPoint,
};
use manakov_sr::{Check, Error, Execution, IntegralFamily, MassSpec, RollingParams, SkewMatrix, Verifier};
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_list, RunConfig, FORMAT_VERSION};
use crate::{Common, ExecMode, Format, LimitArgs, MassArgs, MomentumArgs, RollArgs, SimulateArgs, VerifyArgs};

/// Curve-family residual accepted by `roll`.
pub const CURVE_TOL: f64 = 1e-7;
/// Relative deviation of `H` and `|M|²` accepted by `roll`.
pub const LEVEL_TOL: f64 = 1e-12;

fn execution(common: &Common) -> Execution {
    match common.exec {
        ExecMode::Sequential => Execution::Sequential,
        ExecMode::Parallel => Execution::Parallel,
    }
}

fn base_config(subcommand: &str, common: &Common) -> RunConfig {
    RunConfig {
        subcommand: subcommand.into(),
        format: match common.format {
            Format::Csv => "csv".into(),
            Format::Json => "json".into(),
        },
        execution: match common.exec {
            ExecMode::Sequential => "sequential".into(),
            ExecMode::Parallel => "parallel".into(),
        },
        ..RunConfig::default()
    }
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidArgument(msg.into()).into()
}

/// Builds the mass specification and records it in `cfg`.
fn mass_spec(args: &MassArgs, cfg: &mut RunConfig) -> Result<MassSpec> {
    let spec = if let Some(mass) = &args.mass {
        MassSpec::riemannian(parse_list(mass).map_err(|e| invalid(e.to_string()))?)?
    } else {
        let inertias = match &args.inertia {
            Some(text) => parse_list(text).map_err(|e| invalid(e.to_string()))?,
            None => {
                let n = args.n.ok_or_else(|| invalid("give --n, --inertia or --mass"))?;
                if n < 2 {
                    return Err(invalid(format!("n must be at least 2, got {n}")));
                }
                (1..n).map(|i| i as f64).collect()
            }
        };
        match args.s {
            Some(s) => MassSpec::family(inertias, s)?,
            None => MassSpec::sub_riemannian(inertias)?,
        }
    };
    if let Some(n) = args.n {
        if n != spec.n() {
            return Err(invalid(format!("--n {n} does not match the {}-dimensional mass", spec.n())));
        }
    }
    cfg.n = Some(spec.n());
    if args.mass.is_some() {
        cfg.mass = Some(spec.diag().to_vec());
    } else {
        cfg.inertia = Some(spec.inertias().to_vec());
        cfg.s = args.s;
    }
    Ok(spec)
}

/// Initial momentum from `--m0` or the seed; recorded in `cfg`.
fn momentum(args: &MomentumArgs, n: usize, cfg: &mut RunConfig) -> Result<SkewMatrix> {
    let m = match &args.m0 {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read initial momentum {path}"))?;
            let m = from_csv(&text).with_context(|| format!("bad initial momentum in {path}"))?;
            if m.n() != n {
                return Err(invalid(format!("{path} holds an so({}) momentum, expected so({n})", m.n())));
            }
            m
        }
        None => {
            cfg.seed = Some(args.seed);
            random_skew(n, args.seed, 1.0)?
        }
    };
    cfg.m0 = Some(m.upper());
    Ok(m)
}

/// Opens `path`, or stdout when absent.
fn sink(path: Option<&str>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {p}"))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&str>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn record_output(cfg: &mut RunConfig, key: &str, path: Option<&str>) {
    cfg.outputs.insert(key.into(), path.unwrap_or("-").into());
}

fn trajectory_json(traj: &Trajectory, cfg: &RunConfig) -> serde_json::Value {
    let n = traj.n();
    let mut columns = vec!["t".to_string()];
    columns.extend(manakov_sr::algebra::csv_header(n).split(',').map(String::from));
    if traj.group.is_some() {
        for i in 1..=n {
            for j in 1..=n {
                columns.push(format!("g_{i}{j}"));
            }
        }
    }
    columns.extend(traj.invariant_log.iter().map(|(name, _)| name.clone()));
    let rows: Vec<Vec<f64>> = (0..traj.len())
        .map(|row| {
            let mut r = vec![traj.times[row]];
            r.extend(traj.momenta[row].upper());
            if let Some(gs) = &traj.group {
                let g = &gs[row];
                for i in 0..n {
                    for j in 0..n {
                        r.push(g[(i, j)]);
                    }
                }
            }
            r.extend(traj.invariant_log.iter().map(|(_, v)| v[row]));
            r
        })
        .collect();
    json!({ "format": FORMAT_VERSION, "config": cfg, "columns": columns, "rows": rows })
}

pub fn simulate(args: &SimulateArgs) -> Result<bool> {
    let mut cfg = base_config("simulate", &args.common);
    let spec = mass_spec(&args.mass, &mut cfg)?;
    let m0 = momentum(&args.momentum, spec.n(), &mut cfg)?;
    let scheme: Scheme = args.scheme.parse()?;
    let mut integration = Integration::new(args.dt, args.steps, scheme);
    if args.reconstruct {
        integration = integration.with_reconstruction();
    }
    cfg.dt = Some(args.dt);
    cfg.steps = Some(args.steps);
    cfg.scheme = Some(args.scheme.to_lowercase());
    cfg.reconstruct = Some(args.reconstruct);
    cfg.fail_drift = args.fail_drift;
    record_output(&mut cfg, "trajectory", args.out.as_deref());
    record_output(&mut cfg, "report", args.report.as_deref());

    let mut traj = integrate(&m0, &spec, &integration, None)?;
    let invariants = standard_invariants(&spec);
    let drift = monitor(&traj, &invariants)?;
    traj.record(&invariants);
    let pass = args.fail_drift.is_none_or(|limit| drift.worst() <= limit);

    match args.common.format {
        Format::Csv => {
            let mut w = sink(args.out.as_deref())?;
            w.write_all(cfg.csv_preamble().as_bytes())?;
            traj.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(args.out.as_deref(), &trajectory_json(&traj, &cfg))?,
    }
    let report = json!({
        "format": FORMAT_VERSION,
        "config": cfg,
        "drift": drift,
        "worst_drift": drift.worst(),
        "orthogonality_defect": traj.orthogonality_defect(),
        "pass": pass,
    });
    if args.report.is_some() || args.out.is_some() {
        write_json(args.report.as_deref(), &report)?;
    }
    Ok(pass)
}

fn parse_checks(text: &str) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if item.eq_ignore_ascii_case("all") {
            out.extend(Check::ALL);
        } else {
            out.push(item.parse::<Check>()?);
        }
    }
    out.dedup();
    if out.is_empty() {
        return Err(invalid("no checks requested"));
    }
    Ok(out)
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let mut cfg = base_config("verify", &args.common);
    let spec = mass_spec(&args.mass, &mut cfg)?;
    let checks = parse_checks(&args.check)?;
    cfg.checks = Some(checks.iter().map(|c| c.name().to_string()).collect());
    cfg.seed = Some(args.seed);
    cfg.trials = Some(args.trials);
    record_output(&mut cfg, "report", args.out.as_deref());

    let verifier = Verifier::new(&spec, args.seed, args.trials)?.with_execution(execution(&args.common));
    let reports = checks
        .iter()
        .map(|c| verifier.run_check(*c))
        .collect::<manakov_sr::Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);

    match args.common.format {
        Format::Json => {
            let mut bundle = json!({ "format": FORMAT_VERSION, "config": cfg, "pass": pass, "reports": reports });
            if checks.contains(&Check::Involution) {
                // the full bracket table at the first trial's momentum
                let m = random_skew_with(&mut trial_rng(args.seed, 0), spec.n(), 1.0)?;
                let table = bracket_matrix(&IntegralFamily::new(&spec)?, &m)?;
                let max_abs = table.iter().map(|e| e.value.abs()).fold(0.0, f64::max);
                bundle["bracket_matrix"] = json!({ "max_abs_value": max_abs, "entries": table });
            }
            write_json(args.out.as_deref(), &bundle)?;
        }
        Format::Csv => {
            let mut w = sink(args.out.as_deref())?;
            w.write_all(cfg.csv_preamble().as_bytes())?;
            writeln!(w, "check,n,seed,trials,max_residual,threshold,pass")?;
            for r in &reports {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.check,
                    r.n,
                    r.seed,
                    r.trials,
                    manakov_sr::algebra::fmt_f64(r.max_residual),
                    manakov_sr::algebra::fmt_f64(r.threshold),
                    r.pass
                )?;
            }
            w.flush()?;
        }
    }
    Ok(pass)
}

pub fn limit(args: &LimitArgs) -> Result<bool> {
    let mut cfg = base_config("limit", &args.common);
    if args.mass.mass.is_some() || args.mass.s.is_some() {
        return Err(invalid("limit takes the sub-Riemannian inertias only"));
    }
    let spec = mass_spec(&args.mass, &mut cfg)?;
    let m = momentum(&args.momentum, spec.n(), &mut cfg)?;
    let s_values = parse_list(&args.s_values).map_err(|e| invalid(e.to_string()))?;
    cfg.k = Some(args.k);
    cfg.r = Some(args.r);
    cfg.s_values = Some(s_values.clone());
    record_output(&mut cfg, "sweep", args.out.as_deref());

    let sweep = limit_sweep(&m, spec.inertias(), args.k, args.r, &s_values, execution(&args.common))?;
    match args.common.format {
        Format::Csv => {
            let mut w = sink(args.out.as_deref())?;
            w.write_all(cfg.csv_preamble().as_bytes())?;
            match sweep.observed_rate {
                Some(rate) => writeln!(w, "# observed_rate: {}", manakov_sr::algebra::fmt_f64(rate))?,
                None => writeln!(w, "# observed_rate: none")?,
            }
            sweep.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(
            args.out.as_deref(),
            &json!({ "format": FORMAT_VERSION, "config": cfg, "sweep": sweep, "abs_errors": sweep.abs_errors() }),
        )?,
    }
    Ok(true)
}

#[derive(Serialize)]
struct RollSummary {
    regime: manakov_sr::rolling::Regime,
    k: f64,
    alpha: Option<f64>,
    period: Option<f64>,
    samples: usize,
    max_curve_residual: f64,
    max_energy_deviation: f64,
    max_casimir_deviation: f64,
    pass: bool,
}

fn summarize(path: &[PathPoint], p: &RollingParams) -> RollSummary {
    let worst = |f: &dyn Fn(&PathPoint) -> f64| path.iter().map(f).fold(0.0, f64::max);
    let curve = worst(&|pt| curve_residual(pt.y, pt.z, p).abs());
    let energy_dev = worst(&|pt| (energy(pt.m, p) - 0.5).abs() / 0.5);
    let casimir_dev = worst(&|pt| (casimir_value(pt.m) - p.casimir()).abs() / p.casimir());
    RollSummary {
        regime: p.regime(),
        k: p.k(),
        alpha: alpha_offset(p).ok(),
        period: p.period(),
        samples: path.len(),
        max_curve_residual: curve,
        max_energy_deviation: energy_dev,
        max_casimir_deviation: casimir_dev,
        pass: curve <= CURVE_TOL && energy_dev <= LEVEL_TOL && casimir_dev <= LEVEL_TOL,
    }
}

pub fn roll(args: &RollArgs) -> Result<bool> {
    let mut cfg = base_config("roll", &args.common);
    cfg.i2 = Some(args.i2);
    cfg.i3 = Some(args.i3);
    cfg.casimir = Some(args.casimir);
    cfg.t_max = Some(args.t_max);
    cfg.dt = Some(args.dt);
    record_output(&mut cfg, "path", args.out.as_deref());
    if args.svg.is_some() {
        record_output(&mut cfg, "svg", args.svg.as_deref());
    }

    let p = RollingParams::new(args.i2, args.i3, args.casimir)?;
    let path = contact_path(&p, args.t_max, args.dt)?;
    let summary = summarize(&path, &p);
    match args.common.format {
        Format::Csv => {
            let mut w = sink(args.out.as_deref())?;
            w.write_all(cfg.csv_preamble().as_bytes())?;
            writeln!(w, "# summary: {}", serde_json::to_string(&summary)?)?;
            write_path_csv(&path, &p, &mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(
            args.out.as_deref(),
            &json!({ "format": FORMAT_VERSION, "config": cfg, "summary": summary, "path": path }),
        )?,
    }
    if let Some(svg) = &args.svg {
        let mut w = BufWriter::new(File::create(svg).with_context(|| format!("cannot create {svg}"))?);
        writeln!(w, "<!-- format: {FORMAT_VERSION} config: {} -->", cfg.to_json_line().replace("--", "-\\u002d"))?;
        write_svg(&[("contact path", &path)], &mut w)?;
        w.flush()?;
    }
    Ok(summary.pass)
}
