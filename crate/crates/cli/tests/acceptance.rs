//! Acceptance suite: one PASS/FAIL line per criterion, with wall time
//! against its budget. Exits nonzero if any criterion fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use manakov_sr::algebra::{random_skew, random_skew_with, trial_rng};
use manakov_sr::flows::{integrate, lax_residual, monitor, standard_invariants, Integration, Invariant, Scheme};
use manakov_sr::limits::{geometric_s_values, limit_sweep, scaled_f32};
use manakov_sr::manakov::{expected_count, nontrivial_pairs};
use manakov_sr::rolling::{
    alpha_offset, casimir_value, closed_form_m, contact_path, curve_family_residual, curve_residual, energy,
    lie_poisson_vf3,
};
use manakov_sr::{Error, Execution, MassSpec, RollingParams, SkewMatrix, Verifier};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn strict(n: usize) -> MassSpec {
    MassSpec::sub_riemannian((1..n).map(|i| i as f64).collect()).unwrap()
}

fn counting() -> Outcome {
    let known = [(4, 2), (5, 4), (6, 6), (7, 9)];
    let mut ok = known.iter().all(|&(n, c)| expected_count(n).unwrap() == c);
    for n in 3..=12 {
        let l = n / 2;
        let closed = if n % 2 == 0 { l * (l - 1) } else { l * l };
        let count = expected_count(n).unwrap();
        ok &= count == closed && nontrivial_pairs(n).len() == count;
    }
    outcome(ok, "n=4..7 -> 2,4,6,9; both closed forms for n<=12")
}

fn lax() -> Outcome {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for n in 3..=8 {
        for trial in 0..1000 {
            let mut rng = trial_rng(0x1a5 + n as u64, trial);
            let m = random_skew_with(&mut rng, n, 1.0).unwrap();
            let mut inertias: Vec<f64> = (1..n).map(|_| rng.gen_range(0.1..5.0)).collect();
            inertias.sort_by(f64::total_cmp);
            let lambda = rng.gen_range(-10.0..10.0);
            let r = lax_residual(&m, &MassSpec::sub_riemannian(inertias).unwrap(), lambda).unwrap();
            worst = worst.max(r.residual / r.magnitude.max(1e-14));
            count += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{count} samples, worst relative residual {worst:.2e}"))
}

fn conservation() -> Outcome {
    let mut worst_rk4 = 0.0_f64;
    let mut worst_mid = 0.0_f64;
    for n in 3..=6 {
        let spec = strict(n);
        let m0 = random_skew(n, 100 + n as u64, 1.0).unwrap();
        let traj = integrate(&m0, &spec, &Integration::new(1e-3, 10_000, Scheme::Rk4), None).unwrap();
        worst_rk4 = worst_rk4.max(monitor(&traj, &standard_invariants(&spec)).unwrap().worst());
        let traj = integrate(&m0, &spec, &Integration::new(1e-3, 10_000, Scheme::Midpoint), None).unwrap();
        let c2 = Invariant::new("C2", |m: &SkewMatrix| m.trace_power(2));
        worst_mid = worst_mid.max(monitor(&traj, &[c2]).unwrap().worst());
    }
    outcome(
        worst_rk4 <= 1e-8 && worst_mid <= 1e-12,
        format!("rk4 worst drift {worst_rk4:.2e}, midpoint Tr(M^2) drift {worst_mid:.2e}"),
    )
}

fn suite_check(ns: std::ops::RangeInclusive<usize>, trials: usize, run: &[&str]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in run {
        let mut worst = 0.0_f64;
        for n in ns.clone() {
            let verifier = Verifier::new(&strict(n), 2024 + n as u64, trials).unwrap();
            let report = verifier.run_check(name.parse().unwrap()).unwrap();
            ok &= report.pass && report.trials == trials;
            worst = worst.max(report.max_residual);
        }
        parts.push(format!("{name} {worst:.2e}"));
    }
    outcome(ok, format!("n={}..={}, {trials} trials: {}", ns.start(), ns.end(), parts.join(", ")))
}

fn independence() -> Outcome {
    let base = suite_check(4..=7, 50, &["independence"]);
    let tied = MassSpec::sub_riemannian(vec![1.0, 1.0, 2.0]).unwrap();
    let rejected = matches!(
        Verifier::new(&tied, 1, 50).unwrap().independence(),
        Err(Error::HypothesisViolated(_))
    );
    outcome(
        base.pass && rejected,
        format!("{}; tied inertias rejected: {rejected}", base.detail),
    )
}

fn limit() -> Outcome {
    let m = SkewMatrix::from_upper(3, &[1.0, 1.0, 1.0]).unwrap();
    let at10 = scaled_f32(&m, &[1.0, 2.0], 10.0).unwrap();
    let s_values = geometric_s_values(10.0, 1e4, 13).unwrap();
    let sweep = limit_sweep(&m, &[1.0, 2.0], 3, 2, &s_values, Execution::Parallel).unwrap();
    let rate = sweep.observed_rate.unwrap_or(f64::NAN);
    outcome(
        (at10 + 6.5).abs() <= 1e-12 && (sweep.target + 6.0).abs() <= 1e-12 && (rate + 1.0).abs() <= 0.1,
        format!("s=10 value {at10}, target {}, rate {rate:.4}", sweep.target),
    )
}

fn rk4_step(x: [f64; 3], dt: f64, i2: f64, i3: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| lie_poisson_vf3(y, i2, i3);
    let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
    let k1 = f(x);
    let k2 = f(add(x, k1, 0.5 * dt));
    let k3 = f(add(x, k2, 0.5 * dt));
    let k4 = f(add(x, k3, dt));
    std::array::from_fn(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

fn rolling() -> Outcome {
    let oscillatory = RollingParams::new(1.0, 2.0, 3.0).unwrap();
    let separatrix = RollingParams::new(1.0, 2.0, 2.0).unwrap();
    let rotational = RollingParams::new(1.0, 2.0, 1.5).unwrap();

    // five-point derivative of the closed form against the vector field
    let mut fd = 0.0_f64;
    let h = 1e-3;
    for p in [&oscillatory, &separatrix, &rotational] {
        for i in 0..50 {
            let t = 0.13 * i as f64;
            let at = |dt: f64| closed_form_m(t + dt, p);
            let (a, b, c, d) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
            let v = lie_poisson_vf3(at(0.0), p.i2(), p.i3());
            for j in 0..3 {
                let deriv = (-a[j] + 8.0 * b[j] - 8.0 * c[j] + d[j]) / (12.0 * h);
                fd = fd.max((deriv - v[j]).abs());
            }
        }
    }

    // RK4 from the closed-form initial condition over one period
    let period = oscillatory.period().unwrap();
    let dt = 1e-4;
    let steps = (period / dt).ceil() as usize;
    let mut x = closed_form_m(0.0, &oscillatory);
    let mut rk4 = 0.0_f64;
    for s in 0..steps {
        let t0 = s as f64 * dt;
        let step = if s + 1 == steps { period - t0 } else { dt };
        x = rk4_step(x, step, oscillatory.i2(), oscillatory.i3());
        let exact = closed_form_m(t0 + step, &oscillatory);
        rk4 = rk4.max((0..3).map(|i| (x[i] - exact[i]).abs()).fold(0.0, f64::max));
    }

    // levels and curves in all three regimes, plus the unrotated control
    let (mut levels, mut curves, mut unrotated) = (0.0_f64, 0.0_f64, 0.0_f64);
    for p in [&oscillatory, &separatrix, &rotational] {
        let path = contact_path(p, 10.0, 1e-3).unwrap();
        for pt in &path {
            levels = levels.max((energy(pt.m, p) - 0.5).abs());
            levels = levels.max((casimir_value(pt.m) - p.casimir()).abs() / p.casimir());
            curves = curves.max(curve_residual(pt.y, pt.z, p).abs());
            unrotated = unrotated.max(curve_family_residual(pt.y, pt.z, p).abs());
        }
    }

    let a06 = alpha_offset(&RollingParams::new(1.0, 1.36, 2.0).unwrap()).unwrap();
    let a_rot = alpha_offset(&rotational).unwrap();
    let alpha = (a06 - std::f64::consts::LN_2).abs().max((a_rot - (1.0 + 2f64.sqrt()).ln()).abs());

    outcome(
        fd <= 1e-9 && rk4 <= 1e-7 && levels <= 1e-12 && curves <= 1e-7 && unrotated > 1e-3 && alpha <= 1e-12,
        format!(
            "ode {fd:.1e}, rk4/period {rk4:.1e}, levels {levels:.1e}, curves {curves:.1e} \
             (unrotated {unrotated:.1e}), alpha {alpha:.1e}"
        ),
    )
}

fn run_cli(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_manakov-sr"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m0.csv"), "M_1_2,M_1_3,M_2_3\n1,1,1\n").unwrap();
    let runs: [(&[&str], &[&str]); 6] = [
        (
            &["simulate", "--n", "3", "--inertia", "1,2", "--seed", "7", "--steps", "2000", "--out", "t.csv", "--report", "r.json"],
            &["t.csv", "r.json"],
        ),
        (
            &["simulate", "--n", "4", "--scheme", "midpoint", "--steps", "500", "--reconstruct", "--format", "json", "--out", "t.json", "--report", "r2.json"],
            &["t.json", "r2.json"],
        ),
        (&["verify", "--check", "all", "--n", "5", "--seed", "3", "--trials", "20", "--format", "json", "--out", "v.json"], &["v.json"]),
        (&["verify", "--check", "jacobi,recursion", "--n", "4", "--trials", "50", "--out", "v.csv"], &["v.csv"]),
        (
            &["limit", "--inertia", "1,2", "--m0", "m0.csv", "--s-values", "10,100,1000,10000", "--out", "l.csv"],
            &["l.csv"],
        ),
        (
            &["roll", "--i2", "1", "--i3", "2", "--casimir", "3", "--t-max", "8", "--dt", "1e-3", "--out", "p.csv", "--svg", "p.svg"],
            &["p.csv", "p.svg"],
        ),
    ];
    let mut identical = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    for (args, files) in runs {
        let mut snapshots = Vec::new();
        let mut stdouts = Vec::new();
        for _ in 0..2 {
            let out = run_cli(args, dir.path());
            if !out.status.success() {
                failures.push(format!("{} exited {:?}", args[0], out.status.code()));
            }
            stdouts.push(out.stdout);
            snapshots.push(files.iter().map(|f| fs::read(dir.path().join(f)).unwrap_or_default()).collect::<Vec<_>>());
        }
        for (i, f) in files.iter().enumerate() {
            total += 1;
            if snapshots[0][i] == snapshots[1][i] && !snapshots[0][i].is_empty() {
                identical += 1;
            } else {
                failures.push(format!("{f} differs"));
            }
        }
        total += 1;
        if stdouts[0] == stdouts[1] {
            identical += 1;
        } else {
            failures.push(format!("{} stdout differs", args[0]));
        }
    }
    let detail = if failures.is_empty() {
        format!("{identical}/{total} outputs byte-identical across reruns")
    } else {
        format!("{identical}/{total} identical; {}", failures.join("; "))
    };
    outcome(failures.is_empty(), detail)
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("counting", Duration::from_millis(1), counting),
        ("lax identity", Duration::from_secs(1), lax),
        ("conservation", Duration::from_secs(30), conservation),
        ("bi-hamiltonian", Duration::from_secs(5), || suite_check(3..=6, 100, &["bihamiltonian"])),
        ("recursion and involution", Duration::from_secs(60), || {
            suite_check(4..=6, 50, &["recursion", "involution"])
        }),
        ("compatibility", Duration::from_secs(10), || suite_check(3..=6, 1000, &["jacobi"])),
        ("independence", Duration::from_secs(30), independence),
        ("limit", Duration::from_secs(1), limit),
        ("rolling", Duration::from_secs(10), rolling),
        ("determinism", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (index, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= budget, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.3?} of {:?}]",
            if pass { "PASS" } else { "FAIL" },
            index + 1,
            elapsed,
            budget
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
