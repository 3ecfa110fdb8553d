//! `manakov-sr`: batch front end for simulation, verification, limit sweeps
//! and the rolling ball.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes, a stable contract for scripts.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const USAGE: u8 = 2;
    pub const HYPOTHESIS: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

#[derive(Parser, Debug)]
#[command(name = "manakov-sr", version, about = "Sub-Riemannian Manakov flows on SO(n)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the momentum equation and report invariant drift.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Run the Poisson-structure checks at seeded random momenta.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Sweep the Riemannian-to-sub-Riemannian limit of one integral.
    #[command(args_override_self = true)]
    Limit(LimitArgs),
    /// Trace the contact path of the SO(3) rolling ball.
    #[command(args_override_self = true)]
    Roll(RollArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExecMode {
    Sequential,
    Parallel,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// File of `key=value` lines; explicit flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Trial-level execution; results are identical in both modes.
    #[arg(long = "exec", value_enum, default_value = "parallel")]
    pub exec: ExecMode,
}

#[derive(Args, Debug, Clone)]
pub struct MassArgs {
    /// Dimension; inferred from the inertias or masses when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sub-Riemannian inertias `I2,...,In` (default `1,2,...,n-1`).
    #[arg(long, conflicts_with = "mass")]
    pub inertia: Option<String>,
    /// Riemannian masses `J1,...,Jn`.
    #[arg(long)]
    pub mass: Option<String>,
    /// Family parameter: with `--inertia`, use `Diag(-s, I2+s, ..., In+s)`.
    #[arg(long, requires = "inertia")]
    pub s: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct MomentumArgs {
    /// Seed of the random initial momentum.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV file with the initial momentum (`M_1_2,...` header optional).
    #[arg(long, value_name = "FILE")]
    pub m0: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub mass: MassArgs,
    #[command(flatten)]
    pub momentum: MomentumArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    /// `rk4` or `midpoint`.
    #[arg(long, default_value = "rk4")]
    pub scheme: String,
    /// Also integrate the group element.
    #[arg(long)]
    pub reconstruct: bool,
    /// Exit with status 4 when any relative drift exceeds this.
    #[arg(long)]
    pub fail_drift: Option<f64>,
    /// Trajectory output (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
    /// JSON drift report (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    pub report: Option<String>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub mass: MassArgs,
    /// `bihamiltonian`, `recursion`, `involution`, `jacobi`, `independence`
    /// or `all`; comma-separated lists are accepted.
    #[arg(long, default_value = "all")]
    pub check: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct LimitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub mass: MassArgs,
    #[command(flatten)]
    pub momentum: MomentumArgs,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// Comma-separated, strictly increasing values of `s >= 1`.
    #[arg(long)]
    pub s_values: String,
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct RollArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub i2: f64,
    #[arg(long)]
    pub i3: f64,
    /// Casimir level `|M|²`.
    #[arg(long)]
    pub casimir: f64,
    #[arg(long)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<String>,
    /// Also draw the path as SVG.
    #[arg(long, value_name = "FILE")]
    pub svg: Option<String>,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use manakov_sr::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::HypothesisViolated(_) | Error::NotApplicable(_)) => exit::HYPOTHESIS,
        Some(Error::StepFailure { .. } | Error::Conditioning(_)) => exit::NUMERICAL,
        _ => exit::USAGE,
    }
}

fn main() -> ExitCode {
    let args = match config::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit::USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Limit(a) => commands::limit(&a),
        Command::Roll(a) => commands::roll(&a),
    };
    match outcome {
        Ok(true) => ExitCode::from(exit::PASS),
        Ok(false) => ExitCode::from(exit::NUMERICAL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
