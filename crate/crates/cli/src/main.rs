//! `smurf`: synthesize coefficient tables, simulate generators and run
//! error sweeps.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smurf_core::{RngKind, SmurfError};

mod commands;
mod config;

use config::{parse_box, OneOrMany, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

impl From<SmurfError> for CliError {
    fn from(e: SmurfError) -> Self {
        match e {
            SmurfError::NoConvergence(_) | SmurfError::NotPositiveSemidefinite(_) => {
                Self::Solver(e.to_string())
            }
            SmurfError::Io(_) => Self::Io(e.to_string()),
            _ => Self::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "smurf",
    version,
    about = "Stochastic FSM nonlinear-function generators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit θ-gate thresholds to a target and write a coefficient file.
    Synthesize(RunArgs),
    /// Simulate a coefficient file over a grid of inputs and report errors.
    Eval(RunArgs),
    /// Error versus bitstream length, one row per (N, L).
    Sweep(RunArgs),
    /// Print steady-state probabilities or a CSV of steady-state curves.
    Steady(SteadyArgs),
    /// Pretty-print a coefficient file.
    Show { file: PathBuf },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with the same fields as these flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin target name.
    #[arg(long, conflicts_with = "expr")]
    target: Option<String>,
    /// Target expression in x1..xM, e.g. "sin(x1)*cas(x2)".
    #[arg(long)]
    expr: Option<String>,
    /// Number of inputs M (expressions only; defaults to the highest xk used).
    #[arg(long)]
    arity: Option<usize>,
    /// States per chain; a comma-separated list for sweep.
    #[arg(long, value_delimiter = ',')]
    n_states: Option<Vec<usize>>,
    /// Bitstream lengths, comma-separated.
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// State every chain starts in.
    #[arg(long)]
    initial_state: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quadrature nodes per dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Evaluation points per dimension.
    #[arg(long)]
    grid_points: Option<usize>,
    /// independent, lagged or lowdisc.
    #[arg(long)]
    rng: Option<RngKind>,
    /// active-set or projected-gradient.
    #[arg(long)]
    qp: Option<String>,
    /// Input domain `lo,hi`; once for all inputs or once per input.
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true)]
    input_box: Option<Vec<[f64; 2]>>,
    /// Output range `lo,hi` or `auto`.
    #[arg(long, allow_hyphen_values = true)]
    output_box: Option<String>,
    /// Coefficient file(s) to read.
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<PathBuf>>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let output_box = match self.output_box {
            None => None,
            Some(s) if s == "auto" => Some(serde_json::Value::from("auto")),
            Some(s) => {
                let [lo, hi] = parse_box(&s).map_err(CliError::Config)?;
                Some(serde_json::json!([lo, hi]))
            }
        };
        let flags = RunConfig {
            target: self.target,
            expr: self.expr,
            arity: self.arity,
            n_states: self.n_states.map(OneOrMany::Many),
            lengths: self.lengths,
            burn_in: self.burn_in,
            initial_state: self.initial_state,
            seed: self.seed,
            grid: self.grid,
            grid_points: self.grid_points,
            rng: self.rng,
            qp: self.qp,
            input_box: self.input_box,
            output_box,
            coeffs: self.coeffs,
            out: self.out,
        };
        match self.config {
            Some(path) => {
                let file = RunConfig::load(&path)?;
                // a target given on the command line replaces the file's target of either kind
                let file = if flags.target.is_some() || flags.expr.is_some() {
                    RunConfig {
                        target: None,
                        expr: None,
                        ..file
                    }
                } else {
                    file
                };
                Ok(file.overridden_by(flags))
            }
            None => Ok(flags),
        }
    }
}

#[derive(Debug, Args)]
struct SteadyArgs {
    #[arg(long)]
    n_states: usize,
    /// Input probabilities, comma-separated: one value for a single chain,
    /// M values for the joint distribution.
    #[arg(long, value_delimiter = ',')]
    px: Option<Vec<f64>>,
    /// Emit a CSV of every P_i over a grid of Px instead.
    #[arg(long)]
    curves: bool,
    /// Grid size for --curves.
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the curves CSV (needs --out).
    #[arg(long, requires = "out")]
    gnuplot: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synthesize(args) => commands::synthesize(&args.into_config()?),
        Command::Eval(args) => commands::eval(&args.into_config()?),
        Command::Sweep(args) => commands::sweep(&args.into_config()?),
        Command::Steady(args) => commands::steady(&commands::SteadyRequest {
            n_states: args.n_states,
            px: args.px,
            curves: args.curves,
            points: args.points,
            out: args.out,
            gnuplot: args.gnuplot,
        }),
        Command::Show { file } => commands::show(&file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("smurf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
