mod commands;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CliError, Report};

#[derive(Debug, Parser)]
#[command(
    name = "streamshare",
    version,
    about = "Revenue allocation for music-streaming subscription problems"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Problem file (CSV or JSON); `-` reads stdin.
    #[arg(short, long, global = true)]
    pub input: Option<PathBuf>,
    /// Input format; defaults to the file extension, then to sniffing.
    #[arg(long, global = true, value_enum)]
    pub format: Option<InputFormat>,
    #[arg(short, long, global = true, value_enum, default_value_t = Output::Table)]
    pub output: Output,
    /// Subscription fee per user, e.g. `10` or `99/10`; overrides the input.
    #[arg(long, global = true)]
    pub fee: Option<String>,
    /// Decimal places in table output. Computation stays exact.
    #[arg(long, global = true, default_value_t = 3)]
    pub precision: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Output {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ProRata,
    UserCentric,
    Banded,
    WeightedFile,
    I1,
    I2,
    I3,
    I4,
    I5,
}

#[derive(Debug, Clone, Args)]
pub struct MethodParams {
    /// Lower band limit for `banded`.
    #[arg(long)]
    pub alpha: Option<u64>,
    /// Upper band limit for `banded`.
    #[arg(long)]
    pub beta: Option<u64>,
    /// JSON object mapping user id to weight for `weighted-file`.
    #[arg(long)]
    pub weights_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index values and rewards under one method.
    Allocate {
        #[arg(long, value_enum, default_value_t = Method::ProRata)]
        method: Method,
        #[command(flatten)]
        params: MethodParams,
    },
    /// Several methods side by side.
    Compare {
        /// Comma-separated; defaults to pro-rata and user-centric, plus
        /// banded and weighted-file when their parameters are given.
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Vec<Method>,
        #[command(flatten)]
        params: MethodParams,
    },
    /// Core membership of a method's rewards under both oracles.
    CoreCheck {
        #[arg(long, value_enum, default_value_t = Method::ProRata)]
        method: Method,
        #[command(flatten)]
        params: MethodParams,
    },
    /// Seeded witness search over indices and axioms.
    Axioms {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Generated instances per cell, after the built-in examples.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
        /// Comma-separated: pro-rata, user-centric, i1..i5, banded or
        /// banded:<alpha>:<beta>.
        #[arg(long, value_delimiter = ',')]
        indices: Vec<String>,
        /// Comma-separated axiom names or short names.
        #[arg(long, value_delimiter = ',')]
        axioms: Vec<String>,
        /// Band for the `banded` entry.
        #[arg(long, default_value_t = 20)]
        alpha: u64,
        #[arg(long, default_value_t = 60)]
        beta: u64,
        /// Sample only problems with at least three users where nobody
        /// listens to every artist.
        #[arg(long)]
        pstar: bool,
    },
    /// Characteristic function, dividends and supermodularity.
    Game,
    /// Two-stage claims rule on the associated claims problem.
    Claims {
        /// First-stage rule over users.
        #[arg(long, default_value = "cea")]
        psi: String,
        /// Second-stage rule within each user.
        #[arg(long, default_value = "p")]
        phi: String,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Allocate { method, params } => commands::allocate(g, method, &params),
        Command::Compare { methods, params } => commands::compare(g, &methods, &params),
        Command::CoreCheck { method, params } => commands::core_check(g, method, &params),
        Command::Axioms {
            seed,
            budget,
            indices,
            axioms,
            alpha,
            beta,
            pstar,
        } => commands::axioms(&commands::AxiomOptions {
            seed,
            budget,
            indices,
            axioms,
            alpha,
            beta,
            pstar,
        }),
        Command::Game => commands::game(g),
        Command::Claims { psi, phi } => commands::claims(g, &psi, &phi),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.global.output;
    match run(cli) {
        Ok(report) => {
            let text = match output {
                Output::Table => report.table,
                Output::Json => {
                    let mut s = serde_json::to_string_pretty(&report.json)
                        .expect("report JSON is always serializable");
                    s.push('\n');
                    s
                }
            };
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
