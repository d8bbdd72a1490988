//! `pslab`: command-line front end for the pslab library.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::OutputMode;

#[derive(Parser)]
#[command(
    name = "pslab",
    version,
    about = "Exact computations for the probabilistic serial rule",
    arg_required_else_help = true
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Human)]
    output: OutputMode,
    /// Add decimal approximations next to exact values.
    #[arg(long, global = true)]
    approx: bool,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RelationArg {
    Eu,
    Dl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    RoundRobin,
    FirstImproving,
}

#[derive(Args, Clone, Debug)]
pub struct InstanceArgs {
    /// Instance JSON file (`-` for stdin).
    #[arg(long, short)]
    pub instance: PathBuf,
}

/// Where EU utilities come from when the instance file has none.
#[derive(Args, Clone, Debug)]
pub struct UtilityArgs {
    /// Use Borda utilities (m - rank) instead of the file's or sampled ones.
    #[arg(long)]
    pub borda: bool,
    /// Seed for sampling utilities when the file has none.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run PS and print the assignment.
    Ps {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Also print the eating events.
        #[arg(long)]
        trace: bool,
    },
    /// Best response of one agent against the others' reports.
    BestResponse {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Agent number, 1-based.
        #[arg(long)]
        agent: usize,
        #[arg(long, value_enum, default_value_t = RelationArg::Eu)]
        relation: RelationArg,
        /// Reported profile, orders separated by `;` (default: truthful).
        #[arg(long)]
        profile: Option<String>,
        #[command(flatten)]
        utilities: UtilityArgs,
    },
    /// Best-response dynamics from a starting profile.
    Dynamics {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = RelationArg::Eu)]
        relation: RelationArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::RoundRobin)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
        /// Starting profile, orders separated by `;` (default: truthful).
        #[arg(long)]
        profile: Option<String>,
        #[command(flatten)]
        utilities: UtilityArgs,
    },
    /// Check whether a reported profile is a pure Nash equilibrium.
    Verify {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = RelationArg::Dl)]
        relation: RelationArg,
        /// Reported profile, orders separated by `;` (default: truthful).
        #[arg(long)]
        profile: Option<String>,
        #[command(flatten)]
        utilities: UtilityArgs,
    },
    /// List pure Nash equilibria (csv: every profile with its status).
    Enumerate {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = RelationArg::Dl)]
        relation: RelationArg,
        /// Largest profile space to enumerate (overrides PSLAB_BOUND).
        #[arg(long)]
        bound: Option<u64>,
        #[command(flatten)]
        utilities: UtilityArgs,
    },
    /// Solve the discretized eating game and extract an equilibrium profile.
    Spne {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value_t = RelationArg::Dl)]
        relation: RelationArg,
        /// Amount eaten per sub-stage, e.g. `1/4` (default: from the granularity).
        #[arg(long)]
        quantum: Option<String>,
        #[command(flatten)]
        utilities: UtilityArgs,
    },
    /// Threat profile of a two-agent instance.
    Threat {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Verify the guarantees exhaustively.
        #[arg(long)]
        check: bool,
    },
    /// Generate instances from a preference culture.
    Gen {
        /// ic, sp-ic, mallows, urn
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Mallows dispersion in (0, 1].
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Also sample consistent random utilities.
        #[arg(long)]
        utilities: bool,
        /// Directory for `instance-NNNN.json` files (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample instances from a PrefLib SOC file.
    Import {
        /// SOC file.
        #[arg(long)]
        input: PathBuf,
        /// Read the older headerless layout.
        #[arg(long)]
        legacy: bool,
        /// Agents per instance (default: number of voters).
        #[arg(long)]
        n: Option<usize>,
        /// Houses per instance (default: all alternatives).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Also sample consistent random utilities.
        #[arg(long)]
        utilities: bool,
        /// Directory for `instance-NNNN.json` files (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a welfare-at-equilibrium experiment grid.
    Experiment {
        /// Lines of `model,n,m,samples`.
        #[arg(long)]
        config: PathBuf,
        /// Directory for samples.csv, classification.csv, extremes.csv, summary.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in reference checks.
    Selfcheck,
}

pub enum CliError {
    Usage(String),
    Domain(String),
}

impl From<pslab::PsError> for CliError {
    fn from(e: pslab::PsError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub struct Ctx {
    pub output: OutputMode,
    pub approx: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Domain(e.to_string()))?;
    }
    let ctx = Ctx {
        output: cli.output,
        approx: cli.approx,
    };
    match cli.command {
        Command::Ps { instance, trace } => commands::ps(&ctx, &instance, trace),
        Command::BestResponse {
            instance,
            agent,
            relation,
            profile,
            utilities,
        } => commands::best_response(
            &ctx,
            &instance,
            agent,
            relation,
            profile.as_deref(),
            &utilities,
        ),
        Command::Dynamics {
            instance,
            relation,
            policy,
            max_steps,
            profile,
            utilities,
        } => commands::dynamics(
            &ctx,
            &instance,
            relation,
            policy,
            max_steps,
            profile.as_deref(),
            &utilities,
        ),
        Command::Verify {
            instance,
            relation,
            profile,
            utilities,
        } => commands::verify(&ctx, &instance, relation, profile.as_deref(), &utilities),
        Command::Enumerate {
            instance,
            relation,
            bound,
            utilities,
        } => commands::enumerate(&ctx, &instance, relation, bound, &utilities),
        Command::Spne {
            instance,
            relation,
            quantum,
            utilities,
        } => commands::spne(&ctx, &instance, relation, quantum.as_deref(), &utilities),
        Command::Threat { instance, check } => commands::threat(&ctx, &instance, check),
        Command::Gen {
            model,
            n,
            m,
            seed,
            phi,
            count,
            utilities,
            out,
        } => commands::gen(
            &ctx,
            &model,
            n,
            m,
            seed,
            phi,
            count,
            utilities,
            out.as_deref(),
        ),
        Command::Import {
            input,
            legacy,
            n,
            m,
            seed,
            count,
            utilities,
            out,
        } => commands::import(
            &ctx,
            &input,
            legacy,
            n,
            m,
            seed,
            count,
            utilities,
            out.as_deref(),
        ),
        Command::Experiment { config, out, seed } => {
            commands::experiment(&ctx, &config, &out, seed)
        }
        Command::Selfcheck => commands::selfcheck(&ctx),
    }
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`pslab enumerate ... | head`) like other Unix tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
