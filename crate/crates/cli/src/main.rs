//! `flawwalk`: run the walks, check conditions and verify bounds from the
//! command line.
//!
//! Every run prints one `key=value` record on stdout. Exit status: 0 on
//! success, 1 on usage or input errors, 2 when a condition or verification
//! fails, 3 when a walk runs out of budget.

mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "flawwalk", version, about = "Focused stochastic local search toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a DIMACS CNF formula with Moser-Tardos resampling.
    SolveSat(SolveSatArgs),
    /// Acyclically edge-color a graph given as an edge list.
    SolveAec(SolveAecArgs),
    /// Evaluate the convergence condition of an instance.
    Check(CheckArgs),
    /// Verify the witness bounds of an explicit instance by exact enumeration.
    Oracle(OracleArgs),
    /// Rebuild the witness forest of a trajectory log.
    Forest(ForestArgs),
    /// Print the charge table of an explicit instance.
    Charges(ChargesArgs),
    /// Run a walk on an explicit instance.
    Walk(WalkArgs),
    /// Dump the causality digraph, a certified supergraph and the dependency graph.
    Graphs(GraphsArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WalkArg {
    Permutation,
    Recursive,
}

impl From<WalkArg> for flawwalk::walks::WalkKind {
    fn from(w: WalkArg) -> Self {
        match w {
            WalkArg::Permutation => Self::Permutation,
            WalkArg::Recursive => Self::Recursive,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Regenerative,
    General,
    UniformImproved,
}

impl From<ModeArg> for flawwalk::charges::ChargeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Regenerative => Self::Regenerative,
            ModeArg::General => Self::General,
            ModeArg::UniformImproved => Self::UniformImproved,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Seed of the first run; drawn from entropy and reported when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of runs, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// Worker threads for multiple runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: u64,
    #[arg(long, value_enum, default_value_t = WalkArg::Recursive)]
    pub walk: WalkArg,
    /// Write the trajectory log of a single run here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveSatArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// Constant psi, or `grid` to search for the best constant.
    #[arg(long, default_value = "grid")]
    pub psi: String,
    /// Write the `v`-line solution of the first run here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveAecArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// Override Q (the palette is 2(Delta-1)+Q).
    #[arg(long)]
    pub q: Option<u32>,
    /// Check state-space membership after every step.
    #[arg(long)]
    pub strict: bool,
    /// Write the coloring of the first run here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// `.inst` explicit instance, `.cnf` DIMACS formula or `.edges` graph.
    #[arg(long, visible_alias = "input")]
    pub instance: PathBuf,
    /// Constant psi, comma-separated per-flaw values, or `grid` (CNF only).
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long, value_enum, default_value_t = WalkArg::Recursive)]
    pub walk: WalkArg,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Tail parameter of the step bound.
    #[arg(long, default_value_t = 6.0)]
    pub s: f64,
    /// Largest cycle length evaluated for graphs.
    #[arg(long, default_value_t = 64)]
    pub k_max: usize,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, visible_alias = "input")]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub t: usize,
    /// Engine to enumerate; both when omitted.
    #[arg(long, value_enum)]
    pub walk: Option<WalkArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
pub struct ForestArgs {
    #[arg(long, visible_alias = "input")]
    pub trace: PathBuf,
    /// Explicit instance the log came from, for the structure check.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ChargesArgs {
    #[arg(long, visible_alias = "input")]
    pub instance: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
pub struct WalkArgs {
    #[arg(long, visible_alias = "input")]
    pub instance: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug)]
pub struct GraphsArgs {
    #[arg(long, visible_alias = "input")]
    pub instance: PathBuf,
    /// Supergraph arcs (`from to` lines) to certify and use in place of the exact digraph.
    #[arg(long)]
    pub supergraph: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::SolveSat(a) => commands::solve_sat(&a),
        Command::SolveAec(a) => commands::solve_aec(&a),
        Command::Check(a) => commands::check(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::Forest(a) => commands::forest(&a),
        Command::Charges(a) => commands::charges(&a),
        Command::Walk(a) => commands::walk(&a),
        Command::Graphs(a) => commands::graphs(&a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("flawwalk: {e}");
            ExitCode::from(1)
        }
    }
}
