//! Command-line front end.
//!
//! Exit codes: 0 success, 2 infeasible or nothing to cut, 3 search budget
//! exhausted without a solution, 1 any other error.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::circuit::PauliString;
use crate::error::{Error, Result};
use crate::hemicut::DEFAULT_BUDGET;
use crate::iso::DEFAULT_RESTARTS;
use crate::reconstruct::EvalMode;

pub use commands::{cmd_cut, cmd_map, cmd_run};
pub use config::{Input, RunConfig};
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "qdcut", version, about = "Cut, map and reconstruct circuits on a chain of small QPUs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search a min-cost cut and keep the critical cuts.
    Cut(Flags),
    /// Cut, map, simulate every variant and reconstruct the expectation.
    Run(Flags),
    /// Map and route the uncut circuit.
    Map(Flags),
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Built-in benchmark: ghz, lc, bv, bv-random, qft, qft-cx, rca, hwea, spm.
    #[arg(long, conflicts_with = "qasm", requires = "qubits")]
    pub bench: Option<String>,
    #[arg(long)]
    pub qubits: Option<usize>,
    /// OpenQASM 2.0 input file.
    #[arg(long)]
    pub qasm: Option<PathBuf>,
    /// Topology preset `<device>-x<N>`.
    #[arg(long, default_value = "manila-x20", conflicts_with = "topology_file")]
    pub topology: String,
    /// Topology JSON file.
    #[arg(long)]
    pub topology_file: Option<PathBuf>,
    /// Contract isomorphic sub-circuits before cutting.
    #[arg(long)]
    pub reuse: bool,
    /// Instances that reuse another instance's results (default: all but one).
    #[arg(long)]
    pub reuse_count: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Exact expectation values (the default).
    #[arg(long, conflicts_with = "shots")]
    pub exact: bool,
    /// Shots per sub-circuit; switches to sampling.
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Heap pops allowed in the cut search.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Pauli observable, one letter per qubit (default all Z).
    #[arg(long)]
    pub observable: Option<String>,
    /// Skip cutting (run only).
    #[arg(long)]
    pub no_cut: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the interaction graph as DOT.
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// postproc-first or sampling-first.
    #[arg(long, default_value = "postproc-first")]
    pub cost_order: String,
}

impl Flags {
    pub fn to_config(&self) -> Result<RunConfig> {
        let input = match (&self.bench, &self.qasm) {
            (Some(name), None) => Input::Bench { name: name.clone(), qubits: self.qubits.unwrap_or(0) },
            (None, Some(path)) => Input::Qasm { path: path.clone() },
            _ => return Err(Error::Config("give exactly one of --bench/--qubits or --qasm".into())),
        };
        let topology = match &self.topology_file {
            Some(p) => p.display().to_string(),
            None => self.topology.clone(),
        };
        let mode = match self.shots {
            Some(shots) => EvalMode::Shots { shots, seed: self.seed },
            None => EvalMode::Exact,
        };
        Ok(RunConfig {
            input,
            topology,
            reuse: self.reuse,
            reuse_count: self.reuse_count,
            restarts: self.restarts,
            mode,
            seed: self.seed,
            budget: self.budget,
            cost_order: self.cost_order.parse()?,
            observable: self.observable.as_deref().map(str::parse::<PauliString>).transpose()?,
            no_cut: self.no_cut,
            dump_graph: self.dump_graph.clone(),
            threads: self.threads,
        })
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NothingToCut | Error::Infeasible(_) => 2,
        Error::BudgetExhausted { .. } => 3,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let (flags, run): (&Flags, fn(&RunConfig) -> Result<Report>) = match &cli.command {
        Command::Cut(f) => (f, cmd_cut),
        Command::Run(f) => (f, cmd_run),
        Command::Map(f) => (f, cmd_map),
    };
    if flags.no_cut && !matches!(cli.command, Command::Run(_)) {
        return Err(Error::Config("--no-cut only applies to run".into()));
    }
    let cfg = flags.to_config()?;
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        // a second call in one process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let json = run(&cfg)?.to_json()?;
    match &flags.out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => {
            use std::io::Write as _;
            match writeln!(std::io::stdout().lock(), "{json}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
