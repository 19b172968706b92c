//! `dqubit`: simulations, diagnostics and parameter sweeps for a driven
//! qubit in a Drude–Lorentz bath.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use driven_qubit::kv::KeyValues;
use driven_qubit::Error;

use config::{RunConfig, Task};

#[derive(Parser)]
#[command(name = "dqubit", version, about = "Driven qubit open-system dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one initial state and write ρ(t).
    Simulate(Common),
    /// Compute the Pauli-basis dynamical map C_{μν}(t).
    Stcf(Common),
    /// BLP measure by Monte Carlo over state pairs.
    Blp(Common),
    /// Bloch volume V(t) and N_V.
    Volume(Common),
    /// Canonical decay rates and the eternal non-Markovianity test.
    Rates(Common),
    /// Memory kernel, τ_K and the Born–Markov generator.
    Kernel(Common),
    /// Diagnostics over one parameter axis, in parallel.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(&self) -> (Task, &Common) {
        match self {
            Command::Simulate(c) => (Task::Simulate, c),
            Command::Stcf(c) => (Task::Stcf, c),
            Command::Blp(c) => (Task::Blp, c),
            Command::Volume(c) => (Task::Volume, c),
            Command::Rates(c) => (Task::Rates, c),
            Command::Kernel(c) => (Task::Kernel, c),
            Command::Sweep(c) => (Task::Sweep, c),
        }
    }
}

fn load(task: Task, args: &Common) -> driven_qubit::Result<RunConfig> {
    let mut kv = match &args.config {
        Some(path) => KeyValues::parse(&std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter {
            key: "--config".into(),
            reason: format!("{}: {e}", path.display()),
        })?)?,
        None => KeyValues::new(),
    };
    if let Some(seed) = args.seed {
        kv.set("seed", seed);
    }
    if let Some(out) = &args.out {
        kv.set("output_dir", out.display());
    }
    RunConfig::from_kv(&kv, task)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = cli.command.split();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let result = load(task, args).and_then(|cfg| run::run(&cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, manifest)) => {
            for path in run::manifest_files(&cfg.output_dir, &manifest) {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
