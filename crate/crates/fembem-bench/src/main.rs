use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fembem::driver::{emit_results, run_experiment, Experiment, ExperimentConfig, Format};

/// Benchmark harness for the three-field FEM-BEM Helmholtz solver.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file overriding fields of the experiment's preset
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (default: the config's output_dir, else ./results)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed, overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// skip the SVG plot
    #[arg(long, global = true)]
    no_svg: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// h-convergence study against the reference solution
    Converge,
    /// error / best approximation over a k sweep under scale resolution
    Quasiopt,
    /// coercivity eigenvalue of T + Theta over k
    Garding,
    /// operator norms of T and T + Theta over k
    Continuity,
    /// boundary frequency filters
    Filters,
    /// jump relations of the layer potentials
    Jumps,
    /// Calderon identity residual
    Calderon,
    /// discrete adjoint consistency
    Adjoint,
    /// inverse inequality constant on W_h
    Inverse,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Converge => Experiment::Converge,
            Command::Quasiopt => Experiment::Quasiopt,
            Command::Garding => Experiment::Garding,
            Command::Continuity => Experiment::Continuity,
            Command::Filters => Experiment::Filters,
            Command::Jumps => Experiment::Jumps,
            Command::Calderon => Experiment::Calderon,
            Command::Adjoint => Experiment::Adjoint,
            Command::Inverse => Experiment::Inverse,
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Box<dyn std::error::Error>> {
    let exp = cli.command.experiment();
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_json(exp, &std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::preset(exp),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| "results".into());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let report = pool.build()?.install(|| run_experiment(&cfg))?;
    let mut formats = vec![Format::Csv, Format::Json];
    if !cli.no_svg {
        formats.push(Format::Svg);
    }
    for path in emit_results(&report, &out, &formats)? {
        eprintln!("wrote {}", path.display());
    }
    for c in &report.checks {
        println!("{}", c.line());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
