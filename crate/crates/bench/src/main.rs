use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ppcm_bench::config::parse_topology;
use ppcm_bench::{cmd_compare, cmd_generate, cmd_run, BenchError, ConstraintSpec, ExperimentConfig, MethodSpec, ProblemSpec, Result};

#[derive(Parser)]
#[command(name = "ppcm", version, about = "Distributed PPCM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random least-squares instance and its manifest.
    Generate(RunArgs),
    /// Solve an instance with one or more methods and write a report.
    Run(RunArgs),
    /// Merge reports into one table.
    Compare {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `lsq`, `toy` or `file:<dir>`.
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated: ppcm, ppcm_central_unit, ppcm_central_adaptive[:gamma], wagm, extragradient:<beta>.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// complete, ring, star or er:<prob>.
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// box:<lo>:<hi>, ball:<r> or none.
    #[arg(long)]
    constraint: Option<String>,
    /// WAGM step constant c in c/(k+1).
    #[arg(long)]
    wagm_c: Option<f64>,
    #[arg(long)]
    wagm_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            cfg.problem = match p.split_once(':') {
                None if p == "lsq" => ProblemSpec::default(),
                None if p == "toy" => ProblemSpec::Toy,
                Some(("file", dir)) => ProblemSpec::File { path: dir.into() },
                _ => return Err(BenchError::InvalidArgument(format!("unknown problem {p:?}"))),
            };
        }
        if self.m.is_some() || self.n.is_some() || self.seed.is_some() {
            let ProblemSpec::Lsq { m, n, seed } = &mut cfg.problem else {
                return Err(BenchError::InvalidArgument("--m, --n and --seed apply to the lsq problem only".into()));
            };
            *m = self.m.unwrap_or(*m);
            *n = self.n.unwrap_or(*n);
            *seed = self.seed.unwrap_or(*seed);
        }
        if let Some(methods) = self.method {
            cfg.methods = methods.iter().map(|s| s.parse::<MethodSpec>()).collect::<Result<_>>()?;
        }
        if let Some(t) = self.topology {
            cfg.topology = parse_topology(&t)?;
        }
        if let Some(c) = self.constraint {
            cfg.constraint = c.parse::<ConstraintSpec>()?;
        }
        cfg.p = self.p.unwrap_or(cfg.p);
        cfg.eta = self.eta.unwrap_or(cfg.eta);
        cfg.gamma = self.gamma.unwrap_or(cfg.gamma);
        cfg.tol = self.tol.unwrap_or(cfg.tol);
        cfg.max_iters = self.max_iters.unwrap_or(cfg.max_iters);
        cfg.wagm_step_c = self.wagm_c.or(cfg.wagm_step_c);
        cfg.wagm_tol = self.wagm_tol.unwrap_or(cfg.wagm_tol);
        cfg.output_dir = self.out.unwrap_or(cfg.output_dir);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate(args) => {
            let cfg = args.into_config()?;
            let manifest = cmd_generate(&cfg)?;
            println!(
                "wrote {}x{} instance for p={} to {}",
                manifest.m,
                manifest.n,
                manifest.p,
                cfg.output_dir.display()
            );
            Ok(true)
        }
        Command::Run(args) => {
            let cfg = args.into_config()?;
            let report = cmd_run(&cfg)?;
            let rows = ppcm_bench::report::merge_rows(std::slice::from_ref(&report));
            print!("{}", ppcm_bench::report::render_text(&rows));
            for m in &report.methods {
                if let Some(e) = &m.error {
                    eprintln!("{}: {e}", m.method);
                }
            }
            let single_failed = report.methods.len() == 1 && !report.methods[0].converged;
            Ok(!single_failed)
        }
        Command::Compare { reports, csv } => {
            let table = cmd_compare(&reports)?;
            print!("{}", table.text);
            if let Some(path) = csv {
                fs::write(&path, &table.csv).map_err(|source| BenchError::Io { path, source })?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
