use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kslab::config::{EquilibriumConfig, ExperimentConfig};
use kslab::error::{CliError, CliResult};
use kslab::verify::{run_suite_with, write_report, Suite};
use kslab::{characteristics, equilibrium, simulate, sweep};

#[derive(Parser)]
#[command(
    name = "kslab",
    version,
    about = "Kuramoto-Sakaguchi kinetic and particle experiments"
)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write trajectory, checks, summary and plot script.
    Simulate(RunArgs),
    /// Run every coupling of the config's list.
    Sweep(RunArgs),
    /// Run the pinned acceptance scenarios.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Directory for `verify.json`; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the self-consistent amplitude for each coupling.
    Equilibrium(RunArgs),
    /// Trace characteristics through a kinetic run.
    Characteristics(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load(args: &RunArgs) -> CliResult<(ExperimentConfig, String, PathBuf)> {
    let raw = read(&args.config)?;
    let mut cfg = ExperimentConfig::parse(&raw)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::config("no output directory: pass --out or set `output`"))?;
    Ok((cfg, raw, out))
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate(args) => {
            let (cfg, raw, out) = load(&args)?;
            let k = cfg.single_coupling()?;
            let summary = simulate::simulate_into(&cfg, &raw, k, &out)?;
            if let Some(kin) = &summary.kinetic {
                println!(
                    "final R = {:.10}  (r_infinity = {:.10})",
                    kin.final_r, kin.r_infinity
                );
                for c in kin.checks.iter().filter(|c| c.failed > 0) {
                    log::warn!(
                        "{}: {} of {} evaluations failed",
                        c.name,
                        c.failed,
                        c.evaluated
                    );
                }
            }
            if let Some(p) = &summary.particle {
                println!("final r = {:.10}  (N = {})", p.final_r, p.n);
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep(args) => {
            let (cfg, raw, out) = load(&args)?;
            let report = sweep::sweep(&cfg, &raw, &out)?;
            println!(
                "{:>10}  {:>14}  {:>14}  {:>12}",
                "K", "final R", "r_infinity", "gap"
            );
            for r in &report.rows {
                match (&r.error, r.final_r, r.gap) {
                    (None, Some(fr), Some(gap)) => {
                        println!(
                            "{:>10.4}  {:>14.10}  {:>14.10}  {:>12.4e}",
                            r.k, fr, r.r_infinity, gap
                        )
                    }
                    (err, _, _) => {
                        println!("{:>10.4}  failed: {}", r.k, err.as_deref().unwrap_or("?"))
                    }
                }
            }
            println!("final R increasing in K: {}", report.final_r_increasing);
            if report.failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Verify { suite, out } => {
            let report = run_suite_with(suite, |v| {
                log::info!(
                    "criterion {} {} in {:.2} s",
                    v.id,
                    if v.pass { "passed" } else { "failed" },
                    v.seconds
                );
            });
            print!("{}", report.table());
            match out {
                Some(dir) => write_report(&report, &dir.join("verify.json"))?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
            if !report.pass {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Equilibrium(args) => {
            let cfg = EquilibriumConfig::parse(&read(&args.config)?)?;
            let g = cfg.frequency.build()?;
            let rows = equilibrium::equilibrium_table(&g, &cfg.coupling.values());
            print!("{}", equilibrium::render(&rows));
            if let Some(out) = args.out.or(cfg.output) {
                equilibrium::write_equilibrium(&rows, &out)?;
            }
        }
        Command::Characteristics(args) => {
            let (cfg, raw, out) = load(&args)?;
            let rows = characteristics::trace_into(&cfg, &raw, &out)?;
            println!("wrote {rows} characteristic points to {}", out.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
