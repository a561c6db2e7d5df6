use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use sympstiefel_bench::{acceptance, gen, run_suite, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "sympbench",
    version,
    about = "Symplectic Stiefel optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme of a config file.
    Run {
        config: PathBuf,
        /// Override the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the acceptance criteria.
    Check,
    /// Write the bundled example configs.
    Gen {
        #[arg(default_value = "configs")]
        dir: PathBuf,
    },
}

fn run(config: PathBuf, output: Option<PathBuf>) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(out) = output {
        cfg.output = out;
    }
    let base = config.parent().map(PathBuf::from).unwrap_or_default();
    let suite = run_suite(&cfg, &base)?;
    for o in &suite.outcomes {
        let r = &o.row;
        println!(
            "{:<12} {:>5} {:>3} {:>9.3}s {:>9.3}s f {:<12.6e} grad {:<10.3e} feas {:<10.3e} {}",
            r.scheme,
            r.phase1_iters,
            r.phase2_iters,
            r.phase1_time_s,
            r.phase2_time_s,
            r.f_star,
            r.grad_norm,
            r.feas,
            r.status
        );
    }
    println!("results: {}", suite.results_path.display());
    Ok(suite.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, output } => run(config, output),
        Command::Check => {
            let results = acceptance::run_all();
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.pass))
        }
        Command::Gen { dir } => gen::write_examples(&dir).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
