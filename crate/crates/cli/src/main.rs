use clap::{Parser, Subcommand};
use majorant_cli::problems::builtin;
use majorant_cli::{execute, RunConfig, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

/// Guaranteed error bounds for parabolic problems.
#[derive(Parser)]
#[command(name = "majorant", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Built-in problem: ex1, ex2, ex3, ex4, ex5, ex6 or ex8.
    #[arg(long, global = true)]
    problem: Option<String>,
    /// Output directory, overriding the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write zero wall times so repeated runs give identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Print the configuration instead of running it.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Override sigma.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Override the bulk marking parameter.
    #[arg(long, global = true)]
    theta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a configuration file.
    Run { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let loaded = match (&cli.command, &cli.problem) {
        (Some(Command::Run { config }), None) => RunConfig::load(config).map(|mut c| {
            if let Some(s) = cli.sigma {
                c.problem.sigma = s;
            }
            c
        }),
        (None, Some(id)) => builtin(id, cli.sigma),
        (Some(_), Some(_)) => {
            eprintln!("error: give either 'run <config>' or '--problem <id>', not both");
            return ExitCode::from(2);
        }
        (None, None) => {
            eprintln!("error: nothing to do; give 'run <config>' or '--problem <id>'");
            return ExitCode::from(2);
        }
    };
    let mut cfg = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(theta) = cli.theta {
        cfg.adaptivity.theta = theta;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if cli.dump_config {
        print!("{}", cfg.to_ini());
        return ExitCode::SUCCESS;
    }
    let opts = RunOptions {
        out: cli.out,
        deterministic: cli.deterministic,
    };
    match execute(&cfg, &opts) {
        Ok(outcome) => {
            if let Some(k) = outcome.blow_up {
                eprintln!("blow-up detected on slab {}", k + 1);
            }
            for w in &outcome.warnings {
                log::warn!("{w}");
            }
            println!("wrote {}", outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
