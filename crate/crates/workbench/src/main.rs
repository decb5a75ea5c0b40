use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nb2e_core::encoding::encode_nb2e;
use nb2e_core::experiment::Profile;
use nb2e_workbench::recipes::{recipe, RECIPES};
use nb2e_workbench::runner::{run_spec, Outcome};
use nb2e_workbench::{Error, Overrides, RunSpec};

/// Train and analyze networks on base-2 encoded inputs.
#[derive(Debug, Parser)]
#[command(name = "nb2e", version)]
struct Cli {
    /// Seed for data sampling, initialization, and shuffling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model size and training length.
    #[arg(long, global = true, value_parser = parse_profile)]
    profile: Option<Profile>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = default_threads())]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the NB2E bits of a value in [0, 1) and the value they decode to.
    Encode {
        value: f64,
        #[arg(long, default_value_t = 48)]
        bits: usize,
    },
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run the bundled config for a figure.
    Reproduce {
        figure: String,
        /// Use the full-size profile.
        #[arg(long)]
        full: bool,
    },
    /// Print the bundled config for a figure, or list the figures.
    Recipe { figure: Option<String> },
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    match s {
        "desk" => Ok(Profile::Desk),
        "full" => Ok(Profile::Full),
        _ => Err(format!("expected `desk` or `full`, got `{s}`")),
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn report(outcome: &Outcome) -> Result<(), Error> {
    for (plan, result) in &outcome.runs {
        match result {
            Ok(r) => println!("{:<24} train MAE {:.6}  test MAE {:.6}", plan.label, r.result.train.mae, r.result.test.mae),
            Err(e) => println!("{:<24} {e}", plan.label),
        }
    }
    println!("wrote {} files to {}", outcome.files.len() + 1, outcome.out_dir.display());
    outcome.status()
}

fn execute(spec: RunSpec, cli: &Cli) -> Result<(), Error> {
    let mut spec = spec;
    spec.apply(&Overrides { seed: cli.seed, profile: cli.profile, out_dir: cli.out.clone() });
    let outcome = run_spec(&spec, cli.threads.max(1))?;
    report(&outcome)
}

fn main_inner(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Encode { value, bits } => {
            let b = encode_nb2e(*value, *bits)
                .map_err(|e| Error::Config(nb2e_workbench::ConfigError::new("value", e.to_string())))?;
            println!("{b}");
            println!("decoded: {}", b.decode());
            Ok(())
        }
        Command::Run { config } => execute(RunSpec::load(config)?, cli),
        Command::Reproduce { figure, full } => {
            let mut spec = recipe(figure)?;
            if *full {
                spec.profile = Profile::Full;
            }
            execute(spec, cli)
        }
        Command::Recipe { figure: Some(figure) } => {
            print!("{}", recipe(figure)?.to_toml());
            Ok(())
        }
        Command::Recipe { figure: None } => {
            for (id, description) in RECIPES {
                println!("{id:<16} {description}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
