use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use tunnelsplit_cli::{cmd_check, cmd_evolve, cmd_params, cmd_times, ScenarioConfig};

#[derive(Parser)]
#[command(name = "tunnelsplit", version, about = "Transmission/reflection splitting of 1-D tunneling wave packets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON scenario file
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// built-in scenario: paper-barrier, paper-well, delta, free
    #[arg(long)]
    preset: Option<String>,
    /// output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// worker threads (0 = all cores)
    #[arg(long, env = "TUNNELSPLIT_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate T, R, J, F, Λ and their k-derivatives over the k grid
    Params(Common),
    /// Write channel densities at the configured times
    Evolve(Common),
    /// Exact, asymptotic and phase times with effective widths
    Times(Common),
    /// Run the invariant checks; exits non-zero on any failure
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        flip_branch: bool,
    },
}

fn load(c: &Common) -> anyhow::Result<ScenarioConfig> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match (&c.config, &c.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(ScenarioConfig::from_json(&text)?)
        }
        (None, Some(name)) => Ok(ScenarioConfig::preset(name)?),
        _ => bail!("give exactly one of --config PATH and --preset NAME"),
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Params(c) => {
            let sc = load(&c)?.resolve()?;
            println!("{}", cmd_params(&sc, &c.out)?.display());
        }
        Command::Evolve(c) => {
            let sc = load(&c)?.resolve()?;
            let out = cmd_evolve(&sc, &c.out)?;
            for f in &out.files {
                println!("{}", f.display());
            }
            println!("{}", out.summary.display());
        }
        Command::Times(c) => {
            let sc = load(&c)?.resolve()?;
            let (report, files) = cmd_times(&sc, &c.out)?;
            print!("{}", report.to_text());
            for f in &files {
                println!("{}", f.display());
            }
        }
        Command::Check { common, flip_branch } => {
            let sc = load(&common)?.resolve()?;
            let report = cmd_check(&sc, flip_branch)?;
            print!("{}", report.to_text());
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
