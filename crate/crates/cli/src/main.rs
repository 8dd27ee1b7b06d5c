use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hierlqr_cli::{cmd_compare, cmd_learn, cmd_synth, CliError, ScenarioConfig};

/// Hierarchical LQR synthesis, off-policy learning, and comparison for
/// grouped multi-robot formations.
#[derive(Parser)]
#[command(name = "hierlqr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model-based hierarchical synthesis and suboptimality report.
    Synth(RunArgs),
    /// Learn every group's gain from exploration data and deploy it.
    Learn(RunArgs),
    /// Learn, deploy, run the optimal baseline, and plot both.
    Compare(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: paper-4groups or paper-4groups-10x.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for initial positions and exploration signals.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Scale of the inter-group centroid cost.
    #[arg(long = "qtilde-scale", value_name = "X")]
    qtilde_scale: Option<f64>,
    /// Print solver warnings.
    #[arg(short, long)]
    verbose: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ScenarioConfig::load(path)?,
            (None, Some(name)) => ScenarioConfig::preset(name)?,
            (None, None) => ScenarioConfig::preset("paper-4groups")?,
        };
        cfg.apply_overrides(self.seed, self.qtilde_scale, self.out.clone())?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&RunArgs, fn(&ScenarioConfig) -> Result<hierlqr_cli::Outcome, CliError>) = match &cli.command {
        Command::Synth(a) => (a, cmd_synth),
        Command::Learn(a) => (a, cmd_learn),
        Command::Compare(a) => (a, cmd_compare),
    };
    let level = if args.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Error
    };
    env_logger::Builder::new().filter_level(level).init();

    match args.config().and_then(|cfg| run(&cfg)) {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
