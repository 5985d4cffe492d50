use std::path::PathBuf;
use std::process::ExitCode;

use ambc_cli::commands::{detect, run_roc, run_sweep, run_theory, ThresholdChoice};
use ambc_cli::config::{Overrides, RunConfigFile};
use ambc_cli::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ambc", version, about = "Ambient backscatter detection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Target false-alarm probability.
    #[arg(long, global = true)]
    pfa: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide one frame with the second-eigenvalue detector.
    Detect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eta: Option<f64>,
        /// Binary frame file instead of a synthesized frame.
        #[arg(long)]
        frame: Option<PathBuf>,
    },
    /// Monte Carlo sweep over the configured axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Complementary ROC of the second-eigenvalue detector.
    Roc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Analytic curves and the Tracy-Widom table.
    Theory {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(common: &Common, pfa_override: bool) -> CliResult<ambc_cli::config::ResolvedConfig> {
    if common.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let file = match &common.config {
        Some(p) => RunConfigFile::load(p)?,
        None => RunConfigFile::default(),
    };
    file.resolve(&Overrides {
        seed: common.seed,
        trials: common.trials,
        pfa: if pfa_override { common.pfa } else { None },
    })
}

fn report(files: Vec<PathBuf>) {
    for f in files {
        println!("{}", f.display());
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Detect { common, eta, frame } => {
            let choice = ThresholdChoice::from_flags(eta, common.pfa)?;
            let cfg = load(&common, false)?;
            println!("{}", detect(&cfg, choice, frame.as_deref())?);
        }
        Command::Sweep { common, out } => {
            let cfg = load(&common, true)?;
            report(run_sweep(&cfg, &out, common.workers)?);
        }
        Command::Roc { common, out } => {
            let cfg = load(&common, true)?;
            report(run_roc(&cfg, &out, common.workers)?);
        }
        Command::Theory { common, out } => {
            let cfg = load(&common, true)?;
            report(run_theory(&cfg, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ambc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
