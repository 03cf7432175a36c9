use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use delaykinetic::builtin_kernels;
use delaykinetic_cli::{error_record, run_experiment, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "delaykinetic", version, about = "Kinetic models with distributed delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        verbose: bool,
    },
    /// List the built-in kernels and their parameters.
    DescribeModels,
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("DELAYKINETIC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| ConfigError(format!("DELAYKINETIC_THREADS must be a nonnegative integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let dir = match out.or_else(|| cfg.output.as_ref().map(|o| base.join(o))) {
        Some(d) => d,
        None => PathBuf::from("delaykinetic-out"),
    };
    cfg.output = Some(dir.clone());
    let exp = cfg.prepare(base)?;
    configure_threads()?;
    let files = run_experiment(&exp, &dir)?;
    log::info!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn describe_models() {
    for e in builtin_kernels() {
        println!("{}", e.name);
        println!("  form:       {}", e.form);
        println!("  parameters: {}", e.parameters);
        println!("  lipschitz:  {}", e.lipschitz);
        println!("  notes:      {}", e.notes);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::DescribeModels => {
            describe_models();
            ExitCode::SUCCESS
        }
        Command::Run { config, out, verbose } => {
            let level = if verbose { "info" } else { "warn" };
            env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
                .format_timestamp(None)
                .init();
            match run(&config, out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(err) => {
                    let (code, record) = error_record(&err);
                    eprintln!("{record}");
                    ExitCode::from(code as u8)
                }
            }
        }
    }
}
