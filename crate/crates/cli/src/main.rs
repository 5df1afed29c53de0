use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use pcsft_cli::{run, CliError, CommandKind, ExperimentConfig, Format};

#[derive(Parser)]
#[command(name = "pcsft", version, about = "Field-ensemble / density-operator verification runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact average and energy identities for each (ensemble, form) pair.
    Verify(Common),
    /// Monte Carlo estimates and convergence sweeps.
    Estimate(Common),
    /// Surjectivity and many-to-one audits of the density map.
    Audit(Common),
    /// Grid quadrature, kernel forms and grid random fields.
    Gridfield(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PCSFT_LOG", "warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Verify(a) => (CommandKind::Verify, a),
        Command::Estimate(a) => (CommandKind::Estimate, a),
        Command::Audit(a) => (CommandKind::Audit, a),
        Command::Gridfield(a) => (CommandKind::Gridfield, a),
    };
    match execute(kind, &args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("{kind}: a verification gate failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("pcsft {kind}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(kind: CommandKind, args: &Common) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", args.config.display())))?;
    let config = ExperimentConfig::parse(&text)?.resolve(kind, args.seed, args.format)?;
    let workers = args.workers.or(config.workers).unwrap_or(0);
    info!("{kind}: seed {} on {} workers", config.seed, workers);

    let outcome = pcsft::stream::with_workers(workers, || run(&config))?;

    let out_path = args.out.clone().or_else(|| config.output_path().map(PathBuf::from));
    match out_path {
        Some(path) => {
            std::fs::write(&path, &outcome.payload)?;
            let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let meta = serde_json::json!({
                "created_unix": created,
                "workers": workers,
                "command": kind,
                "version": env!("CARGO_PKG_VERSION"),
            });
            let mut meta_path = path.into_os_string();
            meta_path.push(".meta.json");
            std::fs::write(meta_path, serde_json::to_string_pretty(&meta).expect("json"))?;
        }
        None => print!("{}", outcome.payload),
    }
    Ok(outcome.passed)
}
