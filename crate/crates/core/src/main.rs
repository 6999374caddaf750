use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riss_core::harness::{emit_csv, run, sha256_hex, write_manifest, Experiment, ScenarioConfig};
use riss_core::Error;

#[derive(Parser)]
#[command(name = "riss-sim", version, about = "Monte Carlo experiments for surface-assisted wireless-powered networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity of aligned and interference-capped designs over Rician factor and cap.
    UplinkRician(RunArgs),
    /// Capacity under angle estimation errors, including widened-null designs.
    UplinkError(RunArgs),
    /// Capacity over interferer distance and cap, with the heuristic cap.
    UplinkDistanceTau(RunArgs),
    /// Harvested energy over the number of rotation beams.
    WetBeams(RunArgs),
    /// Sensing-aided charging times and rotation order against the blind baseline.
    WetSensing(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the CSV and the manifest.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Trial count; overrides the config file.
    #[arg(long)]
    trials: Option<usize>,
    /// 16×16 surface with coarser uplink sweeps.
    #[arg(long)]
    full: bool,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;

fn load(args: &RunArgs, experiment: Experiment) -> Result<(ScenarioConfig, String), Error> {
    let (mut cfg, hash) = match &args.config {
        Some(path) => {
            let (cfg, bytes) = ScenarioConfig::load(path)?;
            (cfg, sha256_hex(&bytes))
        }
        None => (ScenarioConfig::default(), sha256_hex(b"")),
    };
    if args.full {
        cfg.apply_full();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(Error::Config("--trials must be at least 1".into()));
        }
        experiment.set_trials(&mut cfg, trials);
    }
    cfg.validate()?;
    Ok((cfg, hash))
}

fn execute(experiment: Experiment, args: &RunArgs) -> ExitCode {
    let (cfg, hash) = match load(args, experiment) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run(experiment, &cfg) {
        Ok(out) => out,
        Err(e @ (Error::Config(_) | Error::InvalidArgument(_) | Error::Dimension(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    if let Err(e) = write_outputs(&args.out, experiment, &cfg, &hash, args, &out) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    eprintln!(
        "{experiment}: {} rows, {}/{} cells failed",
        out.rows.len(),
        out.failed,
        out.cells
    );
    if out.solver_dominated() {
        eprintln!("error: more than 5% of cells failed");
        return ExitCode::from(EXIT_SOLVER);
    }
    ExitCode::SUCCESS
}

fn write_outputs(
    dir: &Path,
    experiment: Experiment,
    cfg: &ScenarioConfig,
    hash: &str,
    args: &RunArgs,
    out: &riss_core::harness::RunOutput,
) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    emit_csv(&out.rows, &dir.join(format!("{experiment}.csv")))?;
    let config = args.config.as_ref().map_or_else(|| "defaults".to_string(), |p| p.display().to_string());
    write_manifest(
        dir,
        experiment.id(),
        &[
            ("config", config),
            ("config_sha256", hash.to_string()),
            ("seed", cfg.seed.to_string()),
            ("trials_override", args.trials.map_or_else(|| "none".into(), |t| t.to_string())),
            ("full", args.full.to_string()),
            ("version", format!("riss-sim {}", env!("CARGO_PKG_VERSION"))),
            ("cells", out.cells.to_string()),
            ("failed_cells", out.failed.to_string()),
        ],
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::UplinkRician(a) => (Experiment::UplinkRician, a),
        Command::UplinkError(a) => (Experiment::UplinkError, a),
        Command::UplinkDistanceTau(a) => (Experiment::UplinkDistanceTau, a),
        Command::WetBeams(a) => (Experiment::WetBeams, a),
        Command::WetSensing(a) => (Experiment::WetSensing, a),
    };
    execute(experiment, args)
}
