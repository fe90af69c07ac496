mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "bikeshare",
    version,
    about = "Station profiling, clustering and balance indices for bike-share trip histories"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration; command-line flags override its values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Trip CSV file(s).
    #[arg(long = "trips", global = true, value_delimiter = ',')]
    trips: Vec<PathBuf>,
    /// Station catalog (CSV id,name,lat,lon or point GeoJSON).
    #[arg(long, global = true)]
    stations: Option<PathBuf>,
    #[arg(long, global = true, env = "BIKESHARE_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Quarter(s) to analyse, e.g. 2015-Q3. Default: every quarter present.
    #[arg(long = "quarter", global = true)]
    quarters: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print the resolved configuration with notes on each default, then exit.
    #[arg(long, global = true)]
    explain: bool,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trip and station counts, mean durations and hourly usage per quarter.
    Summarize,
    /// Cluster stations by their hourly pickup and/or drop-off profiles.
    Cluster(ClusterArgs),
    /// Average daily maximum shortage/excess per station and window.
    Balance,
    /// Generate synthetic trips with planted archetypes.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Pickup,
    Dropoff,
    Both,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    probe_k: Option<usize>,
    #[arg(long)]
    min_daily_avg: Option<f64>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Archetype list (TOML `[[archetype]]` tables or a JSON array). Default:
    /// morning-peaked, evening-peaked and bimodal.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    stations_per_archetype: usize,
    #[arg(long, default_value = "2015-07-01")]
    start: chrono::NaiveDate,
    #[arg(long, default_value_t = 92)]
    days: u32,
    /// Daily pickups per station for the default archetypes.
    #[arg(long, default_value_t = 40.0)]
    daily_volume: f64,
    /// Log-normal noise scale for the default archetypes.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
}

/// An error with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    /// Unreadable input, unwritable output or an invalid configuration.
    pub fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }

    /// The data could not be analysed as requested.
    pub fn pipeline(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => RunConfig::load(path).map_err(Failure::config)?,
        None => RunConfig::default(),
    };
    if !c.trips.is_empty() {
        config.trips = c.trips.clone();
    }
    if c.stations.is_some() {
        config.stations = c.stations.clone();
    }
    if let Some(dir) = &c.out_dir {
        config.output_dir = dir.clone();
    }
    if !c.quarters.is_empty() {
        config.quarters = c.quarters.clone();
    }
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Command::Cluster(a) = &cli.command {
        let k = &mut config.clustering;
        if let Some(lo) = a.k_min {
            k.k_range[0] = lo;
        }
        if let Some(hi) = a.k_max {
            k.k_range[1] = hi;
        }
        if let Some(r) = a.restarts {
            k.restarts = r;
        }
        if a.probe_k.is_some() {
            k.probe_k = a.probe_k;
        }
        if let Some(m) = a.min_daily_avg {
            config.cleaning.min_daily_avg = m;
        }
    }
    config.validate().map_err(Failure::config)?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = resolve_config(&cli)?;
    if cli.common.explain {
        print!("{}", config.explain());
        return Ok(());
    }
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(Failure::config(anyhow::anyhow!(
                "--threads must be at least 1"
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Failure::config)?;
    }
    match cli.command {
        Command::Summarize => commands::summarize(&config),
        Command::Cluster(a) => {
            let kinds = match a.kind {
                KindArg::Pickup => vec![bikeshare_core::ingest::EventKind::Pickup],
                KindArg::Dropoff => vec![bikeshare_core::ingest::EventKind::Dropoff],
                KindArg::Both => vec![
                    bikeshare_core::ingest::EventKind::Dropoff,
                    bikeshare_core::ingest::EventKind::Pickup,
                ],
            };
            commands::cluster(&config, &kinds)
        }
        Command::Balance => commands::balance(&config),
        Command::Synth(a) => commands::synth(
            &config,
            &commands::SynthRequest {
                spec: a.spec,
                stations_per_archetype: a.stations_per_archetype,
                start: a.start,
                days: a.days,
                daily_volume: a.daily_volume,
                noise: a.noise,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.common.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
