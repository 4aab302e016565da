//! `catchmap` command-line entry point.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 I/O.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "catchmap", version, about = "Ingest, analyse and serve historical catch records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Geojson,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Catalog artifact written by `ingest`
    #[arg(long)]
    pub catalog: PathBuf,
    /// Filter in query-string form, e.g. "species=blue&from=1950-01-01"
    #[arg(long, default_value = "")]
    pub filter: String,
    /// Output file (written atomically); stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean and validate CSV files into a catalog artifact
    Ingest {
        /// Column mapping: a JSON file, or `synth` / `canonical`
        #[arg(long, default_value = "synth")]
        mapping: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full ingest report as JSON here
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Write binned catches, effort rasters and routes for a filter to a directory
    Precompute {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value = "")]
        filter: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Bin sizes in degrees, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5, 10])]
        bins: Vec<u32>,
    },
    /// Run the HTTP query service
    Serve {
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// TOML config: bind, port, catalog, precompute_bins
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
    /// Record, expedition and route counts with the rejection breakdown
    Stats {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, default_value = "")]
        filter: String,
    },
    /// Filtered records as canonical CSV
    Export(CatalogArgs),
    /// Deterministic synthetic corpus
    Synth {
        /// SynthSpec as JSON or TOML; defaults to the progression demo
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        expeditions: Option<u32>,
        #[arg(long)]
        max_rows: Option<usize>,
        #[arg(long)]
        missing_date_rate: Option<f64>,
        #[arg(long)]
        missing_coords_rate: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write generator statistics as JSON here
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Catch counts per grid cell
    Bins {
        #[command(flatten)]
        common: CatalogArgs,
        #[arg(long, default_value_t = 5)]
        bin: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Route-length search effort per grid cell
    Effort {
        #[command(flatten)]
        common: CatalogArgs,
        #[arg(long, default_value_t = 5)]
        bin: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Catch per unit effort per grid cell
    Cpue {
        #[command(flatten)]
        common: CatalogArgs,
        #[arg(long, default_value_t = 5)]
        bin: u32,
        #[arg(long, default_value_t = catchmap_core::effort::DEFAULT_MIN_EFFORT_KM)]
        min_effort: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Expedition routes as GeoJSON
    Routes {
        #[command(flatten)]
        common: CatalogArgs,
        /// Include stop nodes as Point features
        #[arg(long)]
        nodes: bool,
    },
    /// Catch counts per time interval
    Timeline {
        #[command(flatten)]
        common: CatalogArgs,
        #[arg(long, default_value_t = 1)]
        interval: u32,
    },
    /// Length histogram
    Lengths {
        #[command(flatten)]
        common: CatalogArgs,
        #[arg(long, default_value_t = 5.0)]
        bucket: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    use commands as c;
    match cli.command {
        Command::Ingest { mapping, out, report, files } => c::ingest(&mapping, &out, report.as_deref(), &files),
        Command::Precompute { catalog, filter, out_dir, bins } => c::precompute(&catalog, &filter, &out_dir, &bins),
        Command::Serve { catalog, config, bind, port } => c::serve(catalog, config.as_deref(), bind, port),
        Command::Stats { catalog, filter } => c::stats(&catalog, &filter),
        Command::Export(args) => c::export(&args),
        Command::Synth { spec, seed, expeditions, max_rows, missing_date_rate, missing_coords_rate, out, stats } => {
            let overrides = c::SynthOverrides { seed, expeditions, max_rows, missing_date_rate, missing_coords_rate };
            c::synth(spec.as_deref(), overrides, &out, stats.as_deref())
        }
        Command::Bins { common, bin, format } => c::bins(&common, bin, format),
        Command::Effort { common, bin, format } => c::effort(&common, bin, format),
        Command::Cpue { common, bin, min_effort, format } => c::cpue(&common, bin, min_effort, format),
        Command::Routes { common, nodes } => c::routes(&common, nodes),
        Command::Timeline { common, interval } => c::timeline(&common, interval),
        Command::Lengths { common, bucket } => c::lengths(&common, bucket),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
