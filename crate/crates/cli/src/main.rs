mod commands;
mod error;
mod format;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wicksell::{Family, Method};

#[derive(Parser, Debug)]
#[command(name = "wicksell", version, about = "Sphere-size distributions from planar profile measurements")]
struct Cli {
    /// Worker threads for replicate loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit diameter laws to measured profiles.
    Fit(FitArgs),
    /// Tabulate the approximate and exact profile densities.
    Density(DensityArgs),
    /// Simulate profile diameters.
    Simulate(SimulateArgs),
    /// Run a replicate study of estimator bias and spread.
    Benchmark(BenchmarkArgs),
    /// Regenerate the small-sample critical-value table.
    CriticalTable(CriticalTableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntervalKind {
    Wilks,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Selection {
    Aic,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: wicksell::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: wicksell::Error| e.to_string())
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SectionArgs {
    /// Section width, in the units of the measurements.
    #[arg(long)]
    pub section_w: Option<f64>,
    /// Section height.
    #[arg(long)]
    pub section_h: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV file with an `area` or `diameter` column and optional `censored`.
    pub input: PathBuf,
    /// One family, or a comma-separated list.
    #[arg(long, value_delimiter = ',', value_parser = parse_family, default_value = "weibull")]
    pub family: Vec<Family>,
    /// ml, ml-censored, ml-weighted, mom or mde.
    #[arg(long, value_parser = parse_method, default_value = "ml")]
    pub method: Method,
    /// Number of polygon sides in the density approximation.
    #[arg(long, default_value_t = 15)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub ci: Option<IntervalKind>,
    /// Rank the families by AIC.
    #[arg(long, value_enum)]
    pub select: Option<Selection>,
    /// Coverage probability of intervals.
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    /// Bootstrap replicates (default 1000, 2000 for ml-weighted).
    #[arg(long)]
    pub boot: Option<usize>,
    /// Candidate points for the likelihood region.
    #[arg(long, default_value_t = 50_000)]
    pub region_points: usize,
    /// Write accepted region points here as TSV.
    #[arg(long)]
    pub region_tsv: Option<PathBuf>,
    #[command(flatten)]
    pub section: SectionArgs,
    /// Convert areas with √(S/(4π)) instead of the equal-area diameter.
    #[arg(long)]
    pub literal_area: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    /// Scale and shape, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub params: Vec<f64>,
    #[arg(long, default_value_t = 15)]
    pub m: usize,
    /// Grid upper end (default: a far quantile of the size-weighted law).
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Family,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub params: Vec<f64>,
    /// Number of profiles; with a section, the expected number of profile
    /// centres in it.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub section: SectionArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV output; a manifest is written alongside.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Built-in study ("table2").
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// JSON file describing the benchmark.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for benchmark.tsv, benchmark.json and manifest.json.
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CriticalTableArgs {
    #[arg(long, default_value_t = 4000)]
    pub sims: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("configuration error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Fit(a) => commands::fit::run(a),
        Command::Density(a) => commands::density::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Benchmark(a) => commands::benchmark::run(a),
        Command::CriticalTable(a) => commands::critical::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
