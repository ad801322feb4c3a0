use serde::Serialize;
use wicksell::simulation::{run_benchmark, BenchmarkReport, BenchmarkSpec};

use super::{emit, to_json, Manifest, SCHEMA_VERSION};
use crate::error::{config, data, from_lib_config, CliResult};
use crate::BenchmarkArgs;

const DEFAULT_REPLICATES: usize = 1000;
const DEFAULT_SEED: u64 = 1;

#[derive(Serialize)]
struct Output<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a BenchmarkReport,
}

pub fn run(args: &BenchmarkArgs) -> CliResult<()> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), None) => BenchmarkSpec::preset(
            name,
            args.replicates.unwrap_or(DEFAULT_REPLICATES),
            args.seed.unwrap_or(DEFAULT_SEED),
        )
        .map_err(config)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| config(format!("{}: {e}", path.display())))?
        }
        _ => return Err(config("give exactly one of --preset or --spec")),
    };
    if let Some(r) = args.replicates {
        spec.replicates = r;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    let report = run_benchmark(&spec).map_err(from_lib_config)?;
    std::fs::create_dir_all(&args.output_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", args.output_dir.display())))?;
    let dir = &args.output_dir;
    emit(Some(&dir.join("benchmark.tsv")), &report.to_tsv())?;
    let output = Output {
        schema_version: SCHEMA_VERSION,
        report: &report,
    };
    emit(Some(&dir.join("benchmark.json")), &to_json(&output))?;
    let files = vec!["benchmark.tsv".to_string(), "benchmark.json".to_string()];
    let manifest = Manifest::new("benchmark", spec.seed, &spec, files);
    emit(Some(&dir.join("manifest.json")), &to_json(&manifest))
}
