pub mod benchmark;
pub mod critical;
pub mod density;
pub mod fit;
pub mod simulate;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wicksell::{Family, SizeDistribution};

use crate::error::{config, data, CliResult};
use crate::SectionArgs;

pub const SCHEMA_VERSION: u32 = 1;

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| data(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| data(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn section(args: &SectionArgs) -> CliResult<Option<(f64, f64)>> {
    match (args.section_w, args.section_h) {
        (None, None) => Ok(None),
        (Some(w), Some(h)) if w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite() => Ok(Some((w, h))),
        (Some(_), Some(_)) => Err(config("section dimensions must be positive")),
        _ => Err(config("give both --section-w and --section-h")),
    }
}

pub fn distribution(family: Family, params: &[f64]) -> CliResult<SizeDistribution> {
    match params {
        [a, b] => SizeDistribution::new(family, *a, *b).map_err(config),
        _ => Err(config("--params takes two values: scale,shape")),
    }
}

/// Reproducibility record written next to generated files.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: &'a C,
    pub outputs: Vec<String>,
}

impl<'a, C: Serialize> Manifest<'a, C> {
    pub fn new(command: &'static str, seed: u64, config: &'a C, outputs: Vec<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            outputs,
        }
    }
}

/// `data.csv` → `data.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.manifest.json"))
}
